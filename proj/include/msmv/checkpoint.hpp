#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msmv/config.hpp"
#include "msmv/model.hpp"

namespace msmv {

// Layout (little-endian):
//   "MSMV1"
//   u32 config_len, config text (RunConfig key=value)
//   u32 n_arrays, then per array:
//     u32 name_len, name, u8 frozen, u8 buffer, u32 ndim, u64 dims[ndim], f64 data[prod(dims)] (row-major)
// Array names carry the component prefix "seg.", "crop." or "head.".

inline constexpr char kCheckpointMagic[] = "MSMV1";

struct NamedArray {
    std::string name;
    bool frozen = false;
    bool buffer = false;
    nn::Mat value;
};

struct Checkpoint {
    RunConfig config;
    std::vector<NamedArray> arrays;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws Io on a bad magic or truncated file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const Model& model, const RunConfig& cfg);

struct LoadedModel {
    RunConfig config;
    Model model;
};

/// Rebuilds the model from the stored config and restores every array and frozen flag.
/// Throws ConfigMismatch when the arrays do not fit the config.
LoadedModel load_model(const std::filesystem::path& path);

/// External-weights hook: copies arrays named `prefix + <param name>` into the backbone.
/// Arrays without a match are ignored. Returns the number of parameters loaded. Throws ShapeMismatch.
int load_backbone_weights(swin::SwinBackbone& backbone, const std::vector<NamedArray>& arrays,
                          const std::string& prefix = "");

}  // namespace msmv
