#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "msmv/fusion.hpp"
#include "msmv/swin.hpp"
#include "msmv/trainer.hpp"

namespace msmv {

/// Every hyperparameter of a run. fusion.feature_dim always mirrors backbone.feature_dim.
struct RunConfig {
    swin::BackboneConfig backbone;
    fusion::FusionConfig fusion;
    train::TrainConfig train;

    /// Syncs derived fields and validates every block.
    void resolve();

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Flat `key = value` lines sorted by key; '#' starts a comment.
std::string serialize(const RunConfig& cfg);

/// Applies the assignments in text on top of base. Throws BadConfig for unknown keys or bad values.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

/// Sets one key. Throws BadConfig.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace msmv
