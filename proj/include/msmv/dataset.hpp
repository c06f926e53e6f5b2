#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msmv/exam.hpp"
#include "msmv/imaging.hpp"

namespace msmv::data {

enum class Split { Train, Test };

std::string_view to_string(Split s) noexcept;

/// Full image and ROI box of one view, before preprocessing.
struct ViewSource {
    std::string path;
    imaging::BBox roi;
    friend bool operator==(const ViewSource&, const ViewSource&) = default;
};

struct ExamRecord {
    std::string breast_id;
    std::string patient_id;
    int label = 0;
    std::array<std::optional<ViewSource>, 2> views;
    Split split = Split::Train;

    [[nodiscard]] bool present(View v) const noexcept { return views[static_cast<int>(v)].has_value(); }
    [[nodiscard]] bool both_views() const noexcept { return present(View::CC) && present(View::MLO); }
    friend bool operator==(const ExamRecord&, const ExamRecord&) = default;
};

using Manifest = std::vector<ExamRecord>;

inline constexpr const char* kManifestHeader = "breast_id,patient_id,label,cc_path,cc_roi,mlo_path,mlo_roi,split";

/// Raw manifest CSV; empty cells mark an absent view. Throws MissingColumn, BadConfig.
Manifest read_manifest(std::istream& in);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Unique breast ids per split, at least one view per exam, no patient in both splits.
/// Throws BadConfig.
void validate_manifest(const Manifest& manifest);

/// Masked/cropped plane files of one view after preprocessing.
struct PlaneFiles {
    std::string masked;
    std::string cropped;
    friend bool operator==(const PlaneFiles&, const PlaneFiles&) = default;
};

struct PlaneRecord {
    std::string breast_id;
    std::string patient_id;
    int label = 0;
    std::array<std::optional<PlaneFiles>, 2> views;
    Split split = Split::Train;
    friend bool operator==(const PlaneRecord&, const PlaneRecord&) = default;
};

inline constexpr const char* kPlanesHeader =
    "breast_id,patient_id,label,cc_masked,cc_cropped,mlo_masked,mlo_cropped,split";

std::vector<PlaneRecord> read_planes_manifest(const std::filesystem::path& path);
void write_planes_manifest(const std::filesystem::path& path, const std::vector<PlaneRecord>& rows);

/// True when the file's header is the preprocessed-planes header.
bool is_planes_manifest(const std::filesystem::path& path);

/// Resolves a manifest cell: relative paths are relative to the manifest's directory.
std::filesystem::path resolve(const std::filesystem::path& manifest_path, const std::string& cell);

/// Decodes and preprocesses raw records. Records whose split differs from `split` are skipped
/// unless split is nullopt.
std::vector<BreastExam> prepare_records(const Manifest& manifest, const std::filesystem::path& manifest_path,
                                        const imaging::Segmenter& segmenter, int side,
                                        std::optional<Split> split = std::nullopt);

/// Loads preprocessed planes. Throws UnreadableImage, ConfigMismatch (side != expected_side
/// when expected_side > 0).
std::vector<BreastExam> load_planes(const std::vector<PlaneRecord>& rows, const std::filesystem::path& manifest_path,
                                    std::optional<Split> split = std::nullopt, int expected_side = 0);

/// Loads either manifest flavour; raw manifests are preprocessed with the classical backend.
std::vector<BreastExam> load_exams(const std::filesystem::path& manifest_path, std::optional<Split> split, int side);

/// Partition into (both views, exactly one view), preserving order.
std::pair<std::vector<BreastExam>, std::vector<BreastExam>> cohort_split(const std::vector<BreastExam>& exams);

// ---------------------------------------------------------------------------
// synthetic data

/// Guaranteed minimum gap between malignant-blob pixels and the mean lobe intensity.
inline constexpr double kBlobMargin = 0.35;

struct SyntheticOptions {
    int n = 100;
    double missing_rate = 0.0;
    std::uint64_t seed = 0;
    int size = 128;
    double test_fraction = 0.3;
};

struct SyntheticExam {
    ExamRecord record;  // paths empty until written
    imaging::RawExamViews views;
    /// Per view, the pixels belonging to the malignant blob (empty for benign exams).
    std::array<std::vector<std::uint8_t>, 2> blob_masks;
    /// Per view, the pixels inside the lobe.
    std::array<std::vector<std::uint8_t>, 2> lobe_masks;
};

/// Elliptical lobe on a dark background; malignant exams carry a bright irregular blob inside the
/// lobe, benign exams a faint smooth bump. The MLO view is a sheared rendering of the same scene.
/// Each exam independently loses one (never both) view with probability missing_rate. Patients
/// (two breasts each) are assigned to the test split with probability test_fraction. Throws BadRate.
std::vector<SyntheticExam> generate_synthetic(const SyntheticOptions& options);

/// Writes <dir>/images/*.png (16-bit) and <dir>/manifest.csv; returns the manifest with relative paths.
Manifest write_synthetic(const std::vector<SyntheticExam>& exams, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// CBIS-DDSM ingestion

struct IngestStats {
    long rows = 0;
    long unreadable = 0;
    long duplicate_views = 0;
    long train_single_view_excluded = 0;
    long overlapping_patients_dropped = 0;
    long train_both = 0;
    long test_both = 0;
    long test_single = 0;
};

struct IngestResult {
    Manifest train;
    Manifest test;
    IngestStats stats;
    std::vector<std::string> warnings;
};

/// Pairs CC and MLO records per breast from the official CBIS-DDSM description CSVs (files whose
/// name contains "test" form the test split). DICOM paths are mapped to PNGs under image_root by
/// replacing the extension. Training keeps only two-view breasts; single-view breasts are kept in
/// test. Throws MissingColumn.
IngestResult ingest_cbis(const std::vector<std::filesystem::path>& csv_files, const std::filesystem::path& image_root);

/// Splits one CSV line honouring double quotes.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace msmv::data
