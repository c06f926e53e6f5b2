#include "msmv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "msmv/error.hpp"
#include "msmv/png_io.hpp"

namespace fs = std::filesystem;

namespace msmv::data {

std::string_view to_string(Split s) noexcept { return s == Split::Train ? "train" : "test"; }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::unordered_map<std::string, std::size_t> column_index(const std::vector<std::string>& header,
                                                          const std::vector<std::string>& required,
                                                          const std::string& source) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.size(); ++i) idx[trim(header[i])] = i;
    for (const auto& name : required) {
        if (!idx.contains(name)) fail(Errc::MissingColumn, source + " lacks column '" + name + "'");
    }
    return idx;
}

// Reads a header-led CSV. Returns nullopt for an empty stream.
std::optional<std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>>> read_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) return std::nullopt;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return std::make_pair(std::move(header), std::move(rows));
}

Split parse_split(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    if (t == "train") return Split::Train;
    if (t == "test") return Split::Test;
    fail(Errc::BadConfig, where + ": split must be train or test, got '" + t + "'");
}

int parse_label(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    if (t == "0") return 0;
    if (t == "1") return 1;
    fail(Errc::BadConfig, where + ": label must be 0 or 1, got '" + t + "'");
}

const std::string& cell_at(const std::vector<std::string>& row, std::size_t i) {
    static const std::string empty;
    return i < row.size() ? row[i] : empty;
}

}  // namespace

Manifest read_manifest(std::istream& in) {
    Manifest out;
    auto csv = read_csv(in);
    if (!csv) return out;
    const auto idx = column_index(csv->first,
                                  {"breast_id", "patient_id", "label", "cc_path", "cc_roi", "mlo_path", "mlo_roi", "split"},
                                  "manifest");
    int line_no = 1;
    for (const auto& row : csv->second) {
        ++line_no;
        const std::string where = "manifest line " + std::to_string(line_no);
        ExamRecord r;
        r.breast_id = trim(cell_at(row, idx.at("breast_id")));
        r.patient_id = trim(cell_at(row, idx.at("patient_id")));
        r.label = parse_label(cell_at(row, idx.at("label")), where);
        r.split = parse_split(cell_at(row, idx.at("split")), where);
        const std::array<std::pair<const char*, const char*>, 2> cols{{{"cc_path", "cc_roi"}, {"mlo_path", "mlo_roi"}}};
        for (std::size_t v = 0; v < 2; ++v) {
            const std::string path = trim(cell_at(row, idx.at(cols[v].first)));
            const std::string roi = trim(cell_at(row, idx.at(cols[v].second)));
            if (path.empty()) continue;
            const auto box = imaging::parse_bbox(roi);
            if (!box) fail(Errc::BadConfig, where + ": bad roi '" + roi + "'");
            r.views[v] = ViewSource{path, *box};
        }
        if (r.breast_id.empty()) fail(Errc::BadConfig, where + ": empty breast_id");
        out.push_back(std::move(r));
    }
    return out;
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open manifest " + path.string());
    return read_manifest(in);
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
    out << kManifestHeader << '\n';
    for (const auto& r : manifest) {
        out << r.breast_id << ',' << r.patient_id << ',' << r.label;
        for (const auto& v : r.views) {
            if (v) {
                out << ',' << v->path << ',' << imaging::to_string(v->roi);
            } else {
                out << ",,";
            }
        }
        out << ',' << to_string(r.split) << '\n';
    }
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) fail(Errc::Io, "cannot write manifest " + path.string());
    write_manifest(out, manifest);
}

void validate_manifest(const Manifest& manifest) {
    std::set<std::pair<Split, std::string>> ids;
    std::unordered_map<std::string, Split> patient_split;
    for (const auto& r : manifest) {
        if (!r.present(View::CC) && !r.present(View::MLO)) fail(Errc::BadConfig, "breast " + r.breast_id + " has no view");
        if (!ids.emplace(r.split, r.breast_id).second) {
            fail(Errc::BadConfig, "breast " + r.breast_id + " appears twice in the " + std::string(to_string(r.split)) + " split");
        }
        auto [it, inserted] = patient_split.emplace(r.patient_id, r.split);
        if (!inserted && it->second != r.split) {
            fail(Errc::BadConfig, "patient " + r.patient_id + " appears in both train and test");
        }
    }
}

std::vector<PlaneRecord> read_planes_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open manifest " + path.string());
    std::vector<PlaneRecord> out;
    auto csv = read_csv(in);
    if (!csv) return out;
    const auto idx = column_index(
        csv->first, {"breast_id", "patient_id", "label", "cc_masked", "cc_cropped", "mlo_masked", "mlo_cropped", "split"},
        "planes manifest");
    int line_no = 1;
    for (const auto& row : csv->second) {
        ++line_no;
        const std::string where = "planes manifest line " + std::to_string(line_no);
        PlaneRecord r;
        r.breast_id = trim(cell_at(row, idx.at("breast_id")));
        r.patient_id = trim(cell_at(row, idx.at("patient_id")));
        r.label = parse_label(cell_at(row, idx.at("label")), where);
        r.split = parse_split(cell_at(row, idx.at("split")), where);
        const std::array<std::pair<const char*, const char*>, 2> cols{
            {{"cc_masked", "cc_cropped"}, {"mlo_masked", "mlo_cropped"}}};
        for (std::size_t v = 0; v < 2; ++v) {
            const std::string masked = trim(cell_at(row, idx.at(cols[v].first)));
            const std::string cropped = trim(cell_at(row, idx.at(cols[v].second)));
            if (masked.empty() != cropped.empty()) fail(Errc::BadConfig, where + ": a view needs both planes");
            if (!masked.empty()) r.views[v] = PlaneFiles{masked, cropped};
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_planes_manifest(const fs::path& path, const std::vector<PlaneRecord>& rows) {
    std::ofstream out(path);
    if (!out) fail(Errc::Io, "cannot write manifest " + path.string());
    out << kPlanesHeader << '\n';
    for (const auto& r : rows) {
        out << r.breast_id << ',' << r.patient_id << ',' << r.label;
        for (const auto& v : r.views) {
            if (v) {
                out << ',' << v->masked << ',' << v->cropped;
            } else {
                out << ",,";
            }
        }
        out << ',' << to_string(r.split) << '\n';
    }
}

bool is_planes_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open manifest " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        return std::find_if(cells.begin(), cells.end(), [](const std::string& c) { return trim(c) == "cc_masked"; }) !=
               cells.end();
    }
    return false;
}

fs::path resolve(const fs::path& manifest_path, const std::string& cell) {
    const fs::path p(cell);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

std::vector<BreastExam> prepare_records(const Manifest& manifest, const fs::path& manifest_path,
                                        const imaging::Segmenter& segmenter, int side, std::optional<Split> split) {
    std::vector<BreastExam> out;
    for (const auto& r : manifest) {
        if (split && r.split != *split) continue;
        imaging::RawExamViews raw;
        for (View v : kViews) {
            const auto& src = r.views[static_cast<int>(v)];
            if (!src) continue;
            imaging::RawMammogram img;
            img.pixels = io::read_png(resolve(manifest_path, src->path));
            img.view = v;
            img.source_id = r.breast_id + "/" + std::string(msmv::to_string(v));
            raw[static_cast<int>(v)] = imaging::RawView{std::move(img), src->roi};
        }
        BreastExam exam;
        exam.breast_id = r.breast_id;
        exam.patient_id = r.patient_id;
        exam.label = r.label;
        exam.views = imaging::preprocess_exam(raw, segmenter, side);
        out.push_back(std::move(exam));
    }
    return out;
}

std::vector<BreastExam> load_planes(const std::vector<PlaneRecord>& rows, const fs::path& manifest_path,
                                    std::optional<Split> split, int expected_side) {
    std::vector<BreastExam> out;
    for (const auto& r : rows) {
        if (split && r.split != *split) continue;
        BreastExam exam;
        exam.breast_id = r.breast_id;
        exam.patient_id = r.patient_id;
        exam.label = r.label;
        for (View v : kViews) {
            const auto& files = r.views[static_cast<int>(v)];
            if (!files) continue;
            ViewPlanes planes;
            planes.masked = ImagePlane{io::read_png(resolve(manifest_path, files->masked)), v, Scale::Masked};
            planes.cropped = ImagePlane{io::read_png(resolve(manifest_path, files->cropped)), v, Scale::Cropped};
            for (const ImagePlane* p : {&planes.masked, &planes.cropped}) {
                if (p->pixels.rows() != p->pixels.cols()) {
                    fail(Errc::ConfigMismatch, "plane of " + r.breast_id + " is not square");
                }
                if (expected_side > 0 && p->side() != expected_side) {
                    fail(Errc::ConfigMismatch, "plane of " + r.breast_id + " has side " + std::to_string(p->side()) +
                                                   ", expected " + std::to_string(expected_side));
                }
            }
            exam.views[static_cast<int>(v)] = std::move(planes);
        }
        if (!exam.present(View::CC) && !exam.present(View::MLO)) fail(Errc::NoViews, "breast " + r.breast_id + " has no view");
        out.push_back(std::move(exam));
    }
    return out;
}

std::vector<BreastExam> load_exams(const fs::path& manifest_path, std::optional<Split> split, int side) {
    if (is_planes_manifest(manifest_path)) {
        return load_planes(read_planes_manifest(manifest_path), manifest_path, split, side);
    }
    const Manifest manifest = read_manifest(manifest_path);
    return prepare_records(manifest, manifest_path, imaging::Segmenter::classical(), side, split);
}

std::pair<std::vector<BreastExam>, std::vector<BreastExam>> cohort_split(const std::vector<BreastExam>& exams) {
    std::pair<std::vector<BreastExam>, std::vector<BreastExam>> out;
    for (const auto& e : exams) (e.both_views() ? out.first : out.second).push_back(e);
    return out;
}

// ---------------------------------------------------------------------------
// synthetic data

namespace {

struct Disc {
    double r;
    double c;
    double radius;
};

struct Scene {
    double size = 128;
    double lobe_r = 0, lobe_c = 0, axis_r = 0, axis_c = 0;
    double tex_amp = 0, tex_fr = 0, tex_fc = 0, tex_pr = 0, tex_pc = 0;
    double lobe_level = 0;
    std::vector<Disc> blob;
    bool has_bump = false;
    double bump_r = 0, bump_c = 0, bump_sigma = 0, bump_amp = 0;

    [[nodiscard]] bool in_lobe(double r, double c) const {
        const double y = (r - lobe_r) / axis_r;
        const double x = (c - lobe_c) / axis_c;
        return x * x + y * y <= 1.0;
    }
    [[nodiscard]] bool in_blob(double r, double c) const {
        return std::any_of(blob.begin(), blob.end(), [&](const Disc& d) {
            return (r - d.r) * (r - d.r) + (c - d.c) * (c - d.c) <= d.radius * d.radius;
        });
    }
    [[nodiscard]] double lobe_value(double r, double c) const {
        double v = lobe_level + tex_amp * std::sin(tex_fr * r + tex_pr) * std::cos(tex_fc * c + tex_pc);
        if (has_bump) {
            const double d2 = (r - bump_r) * (r - bump_r) + (c - bump_c) * (c - bump_c);
            v += bump_amp * std::exp(-d2 / (2.0 * bump_sigma * bump_sigma));
        }
        return v;
    }
};

constexpr double kShear = 0.3;
constexpr double kBlobLevel = 0.9;
constexpr double kLobeLevelMax = 0.47;

// Scene coordinate sampled by pixel (r, c) of the given view.
std::pair<double, double> scene_coord(View v, double r, double c, double size) {
    if (v == View::CC) return {r, c};
    return {r, c - kShear * (r - size / 2.0)};
}

std::pair<double, double> view_coord(View v, double r, double c, double size) {
    if (v == View::CC) return {r, c};
    return {r, c + kShear * (r - size / 2.0)};
}

// A point strictly inside the lobe at normalized radius <= max_radius.
std::pair<double, double> lobe_point(const Scene& s, double max_radius, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double rad = max_radius * std::sqrt(unit(rng));
    const double ang = 2.0 * std::numbers::pi * unit(rng);
    return {s.lobe_r + rad * s.axis_r * std::sin(ang), s.lobe_c + rad * s.axis_c * std::cos(ang)};
}

imaging::BBox clamp_box(double center_r, double center_c, int half, int size) {
    const int lo_r = std::clamp(static_cast<int>(std::lround(center_r)) - half, 0, size - 2 * half - 1);
    const int lo_c = std::clamp(static_cast<int>(std::lround(center_c)) - half, 0, size - 2 * half - 1);
    return imaging::BBox{lo_r, lo_c, lo_r + 2 * half, lo_c + 2 * half};
}

}  // namespace

std::vector<SyntheticExam> generate_synthetic(const SyntheticOptions& options) {
    if (options.n < 1) fail(Errc::BadRate, "n must be at least 1");
    if (!(options.missing_rate >= 0.0 && options.missing_rate < 1.0)) {
        fail(Errc::BadRate, "missing_rate must lie in [0,1), got " + std::to_string(options.missing_rate));
    }
    if (!(options.test_fraction >= 0.0 && options.test_fraction <= 1.0)) {
        fail(Errc::BadRate, "test_fraction must lie in [0,1]");
    }
    if (options.size < 32) fail(Errc::BadConfig, "synthetic images must be at least 32 pixels");

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const int n = options.n;
    const double size = options.size;
    const int patients = (n + 1) / 2;

    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
    std::shuffle(labels.begin(), labels.end(), rng);

    std::vector<Split> patient_split(static_cast<std::size_t>(patients));
    for (auto& s : patient_split) s = unit(rng) < options.test_fraction ? Split::Test : Split::Train;

    std::vector<SyntheticExam> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SyntheticExam ex;
        char pid[32];
        std::snprintf(pid, sizeof pid, "SYN%05d", i / 2);
        ex.record.patient_id = pid;
        ex.record.breast_id = std::string(pid) + (i % 2 == 0 ? "_LEFT" : "_RIGHT");
        ex.record.label = labels[static_cast<std::size_t>(i)];
        ex.record.split = patient_split[static_cast<std::size_t>(i / 2)];

        Scene s;
        s.size = size;
        s.lobe_r = size * 0.5 + uni(-0.05, 0.05) * size;
        s.lobe_c = size * 0.45 + uni(-0.05, 0.05) * size;
        s.axis_r = size * uni(0.32, 0.40);
        s.axis_c = size * uni(0.28, 0.34);
        s.lobe_level = uni(0.38, kLobeLevelMax);
        s.tex_amp = 0.03;
        s.tex_fr = uni(0.08, 0.2);
        s.tex_fc = uni(0.08, 0.2);
        s.tex_pr = uni(0.0, 6.283);
        s.tex_pc = uni(0.0, 6.283);

        const bool malignant = ex.record.label == 1;
        if (malignant) {
            const auto [br, bc] = lobe_point(s, 0.45, rng);
            const int discs = 3 + static_cast<int>(unit(rng) * 3.0);
            for (int k = 0; k < discs; ++k) {
                s.blob.push_back(Disc{br + uni(-0.04, 0.04) * size, bc + uni(-0.04, 0.04) * size, uni(0.025, 0.055) * size});
            }
        } else {
            const auto [br, bc] = lobe_point(s, 0.45, rng);
            s.has_bump = true;
            s.bump_r = br;
            s.bump_c = bc;
            s.bump_sigma = uni(0.03, 0.05) * size;
            s.bump_amp = 0.05;
        }
        const int roi_half = static_cast<int>(uni(0.05, 0.09) * size);

        for (View v : kViews) {
            imaging::RawMammogram img;
            img.view = v;
            img.source_id = ex.record.breast_id + "/" + std::string(msmv::to_string(v));
            img.pixels = Grid(options.size, options.size);
            std::vector<std::uint8_t> blob_mask(img.pixels.size(), 0);
            std::vector<std::uint8_t> lobe_mask(img.pixels.size(), 0);
            for (int r = 0; r < options.size; ++r) {
                for (int c = 0; c < options.size; ++c) {
                    const auto [sr, sc] = scene_coord(v, r, c, size);
                    const std::size_t idx = static_cast<std::size_t>(r) * options.size + c;
                    double val = 0.03 + 0.02 * unit(rng);
                    if (s.in_lobe(sr, sc)) {
                        lobe_mask[idx] = 1;
                        val = s.lobe_value(sr, sc) + uni(-0.02, 0.02);
                        if (s.in_blob(sr, sc)) {
                            blob_mask[idx] = 1;
                            val = kBlobLevel + uni(-0.03, 0.03);
                        }
                    }
                    img.pixels(r, c) = std::clamp(val, 0.0, 1.0);
                }
            }
            imaging::BBox roi;
            if (malignant && std::any_of(blob_mask.begin(), blob_mask.end(), [](std::uint8_t m) { return m != 0; })) {
                roi = imaging::tight_bbox(options.size, options.size, blob_mask);
            } else {
                const auto [vr, vc] = view_coord(v, s.has_bump ? s.bump_r : s.lobe_r, s.has_bump ? s.bump_c : s.lobe_c, size);
                roi = clamp_box(vr, vc, roi_half, options.size);
            }
            ex.views[static_cast<int>(v)] = imaging::RawView{std::move(img), roi};
            ex.blob_masks[static_cast<int>(v)] = std::move(blob_mask);
            ex.lobe_masks[static_cast<int>(v)] = std::move(lobe_mask);
            ex.record.views[static_cast<int>(v)] = ViewSource{"", roi};
        }

        if (unit(rng) < options.missing_rate) {
            const int drop = unit(rng) < 0.5 ? 0 : 1;
            ex.views[static_cast<std::size_t>(drop)].reset();
            ex.record.views[static_cast<std::size_t>(drop)].reset();
            ex.blob_masks[static_cast<std::size_t>(drop)].clear();
            ex.lobe_masks[static_cast<std::size_t>(drop)].clear();
        }
        out.push_back(std::move(ex));
    }
    return out;
}

Manifest write_synthetic(const std::vector<SyntheticExam>& exams, const fs::path& dir) {
    fs::create_directories(dir / "images");
    Manifest manifest;
    for (const auto& ex : exams) {
        ExamRecord rec = ex.record;
        for (View v : kViews) {
            const auto& raw = ex.views[static_cast<int>(v)];
            if (!raw) continue;
            const std::string rel = "images/" + rec.breast_id + "_" + std::string(msmv::to_string(v)) + ".png";
            io::write_png(dir / rel, raw->image.pixels, 16);
            rec.views[static_cast<int>(v)] = ViewSource{rel, raw->roi};
        }
        manifest.push_back(std::move(rec));
    }
    write_manifest(dir / "manifest.csv", manifest);
    return manifest;
}

// ---------------------------------------------------------------------------
// CBIS-DDSM ingestion

namespace {

struct CbisRow {
    std::string breast;
    std::string patient;
    View view = View::CC;
    bool malignant = false;
    std::string image;
    std::string roi_mask;
    std::string cropped;
};

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

fs::path to_png(const fs::path& root, const std::string& cbis_path) {
    fs::path p(trim(cbis_path));
    p.replace_extension(".png");
    return root / p;
}

std::optional<imaging::BBox> mask_box(const fs::path& mask_path, std::pair<int, int> image_dims) {
    const auto dims = io::png_dimensions(mask_path);
    if (!dims || *dims != image_dims) return std::nullopt;
    const Grid mask = io::read_png(mask_path);
    std::vector<std::uint8_t> bits(mask.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = mask.data()[i] > 0.5 ? 1 : 0;
    if (std::none_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; })) return std::nullopt;
    return imaging::tight_bbox(mask.rows(), mask.cols(), bits);
}

}  // namespace

IngestResult ingest_cbis(const std::vector<fs::path>& csv_files, const fs::path& image_root) {
    IngestResult result;
    std::vector<fs::path> files = csv_files;
    std::sort(files.begin(), files.end());

    // split -> breast -> rows
    std::array<std::map<std::string, std::vector<CbisRow>>, 2> breasts;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) fail(Errc::Io, "cannot open " + file.string());
        auto csv = read_csv(in);
        if (!csv) continue;
        const auto idx = column_index(csv->first,
                                      {"patient_id", "left or right breast", "image view", "pathology",
                                       "image file path", "ROI mask file path"},
                                      file.filename().string());
        const bool is_test = file.filename().string().find("test") != std::string::npos;
        const auto cropped_col = idx.find("cropped image file path");
        for (const auto& row : csv->second) {
            ++result.stats.rows;
            CbisRow r;
            r.patient = trim(cell_at(row, idx.at("patient_id")));
            r.breast = r.patient + "_" + upper(trim(cell_at(row, idx.at("left or right breast"))));
            const std::string view = upper(trim(cell_at(row, idx.at("image view"))));
            if (view != "CC" && view != "MLO") {
                result.warnings.push_back("skipping row with view '" + view + "' for " + r.breast);
                continue;
            }
            r.view = view == "CC" ? View::CC : View::MLO;
            r.malignant = upper(trim(cell_at(row, idx.at("pathology")))) == "MALIGNANT";
            r.image = trim(cell_at(row, idx.at("image file path")));
            r.roi_mask = trim(cell_at(row, idx.at("ROI mask file path")));
            if (cropped_col != idx.end()) r.cropped = trim(cell_at(row, cropped_col->second));
            breasts[is_test ? 1 : 0][r.breast].push_back(std::move(r));
        }
    }

    std::array<Manifest, 2> manifests;
    for (int split = 0; split < 2; ++split) {
        for (auto& [breast, rows] : breasts[static_cast<std::size_t>(split)]) {
            ExamRecord rec;
            rec.breast_id = breast;
            rec.patient_id = rows.front().patient;
            rec.split = split == 0 ? Split::Train : Split::Test;
            rec.label = std::any_of(rows.begin(), rows.end(), [](const CbisRow& r) { return r.malignant; }) ? 1 : 0;
            for (View v : kViews) {
                std::vector<const CbisRow*> candidates;
                for (const auto& r : rows) {
                    if (r.view == v) candidates.push_back(&r);
                }
                std::sort(candidates.begin(), candidates.end(), [](const CbisRow* a, const CbisRow* b) {
                    return std::tie(a->image, a->roi_mask) < std::tie(b->image, b->roi_mask);
                });
                for (const CbisRow* r : candidates) {
                    if (rec.views[static_cast<int>(v)]) {
                        ++result.stats.duplicate_views;
                        continue;
                    }
                    const fs::path image = to_png(image_root, r->image);
                    const auto dims = io::png_dimensions(image);
                    std::optional<imaging::BBox> roi;
                    try {
                        if (dims) {
                            roi = mask_box(to_png(image_root, r->roi_mask), *dims);
                            if (!roi && !r->cropped.empty()) roi = mask_box(to_png(image_root, r->cropped), *dims);
                        }
                    } catch (const Error&) {
                        roi.reset();
                    }
                    if (!dims || !roi) {
                        ++result.stats.unreadable;
                        result.warnings.push_back("unreadable image or ROI mask for " + breast + " " +
                                                  std::string(msmv::to_string(v)) + ": " + image.string());
                        continue;
                    }
                    rec.views[static_cast<int>(v)] = ViewSource{image.string(), *roi};
                }
            }
            if (!rec.present(View::CC) && !rec.present(View::MLO)) continue;
            if (rec.split == Split::Train && !rec.both_views()) {
                ++result.stats.train_single_view_excluded;
                continue;
            }
            manifests[static_cast<std::size_t>(split)].push_back(std::move(rec));
        }
    }

    std::unordered_set<std::string> test_patients;
    for (const auto& r : manifests[1]) test_patients.insert(r.patient_id);
    std::erase_if(manifests[0], [&](const ExamRecord& r) {
        if (!test_patients.contains(r.patient_id)) return false;
        ++result.stats.overlapping_patients_dropped;
        return true;
    });

    result.train = std::move(manifests[0]);
    result.test = std::move(manifests[1]);
    result.stats.train_both = static_cast<long>(result.train.size());
    for (const auto& r : result.test) (r.both_views() ? result.stats.test_both : result.stats.test_single) += 1;
    return result;
}

}  // namespace msmv::data
