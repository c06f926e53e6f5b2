#include "msmv/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "msmv/checkpoint.hpp"
#include "msmv/config.hpp"
#include "msmv/dataset.hpp"
#include "msmv/error.hpp"
#include "msmv/evaluation.hpp"
#include "msmv/imaging.hpp"
#include "msmv/metrics.hpp"
#include "msmv/png_io.hpp"
#include "msmv/trainer.hpp"

namespace fs = std::filesystem;

namespace msmv::cli {

namespace {

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("MSMV_SEED");
    if (v == nullptr || *v == '\0') return std::nullopt;
    char* end = nullptr;
    const unsigned long long s = std::strtoull(v, &end, 10);
    if (*end != '\0') fail(Errc::BadConfig, std::string("MSMV_SEED is not an integer: ") + v);
    return s;
}

fs::path snapshot_path(const fs::path& artifact) { return fs::path(artifact.string() + ".config"); }

void write_snapshot(const fs::path& artifact, const RunConfig& cfg, const std::vector<std::string>& notes = {}) {
    std::ofstream out(snapshot_path(artifact));
    if (!out) fail(Errc::Io, "cannot write " + snapshot_path(artifact).string());
    for (const auto& n : notes) out << "# " << n << '\n';
    out << serialize(cfg);
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

// Runs `<cmd> <in.png> <mask.png>`; mask pixels above one half are foreground.
imaging::ExternalSegmenter command_segmenter(const std::string& cmd, const fs::path& scratch) {
    return [cmd, scratch](const imaging::RawMammogram& img) {
        fs::create_directories(scratch);
        const fs::path in = scratch / "segment_in.png";
        const fs::path mask = scratch / "segment_mask.png";
        fs::remove(mask);
        io::write_png(in, img.pixels, 16);
        const std::string line = cmd + " " + shell_quote(in.string()) + " " + shell_quote(mask.string());
        if (std::system(line.c_str()) != 0) fail(Errc::BackendUnavailable, "segmenter command failed: " + line);
        const Grid m = io::read_png(mask);
        imaging::SegmenterOutput out;
        out.rows = m.rows();
        out.cols = m.cols();
        out.mask.resize(m.size());
        bool any = false;
        for (std::size_t i = 0; i < m.size(); ++i) {
            out.mask[i] = m.data()[i] > 0.5 ? 1 : 0;
            any = any || out.mask[i] != 0;
        }
        if (!any) fail(Errc::NoForeground, "external segmenter returned an empty mask for " + img.source_id);
        out.bbox = imaging::tight_bbox(out.rows, out.cols, out.mask);
        return out;
    };
}

struct PrepArgs {
    std::string manifest;
    std::string out;
    std::string backend = "classical";
    int side = 224;
    std::string segmenter_cmd;
};

int cmd_prep(const PrepArgs& a, std::ostream& out, std::ostream& err) {
    const fs::path manifest_path(a.manifest);
    const data::Manifest manifest = data::read_manifest(manifest_path);
    data::validate_manifest(manifest);
    const fs::path dir(a.out);
    fs::create_directories(dir / "planes");

    imaging::Segmenter segmenter = imaging::Segmenter::classical();
    if (a.backend == "external") {
        std::string cmd = a.segmenter_cmd;
        if (cmd.empty()) {
            if (const char* env = std::getenv("MSMV_SEGMENTER")) cmd = env;
        }
        segmenter = cmd.empty() ? imaging::Segmenter::external({})
                                : imaging::Segmenter::external(command_segmenter(cmd, dir / "scratch"));
    }

    std::vector<data::PlaneRecord> rows;
    long skipped = 0;
    for (const auto& rec : manifest) {
        std::vector<BreastExam> exams;
        try {
            exams = data::prepare_records({rec}, manifest_path, segmenter, a.side);
        } catch (const Error& e) {
            if (e.code() == Errc::BackendUnavailable) throw;
            err << "warning: skipping " << rec.breast_id << ": " << e.what() << '\n';
            ++skipped;
            continue;
        }
        const BreastExam& exam = exams.front();
        data::PlaneRecord row{rec.breast_id, rec.patient_id, rec.label, {}, rec.split};
        for (View v : kViews) {
            const auto& planes = exam.views[static_cast<int>(v)];
            if (!planes) continue;
            const std::string stem = "planes/" + rec.breast_id + "_" + std::string(to_string(v));
            data::PlaneFiles files{stem + "_masked.png", stem + "_cropped.png"};
            io::write_png(dir / files.masked, planes->masked.pixels, 16);
            io::write_png(dir / files.cropped, planes->cropped.pixels, 16);
            row.views[static_cast<int>(v)] = files;
        }
        rows.push_back(std::move(row));
    }
    if (fs::exists(dir / "scratch")) fs::remove_all(dir / "scratch");
    if (rows.empty() && !manifest.empty()) fail(Errc::EmptyDataset, "no exam could be preprocessed");
    const fs::path out_manifest = dir / "manifest.csv";
    data::write_planes_manifest(out_manifest, rows);
    RunConfig cfg;
    cfg.backbone.input_side = a.side;
    write_snapshot(out_manifest, cfg, {"prep backend=" + a.backend, "prep source=" + manifest_path.string(),
                                       "resampling: bilinear, corner-aligned (src = i * (in - 1) / (side - 1))"});
    out << "prepared " << rows.size() << " exams (" << skipped << " skipped) -> " << out_manifest.string() << '\n';
    return 0;
}

struct IngestArgs {
    std::string meta;
    std::string images;
    std::string out;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<fs::path> csvs;
    const fs::path meta(a.meta);
    if (fs::is_directory(meta)) {
        for (const auto& entry : fs::directory_iterator(meta)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
        }
    } else {
        csvs.push_back(meta);
    }
    const data::IngestResult r = data::ingest_cbis(csvs, a.images);
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    data::Manifest all = r.train;
    all.insert(all.end(), r.test.begin(), r.test.end());
    const fs::path out_path(a.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    data::write_manifest(out_path, all);
    write_snapshot(out_path, RunConfig{}, {"ingest meta=" + a.meta, "ingest images=" + a.images});
    const auto& s = r.stats;
    out << "rows " << s.rows << ", unreadable " << s.unreadable << ", duplicate views " << s.duplicate_views << '\n'
        << "train both-view " << s.train_both << " (single-view excluded " << s.train_single_view_excluded
        << ", overlapping patients dropped " << s.overlapping_patients_dropped << ")\n"
        << "test both-view " << s.test_both << ", test single-view " << s.test_single << '\n';
    return 0;
}

struct SyntheticArgs {
    int n = 100;
    double missing_rate = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    int size = 128;
    double test_fraction = 0.3;
};

int cmd_gen_synthetic(SyntheticArgs a, std::ostream& out) {
    if (const auto s = env_seed()) a.seed = *s;
    data::SyntheticOptions opt{a.n, a.missing_rate, a.seed, a.size, a.test_fraction};
    const auto exams = data::generate_synthetic(opt);
    const data::Manifest manifest = data::write_synthetic(exams, a.out);
    RunConfig cfg;
    cfg.train.seed = a.seed;
    char rate[128];
    std::snprintf(rate, sizeof rate, "missing_rate=%.17g test_fraction=%.17g", a.missing_rate, a.test_fraction);
    write_snapshot(fs::path(a.out) / "manifest.csv", cfg,
                   {"gen-synthetic n=" + std::to_string(a.n) + " size=" + std::to_string(a.size) + " " + rate});
    long single = std::count_if(manifest.begin(), manifest.end(), [](const data::ExamRecord& r) { return !r.both_views(); });
    out << "wrote " << manifest.size() << " exams (" << single << " single-view) to " << a.out << '\n';
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string manifest;
    std::string fusion;
    std::optional<int> epochs;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string log;
    bool no_augment = false;
    bool no_test_augment = false;
    std::optional<int> workers;
    std::vector<std::string> sets;
};

RunConfig resolve_train_config(const TrainArgs& a) {
    RunConfig cfg;
    if (!a.config.empty()) cfg = load_config(a.config);
    for (const auto& kv : a.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) fail(Errc::BadConfig, "--set expects key=value, got " + kv);
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!a.fusion.empty()) cfg.fusion.strategy = fusion::strategy_from_string(a.fusion);
    if (a.epochs) cfg.train.epochs = *a.epochs;
    if (a.seed) cfg.train.seed = *a.seed;
    if (const auto s = env_seed()) cfg.train.seed = *s;
    if (a.no_augment) cfg.train.augment = false;
    if (a.no_test_augment) cfg.train.test_augment = false;
    if (a.workers) cfg.train.workers = *a.workers;
    cfg.resolve();
    return cfg;
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const RunConfig cfg = resolve_train_config(a);
    const fs::path manifest(a.manifest);
    std::vector<BreastExam> exams = data::load_exams(manifest, data::Split::Train, cfg.backbone.input_side);
    std::erase_if(exams, [](const BreastExam& e) { return !e.both_views(); });
    if (exams.empty()) fail(Errc::EmptyDataset, "no two-view training exams in " + manifest.string());

    auto [train_set, val_set] = train::split_train_val(exams, cfg.train.val_fraction, cfg.train.seed);
    out << "training on " << train_set.size() << " exams, validating on " << val_set.size() << '\n';
    Model model(cfg.backbone, cfg.fusion, cfg.train.seed);
    model.set_freezing(cfg.backbone.unfrozen_top_stages);

    const auto result = train::train(model, train_set, val_set, cfg.train, [&](const train::EpochLog& e) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", e.train_loss);
        out << "epoch " << e.epoch << " train_loss " << buf << " val_loss " << fmt_opt(e.val_loss) << " val_auc "
            << fmt_opt(e.val_auc) << " val_acc " << fmt_opt(e.val_acc) << std::endl;
    });

    const fs::path ckpt(a.out);
    if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
    save_model(ckpt, model, cfg);
    write_snapshot(ckpt, cfg);
    const fs::path log = a.log.empty() ? fs::path(ckpt.string() + ".log.csv") : fs::path(a.log);
    train::write_epoch_log(log, result.log);
    write_snapshot(log, cfg);
    out << "kept epoch " << result.best_epoch << "; checkpoint " << ckpt.string() << '\n';
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string out;
    std::string dump_preds;
    std::string split = "test";
    bool no_test_augment = false;
    int workers = 1;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(Errc::Io, "cannot write " + path.string());
    out << text;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    LoadedModel loaded = load_model(a.checkpoint);
    RunConfig cfg = loaded.config;
    if (a.no_test_augment) cfg.train.test_augment = false;
    cfg.train.workers = a.workers;
    std::optional<data::Split> split;
    if (a.split == "test") split = data::Split::Test;
    if (a.split == "train") split = data::Split::Train;
    const auto exams = data::load_exams(a.manifest, split, cfg.backbone.input_side);
    if (exams.empty()) fail(Errc::EmptyDataset, "no exams to evaluate in " + a.manifest);

    const auto records = predict_records(loaded.model, exams, cfg.train.test_augment, a.workers);
    const auto report = eval::compute_report(records);
    const fs::path report_path(a.out);
    write_text(report_path, eval::report_to_json(report));
    write_snapshot(report_path, cfg);
    out << eval::render_report(report, eval::TableFormat::Text,
                               cfg.train.test_augment ? "augmented test records" : "test exams");
    if (cfg.train.test_augment) {
        const auto per_exam = per_exam_records(records);
        const auto per_exam_report = eval::compute_report(per_exam);
        fs::path per_exam_path = report_path;
        per_exam_path.replace_extension(".per_exam.json");
        write_text(per_exam_path, eval::report_to_json(per_exam_report));
        out << eval::render_report(per_exam_report, eval::TableFormat::Text, "per-exam mean over augmentations");
    }
    if (!a.dump_preds.empty()) {
        const fs::path preds(a.dump_preds);
        if (preds.has_parent_path()) fs::create_directories(preds.parent_path());
        write_predictions(preds, records);
    }
    return 0;
}

int cmd_report(const std::string& path, const std::string& format, std::ostream& out) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto report = eval::report_from_json(ss.str());
    out << eval::render_report(report, format == "markdown" ? eval::TableFormat::Markdown : eval::TableFormat::Text);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-scale multi-view mammogram classification", "msmv"};
    app.require_subcommand(1);

    PrepArgs prep;
    auto* p = app.add_subcommand("prep", "segment, crop and resize raw exams into planes");
    p->add_option("--manifest", prep.manifest, "raw manifest CSV")->required();
    p->add_option("--out", prep.out, "output directory")->required();
    p->add_option("--backend", prep.backend, "segmenter backend")->check(CLI::IsMember({"classical", "external"}));
    p->add_option("--side", prep.side, "output plane side")->check(CLI::Range(8, 4096));
    p->add_option("--segmenter-cmd", prep.segmenter_cmd, "external segmenter: <cmd> <in.png> <mask.png>");

    IngestArgs ingest;
    auto* i = app.add_subcommand("ingest", "build a manifest from CBIS-DDSM description CSVs");
    i->add_option("--cbis-meta", ingest.meta, "directory of description CSVs, or one CSV")->required();
    i->add_option("--images", ingest.images, "root of the PNG-converted images")->required();
    i->add_option("--out", ingest.out, "output manifest CSV")->required();

    SyntheticArgs syn;
    auto* g = app.add_subcommand("gen-synthetic", "write a synthetic exam set");
    g->add_option("--n", syn.n, "number of breast exams");
    g->add_option("--missing-rate", syn.missing_rate, "probability of dropping one view");
    g->add_option("--seed", syn.seed, "random seed");
    g->add_option("--out", syn.out, "output directory")->required();
    g->add_option("--size", syn.size, "image side");
    g->add_option("--test-fraction", syn.test_fraction, "probability a patient goes to the test split");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a model");
    t->add_option("--config", tr.config, "key=value config file");
    t->add_option("--manifest", tr.manifest, "raw or planes manifest")->required();
    t->add_option("--fusion", tr.fusion, "fusion strategy")->check(CLI::IsMember({"maxpool", "conv"}));
    t->add_option("--epochs", tr.epochs, "number of epochs");
    t->add_option("--seed", tr.seed, "random seed");
    t->add_option("--out", tr.out, "checkpoint path")->required();
    t->add_option("--log", tr.log, "epoch log CSV (default <out>.log.csv)");
    t->add_flag("--no-augment", tr.no_augment, "train on original exams only");
    t->add_flag("--no-test-augment", tr.no_test_augment, "evaluate on original exams only");
    t->add_option("--workers", tr.workers, "threads")->check(CLI::PositiveNumber);
    t->add_option("--set", tr.sets, "override one config key (key=value)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
    e->add_option("--checkpoint", ev.checkpoint, "checkpoint path")->required();
    e->add_option("--manifest", ev.manifest, "raw or planes manifest")->required();
    e->add_option("--out", ev.out, "report JSON")->required();
    e->add_option("--dump-preds", ev.dump_preds, "prediction CSV");
    e->add_option("--split", ev.split, "rows to evaluate")->check(CLI::IsMember({"test", "train", "all"}));
    e->add_flag("--no-test-augment", ev.no_test_augment, "evaluate on original exams only");
    e->add_option("--workers", ev.workers, "threads")->check(CLI::PositiveNumber);

    std::string report_path;
    std::string format = "text";
    auto* r = app.add_subcommand("report", "render a report JSON as a table");
    r->add_option("--report", report_path, "report JSON")->required();
    r->add_option("--format", format, "table format")->check(CLI::IsMember({"text", "markdown"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (p->parsed()) return cmd_prep(prep, out, err);
        if (i->parsed()) return cmd_ingest(ingest, out, err);
        if (g->parsed()) return cmd_gen_synthetic(syn, out);
        if (t->parsed()) return cmd_train(tr, out);
        if (e->parsed()) return cmd_eval(ev, out);
        if (r->parsed()) return cmd_report(report_path, format, out);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
    err << app.help();
    return 2;
}

}  // namespace msmv::cli
