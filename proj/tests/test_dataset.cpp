#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "msmv/dataset.hpp"
#include "msmv/error.hpp"
#include "msmv/png_io.hpp"

using namespace msmv;
using namespace msmv::data;
namespace fs = std::filesystem;

namespace {

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::Io;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("msmv_test_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExamRecord record(const std::string& id, const std::string& patient, int label, bool cc, bool mlo, Split split) {
    ExamRecord r;
    r.breast_id = id;
    r.patient_id = patient;
    r.label = label;
    r.split = split;
    if (cc) r.views[0] = ViewSource{"img/" + id + "_cc.png", imaging::BBox{1, 2, 30, 40}};
    if (mlo) r.views[1] = ViewSource{"img/" + id + "_mlo.png", imaging::BBox{0, 0, 9, 9}};
    return r;
}

}  // namespace

TEST(Manifest, RoundTrip) {
    const Manifest m{record("A_LEFT", "A", 1, true, true, Split::Train), record("B_RIGHT", "B", 0, true, false, Split::Test),
                     record("C_LEFT", "C", 0, false, true, Split::Test)};
    std::stringstream ss;
    write_manifest(ss, m);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kManifestHeader);
    EXPECT_EQ(read_manifest(ss), m);
}

TEST(Manifest, ColumnsInAnyOrderAndMissingColumn) {
    std::stringstream ok("split,label,breast_id,patient_id,cc_path,cc_roi,mlo_path,mlo_roi\n"
                         "train,1,X_LEFT,X,a.png,0:0:3:3,,\n");
    const auto m = read_manifest(ok);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].label, 1);
    EXPECT_TRUE(m[0].present(View::CC));
    EXPECT_FALSE(m[0].present(View::MLO));
    std::stringstream missing("breast_id,patient_id,cc_path,cc_roi,mlo_path,mlo_roi,split\n");
    EXPECT_EQ(code_of([&] { read_manifest(missing); }), Errc::MissingColumn);
    std::stringstream bad_label(std::string(kManifestHeader) + "\nX_LEFT,X,2,a.png,0:0:3:3,,,train\n");
    EXPECT_EQ(code_of([&] { read_manifest(bad_label); }), Errc::BadConfig);
}

TEST(Manifest, Validation) {
    EXPECT_NO_THROW(validate_manifest({record("A_LEFT", "A", 1, true, true, Split::Train),
                                       record("A_RIGHT", "A", 0, true, true, Split::Train)}));
    EXPECT_EQ(code_of([] {
                  validate_manifest({record("A_LEFT", "A", 1, true, true, Split::Train),
                                     record("A_LEFT", "A", 1, true, true, Split::Train)});
              }),
              Errc::BadConfig);
    EXPECT_EQ(code_of([] {
                  validate_manifest({record("A_LEFT", "A", 1, true, true, Split::Train),
                                     record("A_RIGHT", "A", 1, true, false, Split::Test)});
              }),
              Errc::BadConfig);
    EXPECT_EQ(code_of([] { validate_manifest({record("A_LEFT", "A", 1, false, false, Split::Train)}); }),
              Errc::BadConfig);
}

TEST(CsvLine, QuotedCells) {
    EXPECT_EQ(split_csv_line("a,\"b,c\",,d"), (std::vector<std::string>{"a", "b,c", "", "d"}));
    EXPECT_EQ(split_csv_line("\"x \"\"y\"\"\""), (std::vector<std::string>{"x \"y\""}));
}

TEST(Synthetic, BalancedAndCompleteWithoutMissingRate) {
    const auto exams = generate_synthetic({.n = 100, .missing_rate = 0.0, .seed = 3, .size = 64});
    ASSERT_EQ(exams.size(), 100u);
    int pos = 0;
    std::set<std::string> ids;
    for (const auto& e : exams) {
        EXPECT_TRUE(e.record.both_views());
        EXPECT_TRUE(e.views[0] && e.views[1]);
        pos += e.record.label;
        ids.insert(e.record.breast_id);
    }
    EXPECT_NEAR(pos, 50, 1);
    EXPECT_EQ(ids.size(), 100u);
}

TEST(Synthetic, MissingRateWithinBinomialBounds) {
    const SyntheticOptions opt{.n = 100, .missing_rate = 0.25, .seed = 11, .size = 64};
    const auto a = generate_synthetic(opt);
    int single = 0;
    for (const auto& e : a) {
        EXPECT_TRUE(e.record.present(View::CC) || e.record.present(View::MLO));
        single += e.record.both_views() ? 0 : 1;
    }
    EXPECT_GE(single, 14);
    EXPECT_LE(single, 36);
    const auto b = generate_synthetic(opt);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].record, b[i].record);
}

TEST(Synthetic, SameSeedGivesIdenticalPixels) {
    const SyntheticOptions opt{.n = 6, .missing_rate = 0.3, .seed = 99, .size = 48};
    const auto a = generate_synthetic(opt);
    const auto b = generate_synthetic(opt);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int v = 0; v < 2; ++v) {
            ASSERT_EQ(a[i].views[v].has_value(), b[i].views[v].has_value());
            if (!a[i].views[v]) continue;
            EXPECT_TRUE(a[i].views[v]->image.pixels == b[i].views[v]->image.pixels);
            EXPECT_EQ(a[i].views[v]->roi, b[i].views[v]->roi);
        }
    }
    auto other = opt;
    other.seed = 100;
    EXPECT_FALSE(generate_synthetic(other)[0].views[0]->image.pixels == a[0].views[0]->image.pixels);
}

TEST(Synthetic, BlobOutshinesLobeByMargin) {
    const auto exams = generate_synthetic({.n = 40, .missing_rate = 0.0, .seed = 5, .size = 96});
    for (const auto& e : exams) {
        for (int v = 0; v < 2; ++v) {
            const auto& px = e.views[v]->image.pixels;
            const auto& blob = e.blob_masks[v];
            const auto& lobe = e.lobe_masks[v];
            double lobe_sum = 0.0;
            long lobe_n = 0;
            double blob_min = 2.0;
            long blob_n = 0;
            for (std::size_t i = 0; i < px.size(); ++i) {
                if (!blob.empty() && blob[i]) {
                    blob_min = std::min(blob_min, px.data()[i]);
                    ++blob_n;
                } else if (lobe[i]) {
                    lobe_sum += px.data()[i];
                    ++lobe_n;
                }
            }
            ASSERT_GT(lobe_n, 0);
            if (e.record.label == 1) {
                ASSERT_GT(blob_n, 0) << e.record.breast_id;
                EXPECT_GE(blob_min - lobe_sum / lobe_n, kBlobMargin) << e.record.breast_id;
                const auto& roi = e.views[v]->roi;
                EXPECT_EQ(roi, imaging::tight_bbox(px.rows(), px.cols(), blob));
            } else {
                EXPECT_EQ(blob_n, 0);
            }
        }
    }
}

TEST(Synthetic, PatientsStayInOneSplit) {
    const auto exams = generate_synthetic({.n = 60, .missing_rate = 0.1, .seed = 8, .size = 48, .test_fraction = 0.5});
    Manifest m;
    for (const auto& e : exams) m.push_back(e.record);
    for (auto& r : m) {
        for (auto& v : r.views)
            if (v) v->path = "x.png";
    }
    EXPECT_NO_THROW(validate_manifest(m));
    const auto test_n = std::count_if(m.begin(), m.end(), [](const ExamRecord& r) { return r.split == Split::Test; });
    EXPECT_GT(test_n, 0);
    EXPECT_LT(test_n, 60);
}

TEST(Synthetic, BadOptions) {
    EXPECT_EQ(code_of([] { generate_synthetic({.n = 0}); }), Errc::BadRate);
    EXPECT_EQ(code_of([] { generate_synthetic({.n = 4, .missing_rate = 1.0}); }), Errc::BadRate);
    EXPECT_EQ(code_of([] { generate_synthetic({.n = 4, .missing_rate = -0.1}); }), Errc::BadRate);
    EXPECT_EQ(code_of([] { generate_synthetic({.n = 4, .test_fraction = 1.5}); }), Errc::BadRate);
    EXPECT_EQ(code_of([] { generate_synthetic({.n = 4, .size = 16}); }), Errc::BadConfig);
}

TEST(Synthetic, WrittenManifestLoadsAndPreprocesses) {
    const fs::path dir = scratch("synthetic");
    const auto exams = generate_synthetic({.n = 8, .missing_rate = 0.3, .seed = 2, .size = 64});
    const auto manifest = write_synthetic(exams, dir);
    EXPECT_EQ(read_manifest(dir / "manifest.csv"), manifest);
    const Grid back = io::read_png(resolve(dir / "manifest.csv", manifest[0].views[0] ? manifest[0].views[0]->path
                                                                                       : manifest[0].views[1]->path));
    const auto& orig = exams[0].views[0] ? exams[0].views[0]->image.pixels : exams[0].views[1]->image.pixels;
    ASSERT_EQ(back.size(), orig.size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_LE(std::abs(back.data()[i] - orig.data()[i]), 0.5 / 65535.0 + 1e-12);

    const auto loaded = load_exams(dir / "manifest.csv", std::nullopt, 16);
    ASSERT_EQ(loaded.size(), 8u);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        EXPECT_EQ(loaded[i].breast_id, manifest[i].breast_id);
        EXPECT_EQ(loaded[i].label, manifest[i].label);
        for (View v : kViews) EXPECT_EQ(loaded[i].present(v), manifest[i].present(v));
    }
    fs::remove_all(dir);
}

TEST(PlanesManifest, RoundTripAndDetection) {
    const fs::path dir = scratch("planes");
    PlaneRecord a{"A_LEFT", "A", 1, {PlaneFiles{"p/a_cc_m.png", "p/a_cc_c.png"}, std::nullopt}, Split::Test};
    PlaneRecord b{"B_LEFT", "B", 0, {PlaneFiles{"p/b_cc_m.png", "p/b_cc_c.png"}, PlaneFiles{"m", "c"}}, Split::Train};
    write_planes_manifest(dir / "planes.csv", {a, b});
    EXPECT_EQ(read_planes_manifest(dir / "planes.csv"), (std::vector<PlaneRecord>{a, b}));
    EXPECT_TRUE(is_planes_manifest(dir / "planes.csv"));
    write_manifest(dir / "raw.csv", Manifest{record("A_LEFT", "A", 1, true, true, Split::Train)});
    EXPECT_FALSE(is_planes_manifest(dir / "raw.csv"));
    EXPECT_EQ(resolve(dir / "planes.csv", "p/x.png"), dir / "p/x.png");
    EXPECT_EQ(resolve(dir / "planes.csv", "/abs/x.png"), fs::path("/abs/x.png"));
    fs::remove_all(dir);
}

TEST(CohortSplit, PartitionPreservesOrder) {
    std::vector<BreastExam> exams(5);
    const bool cc[] = {true, true, false, true, true};
    const bool mlo[] = {true, false, true, true, false};
    for (int i = 0; i < 5; ++i) {
        exams[i].breast_id = std::to_string(i);
        if (cc[i]) exams[i].views[0] = ViewPlanes{};
        if (mlo[i]) exams[i].views[1] = ViewPlanes{};
    }
    const auto [both, single] = cohort_split(exams);
    ASSERT_EQ(both.size(), 2u);
    ASSERT_EQ(single.size(), 3u);
    EXPECT_EQ(both[0].breast_id, "0");
    EXPECT_EQ(both[1].breast_id, "3");
    EXPECT_EQ(single[0].breast_id, "1");
    EXPECT_EQ(single[1].breast_id, "2");
    EXPECT_EQ(single[2].breast_id, "4");
}

class CbisIngest : public ::testing::Test {
protected:
    void SetUp() override {
        root = scratch("cbis");
        fs::create_directories(root / "img");
    }
    void TearDown() override { fs::remove_all(root); }

    void image(const std::string& name, int rows = 20, int cols = 16) {
        Grid g(rows, cols, 0.4);
        io::write_png(root / "img" / (name + ".png"), g, 8);
        Grid m(rows, cols);
        for (int r = 3; r <= 7; ++r)
            for (int c = 4; c <= 9; ++c) m(r, c) = 1.0;
        io::write_png(root / "img" / (name + "_mask.png"), m, 8);
    }

    static std::string row(const std::string& patient, const std::string& side, const std::string& view,
                           const std::string& pathology, const std::string& name) {
        return patient + "," + side + "," + view + "," + pathology + ",img/" + name + ".dcm,img/" + name + "_mask.dcm\n";
    }

    void csv(const std::string& file, const std::string& body) {
        std::ofstream(root / file) << "patient_id,left or right breast,image view,pathology,image file path,ROI mask file path\n"
                                   << body;
    }

    fs::path root;
};

TEST_F(CbisIngest, PairsViewsAndHandlesSplits) {
    for (const char* n : {"p1lcc", "p1lmlo", "p2rcc", "p2rcc2", "p3lcc", "p3lmlo", "p4lcc", "p4lmlo", "p4tcc"}) image(n);
    csv("mass_case_description_train_set.csv",
        row("P1", "LEFT", "CC", "MALIGNANT", "p1lcc") + row("P1", "LEFT", "MLO", "BENIGN", "p1lmlo") +
            row("P2", "RIGHT", "CC", "BENIGN", "p2rcc") + row("P2", "RIGHT", "CC", "BENIGN", "p2rcc2") +
            row("P4", "LEFT", "CC", "BENIGN", "p4lcc") + row("P4", "LEFT", "MLO", "BENIGN", "p4lmlo") +
            row("P5", "LEFT", "CC", "BENIGN", "missing"));
    csv("mass_case_description_test_set.csv",
        row("P3", "LEFT", "CC", "BENIGN", "p3lcc") + row("P3", "LEFT", "MLO", "BENIGN", "p3lmlo") +
            row("P4", "RIGHT", "CC", "MALIGNANT", "p4tcc") + row("P2", "RIGHT", "CC", "BENIGN", "p2rcc"));
    const std::vector<fs::path> files{root / "mass_case_description_train_set.csv",
                                      root / "mass_case_description_test_set.csv"};
    const auto res = ingest_cbis(files, root);

    // P1 kept; P2 single view excluded; P4 dropped for overlap; P5 has no readable view.
    ASSERT_EQ(res.train.size(), 1u);
    EXPECT_EQ(res.train[0].breast_id, "P1_LEFT");
    EXPECT_EQ(res.train[0].label, 1);
    EXPECT_EQ(res.train[0].views[0]->roi, (imaging::BBox{3, 4, 7, 9}));
    for (const auto& r : res.train) EXPECT_TRUE(r.both_views());

    ASSERT_EQ(res.test.size(), 3u);
    EXPECT_EQ(res.stats.test_both, 1);
    EXPECT_EQ(res.stats.test_single, 2);
    EXPECT_EQ(res.stats.rows, 11);
    EXPECT_EQ(res.stats.unreadable, 1);
    EXPECT_EQ(res.stats.duplicate_views, 1);
    EXPECT_EQ(res.stats.train_single_view_excluded, 1);
    EXPECT_EQ(res.stats.overlapping_patients_dropped, 1);

    Manifest all = res.train;
    all.insert(all.end(), res.test.begin(), res.test.end());
    EXPECT_NO_THROW(validate_manifest(all));

    const auto again = ingest_cbis({files[1], files[0]}, root);
    EXPECT_EQ(again.train, res.train);
    EXPECT_EQ(again.test, res.test);
}

TEST_F(CbisIngest, EmptyCsvAndMissingColumns) {
    csv("calc_case_description_train_set.csv", "");
    const auto res = ingest_cbis({root / "calc_case_description_train_set.csv"}, root);
    EXPECT_TRUE(res.train.empty());
    EXPECT_TRUE(res.test.empty());
    std::ofstream(root / "bad.csv") << "patient_id,image view\nP1,CC\n";
    EXPECT_EQ(code_of([&] { ingest_cbis({root / "bad.csv"}, root); }), Errc::MissingColumn);
}
