#include "msmv/evaluation.hpp"

#include <cstdlib>
#include <fstream>
#include <unordered_map>

#include "msmv/dataset.hpp"
#include "msmv/error.hpp"

namespace msmv {

eval::Cohort cohort_of(const BreastExam& exam) {
    return exam.both_views() ? eval::Cohort::BothViews : eval::Cohort::MissingView;
}

std::vector<eval::PredictionRecord> predict_records(const Model& model, const std::vector<BreastExam>& exams,
                                                    bool test_augment, int workers) {
    std::vector<eval::PredictionRecord> out;
    auto emit = [&](const std::vector<BreastExam>& group) {
        const auto logits = model.predict(group, workers);
        for (std::size_t i = 0; i < group.size(); ++i) {
            out.push_back({group[i].breast_id, std::string(to_string(group[i].augment)), cohort_of(group[i]),
                           group[i].label, nn::sigmoid(logits[i])});
        }
    };
    if (test_augment) {
        for (const auto& e : exams) emit(augment::augment_exam(e));
    } else {
        emit(exams);
    }
    return out;
}

std::vector<eval::PredictionRecord> per_exam_records(const std::vector<eval::PredictionRecord>& records) {
    std::vector<eval::PredictionRecord> out;
    std::vector<int> counts;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, inserted] = index.emplace(r.breast_id, out.size());
        if (inserted) {
            out.push_back(r);
            out.back().augment = "mean";
            counts.push_back(1);
        } else {
            out[it->second].score += r.score;
            ++counts[it->second];
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].score /= counts[i];
    return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<eval::PredictionRecord>& records) {
    std::ofstream out(path);
    if (!out) fail(Errc::Io, "cannot write " + path.string());
    out << "breast_id,augment,cohort,label,score\n";
    for (const auto& r : records) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", r.score);
        out << r.breast_id << ',' << r.augment << ',' << eval::to_string(r.cohort) << ',' << r.label << ',' << buf
            << '\n';
    }
}

std::vector<eval::PredictionRecord> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<eval::PredictionRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = data::split_csv_line(line);
        if (cells.size() != 5) fail(Errc::MalformedReport, "bad prediction row: " + line);
        eval::PredictionRecord r;
        r.breast_id = cells[0];
        r.augment = cells[1];
        const auto cohort = eval::cohort_from_string(cells[2]);
        if (!cohort) fail(Errc::MalformedReport, "bad cohort: " + cells[2]);
        r.cohort = *cohort;
        r.label = cells[3] == "1" ? 1 : 0;
        char* end = nullptr;
        r.score = std::strtod(cells[4].c_str(), &end);
        if (end == cells[4].c_str()) fail(Errc::MalformedReport, "bad score: " + cells[4]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace msmv
