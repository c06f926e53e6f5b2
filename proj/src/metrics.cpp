#include "msmv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>

#include "msmv/error.hpp"

namespace msmv::eval {

std::string_view to_string(Cohort c) noexcept {
    switch (c) {
        case Cohort::BothViews: return "BothViews";
        case Cohort::MissingView: return "MissingView";
        case Cohort::All: return "All";
    }
    return "All";
}

std::optional<Cohort> cohort_from_string(std::string_view name) noexcept {
    for (Cohort c : kCohorts) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

Confusion confusion(std::span<const PredictionRecord> preds, double threshold) {
    if (preds.empty()) fail(Errc::EmptyInput, "no predictions");
    Confusion c;
    for (const auto& p : preds) {
        const bool positive = p.score >= threshold;
        if (p.label == 1) {
            positive ? ++c.tp : ++c.fn;
        } else {
            positive ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

namespace {

std::optional<double> ratio(long num, long den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

void count_classes(std::span<const PredictionRecord> preds, long& pos, long& neg) {
    pos = 0;
    neg = 0;
    for (const auto& p : preds) (p.label == 1 ? pos : neg) += 1;
}

}  // namespace

ThresholdMetrics threshold_metrics(const Confusion& c) {
    ThresholdMetrics m;
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.sensitivity = ratio(c.tp, c.tp + c.fn);
    m.specificity = ratio(c.tn, c.tn + c.fp);
    m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    return m;
}

double auc(std::span<const PredictionRecord> preds) {
    long pos = 0;
    long neg = 0;
    count_classes(preds, pos, neg);
    if (pos == 0 || neg == 0) fail(Errc::SingleClass, "AUC needs both positive and negative records");

    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score < preds[b].score; });
    // Sum of 1-based average ranks of positives. Ranks are half-integers at worst; doubling keeps
    // the accumulation in exact integer arithmetic.
    long long twice_rank_sum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && preds[order[j + 1]].score == preds[order[i]].score) ++j;
        const long long twice_avg = static_cast<long long>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) {
            if (preds[order[k]].label == 1) twice_rank_sum += twice_avg;
        }
        i = j + 1;
    }
    // U = R_pos - pos(pos+1)/2; AUC = U / (pos * neg), all in doubled units.
    const long long twice_u = twice_rank_sum - static_cast<long long>(pos) * (pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double auc_pairwise(std::span<const PredictionRecord> preds) {
    long pos = 0;
    long neg = 0;
    count_classes(preds, pos, neg);
    if (pos == 0 || neg == 0) fail(Errc::SingleClass, "AUC needs both positive and negative records");
    long long twice_wins = 0;
    for (const auto& p : preds) {
        if (p.label != 1) continue;
        for (const auto& q : preds) {
            if (q.label == 1) continue;
            if (p.score > q.score) {
                twice_wins += 2;
            } else if (p.score == q.score) {
                twice_wins += 1;
            }
        }
    }
    return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

MetricsReport compute_report(std::span<const PredictionRecord> preds, double threshold) {
    MetricsReport report;
    std::array<std::vector<PredictionRecord>, 3> groups;
    for (const auto& p : preds) {
        if (p.cohort == Cohort::All) fail(Errc::MalformedReport, "record " + p.breast_id + " is tagged with the pooled cohort");
        groups[static_cast<int>(p.cohort)].push_back(p);
        groups[static_cast<int>(Cohort::All)].push_back(p);
    }
    for (Cohort c : kCohorts) {
        const auto& g = groups[static_cast<int>(c)];
        CohortMetrics& m = report[c];
        count_classes(g, m.n_pos, m.n_neg);
        if (g.empty()) continue;
        m.counts = confusion(g, threshold);
        const ThresholdMetrics t = threshold_metrics(m.counts);
        m.accuracy = t.accuracy;
        m.f1 = t.f1;
        m.sensitivity = t.sensitivity;
        m.specificity = t.specificity;
        if (m.n_pos > 0 && m.n_neg > 0) m.auc = auc(g);
    }
    return report;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> read_opt(const nlohmann::json& obj, const char* key) {
    if (!obj.contains(key)) fail(Errc::MalformedReport, std::string("missing key ") + key);
    const auto& v = obj.at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) fail(Errc::MalformedReport, std::string(key) + " is not a number");
    const double x = v.get<double>();
    if (!(x >= 0.0 && x <= 1.0)) fail(Errc::MalformedReport, std::string(key) + " lies outside [0,1]");
    return x;
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (Cohort c : kCohorts) {
        const CohortMetrics& m = report[c];
        nlohmann::ordered_json row;
        row["accuracy"] = opt(m.accuracy);
        row["auc"] = opt(m.auc);
        row["f1"] = opt(m.f1);
        row["sensitivity"] = opt(m.sensitivity);
        row["specificity"] = opt(m.specificity);
        row["n_pos"] = m.n_pos;
        row["n_neg"] = m.n_neg;
        out[std::string(to_string(c))] = std::move(row);
    }
    return out.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::MalformedReport, e.what());
    }
    if (!doc.is_object()) fail(Errc::MalformedReport, "report must be a JSON object");
    MetricsReport report;
    for (Cohort c : kCohorts) {
        const std::string key(to_string(c));
        if (!doc.contains(key) || !doc.at(key).is_object()) fail(Errc::MalformedReport, "missing cohort " + key);
        const auto& row = doc.at(key);
        CohortMetrics& m = report[c];
        m.accuracy = read_opt(row, "accuracy");
        m.auc = read_opt(row, "auc");
        m.f1 = read_opt(row, "f1");
        m.sensitivity = read_opt(row, "sensitivity");
        m.specificity = read_opt(row, "specificity");
        for (const char* k : {"n_pos", "n_neg"}) {
            if (!row.contains(k) || !row.at(k).is_number_integer() || row.at(k).get<long>() < 0) {
                fail(Errc::MalformedReport, key + "." + k + " must be a non-negative integer");
            }
        }
        m.n_pos = row.at("n_pos").get<long>();
        m.n_neg = row.at("n_neg").get<long>();
    }
    return report;
}

namespace {

std::string percent(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
    return buf;
}

std::string_view row_label(Cohort c) {
    switch (c) {
        case Cohort::BothViews: return "Breasts with both Views";
        case Cohort::MissingView: return "Breasts with Missing Views";
        case Cohort::All: return "All Breasts";
    }
    return "";
}

}  // namespace

std::string render_report(const MetricsReport& report, TableFormat format, std::string_view title) {
    const std::array<std::string, 6> header{"Test Data", "Accuracy (%)", "AUC (%)", "F1 Score (%)", "Sensitivity (%)",
                                            "Specificity (%)"};
    std::vector<std::array<std::string, 6>> rows;
    for (Cohort c : kCohorts) {
        const CohortMetrics& m = report[c];
        rows.push_back({std::string(row_label(c)), percent(m.accuracy), percent(m.auc), percent(m.f1),
                        percent(m.sensitivity), percent(m.specificity)});
    }

    std::string out;
    if (format == TableFormat::Markdown) {
        if (!title.empty()) out += "### " + std::string(title) + "\n\n";
        auto line = [&](const std::array<std::string, 6>& cells) {
            out += "|";
            for (const auto& c : cells) out += " " + c + " |";
            out += "\n";
        };
        line(header);
        out += "|---|---:|---:|---:|---:|---:|\n";
        for (const auto& r : rows) line(r);
        return out;
    }

    std::array<std::size_t, 6> widths{};
    for (std::size_t k = 0; k < 6; ++k) {
        widths[k] = header[k].size();
        for (const auto& r : rows) widths[k] = std::max(widths[k], r[k].size());
    }
    auto pad = [](const std::string& s, std::size_t w, bool left) {
        const std::string fill(w - s.size(), ' ');
        return left ? s + fill : fill + s;
    };
    if (!title.empty()) out += std::string(title) + "\n";
    auto line = [&](const std::array<std::string, 6>& cells) {
        for (std::size_t k = 0; k < 6; ++k) {
            out += pad(cells[k], widths[k], k == 0);
            out += k + 1 < 6 ? "  " : "\n";
        }
    };
    line(header);
    std::size_t total = 0;
    for (std::size_t w : widths) total += w;
    out += std::string(total + 10, '-') + "\n";
    for (const auto& r : rows) line(r);
    return out;
}

}  // namespace msmv::eval
