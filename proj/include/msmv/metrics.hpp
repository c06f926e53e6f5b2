#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msmv::eval {

enum class Cohort { BothViews = 0, MissingView = 1, All = 2 };

inline constexpr std::array<Cohort, 3> kCohorts{Cohort::BothViews, Cohort::MissingView, Cohort::All};

/// "BothViews", "MissingView", "All".
std::string_view to_string(Cohort c) noexcept;
std::optional<Cohort> cohort_from_string(std::string_view name) noexcept;

struct PredictionRecord {
    std::string breast_id;
    std::string augment = "identity";
    Cohort cohort = Cohort::BothViews;
    int label = 0;
    double score = 0.0;  // sigmoid(logit)
};

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    [[nodiscard]] long total() const noexcept { return tp + fp + tn + fn; }
    Confusion& operator+=(const Confusion& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// score >= threshold predicts positive. Throws EmptyInput.
Confusion confusion(std::span<const PredictionRecord> preds, double threshold = 0.5);

/// Undefined ratios (zero denominators) are nullopt.
struct ThresholdMetrics {
    std::optional<double> accuracy;
    std::optional<double> f1;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
};

ThresholdMetrics threshold_metrics(const Confusion& c);

/// Mann-Whitney AUC via average ranks (ties half-credited). Throws SingleClass.
double auc(std::span<const PredictionRecord> preds);
/// Same quantity by enumerating every positive/negative pair.
double auc_pairwise(std::span<const PredictionRecord> preds);

struct CohortMetrics {
    std::optional<double> accuracy;
    std::optional<double> auc;
    std::optional<double> f1;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    long n_pos = 0;
    long n_neg = 0;
    Confusion counts;
};

struct MetricsReport {
    std::array<CohortMetrics, 3> cohorts;

    CohortMetrics& operator[](Cohort c) { return cohorts[static_cast<int>(c)]; }
    const CohortMetrics& operator[](Cohort c) const { return cohorts[static_cast<int>(c)]; }
};

/// BothViews and MissingView from the records' tags; All pools every record.
MetricsReport compute_report(std::span<const PredictionRecord> preds, double threshold = 0.5);

/// {cohort: {accuracy, auc, f1, sensitivity, specificity, n_pos, n_neg}}; undefined values are null.
std::string report_to_json(const MetricsReport& report);
/// Throws MalformedReport.
MetricsReport report_from_json(const std::string& text);

enum class TableFormat { Text, Markdown };

/// Percentages with two decimals; undefined cells render as "n/a".
std::string render_report(const MetricsReport& report, TableFormat format, std::string_view title = {});

}  // namespace msmv::eval
