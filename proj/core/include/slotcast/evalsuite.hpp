#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slotcast {

struct ConfusionMatrix {
    long tp = 0, fp = 0, tn = 0, fn = 0;

    long total() const { return tp + fp + tn + fn; }
    long actual_pos() const { return tp + fn; }
    long actual_neg() const { return tn + fp; }

    static ConfusionMatrix from_labels(std::span<const int> predicted,
                                       std::span<const int> actual);
    bool operator==(const ConfusionMatrix&) const = default;
};

// All values in percent. A field is empty when its denominator is zero.
struct ClsMetrics {
    std::optional<double> sensitivity; // tp / (tp + fn)
    std::optional<double> specificity; // tn / (tn + fp)
    std::optional<double> ppv;         // tp / (tp + fp)
    std::optional<double> npv;         // tn / (tn + fn)
    std::optional<double> ca;          // (tp + tn) / total
    std::optional<double> f1;          // harmonic mean of ppv and sensitivity
};

ClsMetrics cls_metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0, tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points; // (0,0) .. (1,1), one step per distinct score
    double auc = 0.0;             // trapezoid; equals Mann-Whitney with half tie credit
};

// Throws SingleClass if labels are all 0 or all 1, LengthMismatch on size
// mismatch or empty input.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

struct LiftPoint {
    double depth = 0.0; // cumulative population fraction, 0.1 .. 1.0
    double lift = 0.0;  // cumulative positive rate / base rate
};

// Cumulative decile lift, scores descending (ties broken by original index).
// Throws SingleClass when there are no positives.
std::vector<LiftPoint> lift_curve(std::span<const double> scores, std::span<const int> labels,
                                  int bins = 10);

struct RegMetrics {
    double rmse = 0.0;
    double mean_abs_actual = 0.0;
    std::optional<double> rmse_ratio_pct; // rmse / mean_abs_actual * 100
    std::optional<double> pearson_r;      // empty when either side is constant
    std::optional<double> r_t_stat;       // r * sqrt((n-2)/(1-r^2))
    long mismatch_count = 0;              // sign(pred) != sign(actual), sign(0) = non-positive
    double mismatch_pct = 0.0;
};

RegMetrics reg_metrics(std::span<const double> predicted, std::span<const double> actual);

struct SummaryCell {
    std::optional<double> value;
    bool best = false;
};

// metrics x models grid with best-per-row flags (ties flag every holder).
struct SummaryTable {
    std::vector<std::string> metrics;
    std::vector<bool> higher_is_better; // per metric row
    std::vector<std::string> models;
    std::vector<std::vector<SummaryCell>> cells; // [metric][model]
};

SummaryTable summarize_classification(
    const std::vector<std::pair<std::string, ClsMetrics>>& per_model);
SummaryTable summarize_regression(
    const std::vector<std::pair<std::string, RegMetrics>>& per_model);

void write_summary_csv(const SummaryTable& table, std::ostream& out);

} // namespace slotcast
