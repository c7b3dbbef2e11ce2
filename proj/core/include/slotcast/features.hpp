#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slotcast/slotter.hpp"

namespace slotcast {

// One slot-to-slot difference row. Calendar fields hold small integers before
// scaling; everything is double so a scaled copy can reuse the same struct.
struct FeatureRow {
    double month = 0;     // 1..12, from the later slot's date
    double day_month = 0; // 1..31
    double day_week = 0;  // 1..5, Monday = 1
    double time = 0;      // slot code of the later slot, 1..3
    double open_perc = 0;
    double high_perc = 0;
    double low_perc = 0;
    double close_perc = 0;
    double vol_perc = 0;
    double nifty_perc = 0;
    double range_diff = 0;

    bool operator==(const FeatureRow&) const = default;
};

inline constexpr std::array<const char*, 11> kVariableNames = {
    "month",    "day_month",  "day_week", "time",       "open_perc", "high_perc",
    "low_perc", "close_perc", "vol_perc", "nifty_perc", "range_diff"};

// Model inputs: the eleven variables minus open_perc (it is the target's
// source and would leak the answer one step early).
inline constexpr std::array<const char*, 10> kPredictorNames = {
    "month",      "day_month", "day_week",   "time",       "high_perc",
    "low_perc",   "close_perc", "vol_perc",  "nifty_perc", "range_diff"};

struct FeatureOptions {
    // range_diff from slot extremes (high_max - low_min); false uses the
    // first record's high - low instead.
    bool range_from_extremes = true;
    // high_perc from slot-max highs instead of the first record's high.
    bool high_perc_from_extremes = false;

    bool operator==(const FeatureOptions&) const = default;
};

struct SampleStamp {
    Date date;
    SlotId slot = SlotId::Morning;

    auto operator<=>(const SampleStamp&) const = default;
};

struct Dataset {
    std::vector<FeatureRow> rows;
    std::vector<double> target_reg; // next difference row's open_perc
    std::vector<int> target_cls;    // 1 iff target_reg > 0
    std::vector<SampleStamp> input_end; // latest slot contributing to the row
    std::vector<SampleStamp> target_at; // slot whose open forms the target
    int dropped_degenerate = 0;

    std::size_t size() const { return rows.size(); }
};

inline int binarize_target(double next_open_perc) { return next_open_perc > 0.0 ? 1 : 0; }

// All n-1 slot-difference rows for n slot bars. Rows whose denominators are
// zero are dropped; *dropped (if given) receives the count. Throws
// InvariantViolation on weekend dates, TooFewRows if fewer than 2 bars.
std::vector<FeatureRow> derive_feature_rows(std::span<const SlotBar> bars,
                                            const FeatureOptions& opts = {},
                                            int* dropped = nullptr);

// Target-aligned modeling dataset: n-2 rows for n bars, row i paired with the
// open_perc of difference row i+1. Throws TooFewRows if fewer than 3 bars.
Dataset derive_features(std::span<const SlotBar> bars, const FeatureOptions& opts = {});

struct ScaleParams {
    std::vector<double> min, max; // per predictor column
};

// Min-max parameters from the train split, applied to `apply`. Only the ten
// predictor columns are touched; open_perc and targets pass through. Constant
// columns map to 0.
std::pair<Dataset, ScaleParams> min_max_scale(const Dataset& train, const Dataset& apply);

Eigen::MatrixXd predictor_matrix(const Dataset& ds);
Eigen::MatrixXd fit_apply_min_max(const Eigen::MatrixXd& train, const Eigen::MatrixXd& apply,
                                  ScaleParams& params);
Eigen::MatrixXd apply_min_max(const Eigen::MatrixXd& x, const ScaleParams& params);

enum class CaseId { I = 1, II = 2, III = 3 };

// Case I: train/test = chronological 70/30 inside the first block.
// Case II: the same inside the second block. Case III: first block trains,
// second block tests. Blocks are calendar years when the bars span exactly
// two of them, otherwise the distinct dates split in half.
std::pair<Dataset, Dataset> case_split(std::span<const SlotBar> bars, CaseId case_id,
                                       const FeatureOptions& opts = {});

// CSV: eleven variable columns plus target_reg,target_cls. Stamps are kept
// in memory only.
void write_dataset_csv(const Dataset& ds, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

} // namespace slotcast
