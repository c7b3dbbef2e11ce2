#include "slotcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"

namespace slotcast {
namespace {

double pct(double now, double before) { return (now - before) / before * 100.0; }

struct DiffRow {
    FeatureRow row;
    bool valid = false;
    SampleStamp from, to;
};

std::vector<DiffRow> diff_rows(std::span<const SlotBar> bars, const FeatureOptions& opts,
                               int* dropped) {
    if (bars.size() < 2) throw TooFewRows("derive_feature_rows: need at least 2 slot bars");
    std::vector<DiffRow> out;
    out.reserve(bars.size() - 1);
    int bad = 0;
    for (std::size_t i = 0; i + 1 < bars.size(); ++i) {
        const SlotBar& a = bars[i];
        const SlotBar& b = bars[i + 1];
        DiffRow d;
        d.from = SampleStamp{a.date, a.slot};
        d.to = SampleStamp{b.date, b.slot};
        const int dow = weekday(b.date);
        if (dow > 5)
            throw InvariantViolation("derive_feature_rows: weekend session date "
                                     + to_string(b.date));
        FeatureRow& r = d.row;
        r.month = b.date.month;
        r.day_month = b.date.day;
        r.day_week = dow;
        r.time = static_cast<double>(static_cast<int>(b.slot));
        const double high_a = opts.high_perc_from_extremes ? a.high_max : a.first_high;
        const double high_b = opts.high_perc_from_extremes ? b.high_max : b.first_high;
        const double range_a = opts.range_from_extremes ? a.high_max - a.low_min
                                                        : a.first_high - a.low_min;
        const double range_b = opts.range_from_extremes ? b.high_max - b.low_min
                                                        : b.first_high - b.low_min;
        if (a.first_open == 0.0 || high_a == 0.0 || a.low_mean == 0.0 || a.first_close == 0.0
            || a.vol_mean == 0.0 || a.index_mean == 0.0) {
            ++bad;
            d.valid = false;
            out.push_back(d);
            continue;
        }
        r.open_perc = pct(b.first_open, a.first_open);
        r.high_perc = pct(high_b, high_a);
        r.low_perc = pct(b.low_mean, a.low_mean);
        r.close_perc = pct(b.first_close, a.first_close);
        r.vol_perc = pct(b.vol_mean, a.vol_mean);
        r.nifty_perc = pct(b.index_mean, a.index_mean);
        r.range_diff = range_b - range_a;
        d.valid = true;
        out.push_back(d);
    }
    if (dropped) *dropped = bad;
    return out;
}

std::vector<SlotBar> bars_in_date_range(std::span<const SlotBar> bars, const Date& lo,
                                        const Date& hi) {
    std::vector<SlotBar> out;
    for (const auto& b : bars)
        if (b.date >= lo && b.date <= hi) out.push_back(b);
    return out;
}

} // namespace

std::vector<FeatureRow> derive_feature_rows(std::span<const SlotBar> bars,
                                            const FeatureOptions& opts, int* dropped) {
    std::vector<FeatureRow> rows;
    for (auto& d : diff_rows(bars, opts, dropped))
        if (d.valid) rows.push_back(d.row);
    return rows;
}

Dataset derive_features(std::span<const SlotBar> bars, const FeatureOptions& opts) {
    if (bars.size() < 3) throw TooFewRows("derive_features: need at least 3 slot bars");
    int bad = 0;
    const auto diffs = diff_rows(bars, opts, &bad);
    Dataset ds;
    ds.dropped_degenerate = 0;
    for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
        if (!diffs[i].valid) {
            ++ds.dropped_degenerate;
            continue;
        }
        // open_perc of the next pair only needs prices, which are positive by
        // the tick invariants, so the target is always available.
        const SlotBar& b1 = bars[i + 1];
        const SlotBar& b2 = bars[i + 2];
        const double next_open_perc = pct(b2.first_open, b1.first_open);
        ds.rows.push_back(diffs[i].row);
        ds.target_reg.push_back(next_open_perc);
        ds.target_cls.push_back(binarize_target(next_open_perc));
        ds.input_end.push_back(diffs[i].to);
        ds.target_at.push_back(SampleStamp{b2.date, b2.slot});
    }
    return ds;
}

Eigen::MatrixXd predictor_matrix(const Dataset& ds) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.rows.size()), 10);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const FeatureRow& r = ds.rows[static_cast<std::size_t>(i)];
        x(i, 0) = r.month;
        x(i, 1) = r.day_month;
        x(i, 2) = r.day_week;
        x(i, 3) = r.time;
        x(i, 4) = r.high_perc;
        x(i, 5) = r.low_perc;
        x(i, 6) = r.close_perc;
        x(i, 7) = r.vol_perc;
        x(i, 8) = r.nifty_perc;
        x(i, 9) = r.range_diff;
    }
    return x;
}

Eigen::MatrixXd apply_min_max(const Eigen::MatrixXd& x, const ScaleParams& p) {
    if (static_cast<std::size_t>(x.cols()) != p.min.size())
        throw ShapeMismatch("apply_min_max: column count does not match params");
    Eigen::MatrixXd out = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double lo = p.min[static_cast<std::size_t>(j)];
        const double hi = p.max[static_cast<std::size_t>(j)];
        if (hi == lo) {
            out.col(j).setZero();
        } else {
            out.col(j) = (x.col(j).array() - lo) / (hi - lo);
        }
    }
    return out;
}

Eigen::MatrixXd fit_apply_min_max(const Eigen::MatrixXd& train, const Eigen::MatrixXd& apply,
                                  ScaleParams& params) {
    if (train.rows() == 0) throw EmptyTrain("fit_apply_min_max: empty train matrix");
    if (train.cols() != apply.cols())
        throw ShapeMismatch("fit_apply_min_max: train/apply column mismatch");
    params.min.resize(static_cast<std::size_t>(train.cols()));
    params.max.resize(static_cast<std::size_t>(train.cols()));
    for (Eigen::Index j = 0; j < train.cols(); ++j) {
        params.min[static_cast<std::size_t>(j)] = train.col(j).minCoeff();
        params.max[static_cast<std::size_t>(j)] = train.col(j).maxCoeff();
    }
    return apply_min_max(apply, params);
}

std::pair<Dataset, ScaleParams> min_max_scale(const Dataset& train, const Dataset& apply) {
    if (train.rows.empty()) throw EmptyTrain("min_max_scale: empty train dataset");
    ScaleParams params;
    const Eigen::MatrixXd scaled =
        fit_apply_min_max(predictor_matrix(train), predictor_matrix(apply), params);
    Dataset out = apply;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        FeatureRow& r = out.rows[i];
        const Eigen::Index ei = static_cast<Eigen::Index>(i);
        r.month = scaled(ei, 0);
        r.day_month = scaled(ei, 1);
        r.day_week = scaled(ei, 2);
        r.time = scaled(ei, 3);
        r.high_perc = scaled(ei, 4);
        r.low_perc = scaled(ei, 5);
        r.close_perc = scaled(ei, 6);
        r.vol_perc = scaled(ei, 7);
        r.nifty_perc = scaled(ei, 8);
        r.range_diff = scaled(ei, 9);
    }
    return {out, params};
}

std::pair<Dataset, Dataset> case_split(std::span<const SlotBar> bars, CaseId case_id,
                                       const FeatureOptions& opts) {
    if (bars.empty()) throw EmptySeries("case_split: no slot bars");
    std::set<int> years;
    std::set<Date> dates;
    for (const auto& b : bars) {
        years.insert(b.date.year);
        dates.insert(b.date);
    }

    std::vector<SlotBar> block1, block2;
    if (years.size() == 2) {
        const int first_year = *years.begin();
        for (const auto& b : bars)
            (b.date.year == first_year ? block1 : block2).push_back(b);
    } else {
        std::vector<Date> ordered(dates.begin(), dates.end());
        const Date pivot = ordered[(ordered.size() - 1) / 2];
        for (const auto& b : bars) (b.date <= pivot ? block1 : block2).push_back(b);
    }

    auto chrono_split = [&](const std::vector<SlotBar>& block) {
        Dataset full = derive_features(block, opts);
        const std::size_t n_train = static_cast<std::size_t>(full.size() * 7 / 10);
        if (n_train == 0 || n_train == full.size())
            throw TooFewRows("case_split: block too small for a 70/30 split");
        Dataset train, test;
        train.dropped_degenerate = full.dropped_degenerate;
        for (std::size_t i = 0; i < full.size(); ++i) {
            Dataset& dst = i < n_train ? train : test;
            dst.rows.push_back(full.rows[i]);
            dst.target_reg.push_back(full.target_reg[i]);
            dst.target_cls.push_back(full.target_cls[i]);
            dst.input_end.push_back(full.input_end[i]);
            dst.target_at.push_back(full.target_at[i]);
        }
        return std::pair(train, test);
    };

    switch (case_id) {
    case CaseId::I:
        return chrono_split(block1);
    case CaseId::II:
        return chrono_split(block2);
    case CaseId::III:
        return {derive_features(block1, opts), derive_features(block2, opts)};
    }
    throw BadParams("case_split: unknown case");
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
    for (std::size_t j = 0; j < kVariableNames.size(); ++j)
        out << kVariableNames[j] << ',';
    out << "target_reg,target_cls\n";
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        const FeatureRow& r = ds.rows[i];
        out << double_to_string(r.month) << ',' << double_to_string(r.day_month) << ','
            << double_to_string(r.day_week) << ',' << double_to_string(r.time) << ','
            << double_to_string(r.open_perc) << ',' << double_to_string(r.high_perc) << ','
            << double_to_string(r.low_perc) << ',' << double_to_string(r.close_perc) << ','
            << double_to_string(r.vol_perc) << ',' << double_to_string(r.nifty_perc) << ','
            << double_to_string(r.range_diff) << ',' << double_to_string(ds.target_reg[i]) << ','
            << ds.target_cls[i] << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in) {
    Dataset ds;
    std::string line;
    bool saw_header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (!saw_header) {
            if (fields.size() != 13 || fields[0] != "month")
                throw MalformedRow("read_dataset_csv: bad header");
            saw_header = true;
            continue;
        }
        if (fields.size() != 13)
            throw MalformedRow("read_dataset_csv: expected 13 fields at row "
                               + std::to_string(row));
        FeatureRow r;
        r.month = parse_double(fields[0], "month");
        r.day_month = parse_double(fields[1], "day_month");
        r.day_week = parse_double(fields[2], "day_week");
        r.time = parse_double(fields[3], "time");
        r.open_perc = parse_double(fields[4], "open_perc");
        r.high_perc = parse_double(fields[5], "high_perc");
        r.low_perc = parse_double(fields[6], "low_perc");
        r.close_perc = parse_double(fields[7], "close_perc");
        r.vol_perc = parse_double(fields[8], "vol_perc");
        r.nifty_perc = parse_double(fields[9], "nifty_perc");
        r.range_diff = parse_double(fields[10], "range_diff");
        ds.rows.push_back(r);
        ds.target_reg.push_back(parse_double(fields[11], "target_reg"));
        ds.target_cls.push_back(static_cast<int>(parse_int(fields[12], "target_cls")));
    }
    return ds;
}

} // namespace slotcast
