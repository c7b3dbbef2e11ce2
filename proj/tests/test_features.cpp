#include <doctest.h>

#include <sstream>
#include <vector>

#include "slotcast/features.hpp"
#include "slotcast/market_data.hpp"

using namespace slotcast;

namespace {

SlotBar bar(Date d, SlotId s, double fo, double fh, double fc, double hm, double lm,
            double lmean, double vmean, double imean) {
    SlotBar b;
    b.date = d;
    b.slot = s;
    b.n_ticks = 1;
    b.first_open = fo;
    b.first_high = fh;
    b.first_close = fc;
    b.high_max = hm;
    b.low_min = lm;
    b.low_mean = lmean;
    b.vol_mean = vmean;
    b.index_mean = imean;
    return b;
}

std::vector<SlotBar> fixture() {
    return {
        bar({2013, 1, 1}, SlotId::Morning, 100, 102, 101, 103, 99, 99.5, 10, 5900),
        bar({2013, 1, 1}, SlotId::Afternoon, 101, 103, 102, 104, 100, 100.5, 12, 5910),
        bar({2013, 1, 1}, SlotId::Evening, 102, 104, 103, 105, 101, 101.5, 9, 5920),
        bar({2013, 1, 2}, SlotId::Morning, 103, 105, 104, 106, 102, 102.5, 15, 5930),
    };
}

} // namespace

TEST_CASE("derived variables match hand-computed values") {
    const auto bars = fixture();
    const auto rows = derive_feature_rows(bars, FeatureOptions{});
    REQUIRE(rows.size() == 3);

    const FeatureRow& r = rows[0]; // b0 -> b1
    CHECK(r.month == 1);
    CHECK(r.day_month == 1);
    CHECK(r.day_week == 2); // 2013-01-01 is a Tuesday
    CHECK(r.time == 2);
    CHECK(r.open_perc == doctest::Approx(1.0));
    CHECK(r.high_perc == doctest::Approx((103.0 - 102.0) / 102.0 * 100.0));
    CHECK(r.low_perc == doctest::Approx((100.5 - 99.5) / 99.5 * 100.0));
    CHECK(r.close_perc == doctest::Approx((102.0 - 101.0) / 101.0 * 100.0));
    CHECK(r.vol_perc == doctest::Approx(20.0));
    CHECK(r.nifty_perc == doctest::Approx((5910.0 - 5900.0) / 5900.0 * 100.0));
    CHECK(r.range_diff == doctest::Approx((104.0 - 100.0) - (103.0 - 99.0)));

    // Day boundary row picks up the later slot's calendar fields.
    CHECK(rows[2].day_month == 2);
    CHECK(rows[2].time == 1);
    CHECK(rows[2].day_week == 3);
}

TEST_CASE("feature options switch the range and high sources") {
    const auto bars = fixture();
    FeatureOptions opts;
    opts.range_from_extremes = false;
    opts.high_perc_from_extremes = true;
    const auto rows = derive_feature_rows(bars, opts);
    // range from first_high - low_min, high_perc from slot-max highs.
    CHECK(rows[0].range_diff == doctest::Approx((103.0 - 100.0) - (102.0 - 99.0)));
    CHECK(rows[0].high_perc == doctest::Approx((104.0 - 103.0) / 103.0 * 100.0));
}

TEST_CASE("dataset aligns targets one difference row ahead") {
    const auto bars = fixture();
    const Dataset ds = derive_features(bars, FeatureOptions{});
    REQUIRE(ds.size() == 2); // n - 2 rows for n bars

    // Row 0's target is difference row 1's open_perc.
    CHECK(ds.target_reg[0] == doctest::Approx((102.0 - 101.0) / 101.0 * 100.0));
    CHECK(ds.target_cls[0] == 1);
    CHECK(ds.input_end[0] == SampleStamp{{2013, 1, 1}, SlotId::Afternoon});
    CHECK(ds.target_at[0] == SampleStamp{{2013, 1, 1}, SlotId::Evening});

    CHECK(ds.target_reg[1] == doctest::Approx((103.0 - 102.0) / 102.0 * 100.0));
    CHECK(ds.input_end[1] == SampleStamp{{2013, 1, 1}, SlotId::Evening});
    CHECK(ds.target_at[1] == SampleStamp{{2013, 1, 2}, SlotId::Morning});

    // Every sample sees only data strictly before its target.
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds.input_end[i] < ds.target_at[i]);

    CHECK_THROWS_AS(derive_features(std::vector<SlotBar>{bars[0], bars[1]}, FeatureOptions{}),
                    TooFewRows);
}

TEST_CASE("negative target binarizes to zero") {
    auto bars = fixture();
    bars[3].first_open = 101.0; // b2 -> b3 open falls
    const Dataset ds = derive_features(bars, FeatureOptions{});
    CHECK(ds.target_reg[1] < 0.0);
    CHECK(ds.target_cls[1] == 0);
    CHECK(binarize_target(0.0) == 0);
    CHECK(binarize_target(1e-12) == 1);
}

TEST_CASE("degenerate denominators are dropped and counted") {
    auto bars = fixture();
    bars[0].vol_mean = 0.0; // difference row 0 cannot be formed
    const Dataset ds = derive_features(bars, FeatureOptions{});
    CHECK(ds.size() == 1);
    CHECK(ds.dropped_degenerate == 1);
    CHECK(ds.input_end[0] == SampleStamp{{2013, 1, 1}, SlotId::Evening});
}

TEST_CASE("weekend session dates are rejected") {
    auto bars = fixture();
    bars[3].date = Date{2013, 1, 5}; // Saturday
    CHECK_THROWS_AS(derive_feature_rows(bars, FeatureOptions{}), InvariantViolation);
}

TEST_CASE("predictor matrix column order follows kPredictorNames") {
    const Dataset ds = derive_features(fixture(), FeatureOptions{});
    const Eigen::MatrixXd x = predictor_matrix(ds);
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == 10);
    CHECK(x(0, 0) == ds.rows[0].month);
    CHECK(x(0, 1) == ds.rows[0].day_month);
    CHECK(x(0, 2) == ds.rows[0].day_week);
    CHECK(x(0, 3) == ds.rows[0].time);
    CHECK(x(0, 4) == ds.rows[0].high_perc);
    CHECK(x(0, 5) == ds.rows[0].low_perc);
    CHECK(x(0, 6) == ds.rows[0].close_perc);
    CHECK(x(0, 7) == ds.rows[0].vol_perc);
    CHECK(x(0, 8) == ds.rows[0].nifty_perc);
    CHECK(x(0, 9) == ds.rows[0].range_diff);
    CHECK(std::string(kPredictorNames[0]) == "month");
    CHECK(std::string(kPredictorNames[9]) == "range_diff");
}

TEST_CASE("min max scaling fits on train only") {
    Eigen::MatrixXd train(3, 2), apply(2, 2);
    train << 1, 5, 3, 5, 5, 5;
    apply << 3, 9, 9, 1;
    ScaleParams p;
    const Eigen::MatrixXd ts = fit_apply_min_max(train, train, p);
    CHECK(ts.col(0).minCoeff() == doctest::Approx(0.0));
    CHECK(ts.col(0).maxCoeff() == doctest::Approx(1.0));
    CHECK(ts.col(1).cwiseAbs().maxCoeff() == doctest::Approx(0.0)); // constant -> 0
    const Eigen::MatrixXd as = apply_min_max(apply, p);
    CHECK(as(0, 0) == doctest::Approx(0.5));
    CHECK(as(1, 0) == doctest::Approx(2.0)); // out-of-range stays un-clipped
    CHECK(as(0, 1) == doctest::Approx(0.0));

    Eigen::MatrixXd wrong(2, 3);
    wrong.setOnes();
    CHECK_THROWS_AS(apply_min_max(wrong, p), ShapeMismatch);
    CHECK_THROWS_AS(fit_apply_min_max(Eigen::MatrixXd(0, 2), apply, p), EmptyTrain);
}

TEST_CASE("dataset scaling keeps targets and open_perc intact") {
    const Dataset ds = derive_features(fixture(), FeatureOptions{});
    const auto [scaled, params] = min_max_scale(ds, ds);
    CHECK(scaled.target_reg == ds.target_reg);
    CHECK(scaled.target_cls == ds.target_cls);
    CHECK(scaled.rows[0].open_perc == ds.rows[0].open_perc);
    CHECK(scaled.rows[0].vol_perc == doctest::Approx(1.0)); // 20 is the column max
    CHECK(params.min.size() == 10);
}

TEST_CASE("case split with two calendar years uses year blocks") {
    const TickSeries ticks = synth_ticks(3, 520); // 2013 into 2014
    const auto bars = aggregate_slots(ticks, SlotConfig{});
    CHECK(bars.front().date.year == 2013);
    CHECK(bars.back().date.year == 2014);

    const auto [train3, test3] = case_split(bars, CaseId::III, FeatureOptions{});
    for (const auto& s : train3.target_at) CHECK(s.date.year == 2013);
    for (const auto& s : test3.input_end) CHECK(s.date.year == 2014);
    CHECK(train3.target_at.back() < test3.input_end.front());

    const auto [train1, test1] = case_split(bars, CaseId::I, FeatureOptions{});
    for (const auto& s : test1.target_at) CHECK(s.date.year == 2013);
    const std::size_t total1 = train1.size() + test1.size();
    CHECK(train1.size() == total1 * 7 / 10);
    // Chronological: last train sample precedes the first test sample.
    CHECK(train1.input_end.back() < test1.input_end.front());

    const auto [train2, test2] = case_split(bars, CaseId::II, FeatureOptions{});
    for (const auto& s : train2.input_end) CHECK(s.date.year == 2014);
    CHECK(train2.input_end.back() < test2.input_end.front());
}

TEST_CASE("case split on one year halves the distinct dates") {
    const TickSeries ticks = synth_ticks(3, 100);
    const auto bars = aggregate_slots(ticks, SlotConfig{});
    const auto [train, test] = case_split(bars, CaseId::III, FeatureOptions{});
    CHECK(train.size() > 0);
    CHECK(test.size() > 0);
    // 100 dates -> pivot after date 50; each block loses 2 rows to alignment.
    CHECK(train.size() == 50 * 3 - 2);
    CHECK(test.size() == 50 * 3 - 2);
    CHECK(train.target_at.back().date < test.input_end.front().date);
}

TEST_CASE("dataset csv round trip") {
    const Dataset ds = derive_features(fixture(), FeatureOptions{});
    std::stringstream buf;
    write_dataset_csv(ds, buf);
    const Dataset back = read_dataset_csv(buf);
    REQUIRE(back.size() == ds.size());
    CHECK(back.rows == ds.rows);
    CHECK(back.target_reg == ds.target_reg);
    CHECK(back.target_cls == ds.target_cls);
}
