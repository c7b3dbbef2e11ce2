#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "slotcast/errors.hpp"
#include "slotcast/evalsuite.hpp"
#include "slotcast/rng.hpp"

using namespace slotcast;

namespace {

// Quadratic-time Mann-Whitney AUC with half credit for ties.
double auc_pair_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    long pos = 0, neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    for (int l : labels) neg += l == 0;
    return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

} // namespace

TEST_CASE("confusion matrix from labels") {
    const std::vector<int> pred{1, 0, 1, 1};
    const std::vector<int> actual{1, 0, 0, 1};
    const ConfusionMatrix cm = ConfusionMatrix::from_labels(pred, actual);
    CHECK(cm.tp == 2);
    CHECK(cm.fp == 1);
    CHECK(cm.tn == 1);
    CHECK(cm.fn == 0);
    CHECK(cm.total() == 4);
}

TEST_CASE("classification metrics formulas") {
    // tp=309 fn=17 tn=409 fp=10: the metric block exercised by the golden suite.
    const ConfusionMatrix cm{309, 10, 409, 17};
    const ClsMetrics m = cls_metrics(cm);
    CHECK(*m.sensitivity == doctest::Approx(309.0 / 326.0 * 100).epsilon(1e-12));
    CHECK(*m.specificity == doctest::Approx(409.0 / 419.0 * 100).epsilon(1e-12));
    CHECK(*m.ppv == doctest::Approx(309.0 / 319.0 * 100).epsilon(1e-12));
    CHECK(*m.npv == doctest::Approx(409.0 / 426.0 * 100).epsilon(1e-12));
    CHECK(*m.ca == doctest::Approx(718.0 / 745.0 * 100).epsilon(1e-12));
    const double f1 = 2.0 * *m.ppv * *m.sensitivity / (*m.ppv + *m.sensitivity);
    CHECK(*m.f1 == doctest::Approx(f1).epsilon(1e-12));
}

TEST_CASE("metrics go empty when a denominator is zero") {
    const ClsMetrics m = cls_metrics(ConfusionMatrix{0, 0, 5, 0});
    CHECK(!m.sensitivity.has_value()); // no actual positives
    CHECK(!m.ppv.has_value());         // no predicted positives
    CHECK(m.specificity.has_value());
    CHECK(*m.ca == doctest::Approx(100.0));
    CHECK(!m.f1.has_value());
}

TEST_CASE("roc auc equals the quadratic pair oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 400; ++i) {
            // Coarse grid forces plenty of score ties.
            const double s = std::floor(rng.uniform01() * 20.0) / 20.0;
            scores.push_back(s);
            labels.push_back(rng.uniform01() < 0.35 + 0.5 * s ? 1 : 0);
        }
        if (labels == std::vector<int>(labels.size(), 0)) continue;
        const RocCurve roc = roc_auc(scores, labels);
        CHECK(std::abs(roc.auc - auc_pair_oracle(scores, labels)) < 1e-12);
        REQUIRE(!roc.points.empty());
        CHECK(roc.points.front().fpr == doctest::Approx(0.0));
        CHECK(roc.points.front().tpr == doctest::Approx(0.0));
        CHECK(roc.points.back().fpr == doctest::Approx(1.0));
        CHECK(roc.points.back().tpr == doctest::Approx(1.0));
    }
}

TEST_CASE("roc auc endpoints and failure modes") {
    const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
    CHECK(roc_auc(s, std::vector<int>{1, 1, 0, 0}).auc == doctest::Approx(1.0));
    CHECK(roc_auc(s, std::vector<int>{0, 0, 1, 1}).auc == doctest::Approx(0.0));
    // Positives at 0.9 and 0.2 versus negatives at 0.8 and 0.1: 3 of 4
    // ordered pairs rank the positive higher.
    CHECK(roc_auc(s, std::vector<int>{1, 0, 1, 0}).auc == doctest::Approx(0.75));
    // All-tied scores give exactly half credit.
    CHECK(roc_auc(std::vector<double>(4, 0.5), std::vector<int>{1, 0, 1, 0}).auc
          == doctest::Approx(0.5));
    CHECK_THROWS_AS(roc_auc(s, std::vector<int>{1, 1, 1, 1}), SingleClass);
    CHECK_THROWS_AS(roc_auc(s, std::vector<int>{0, 0, 0, 0}), SingleClass);
    CHECK_THROWS_AS(roc_auc(s, std::vector<int>{1, 0}), LengthMismatch);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{}, std::vector<int>{}), LengthMismatch);
}

TEST_CASE("lift curve deciles") {
    // Ten rows, scores strictly descending, positives packed at the top.
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
        scores.push_back(1.0 - 0.05 * i);
        labels.push_back(i < 4 ? 1 : 0);
    }
    const auto lift = lift_curve(scores, labels);
    REQUIRE(lift.size() == 10);
    CHECK(lift[0].depth == doctest::Approx(0.1));
    CHECK(lift[0].lift == doctest::Approx(2.5));  // 1/1 positives vs base 0.4
    CHECK(lift[3].lift == doctest::Approx(2.5));  // 4/4 vs 0.4
    CHECK(lift[9].depth == doctest::Approx(1.0));
    CHECK(lift[9].lift == doctest::Approx(1.0));
    CHECK_THROWS_AS(lift_curve(scores, std::vector<int>(10, 0)), SingleClass);
}

TEST_CASE("regression metrics hand oracle") {
    const std::vector<double> pred{1.0, -2.0, 3.0};
    const std::vector<double> actual{2.0, -1.0, -3.0};
    const RegMetrics m = reg_metrics(pred, actual);
    CHECK(m.rmse == doctest::Approx(std::sqrt(38.0 / 3.0)).epsilon(1e-12));
    CHECK(m.mean_abs_actual == doctest::Approx(2.0));
    CHECK(*m.rmse_ratio_pct == doctest::Approx(std::sqrt(38.0 / 3.0) / 2.0 * 100).epsilon(1e-12));
    CHECK(m.mismatch_count == 1);
    CHECK(m.mismatch_pct == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("regression pearson matches the closed form") {
    const std::vector<double> pred{1, 2, 3, 4};
    const std::vector<double> actual{2, 4, 6, 8};
    const RegMetrics m = reg_metrics(pred, actual);
    CHECK(*m.pearson_r == doctest::Approx(1.0));
    CHECK(m.mismatch_count == 0);

    const std::vector<double> flat{5, 5, 5, 5};
    CHECK(!reg_metrics(pred, flat).pearson_r.has_value());
}

TEST_CASE("summary tables flag the best model per metric") {
    ClsMetrics a = cls_metrics(ConfusionMatrix{8, 2, 7, 3});
    ClsMetrics b = cls_metrics(ConfusionMatrix{9, 1, 8, 2});
    const SummaryTable t = summarize_classification({{"a", a}, {"b", b}});
    REQUIRE(t.metrics.size() == 6);
    REQUIRE(t.models.size() == 2);
    for (std::size_t r = 0; r < t.metrics.size(); ++r) {
        // b dominates a on every metric.
        CHECK(!t.cells[r][0].best);
        CHECK(t.cells[r][1].best);
    }

    std::stringstream out;
    write_summary_csv(t, out);
    std::string line;
    std::getline(out, line);
    CHECK(line == "metric,a,b");
    int rows = 0;
    while (std::getline(out, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);
}
