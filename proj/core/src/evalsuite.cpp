#include "slotcast/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"

namespace slotcast {
namespace {

std::optional<double> ratio_pct(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den * 100.0;
}

// Indices sorted by descending score; ties keep original order.
std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

} // namespace

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const int> predicted,
                                             std::span<const int> actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        throw LengthMismatch("from_labels: inputs must be equal-length and non-empty");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if ((predicted[i] != 0 && predicted[i] != 1) || (actual[i] != 0 && actual[i] != 1))
            throw BadParams("from_labels: labels must be 0 or 1");
        if (actual[i] == 1)
            (predicted[i] == 1 ? cm.tp : cm.fn)++;
        else
            (predicted[i] == 1 ? cm.fp : cm.tn)++;
    }
    return cm;
}

ClsMetrics cls_metrics(const ConfusionMatrix& cm) {
    ClsMetrics m;
    m.sensitivity = ratio_pct(cm.tp, cm.tp + cm.fn);
    m.specificity = ratio_pct(cm.tn, cm.tn + cm.fp);
    m.ppv = ratio_pct(cm.tp, cm.tp + cm.fp);
    m.npv = ratio_pct(cm.tn, cm.tn + cm.fn);
    m.ca = ratio_pct(cm.tp + cm.tn, cm.total());
    if (m.ppv && m.sensitivity && *m.ppv + *m.sensitivity > 0.0)
        m.f1 = 2.0 * *m.ppv * *m.sensitivity / (*m.ppv + *m.sensitivity);
    return m;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw LengthMismatch("roc_auc: inputs must be equal-length and non-empty");
    long pos = 0, neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw BadParams("roc_auc: labels must be 0 or 1");
        (y == 1 ? pos : neg)++;
    }
    if (pos == 0 || neg == 0) throw SingleClass("roc_auc: need both classes");

    const auto idx = order_by_score_desc(scores);
    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    double auc = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        // Consume the whole tie group at once so equal scores become one
        // diagonal segment (trapezoid over it = half credit for ties).
        const double s = scores[idx[i]];
        long dtp = 0, dfp = 0;
        while (i < idx.size() && scores[idx[i]] == s) {
            (labels[idx[i]] == 1 ? dtp : dfp)++;
            ++i;
        }
        const double tpr0 = static_cast<double>(tp) / pos;
        const double fpr0 = static_cast<double>(fp) / neg;
        tp += dtp;
        fp += dfp;
        const double tpr1 = static_cast<double>(tp) / pos;
        const double fpr1 = static_cast<double>(fp) / neg;
        auc += (fpr1 - fpr0) * (tpr0 + tpr1) / 2.0;
        curve.points.push_back({fpr1, tpr1});
    }
    curve.auc = auc;
    return curve;
}

std::vector<LiftPoint> lift_curve(std::span<const double> scores, std::span<const int> labels,
                                  int bins) {
    if (scores.size() != labels.size() || scores.empty())
        throw LengthMismatch("lift_curve: inputs must be equal-length and non-empty");
    if (bins < 1) throw BadParams("lift_curve: bins >= 1 required");
    const long total_pos = std::accumulate(labels.begin(), labels.end(), 0L);
    if (total_pos == 0) throw SingleClass("lift_curve: no positive labels");
    const double base_rate = static_cast<double>(total_pos) / static_cast<double>(labels.size());

    const auto idx = order_by_score_desc(scores);
    std::vector<LiftPoint> out;
    out.reserve(static_cast<std::size_t>(bins));
    const std::size_t n = idx.size();
    long cum_pos = 0;
    std::size_t taken = 0;
    for (int b = 1; b <= bins; ++b) {
        const std::size_t upto = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
        for (; taken < upto; ++taken) cum_pos += labels[idx[taken]];
        LiftPoint p;
        p.depth = static_cast<double>(b) / bins;
        p.lift = upto == 0
                     ? 0.0
                     : (static_cast<double>(cum_pos) / static_cast<double>(upto)) / base_rate;
        out.push_back(p);
    }
    return out;
}

RegMetrics reg_metrics(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        throw LengthMismatch("reg_metrics: inputs must be equal-length and non-empty");
    const std::size_t n = predicted.size();
    RegMetrics m;
    double sse = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = predicted[i] - actual[i];
        sse += e * e;
        abs_sum += std::fabs(actual[i]);
        const bool pred_up = predicted[i] > 0.0;
        const bool actual_up = actual[i] > 0.0;
        if (pred_up != actual_up) ++m.mismatch_count;
    }
    m.rmse = std::sqrt(sse / static_cast<double>(n));
    m.mean_abs_actual = abs_sum / static_cast<double>(n);
    m.rmse_ratio_pct = ratio_pct(m.rmse, m.mean_abs_actual);
    m.mismatch_pct = static_cast<double>(m.mismatch_count) / static_cast<double>(n) * 100.0;

    double mp = 0.0, ma = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mp += predicted[i];
        ma += actual[i];
    }
    mp /= static_cast<double>(n);
    ma /= static_cast<double>(n);
    double spp = 0.0, saa = 0.0, spa = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dp = predicted[i] - mp;
        const double da = actual[i] - ma;
        spp += dp * dp;
        saa += da * da;
        spa += dp * da;
    }
    if (spp > 0.0 && saa > 0.0) {
        const double r = spa / std::sqrt(spp * saa);
        m.pearson_r = r;
        if (n > 2) {
            const double denom = 1.0 - r * r;
            m.r_t_stat = denom <= 0.0 ? std::numeric_limits<double>::infinity()
                                      : r * std::sqrt(static_cast<double>(n - 2) / denom);
        }
    }
    return m;
}

namespace {

SummaryTable build_table(std::vector<std::string> metric_names, std::vector<bool> higher,
                         std::vector<std::string> models,
                         std::vector<std::vector<SummaryCell>> cells) {
    SummaryTable t;
    t.metrics = std::move(metric_names);
    t.higher_is_better = std::move(higher);
    t.models = std::move(models);
    t.cells = std::move(cells);
    for (std::size_t r = 0; r < t.metrics.size(); ++r) {
        std::optional<double> best;
        for (const auto& c : t.cells[r]) {
            if (!c.value) continue;
            if (!best || (t.higher_is_better[r] ? *c.value > *best : *c.value < *best))
                best = *c.value;
        }
        if (!best) continue;
        for (auto& c : t.cells[r])
            if (c.value && *c.value == *best) c.best = true;
    }
    return t;
}

} // namespace

SummaryTable summarize_classification(
    const std::vector<std::pair<std::string, ClsMetrics>>& per_model) {
    std::vector<std::string> models;
    std::vector<std::vector<SummaryCell>> cells(6);
    for (const auto& [name, m] : per_model) {
        models.push_back(name);
        cells[0].push_back({m.sensitivity, false});
        cells[1].push_back({m.specificity, false});
        cells[2].push_back({m.ppv, false});
        cells[3].push_back({m.npv, false});
        cells[4].push_back({m.ca, false});
        cells[5].push_back({m.f1, false});
    }
    return build_table({"sensitivity", "specificity", "ppv", "npv", "ca", "f1"},
                       {true, true, true, true, true, true}, std::move(models), std::move(cells));
}

SummaryTable summarize_regression(
    const std::vector<std::pair<std::string, RegMetrics>>& per_model) {
    std::vector<std::string> models;
    std::vector<std::vector<SummaryCell>> cells(3);
    for (const auto& [name, m] : per_model) {
        models.push_back(name);
        cells[0].push_back({m.pearson_r, false});
        cells[1].push_back({m.rmse_ratio_pct, false});
        cells[2].push_back({std::optional<double>(m.mismatch_pct), false});
    }
    return build_table({"correlation", "rmse_to_mean_pct", "mismatch_pct"},
                       {true, false, false}, std::move(models), std::move(cells));
}

void write_summary_csv(const SummaryTable& t, std::ostream& out) {
    out << "metric";
    for (const auto& m : t.models) out << ',' << m;
    out << '\n';
    for (std::size_t r = 0; r < t.metrics.size(); ++r) {
        out << t.metrics[r];
        for (const auto& c : t.cells[r]) {
            out << ',';
            if (c.value) out << double_to_string(*c.value);
            if (c.best) out << '*';
        }
        out << '\n';
    }
}

} // namespace slotcast
