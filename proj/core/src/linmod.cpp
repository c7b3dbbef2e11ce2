#include "slotcast/linmod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "slotcast/errors.hpp"
#include "slotcast/stats.hpp"

namespace slotcast {
namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd x1(x.rows(), x.cols() + 1);
    x1.col(0).setOnes();
    if (x.cols() > 0) x1.rightCols(x.cols()) = x;
    return x1;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& cols) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
    return out;
}

std::vector<std::string> select_names(const std::vector<std::string>& names,
                                      const std::vector<int>& cols) {
    std::vector<std::string> out;
    out.reserve(cols.size());
    for (int c : cols) out.push_back(names[static_cast<std::size_t>(c)]);
    return out;
}

} // namespace

double ols_aic(long n, double rss, long n_coefficients) {
    const double safe_rss = std::max(rss, 1e-300);
    return static_cast<double>(n) * std::log(safe_rss / static_cast<double>(n))
           + 2.0 * static_cast<double>(n_coefficients + 1);
}

Eigen::VectorXd OlsFit::predict(const Eigen::MatrixXd& x) const {
    if (x.cols() + 1 != coefficients.size())
        throw ShapeMismatch("OlsFit::predict: column count mismatch");
    return with_intercept(x) * coefficients;
}

OlsFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<std::string>& names) {
    const long n = x.rows();
    const long p = x.cols();
    if (static_cast<std::size_t>(p) != names.size())
        throw ShapeMismatch("fit_ols: names/columns mismatch");
    if (y.size() != n) throw LengthMismatch("fit_ols: y length mismatch");
    if (n <= p + 1) throw RankDeficient("fit_ols: need more rows than coefficients");

    const Eigen::MatrixXd x1 = with_intercept(x);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x1);
    if (qr.rank() < p + 1) throw RankDeficient("fit_ols: design matrix is rank deficient");

    OlsFit fit;
    fit.names = names;
    fit.coefficients = qr.solve(y);
    fit.fitted = x1 * fit.coefficients;
    fit.residuals = y - fit.fitted;
    fit.rss = fit.residuals.squaredNorm();

    const double mean_y = y.mean();
    const double tss = (y.array() - mean_y).matrix().squaredNorm();
    const long df = n - p - 1;
    fit.r2 = tss > 0.0 ? 1.0 - fit.rss / tss : 0.0;
    fit.adj_r2 = tss > 0.0 ? 1.0 - (fit.rss / df) / (tss / (n - 1)) : 0.0;
    fit.aic = ols_aic(n, fit.rss, p + 1);

    const double sigma2 = fit.rss / static_cast<double>(df);
    const Eigen::MatrixXd xtx_inv =
        (x1.transpose() * x1).ldlt().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
    fit.std_errors.resize(p + 1);
    fit.t_stats.resize(p + 1);
    fit.p_values.resize(p + 1);
    for (long j = 0; j <= p; ++j) {
        const double se = std::sqrt(std::max(sigma2 * xtx_inv(j, j), 0.0));
        fit.std_errors(j) = se;
        const double t = se > 0.0 ? fit.coefficients(j) / se
                                  : std::numeric_limits<double>::infinity();
        fit.t_stats(j) = t;
        fit.p_values(j) = se > 0.0 ? student_t_two_sided_p(t, static_cast<double>(df)) : 0.0;
    }
    if (p > 0 && fit.rss > 0.0 && tss > fit.rss) {
        fit.f_stat = ((tss - fit.rss) / p) / (fit.rss / df);
        fit.f_p_value = f_sf(fit.f_stat, static_cast<double>(p), static_cast<double>(df));
    } else if (p > 0 && fit.rss == 0.0) {
        fit.f_stat = std::numeric_limits<double>::infinity();
        fit.f_p_value = 0.0;
    }
    return fit;
}

Eigen::VectorXd vif(const Eigen::MatrixXd& x) {
    const long n = x.rows();
    const long p = x.cols();
    if (p < 1) throw BadParams("vif: need at least one column");
    if (n < p + 2) throw RankDeficient("vif: need at least cols + 2 rows");
    Eigen::VectorXd out(p);
    for (long j = 0; j < p; ++j) {
        Eigen::MatrixXd others(n, p); // intercept + the other columns
        others.col(0).setOnes();
        long k = 1;
        for (long c = 0; c < p; ++c)
            if (c != j) others.col(k++) = x.col(c);
        const Eigen::VectorXd target = x.col(j);
        const Eigen::VectorXd beta =
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(others).solve(target);
        const double rss = (target - others * beta).squaredNorm();
        const double mean_t = target.mean();
        const double tss = (target.array() - mean_t).matrix().squaredNorm();
        if (tss <= 0.0) {
            out(j) = std::numeric_limits<double>::infinity();
            continue;
        }
        const double one_minus_r2 = rss / tss;
        out(j) = one_minus_r2 < 1e-12 ? std::numeric_limits<double>::infinity()
                                      : 1.0 / one_minus_r2;
    }
    return out;
}

CollinearityDrop drop_collinear(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                                double threshold) {
    if (static_cast<std::size_t>(x.cols()) != names.size())
        throw ShapeMismatch("drop_collinear: names/columns mismatch");
    CollinearityDrop result;
    result.kept.resize(static_cast<std::size_t>(x.cols()));
    for (std::size_t j = 0; j < result.kept.size(); ++j) result.kept[j] = static_cast<int>(j);

    while (result.kept.size() > 1) {
        const Eigen::VectorXd v = vif(select_columns(x, result.kept));
        long worst = 0;
        for (long j = 1; j < v.size(); ++j)
            if (v(j) > v(worst)) worst = j; // strict >, ties keep the lower index
        if (!(v(worst) > threshold)) break;
        result.removed.emplace_back(names[static_cast<std::size_t>(result.kept[worst])], v(worst));
        result.kept.erase(result.kept.begin() + worst);
    }
    return result;
}

OlsFit stepwise_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const std::vector<std::string>& names, StepDirection direction,
                       double alpha) {
    const long p = x.cols();
    if (static_cast<std::size_t>(p) != names.size())
        throw ShapeMismatch("stepwise_select: names/columns mismatch");

    auto fit_subset = [&](const std::vector<int>& cols) {
        return fit_ols(select_columns(x, cols), y, select_names(names, cols));
    };

    std::vector<int> current;
    if (direction != StepDirection::Forward)
        for (int j = 0; j < p; ++j) current.push_back(j);

    OlsFit current_fit = fit_subset(current);
    const bool can_drop = direction != StepDirection::Forward;
    const bool can_add = direction != StepDirection::Backward;

    while (true) {
        double best_aic = current_fit.aic;
        std::vector<int> best_set;
        OlsFit best_fit;
        bool improved = false;

        if (can_drop) {
            for (std::size_t j = 0; j < current.size(); ++j) {
                // Gate: only insignificant terms are candidates for removal.
                if (!(current_fit.p_values(static_cast<Eigen::Index>(j) + 1) > alpha)) continue;
                std::vector<int> trial = current;
                trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(j));
                OlsFit f = fit_subset(trial);
                if (f.aic < best_aic) {
                    best_aic = f.aic;
                    best_set = std::move(trial);
                    best_fit = std::move(f);
                    improved = true;
                }
            }
        }
        if (can_add) {
            std::set<int> in(current.begin(), current.end());
            for (int j = 0; j < p; ++j) {
                if (in.count(j)) continue;
                std::vector<int> trial = current;
                trial.push_back(j);
                std::sort(trial.begin(), trial.end());
                OlsFit f = fit_subset(trial);
                // Gate: the entrant must be significant in the enlarged model.
                const auto pos = std::find(trial.begin(), trial.end(), j) - trial.begin();
                if (!(f.p_values(pos + 1) <= alpha)) continue;
                if (f.aic < best_aic) {
                    best_aic = f.aic;
                    best_set = std::move(trial);
                    best_fit = std::move(f);
                    improved = true;
                }
            }
        }
        if (!improved) break;
        current = std::move(best_set);
        current_fit = std::move(best_fit);
    }
    return current_fit;
}

LogitFit fit_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y, int max_iterations,
                      double tolerance) {
    const long n = x.rows();
    if (static_cast<std::size_t>(n) != y.size())
        throw LengthMismatch("fit_logistic: y length mismatch");
    if (n == 0) throw EmptyTrain("fit_logistic: empty input");
    int ones = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw BadParams("fit_logistic: labels must be 0 or 1");
        ones += v;
    }
    if (ones == 0 || ones == n) throw SingleClass("fit_logistic: both classes required");

    const Eigen::MatrixXd x1 = with_intercept(x);
    const long k = x1.cols();
    Eigen::VectorXd yv(n);
    for (long i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];

    LogitFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(k);
    constexpr double kCoefCap = 1e4;

    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd eta =
            (x1 * fit.coefficients).cwiseMax(-30.0).cwiseMin(30.0);
        const Eigen::VectorXd prob = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        const Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10).matrix();
        const Eigen::VectorXd z = eta.array() + (yv - prob).array() / w.array();

        Eigen::MatrixXd xtwx = x1.transpose() * w.asDiagonal() * x1;
        xtwx.diagonal().array() += 1e-10; // ridge jitter keeps IRLS solvable
        const Eigen::VectorXd rhs = x1.transpose() * (w.asDiagonal() * z);
        const Eigen::VectorXd next = xtwx.ldlt().solve(rhs);

        const double delta = (next - fit.coefficients).cwiseAbs().maxCoeff();
        fit.coefficients = next;
        fit.iterations = it + 1;
        if (fit.coefficients.cwiseAbs().maxCoeff() > kCoefCap) {
            fit.coefficients = fit.coefficients.cwiseMax(-kCoefCap).cwiseMin(kCoefCap);
            fit.separation_flagged = true;
            break;
        }
        if (delta < tolerance) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

Eigen::VectorXd predict_logistic_prob(const LogitFit& fit, const Eigen::MatrixXd& x) {
    if (x.cols() + 1 != fit.coefficients.size())
        throw ShapeMismatch("predict_logistic_prob: column count mismatch");
    const Eigen::VectorXd eta =
        (with_intercept(x) * fit.coefficients).cwiseMax(-30.0).cwiseMin(30.0);
    return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
}

std::vector<int> predict_logistic(const LogitFit& fit, const Eigen::MatrixXd& x) {
    const Eigen::VectorXd prob = predict_logistic_prob(fit, x);
    std::vector<int> out(static_cast<std::size_t>(prob.size()));
    for (long i = 0; i < prob.size(); ++i)
        out[static_cast<std::size_t>(i)] = prob(i) > fit.threshold ? 1 : 0;
    return out;
}

BreuschPagan breusch_pagan(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& x) {
    if (residuals.size() != x.rows())
        throw LengthMismatch("breusch_pagan: residuals/design mismatch");
    const Eigen::VectorXd e2 = residuals.array().square().matrix();
    std::vector<std::string> names(static_cast<std::size_t>(x.cols()));
    for (std::size_t j = 0; j < names.size(); ++j) names[j] = "x" + std::to_string(j);
    const OlsFit aux = fit_ols(x, e2, names);
    BreuschPagan bp;
    bp.statistic = static_cast<double>(x.rows()) * aux.r2;
    bp.p_value = chi_squared_sf(bp.statistic, static_cast<double>(x.cols()));
    return bp;
}

DurbinWatson durbin_watson(const Eigen::VectorXd& residuals) {
    if (residuals.size() < 2) throw TooFewRows("durbin_watson: need at least 2 residuals");
    const double denom = residuals.squaredNorm();
    if (denom == 0.0) throw AllZeroResiduals("durbin_watson: all residuals are zero");
    double num = 0.0;
    for (long i = 1; i < residuals.size(); ++i) {
        const double d = residuals(i) - residuals(i - 1);
        num += d * d;
    }
    DurbinWatson dw;
    dw.statistic = num / denom;
    dw.verdict = dw.statistic < 1.0 ? DwVerdict::PositiveAutocorrelation
               : dw.statistic > 3.0 ? DwVerdict::NegativeAutocorrelation
                                    : DwVerdict::None;
    return dw;
}

} // namespace slotcast
