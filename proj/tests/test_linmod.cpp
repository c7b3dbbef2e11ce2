#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "slotcast/errors.hpp"
#include "slotcast/linmod.hpp"
#include "slotcast/rng.hpp"
#include "slotcast/stats.hpp"

using namespace slotcast;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, long n, long p) {
    Eigen::MatrixXd x(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) x(i, j) = rng.normal();
    return x;
}

std::vector<std::string> names_for(long p) {
    std::vector<std::string> v;
    for (long j = 0; j < p; ++j) v.push_back("x" + std::to_string(j));
    return v;
}

} // namespace

TEST_CASE("ols matches the normal equations") {
    Rng rng(31);
    const Eigen::MatrixXd x = random_matrix(rng, 25, 3);
    Eigen::VectorXd y(25);
    for (long i = 0; i < 25; ++i)
        y[i] = 1.5 + 2.0 * x(i, 0) - 0.7 * x(i, 2) + 0.1 * rng.normal();

    const OlsFit fit = fit_ols(x, y, names_for(3));

    Eigen::MatrixXd a(25, 4);
    a.col(0).setOnes();
    a.rightCols(3) = x;
    const Eigen::VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    for (long j = 0; j < 4; ++j)
        CHECK(fit.coefficients[j] == doctest::Approx(beta[j]).epsilon(1e-8));

    const Eigen::VectorXd res = y - a * beta;
    CHECK(fit.rss == doctest::Approx(res.squaredNorm()).epsilon(1e-8));
    const double tss = (y.array() - y.mean()).matrix().squaredNorm();
    CHECK(fit.r2 == doctest::Approx(1.0 - res.squaredNorm() / tss).epsilon(1e-8));
    CHECK(fit.adj_r2 ==
          doctest::Approx(1.0 - (1.0 - fit.r2) * (25.0 - 1.0) / (25.0 - 3.0 - 1.0)));
    CHECK(fit.aic == doctest::Approx(ols_aic(25, fit.rss, 4)));
    // +1 on top of the coefficient count for the variance parameter.
    CHECK(ols_aic(25, fit.rss, 4) ==
          doctest::Approx(25.0 * std::log(fit.rss / 25.0) + 2.0 * (4.0 + 1.0)));

    // Standard errors from the unbiased sigma^2 estimate.
    const double sigma2 = res.squaredNorm() / (25 - 4);
    const Eigen::MatrixXd cov = sigma2 * (a.transpose() * a).inverse();
    for (long j = 0; j < 4; ++j) {
        CHECK(fit.std_errors[j] == doctest::Approx(std::sqrt(cov(j, j))).epsilon(1e-6));
        CHECK(fit.t_stats[j] ==
              doctest::Approx(fit.coefficients[j] / fit.std_errors[j]).epsilon(1e-8));
        CHECK(fit.p_values[j] ==
              doctest::Approx(student_t_two_sided_p(fit.t_stats[j], 25 - 4)).epsilon(1e-8));
    }

    // predict() reproduces the fitted values.
    const Eigen::VectorXd again = fit.predict(x);
    for (long i = 0; i < 25; ++i) CHECK(again[i] == doctest::Approx(fit.fitted[i]));
}

TEST_CASE("ols rejects rank deficiency") {
    Rng rng(32);
    Eigen::MatrixXd x = random_matrix(rng, 20, 3);
    x.col(2) = x.col(0) + x.col(1); // exact collinearity
    Eigen::VectorXd y = x.col(0);
    CHECK_THROWS_AS(fit_ols(x, y, names_for(3)), RankDeficient);
    CHECK_THROWS_AS(fit_ols(random_matrix(rng, 4, 3), Eigen::VectorXd::Zero(4), names_for(3)),
                    RankDeficient);
}

TEST_CASE("vif matches its definition") {
    Rng rng(33);
    Eigen::MatrixXd x = random_matrix(rng, 60, 3);
    x.col(2) = 0.9 * x.col(0) + 0.1 * x.col(2); // inflate column 2 and 0
    const Eigen::VectorXd v = vif(x);
    REQUIRE(v.size() == 3);
    for (long j = 0; j < 3; ++j) {
        // Definition oracle: 1 / (1 - R^2) of column j on the others.
        Eigen::MatrixXd others(60, 3);
        others.col(0).setOnes();
        int k = 1;
        for (long c = 0; c < 3; ++c)
            if (c != j) others.col(k++) = x.col(c);
        const Eigen::VectorXd beta =
            (others.transpose() * others).ldlt().solve(others.transpose() * x.col(j));
        const Eigen::VectorXd res = x.col(j) - others * beta;
        const double tss = (x.col(j).array() - x.col(j).mean()).matrix().squaredNorm();
        const double r2 = 1.0 - res.squaredNorm() / tss;
        CHECK(v[j] == doctest::Approx(1.0 / (1.0 - r2)).epsilon(1e-8));
    }
    CHECK(v[0] > 5.0);
    CHECK(v[1] < 2.0);
}

TEST_CASE("drop_collinear removes the worst offender first") {
    Rng rng(34);
    Eigen::MatrixXd x = random_matrix(rng, 50, 3);
    x.col(2) = x.col(0) + x.col(1); // all three VIFs become +inf
    const CollinearityDrop drop = drop_collinear(x, names_for(3), 10.0);
    CHECK(drop.removed.size() == 1);
    CHECK(drop.kept.size() == 2);
    // All three VIFs are effectively infinite; the tie goes to column 0.
    CHECK(drop.removed[0].first == "x0");
    CHECK(drop.removed[0].second > 10.0);

    // Independent columns survive untouched.
    const Eigen::MatrixXd clean = random_matrix(rng, 50, 3);
    const CollinearityDrop none = drop_collinear(clean, names_for(3), 10.0);
    CHECK(none.removed.empty());
    CHECK(none.kept == std::vector<int>{0, 1, 2});
}

TEST_CASE("stepwise keeps strong predictors and discards noise") {
    Rng rng(42);
    const Eigen::MatrixXd x = random_matrix(rng, 120, 5);
    Eigen::VectorXd y(120);
    for (long i = 0; i < 120; ++i)
        y[i] = 4.0 * x(i, 1) - 3.0 * x(i, 3) + 0.2 * rng.normal();

    const OlsFit fit = stepwise_select(x, y, names_for(5), StepDirection::Both, 0.05);
    CHECK(fit.names == std::vector<std::string>{"x1", "x3"});
    CHECK(fit.coefficients[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(fit.coefficients[2] == doctest::Approx(-3.0).epsilon(0.05));
}

TEST_CASE("stepwise on pure noise selects nothing") {
    Rng rng(36);
    const Eigen::MatrixXd x = random_matrix(rng, 80, 4);
    Eigen::VectorXd y(80);
    for (long i = 0; i < 80; ++i) y[i] = rng.normal();
    const OlsFit fit = stepwise_select(x, y, names_for(4), StepDirection::Both, 0.001);
    CHECK(fit.names.empty());
    CHECK(fit.coefficients.size() == 1); // intercept only
}

TEST_CASE("logistic fit satisfies the score equations") {
    Rng rng(37);
    const Eigen::MatrixXd x = random_matrix(rng, 200, 3);
    std::vector<int> y(200);
    for (long i = 0; i < 200; ++i) {
        const double eta = 0.3 + 1.2 * x(i, 0) - 0.8 * x(i, 2);
        const double p = 1.0 / (1.0 + std::exp(-eta));
        y[static_cast<std::size_t>(i)] = rng.uniform01() < p ? 1 : 0;
    }
    const LogitFit fit = fit_logistic(x, y, 100);
    CHECK(fit.converged);
    CHECK(!fit.separation_flagged);

    // At the MLE, X~' (y - p) = 0 (up to the 1e-10 ridge jitter).
    const Eigen::VectorXd probs = predict_logistic_prob(fit, x);
    Eigen::MatrixXd a(200, 4);
    a.col(0).setOnes();
    a.rightCols(3) = x;
    Eigen::VectorXd yv(200);
    for (long i = 0; i < 200; ++i) yv[i] = y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd score = a.transpose() * (yv - probs);
    CHECK(score.cwiseAbs().maxCoeff() < 1e-5);

    // Class decision is prob > 0.5.
    const std::vector<int> pred = predict_logistic(fit, x);
    for (long i = 0; i < 200; ++i)
        CHECK(pred[static_cast<std::size_t>(i)] == (probs[i] > 0.5 ? 1 : 0));
}

TEST_CASE("logistic flags complete separation instead of failing") {
    // Tiny x scale: the separated MLE slope must exceed the 1e4 coefficient
    // cap before the eta clamp stalls the iteration below it.
    Eigen::MatrixXd x(8, 1);
    x << -0.002, -0.0015, -0.001, -0.0005, 0.0005, 0.001, 0.0015, 0.002;
    const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    const LogitFit fit = fit_logistic(x, y, 200);
    CHECK(fit.separation_flagged);
    CHECK(std::abs(fit.coefficients[1]) <= 1e4 * (1 + 1e-9));
    // Predictions still perfect.
    CHECK(predict_logistic(fit, x) == y);
}

TEST_CASE("logistic needs both classes") {
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    CHECK_THROWS_AS(fit_logistic(x, std::vector<int>{1, 1, 1, 1, 1}, 50), SingleClass);
}

TEST_CASE("breusch pagan equals n times the auxiliary r squared") {
    Rng rng(38);
    const Eigen::MatrixXd x = random_matrix(rng, 90, 2);
    Eigen::VectorXd resid(90);
    for (long i = 0; i < 90; ++i) resid[i] = (1.0 + 0.8 * x(i, 0)) * rng.normal();

    const BreuschPagan bp = breusch_pagan(resid, x);

    Eigen::MatrixXd a(90, 3);
    a.col(0).setOnes();
    a.rightCols(2) = x;
    const Eigen::VectorXd e2 = resid.array().square();
    const Eigen::VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * e2);
    const Eigen::VectorXd res = e2 - a * beta;
    const double tss = (e2.array() - e2.mean()).matrix().squaredNorm();
    const double r2 = 1.0 - res.squaredNorm() / tss;
    CHECK(bp.statistic == doctest::Approx(90.0 * r2).epsilon(1e-8));
    CHECK(bp.p_value == doctest::Approx(chi_squared_sf(bp.statistic, 2)).epsilon(1e-10));
}

TEST_CASE("durbin watson statistic and verdicts") {
    Eigen::VectorXd alternating(5);
    alternating << 1, -1, 1, -1, 1;
    const DurbinWatson dw = durbin_watson(alternating);
    CHECK(dw.statistic == doctest::Approx(16.0 / 5.0));
    CHECK(dw.verdict == DwVerdict::NegativeAutocorrelation);

    Eigen::VectorXd trending(4);
    trending << 1.0, 1.1, 1.2, 1.3;
    const DurbinWatson pos = durbin_watson(trending);
    CHECK(pos.statistic == doctest::Approx(0.03 / (1.0 + 1.21 + 1.44 + 1.69)).epsilon(1e-9));
    CHECK(pos.verdict == DwVerdict::PositiveAutocorrelation);

    Eigen::VectorXd mixed(4);
    mixed << 1, 0.2, -1, 0.4; // d lands between 1 and 3
    CHECK(durbin_watson(mixed).verdict == DwVerdict::None);

    CHECK_THROWS_AS(durbin_watson(Eigen::VectorXd::Zero(6)), AllZeroResiduals);
}
