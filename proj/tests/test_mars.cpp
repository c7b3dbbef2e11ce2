#include <doctest.h>

#include <cmath>
#include <vector>

#include "slotcast/mars.hpp"
#include "slotcast/rng.hpp"

using namespace slotcast;

namespace {

// Even grid on [0, 1] plus a second nuisance column.
Eigen::MatrixXd grid_x(int n, Rng& rng) {
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = static_cast<double>(i) / (n - 1);
        x(i, 1) = rng.uniform01();
    }
    return x;
}

} // namespace

TEST_CASE("gcv formula") {
    // c(m) = m + penalty*(m-1)/2; gcv = (rss/n) / (1 - c/n)^2.
    const double g = mars_gcv(2.0, 50, 5, 3.0);
    const double c = 5 + 3.0 * 4 / 2.0;
    CHECK(g == doctest::Approx((2.0 / 50) / std::pow(1.0 - c / 50, 2)));
    CHECK(std::isinf(mars_gcv(1.0, 10, 8, 3.0))); // c(8) = 18.5 >= n
}

TEST_CASE("forward pass recovers a single hinge knot") {
    Rng rng(17);
    const int n = 41;
    const Eigen::MatrixXd x = grid_x(n, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 2.0 * std::max(0.0, x(i, 0) - 0.37);

    const std::vector<HingeBasis> hinges = mars_forward(x, y);
    REQUIRE(!hinges.empty());
    CHECK(hinges[0].feature == 0);
    const double grid_step = 1.0 / (n - 1);
    CHECK(std::abs(hinges[0].knot - 0.37) <= grid_step + 1e-12);
}

TEST_CASE("noiseless piecewise-linear target is fit exactly") {
    Rng rng(23);
    const int n = 61;
    const Eigen::MatrixXd x = grid_x(n, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double v = x(i, 0);
        y[i] = 1.5 + 3.0 * std::max(0.0, v - 0.4) - 2.0 * std::max(0.0, 0.4 - v);
    }
    const MarsModel m = fit_mars(x, y);
    CHECK(m.r2 > 0.9999);
    CHECK(m.rss < 1e-6);
    CHECK(m.grsq > 0.99);
    CHECK(m.gcv < m.gcv_null);
    REQUIRE(!m.terms.empty());
    CHECK(!m.terms[0].hinge.has_value()); // intercept first

    const Eigen::VectorXd pred = m.predict(x);
    for (int i = 0; i < n; ++i) CHECK(pred[i] == doctest::Approx(y[i]).scale(1.0).epsilon(1e-3));
    CHECK(m.predict_one(x.row(3)) == doctest::Approx(pred[3]));
}

TEST_CASE("forward term cap and pruning bookkeeping") {
    Rng rng(31);
    const int n = 80;
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform01();
        y[i] = std::sin(6.0 * x(i, 0)) + 0.3 * rng.normal();
    }
    MarsControls tight;
    tight.max_terms = 5;
    const MarsModel m = fit_mars(x, y, tight);
    CHECK(m.forward_terms <= 5);
    CHECK(m.forward_terms >= 1);
    CHECK(static_cast<int>(m.terms.size()) == m.forward_terms - m.pruned);
    CHECK(m.pruned >= 0);
}

TEST_CASE("constant target yields the bare intercept") {
    Rng rng(7);
    const Eigen::MatrixXd x = grid_x(30, rng);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(30, 4.2);
    const MarsModel m = fit_mars(x, y);
    REQUIRE(m.terms.size() == 1);
    CHECK(!m.terms[0].hinge.has_value());
    CHECK(m.terms[0].coefficient == doctest::Approx(4.2));
    CHECK(m.predict_one(x.row(0)) == doctest::Approx(4.2));
}

TEST_CASE("describe names features and knots") {
    MarsModel m;
    m.terms.push_back({std::nullopt, 1.25});
    m.terms.push_back({HingeBasis{1, 0.5, true}, 2.0});
    m.terms.push_back({HingeBasis{0, 0.25, false}, -3.0});
    const std::string text = m.describe({"alpha", "beta"});
    CHECK(text.find("1.25") != std::string::npos);
    CHECK(text.find("h(beta - 0.5)") != std::string::npos);
    CHECK(text.find("h(0.25 - alpha)") != std::string::npos);

    // Hinge evaluation is one-sided.
    const HingeBasis plus{0, 0.5, true};
    CHECK(plus.eval(0.75) == doctest::Approx(0.25));
    CHECK(plus.eval(0.25) == 0.0);
    const HingeBasis minus{0, 0.5, false};
    CHECK(minus.eval(0.25) == doctest::Approx(0.25));
    CHECK(minus.eval(0.75) == 0.0);
}
