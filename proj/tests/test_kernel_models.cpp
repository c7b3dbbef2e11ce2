#include <doctest.h>

#include <cmath>
#include <vector>

#include "slotcast/errors.hpp"
#include "slotcast/kernel_models.hpp"
#include "slotcast/rng.hpp"

using namespace slotcast;

TEST_CASE("knn votes its nearest neighbours") {
    Eigen::MatrixXd x(6, 1);
    x << 0, 1, 2, 10, 11, 12;
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    const KnnModel m = knn_fit(x, labels, 3);

    Eigen::MatrixXd q(2, 1);
    q << 0.5, 11.0;
    CHECK(knn_classify(m, q) == std::vector<int>{0, 1});
    const Eigen::VectorXd frac = knn_vote_fraction(m, q);
    CHECK(frac[0] == doctest::Approx(0.0));
    CHECK(frac[1] == doctest::Approx(1.0));

    // k = 1 on the training set itself is a lookup.
    const KnnModel self = knn_fit(x, labels, 1);
    CHECK(knn_classify(self, x) == labels);
}

TEST_CASE("knn tie rules") {
    // Neighbour tie at the k-th slot goes to the lower training index.
    Eigen::MatrixXd x(3, 1);
    x << 0, 2, 4;
    const KnnModel near = knn_fit(x, {1, 0, 1}, 1);
    Eigen::MatrixXd q(1, 1);
    q << 1.0; // equidistant from rows 0 and 1
    CHECK(knn_classify(near, q) == std::vector<int>{1});

    // Vote tie goes to class 0.
    Eigen::MatrixXd x2(2, 1);
    x2 << 0, 2;
    const KnnModel vote = knn_fit(x2, {1, 0}, 2);
    CHECK(knn_classify(vote, q) == std::vector<int>{0});
    CHECK(knn_vote_fraction(vote, q)[0] == doctest::Approx(0.5));

    // k larger than the training set is capped.
    const KnnModel capped = knn_fit(x, {1, 0, 1}, 50);
    CHECK(knn_classify(capped, q) == std::vector<int>{1}); // majority of all three
}

TEST_CASE("knn distances are taken in scaled space") {
    // Raw nearest neighbour of the query is row 0 (distance 1 along the wide
    // axis); after per-feature min-max scaling it is row 1.
    Eigen::MatrixXd x(3, 2);
    x << 1.0, 10.0,
         0.0, 0.0,
         0.5, 1000.0;
    const KnnModel m = knn_fit(x, {1, 0, 1}, 1);
    Eigen::MatrixXd q(1, 2);
    q << 0.0, 10.0;
    CHECK(knn_classify(m, q) == std::vector<int>{0});
}

TEST_CASE("knn input validation") {
    Eigen::MatrixXd x(2, 1);
    x << 0, 1;
    CHECK_THROWS_AS(knn_fit(Eigen::MatrixXd(0, 1), {}, 3), EmptyTrain);
    CHECK_THROWS_AS(knn_fit(x, {0}, 3), LengthMismatch);
    CHECK_THROWS_AS(knn_fit(x, {0, 1}, 0), BadParams);
    CHECK_THROWS_AS(knn_fit(x, {0, 2}, 1), BadParams);
}

TEST_CASE("svm recovers the maximal margin on two points") {
    // x = 0 (class 0) and x = 2 (class 1): w = 1, b = -1, alphas = 0.5 each.
    Eigen::MatrixXd x(2, 1);
    x << 0, 2;
    const SvmModel m = fit_svm_classifier(x, {0, 1}, 1.0, 1e-4);
    CHECK(m.converged);
    CHECK(m.sv_count == 2);
    CHECK(m.y_signed[0] == doctest::Approx(-1.0));
    CHECK(m.y_signed[1] == doctest::Approx(1.0));
    CHECK(m.duals[0] == doctest::Approx(0.5).epsilon(0.02));
    CHECK(m.duals[1] == doctest::Approx(0.5).epsilon(0.02));
    CHECK(m.bias == doctest::Approx(-1.0).epsilon(0.02));

    Eigen::MatrixXd q(3, 1);
    q << 0, 1, 2;
    const Eigen::VectorXd dec = svm_decision(m, q);
    CHECK(dec[0] == doctest::Approx(-1.0).epsilon(0.05));
    CHECK(dec[1] == doctest::Approx(0.0).scale(1.0).epsilon(0.05));
    CHECK(dec[2] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("svm strict decision rule and dual feasibility") {
    // Hand-built model: decision is identically zero, so everything is class 0.
    SvmModel flat;
    flat.train = Eigen::MatrixXd::Zero(1, 1);
    flat.duals = Eigen::VectorXd::Ones(1);
    flat.y_signed = Eigen::VectorXd::Ones(1);
    flat.bias = 0.0;
    Eigen::MatrixXd q(2, 1);
    q << -3.0, 3.0;
    CHECK(svm_predict(flat, q) == std::vector<int>{0, 0});
    flat.bias = 0.5;
    CHECK(svm_predict(flat, q) == std::vector<int>{1, 1});

    // Overlapping classes: the duals stay in [0, C] and balance across labels.
    Rng rng(5);
    Eigen::MatrixXd x(60, 2);
    std::vector<int> labels(60);
    for (long i = 0; i < 60; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        labels[static_cast<std::size_t>(i)] = x(i, 0) + 0.8 * rng.normal() > 0 ? 1 : 0;
    }
    const double c = 0.7;
    const SvmModel m = fit_svm_classifier(x, labels, c, 1e-3);
    double balance = 0;
    for (long i = 0; i < 60; ++i) {
        CHECK(m.duals[i] >= -1e-12);
        CHECK(m.duals[i] <= c + 1e-9);
        balance += m.duals[i] * m.y_signed[i];
    }
    CHECK(std::abs(balance) < 1e-8);

    // Same inputs, same model.
    const SvmModel again = fit_svm_classifier(x, labels, c, 1e-3);
    CHECK(m.duals == again.duals);
    CHECK(m.bias == again.bias);
}

TEST_CASE("svm separates a clean 2-d problem") {
    Rng rng(11);
    Eigen::MatrixXd x(40, 2);
    std::vector<int> labels(40);
    for (long i = 0; i < 40; ++i) {
        const int cls = i % 2;
        x(i, 0) = rng.uniform01() + (cls ? 2.5 : 0.0);
        x(i, 1) = rng.uniform01() + (cls ? 2.5 : 0.0);
        labels[static_cast<std::size_t>(i)] = cls;
    }
    const SvmModel m = fit_svm_classifier(x, labels, 10.0);
    CHECK(m.converged);
    CHECK(svm_predict(m, x) == labels);
    CHECK(m.sv_count >= 2);
    CHECK_THROWS_AS(fit_svm_classifier(x, std::vector<int>(40, 1), 1.0), SingleClass);
}

TEST_CASE("svr fits a smooth curve inside its tube") {
    Eigen::MatrixXd x(40, 1);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        x(i, 0) = 6.28 * i / 39.0;
        y[i] = std::sin(x(i, 0));
    }
    const double c = 100.0;
    const SvmModel m = fit_svr(x, y, 1.0, 0.01, c);
    CHECK(m.kernel == SvmKernel::Rbf);
    CHECK(m.converged);
    CHECK(m.sv_count > 0);

    double sum = 0;
    for (long i = 0; i < 40; ++i) {
        sum += m.duals[i];
        CHECK(std::abs(m.duals[i]) <= c + 1e-9);
    }
    CHECK(std::abs(sum) < 1e-8);

    const Eigen::VectorXd pred = svr_predict(m, x);
    double worst = 0;
    for (long i = 0; i < 40; ++i) worst = std::max(worst, std::abs(pred[i] - y[i]));
    CHECK(worst < 0.2);
    CHECK(std::sqrt((pred - y).squaredNorm() / 40.0) < 0.1);
}

TEST_CASE("svr flat targets collapse to the midrange bias") {
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(5, 3.7);
    const SvmModel m = fit_svr(x, y, 0.1, 0.1, 1.0);
    CHECK(m.duals.isZero(0.0));
    CHECK(m.bias == doctest::Approx(3.7));
    Eigen::MatrixXd q(1, 1);
    q << 42.0;
    CHECK(svr_predict(m, q)[0] == doctest::Approx(3.7));
}

TEST_CASE("svm and svr input validation") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    CHECK_THROWS_AS(fit_svm_classifier(x, {0, 1, 1}, -1.0), BadParams);
    CHECK_THROWS_AS(fit_svm_classifier(x, {0, 1}, 1.0), LengthMismatch);
    CHECK_THROWS_AS(fit_svr(x, Eigen::VectorXd::Zero(2)), LengthMismatch);
    CHECK_THROWS_AS(fit_svr(x, Eigen::VectorXd::Zero(3), -0.1), BadParams);

    const SvmModel m = fit_svr(x, Eigen::VectorXd::Zero(3));
    CHECK_THROWS_AS(svr_predict(m, Eigen::MatrixXd::Zero(1, 2)), ShapeMismatch);
}
