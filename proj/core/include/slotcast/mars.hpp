#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace slotcast {

// One hinge function: h(x - knot) when plus, h(knot - x) otherwise.
struct HingeBasis {
    int feature = 0;
    double knot = 0.0;
    bool plus = true;

    double eval(double x) const {
        const double v = plus ? x - knot : knot - x;
        return v > 0.0 ? v : 0.0;
    }
    bool operator==(const HingeBasis&) const = default;
};

struct MarsTerm {
    std::optional<HingeBasis> hinge; // nullopt is the intercept
    double coefficient = 0.0;
};

struct MarsControls {
    int max_terms = 21;        // intercept + hinge terms, forward cap
    double rsq_delta = 0.001;  // forward stop when the best pair adds less R^2
    double penalty = 3.0;      // GCV knot penalty
};

// Generalized cross validation: gcv = (rss/n) / (1 - c(m)/n)^2 with
// c(m) = m + penalty*(m-1)/2; +inf once c(m) >= n.
double mars_gcv(double rss, long n, int n_terms, double penalty);

struct MarsModel {
    std::vector<MarsTerm> terms; // intercept first
    double rss = 0.0;
    double r2 = 0.0;
    double gcv = 0.0;
    double gcv_null = 0.0;
    double grsq = 0.0; // 1 - gcv/gcv_null
    int forward_terms = 0;
    int pruned = 0;

    double predict_one(const Eigen::RowVectorXd& row) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    // Pretty print, one term per line: "<coef> * h(<name> - <knot>)" or
    // "<coef> * h(<knot> - <name>)"; the intercept is a bare coefficient.
    std::string describe(const std::vector<std::string>& feature_names) const;
};

// Forward pass: grows paired hinges at observed knots greedily by RSS gain
// (ties: lower feature index, then lower knot). Degenerate directions are
// skipped. Returns the hinge set, intercept excluded.
std::vector<HingeBasis> mars_forward(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const MarsControls& controls = {});

// Backward pass: deletes single terms while the deletion lowers GCV, then
// fits the surviving terms by least squares.
MarsModel mars_backward(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<HingeBasis>& forward_hinges,
                        const MarsControls& controls = {});

MarsModel fit_mars(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const MarsControls& controls = {});

} // namespace slotcast
