#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace slotcast {

// Ordinary least squares with an implicit intercept (prepended internally).
struct OlsFit {
    std::vector<std::string> names;  // predictor names, no intercept entry
    Eigen::VectorXd coefficients;    // [intercept, predictors...]
    Eigen::VectorXd std_errors;      // same layout
    Eigen::VectorXd t_stats;
    Eigen::VectorXd p_values;        // two-sided
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double f_stat = 0.0;
    double f_p_value = 1.0;
    double aic = 0.0; // n*ln(rss/n) + 2*(p+1), p = coefficient count incl. intercept

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

double ols_aic(long n, double rss, long n_coefficients);

// Throws RankDeficient when rows <= columns + 1 or X'X is numerically singular.
OlsFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<std::string>& names);

// Variance inflation factor per column (+inf for exact collinearity).
// Throws RankDeficient when rows < columns + 2.
Eigen::VectorXd vif(const Eigen::MatrixXd& x);

struct CollinearityDrop {
    std::vector<int> kept;                               // column indices into the input
    std::vector<std::pair<std::string, double>> removed; // (name, VIF at removal)
};

// Iteratively removes the highest-VIF column while any VIF exceeds the
// threshold. Ties break to the lower column index.
CollinearityDrop drop_collinear(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                                double threshold = 10.0);

enum class StepDirection { Backward, Forward, Both };

// Stepwise selection on AIC with a significance gate (alpha): a candidate may
// enter only with p <= alpha and may be dropped only with p > alpha. Both
// moves must improve AIC. Returns the OLS fit of the selected subset (possibly
// intercept-only).
OlsFit stepwise_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const std::vector<std::string>& names,
                       StepDirection direction = StepDirection::Both, double alpha = 0.05);

struct LogitFit {
    std::vector<std::string> names;
    Eigen::VectorXd coefficients; // [intercept, predictors...]
    double threshold = 0.5;
    int iterations = 0;
    bool converged = false;
    bool separation_flagged = false;
};

// IRLS with a 1e-10 ridge jitter on the normal equations. Separation is
// detected by coefficient blow-up (|beta| > 1e4); the fit is capped and
// flagged, not failed. Throws SingleClass when y has one class.
LogitFit fit_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y,
                      int max_iterations = 100, double tolerance = 1e-8);

Eigen::VectorXd predict_logistic_prob(const LogitFit& fit, const Eigen::MatrixXd& x);
// Class 1 iff probability strictly greater than the threshold.
std::vector<int> predict_logistic(const LogitFit& fit, const Eigen::MatrixXd& x);

struct BreuschPagan {
    double statistic = 0.0; // n * R^2 of the squared-residual auxiliary fit
    double p_value = 1.0;   // chi-squared upper tail, df = predictors
};

BreuschPagan breusch_pagan(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& x);

enum class DwVerdict { PositiveAutocorrelation, None, NegativeAutocorrelation };

struct DurbinWatson {
    double statistic = 0.0; // in [0, 4]
    DwVerdict verdict = DwVerdict::None;
};

// Throws AllZeroResiduals when the residual sum of squares is zero.
DurbinWatson durbin_watson(const Eigen::VectorXd& residuals);

} // namespace slotcast
