#pragma once

#include <vector>

#include <Eigen/Dense>

#include "slotcast/features.hpp"

namespace slotcast {

// k-nearest-neighbour voting classifier over min-max scaled inputs. The model
// keeps its own scale parameters and applies them to queries, so callers pass
// raw feature space on both sides.
struct KnnModel {
    int k = 3;
    Eigen::MatrixXd train; // scaled
    std::vector<int> labels;
    ScaleParams scale;
};

KnnModel knn_fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k = 3);

// Euclidean distance, neighbour ties broken by the lower training index,
// vote ties by class 0. k is capped at the training size.
std::vector<int> knn_classify(const KnnModel& model, const Eigen::MatrixXd& queries);
// Class-1 vote fraction among the k neighbours (score for ROC / lift).
Eigen::VectorXd knn_vote_fraction(const KnnModel& model, const Eigen::MatrixXd& queries);

enum class SvmKernel { Linear, Rbf };

// Support vector machine state shared by the classifier and the regressor.
// For classification `duals` holds alpha_i >= 0 with labels folded in via
// y in {-1,+1}; for regression it holds beta_i in [-C, C] with sum(beta) = 0.
struct SvmModel {
    SvmKernel kernel = SvmKernel::Linear;
    double gamma = 0.0;   // RBF only
    double c = 1.0;
    double epsilon = 0.0; // SVR tube half-width
    Eigen::MatrixXd train;
    Eigen::VectorXd duals;
    Eigen::VectorXd y_signed; // classifier: mapped labels; regressor: targets
    double bias = 0.0;
    bool converged = true;
    int sv_count = 0; // vectors with |dual| above the support threshold
};

// Linear soft-margin classifier trained with sequential minimal optimization.
// Labels map 0 -> -1, 1 -> +1. KKT tolerance `tol`, sweep budget 10*n full
// passes; running out flags converged = false and keeps the best iterate.
// max_sweeps = 0 means the default 10*n budget.
SvmModel fit_svm_classifier(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                            double c = 1.0, double tol = 1e-3, int max_sweeps = 0);

Eigen::VectorXd svm_decision(const SvmModel& model, const Eigen::MatrixXd& x);
// Strict sign rule: decision > 0 predicts class 1, anything else class 0.
std::vector<int> svm_predict(const SvmModel& model, const Eigen::MatrixXd& x);

// Epsilon-insensitive support vector regression with an RBF kernel,
// K(a, b) = exp(-gamma * |a - b|^2), solved by pairwise SMO that preserves
// sum(duals) = 0. Flat targets (range <= 2*epsilon) yield the all-zero dual
// solution with a midrange bias.
SvmModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double gamma = 0.1,
                 double epsilon = 0.1, double c = 1.0, double tol = 1e-3, int max_sweeps = 0);

Eigen::VectorXd svr_predict(const SvmModel& model, const Eigen::MatrixXd& x);

} // namespace slotcast
