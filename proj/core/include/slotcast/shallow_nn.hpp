#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace slotcast {

// Fully connected network with sigmoid hidden units, trained by full-batch
// gradient descent with a halving-on-increase step size.
struct MlpSpec {
    std::vector<int> hidden = {1};
    bool classify = false;    // sigmoid output + cross-entropy; else linear + SSE
    double learn_rate = 0.01;
    long max_steps = 1000000;
    double grad_tol = 1e-7;   // stop when the gradient inf-norm drops below
    std::uint64_t seed = 0;   // weights start U(-0.5, 0.5)
};

struct MlpModel {
    MlpSpec spec;
    std::vector<Eigen::MatrixXd> weights; // layer l maps in -> out, (out x in)
    std::vector<Eigen::VectorXd> biases;
    long steps = 0;
    double final_loss = 0.0;
    double final_learn_rate = 0.0;
    bool converged = false;

    // Regression value or class-1 probability per row.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    // Probability strictly greater than 0.5 predicts class 1.
    std::vector<int> classify(const Eigen::MatrixXd& x) const;
};

// Sum of squared errors (regression) or cross-entropy with probabilities
// clipped to [1e-12, 1 - 1e-12].
double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Full-batch gradient in the canonical flat layout (per layer: weights in
// row-major order, then biases).
Eigen::VectorXd mlp_gradient_flat(const MlpModel& model, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y);
Eigen::VectorXd mlp_params_flat(const MlpModel& model);
void mlp_set_params_flat(MlpModel& model, const Eigen::VectorXd& params);

// Targets must be 0/1 when spec.classify. Accepted steps never increase the
// loss; a rejected step halves the rate instead (underflow below 1e-15 stops).
MlpModel mlp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpSpec& spec);

} // namespace slotcast
