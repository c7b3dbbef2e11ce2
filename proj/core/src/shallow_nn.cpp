#include "slotcast/shallow_nn.hpp"

#include <cmath>

#include "slotcast/errors.hpp"
#include "slotcast/rng.hpp"

namespace slotcast {
namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Activations per layer, input first, output last.
std::vector<Eigen::MatrixXd> forward(const MlpModel& m, const Eigen::MatrixXd& x) {
    std::vector<Eigen::MatrixXd> acts;
    acts.push_back(x);
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        Eigen::MatrixXd z = acts.back() * m.weights[l].transpose();
        z.rowwise() += m.biases[l].transpose();
        const bool output_layer = l + 1 == m.weights.size();
        if (!output_layer || m.spec.classify)
            acts.push_back(sigmoid(z));
        else
            acts.push_back(std::move(z));
    }
    return acts;
}

void check_xy(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw LengthMismatch("mlp: y length mismatch");
    if (!m.weights.empty() && x.cols() != m.weights.front().cols())
        throw ShapeMismatch("mlp: input width mismatch");
}

} // namespace

Eigen::VectorXd MlpModel::predict(const Eigen::MatrixXd& x) const {
    if (!weights.empty() && x.cols() != weights.front().cols())
        throw ShapeMismatch("MlpModel::predict: input width mismatch");
    return forward(*this, x).back().col(0);
}

std::vector<int> MlpModel::classify(const Eigen::MatrixXd& x) const {
    if (!spec.classify) throw BadParams("MlpModel::classify on a regression net");
    const Eigen::VectorXd p = predict(x);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (long i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) > 0.5 ? 1 : 0;
    return out;
}

double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    check_xy(m, x, y);
    const Eigen::VectorXd out = forward(m, x).back().col(0);
    if (!m.spec.classify) return (out - y).squaredNorm();
    double loss = 0.0;
    for (long i = 0; i < y.size(); ++i) {
        const double p = std::min(std::max(out(i), 1e-12), 1.0 - 1e-12);
        loss -= y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p);
    }
    return loss;
}

namespace {

// Backprop; returns per-layer (dW, db).
std::pair<std::vector<Eigen::MatrixXd>, std::vector<Eigen::VectorXd>>
gradients(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto acts = forward(m, x);
    const std::size_t layers = m.weights.size();
    std::vector<Eigen::MatrixXd> dw(layers);
    std::vector<Eigen::VectorXd> db(layers);

    // Output delta: d(loss)/d(pre-activation). SSE with a linear output gives
    // 2*(out - y); cross-entropy with a sigmoid output collapses to (p - y).
    Eigen::MatrixXd delta = acts.back() - y;
    if (!m.spec.classify) delta *= 2.0;

    for (std::size_t l = layers; l-- > 0;) {
        dw[l] = delta.transpose() * acts[l];
        db[l] = delta.colwise().sum();
        if (l > 0) {
            delta = (delta * m.weights[l]).eval();
            delta.array() *= acts[l].array() * (1.0 - acts[l].array());
        }
    }
    return {std::move(dw), std::move(db)};
}

long param_count(const MlpModel& m) {
    long count = 0;
    for (std::size_t l = 0; l < m.weights.size(); ++l)
        count += m.weights[l].size() + m.biases[l].size();
    return count;
}

} // namespace

Eigen::VectorXd mlp_params_flat(const MlpModel& m) {
    Eigen::VectorXd out(param_count(m));
    long k = 0;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        const auto& w = m.weights[l];
        for (long r = 0; r < w.rows(); ++r)
            for (long c = 0; c < w.cols(); ++c) out(k++) = w(r, c);
        for (long r = 0; r < m.biases[l].size(); ++r) out(k++) = m.biases[l](r);
    }
    return out;
}

void mlp_set_params_flat(MlpModel& m, const Eigen::VectorXd& params) {
    if (params.size() != param_count(m)) throw ShapeMismatch("mlp_set_params_flat: size mismatch");
    long k = 0;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        auto& w = m.weights[l];
        for (long r = 0; r < w.rows(); ++r)
            for (long c = 0; c < w.cols(); ++c) w(r, c) = params(k++);
        for (long r = 0; r < m.biases[l].size(); ++r) m.biases[l](r) = params(k++);
    }
}

Eigen::VectorXd mlp_gradient_flat(const MlpModel& m, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y) {
    check_xy(m, x, y);
    const auto [dw, db] = gradients(m, x, y);
    Eigen::VectorXd out(param_count(m));
    long k = 0;
    for (std::size_t l = 0; l < dw.size(); ++l) {
        for (long r = 0; r < dw[l].rows(); ++r)
            for (long c = 0; c < dw[l].cols(); ++c) out(k++) = dw[l](r, c);
        for (long r = 0; r < db[l].size(); ++r) out(k++) = db[l](r);
    }
    return out;
}

MlpModel mlp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpSpec& spec) {
    if (x.rows() == 0) throw EmptyTrain("mlp_fit: empty training set");
    if (x.rows() != y.size()) throw LengthMismatch("mlp_fit: y length mismatch");
    if (!(spec.learn_rate > 0.0) || spec.max_steps < 1 || spec.grad_tol < 0.0)
        throw BadParams("mlp_fit: bad spec");
    for (int h : spec.hidden)
        if (h < 1) throw BadParams("mlp_fit: hidden sizes must be >= 1");
    if (spec.classify)
        for (long i = 0; i < y.size(); ++i)
            if (y(i) != 0.0 && y(i) != 1.0) throw BadParams("mlp_fit: labels must be 0 or 1");

    MlpModel m;
    m.spec = spec;
    Rng rng(spec.seed);
    long in = x.cols();
    for (std::size_t l = 0; l <= spec.hidden.size(); ++l) {
        const long out = l < spec.hidden.size() ? spec.hidden[l] : 1;
        Eigen::MatrixXd w(out, in);
        for (long r = 0; r < out; ++r)
            for (long c = 0; c < in; ++c) w(r, c) = rng.uniform(-0.5, 0.5);
        Eigen::VectorXd b(out);
        for (long r = 0; r < out; ++r) b(r) = rng.uniform(-0.5, 0.5);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
        in = out;
    }

    double lr = spec.learn_rate;
    double loss = mlp_loss(m, x, y);
    for (long step = 0; step < spec.max_steps; ++step) {
        m.steps = step + 1;
        const auto [dw, db] = gradients(m, x, y);
        double gmax = 0.0;
        for (std::size_t l = 0; l < dw.size(); ++l) {
            gmax = std::max(gmax, dw[l].cwiseAbs().maxCoeff());
            gmax = std::max(gmax, db[l].cwiseAbs().maxCoeff());
        }
        if (gmax < spec.grad_tol) {
            m.converged = true;
            break;
        }
        MlpModel trial = m;
        for (std::size_t l = 0; l < dw.size(); ++l) {
            trial.weights[l] -= lr * dw[l];
            trial.biases[l] -= lr * db[l];
        }
        const double trial_loss = mlp_loss(trial, x, y);
        if (trial_loss > loss) {
            lr /= 2.0; // reject the step, try a shorter one
            if (lr < 1e-15) {
                m.converged = true;
                break;
            }
            continue;
        }
        m.weights = std::move(trial.weights);
        m.biases = std::move(trial.biases);
        loss = trial_loss;
    }
    m.final_loss = loss;
    m.final_learn_rate = lr;
    return m;
}

} // namespace slotcast
