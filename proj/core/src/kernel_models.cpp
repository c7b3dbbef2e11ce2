#include "slotcast/kernel_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "slotcast/errors.hpp"

namespace slotcast {
namespace {

void check_binary(const std::vector<int>& labels) {
    int ones = 0;
    for (int v : labels) {
        if (v != 0 && v != 1) throw BadParams("labels must be 0 or 1");
        ones += v;
    }
    if (ones == 0 || static_cast<std::size_t>(ones) == labels.size())
        throw SingleClass("both classes required");
}

double rbf(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double gamma) {
    return std::exp(-gamma * (a - b).squaredNorm());
}

} // namespace

KnnModel knn_fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k) {
    if (x.rows() == 0) throw EmptyTrain("knn_fit: empty training set");
    if (static_cast<std::size_t>(x.rows()) != labels.size())
        throw LengthMismatch("knn_fit: labels length mismatch");
    if (k < 1) throw BadParams("knn_fit: k >= 1 required");
    for (int v : labels)
        if (v != 0 && v != 1) throw BadParams("knn_fit: labels must be 0 or 1");
    KnnModel m;
    m.k = k;
    m.labels = labels;
    m.train = fit_apply_min_max(x, x, m.scale);
    return m;
}

namespace {

// Votes for class 1 among the k nearest, with the effective k returned.
std::pair<int, int> knn_votes(const KnnModel& m, const Eigen::RowVectorXd& q) {
    const long n = m.train.rows();
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
        dist[static_cast<std::size_t>(i)] = {(m.train.row(i) - q).squaredNorm(),
                                             static_cast<int>(i)};
    const int k_eff = std::min<long>(m.k, n);
    std::partial_sort(dist.begin(), dist.begin() + k_eff, dist.end());
    int votes1 = 0;
    for (int i = 0; i < k_eff; ++i)
        votes1 += m.labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)];
    return {votes1, k_eff};
}

} // namespace

std::vector<int> knn_classify(const KnnModel& m, const Eigen::MatrixXd& queries) {
    const Eigen::MatrixXd q = apply_min_max(queries, m.scale);
    std::vector<int> out(static_cast<std::size_t>(q.rows()));
    for (long i = 0; i < q.rows(); ++i) {
        const auto [votes1, k_eff] = knn_votes(m, q.row(i));
        out[static_cast<std::size_t>(i)] = 2 * votes1 > k_eff ? 1 : 0; // tie -> class 0
    }
    return out;
}

Eigen::VectorXd knn_vote_fraction(const KnnModel& m, const Eigen::MatrixXd& queries) {
    const Eigen::MatrixXd q = apply_min_max(queries, m.scale);
    Eigen::VectorXd out(q.rows());
    for (long i = 0; i < q.rows(); ++i) {
        const auto [votes1, k_eff] = knn_votes(m, q.row(i));
        out(i) = static_cast<double>(votes1) / static_cast<double>(k_eff);
    }
    return out;
}

namespace {

// Platt-style SMO for the linear soft-margin classifier. Deterministic second
// choice: the largest |E_i - E_j| wins, falling back to an index scan.
class SmoClassifier {
public:
    SmoClassifier(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double tol)
        : x_(x), y_(y), c_(c), tol_(tol), alpha_(Eigen::VectorXd::Zero(x.rows())),
          w_(Eigen::VectorXd::Zero(x.cols())) {}

    bool run(int max_sweeps) {
        const long n = x_.rows();
        if (max_sweeps <= 0) max_sweeps = static_cast<int>(10 * n);
        bool examine_all = true;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            int changed = 0;
            for (long i = 0; i < n; ++i) {
                if (!examine_all && !is_free(i)) continue;
                changed += examine(i);
            }
            if (examine_all) {
                if (changed == 0) return true;
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
        return false;
    }

    const Eigen::VectorXd& alpha() const { return alpha_; }
    double bias() const { return b_; }

private:
    double kernel(long i, long j) const { return x_.row(i).dot(x_.row(j)); }
    double f(long i) const { return w_.dot(x_.row(i)) + b_; }
    double error(long i) const { return f(i) - y_(i); }
    bool is_free(long i) const { return alpha_(i) > 0.0 && alpha_(i) < c_; }

    int examine(long i) {
        const double e_i = error(i);
        const double r = e_i * y_(i);
        const bool violated = (r < -tol_ && alpha_(i) < c_) || (r > tol_ && alpha_(i) > 0.0);
        if (!violated) return 0;

        const long n = x_.rows();
        long best = -1;
        double best_gap = -1.0;
        for (long j = 0; j < n; ++j) {
            if (j == i || !is_free(j)) continue;
            const double gap = std::fabs(e_i - error(j));
            if (gap > best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        if (best >= 0 && take_step(i, best, e_i)) return 1;
        for (long j = 0; j < n; ++j)
            if (j != i && is_free(j) && take_step(i, j, e_i)) return 1;
        for (long j = 0; j < n; ++j)
            if (j != i && !is_free(j) && take_step(i, j, e_i)) return 1;
        return 0;
    }

    bool take_step(long i, long j, double e_i) {
        const double e_j = error(j);
        const double s = y_(i) * y_(j);
        double lo, hi;
        if (y_(i) != y_(j)) {
            lo = std::max(0.0, alpha_(j) - alpha_(i));
            hi = std::min(c_, c_ + alpha_(j) - alpha_(i));
        } else {
            lo = std::max(0.0, alpha_(i) + alpha_(j) - c_);
            hi = std::min(c_, alpha_(i) + alpha_(j));
        }
        if (lo >= hi) return false;

        const double k_ii = kernel(i, i), k_jj = kernel(j, j), k_ij = kernel(i, j);
        const double eta = k_ii + k_jj - 2.0 * k_ij;
        double a_j;
        if (eta > 0.0) {
            a_j = std::clamp(alpha_(j) + y_(j) * (e_i - e_j) / eta, lo, hi);
        } else {
            // Degenerate direction (duplicate rows): evaluate the objective at
            // both clip bounds.
            const double f_i = y_(i) * (e_i + b_) - alpha_(i) * k_ii - s * alpha_(j) * k_ij;
            const double f_j = y_(j) * (e_j + b_) - s * alpha_(i) * k_ij - alpha_(j) * k_jj;
            const double l_i = alpha_(i) + s * (alpha_(j) - lo);
            const double h_i = alpha_(i) + s * (alpha_(j) - hi);
            const double lo_obj = l_i * f_i + lo * f_j + 0.5 * l_i * l_i * k_ii
                                  + 0.5 * lo * lo * k_jj + s * lo * l_i * k_ij;
            const double hi_obj = h_i * f_i + hi * f_j + 0.5 * h_i * h_i * k_ii
                                  + 0.5 * hi * hi * k_jj + s * hi * h_i * k_ij;
            if (lo_obj < hi_obj - 1e-12)
                a_j = lo;
            else if (lo_obj > hi_obj + 1e-12)
                a_j = hi;
            else
                return false;
        }
        if (std::fabs(a_j - alpha_(j)) < 1e-12 * (a_j + alpha_(j) + 1e-12)) return false;

        const double a_i = alpha_(i) + s * (alpha_(j) - a_j);
        const double d_i = a_i - alpha_(i);
        const double d_j = a_j - alpha_(j);

        const double b1 = b_ - e_i - y_(i) * d_i * k_ii - y_(j) * d_j * k_ij;
        const double b2 = b_ - e_j - y_(i) * d_i * k_ij - y_(j) * d_j * k_jj;
        if (a_i > 0.0 && a_i < c_)
            b_ = b1;
        else if (a_j > 0.0 && a_j < c_)
            b_ = b2;
        else
            b_ = (b1 + b2) / 2.0;

        w_ += y_(i) * d_i * x_.row(i).transpose() + y_(j) * d_j * x_.row(j).transpose();
        alpha_(i) = a_i;
        alpha_(j) = a_j;
        return true;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    double c_, tol_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd w_;
    double b_ = 0.0;
};

} // namespace

SvmModel fit_svm_classifier(const Eigen::MatrixXd& x, const std::vector<int>& labels, double c,
                            double tol, int max_sweeps) {
    if (x.rows() == 0) throw EmptyTrain("fit_svm_classifier: empty training set");
    if (static_cast<std::size_t>(x.rows()) != labels.size())
        throw LengthMismatch("fit_svm_classifier: labels length mismatch");
    if (!(c > 0.0) || !(tol > 0.0)) throw BadParams("fit_svm_classifier: c and tol must be > 0");
    check_binary(labels);

    Eigen::VectorXd y(x.rows());
    for (long i = 0; i < x.rows(); ++i)
        y(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

    SmoClassifier smo(x, y, c, tol);
    const bool ok = smo.run(max_sweeps);

    SvmModel m;
    m.kernel = SvmKernel::Linear;
    m.c = c;
    m.train = x;
    m.duals = smo.alpha();
    m.y_signed = y;
    m.bias = smo.bias();
    m.converged = ok;
    m.sv_count = 0;
    for (long i = 0; i < m.duals.size(); ++i)
        if (m.duals(i) > 1e-8) ++m.sv_count;
    return m;
}

Eigen::VectorXd svm_decision(const SvmModel& m, const Eigen::MatrixXd& x) {
    if (x.cols() != m.train.cols()) throw ShapeMismatch("svm_decision: column mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), m.bias);
    for (long i = 0; i < m.train.rows(); ++i) {
        const double coef = m.duals(i) * m.y_signed(i);
        if (coef == 0.0) continue;
        if (m.kernel == SvmKernel::Linear) {
            out += coef * (x * m.train.row(i).transpose());
        } else {
            for (long q = 0; q < x.rows(); ++q)
                out(q) += coef * rbf(x.row(q), m.train.row(i), m.gamma);
        }
    }
    return out;
}

std::vector<int> svm_predict(const SvmModel& m, const Eigen::MatrixXd& x) {
    const Eigen::VectorXd d = svm_decision(m, x);
    std::vector<int> out(static_cast<std::size_t>(d.size()));
    for (long i = 0; i < d.size(); ++i) out[static_cast<std::size_t>(i)] = d(i) > 0.0 ? 1 : 0;
    return out;
}

namespace {

// Pairwise SMO for epsilon-SVR on the beta = alpha - alpha* parametrization.
// Each step minimizes the piecewise-quadratic restriction exactly.
class SmoRegressor {
public:
    SmoRegressor(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c, double eps,
                 double tol)
        : k_(k), y_(y), c_(c), eps_(eps), tol_(tol),
          beta_(Eigen::VectorXd::Zero(y.size())), u_(Eigen::VectorXd::Zero(y.size())) {
        recompute_bias();
    }

    bool run(int max_sweeps) {
        const long n = y_.size();
        if (max_sweeps <= 0) max_sweeps = static_cast<int>(10 * n);
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            int changed = 0;
            for (long i = 0; i < n; ++i) {
                if (violation(i) <= tol_) continue;
                changed += examine(i);
            }
            if (changed == 0) return true;
        }
        return false;
    }

    const Eigen::VectorXd& beta() const { return beta_; }
    double bias() const { return b_; }

private:
    double error(long i) const { return u_(i) + b_ - y_(i); }

    double violation(long i) const {
        const double e = error(i);
        const double bound_eps = 1e-10 * c_;
        if (beta_(i) > bound_eps && beta_(i) < c_ - bound_eps) return std::fabs(e + eps_);
        if (beta_(i) < -bound_eps && beta_(i) > -c_ + bound_eps) return std::fabs(e - eps_);
        if (std::fabs(beta_(i)) <= bound_eps) return std::max(std::fabs(e) - eps_, 0.0);
        if (beta_(i) >= c_ - bound_eps) return std::max(e + eps_, 0.0);
        return std::max(eps_ - e, 0.0); // beta == -c
    }

    int examine(long i) {
        const long n = y_.size();
        long best = -1;
        double best_gap = -1.0;
        const double e_i = error(i);
        for (long j = 0; j < n; ++j) {
            if (j == i) continue;
            const double gap = std::fabs(e_i - error(j));
            if (gap > best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        if (best >= 0 && take_step(i, best)) return 1;
        for (long j = 0; j < n; ++j)
            if (j != i && take_step(i, j)) return 1;
        return 0;
    }

    bool take_step(long i, long j) {
        const double s = beta_(i) + beta_(j);
        const double lo = std::max(-c_, s - c_);
        const double hi = std::min(c_, s + c_);
        if (lo >= hi) return false;

        const double k_ii = k_(i, i), k_jj = k_(j, j), k_ij = k_(i, j);
        const double eta = k_ii + k_jj - 2.0 * k_ij;
        const double g_i = u_(i) - beta_(i) * k_ii - beta_(j) * k_ij;
        const double g_j = u_(j) - beta_(i) * k_ij - beta_(j) * k_jj;

        // Objective restricted to beta_i = t, beta_j = s - t (constant terms
        // dropped): 0.5*K_ii*t^2 + 0.5*K_jj*(s-t)^2 + K_ij*t*(s-t)
        //            + t*(g_i - y_i) + (s-t)*(g_j - y_j) + eps*(|t| + |s-t|).
        auto objective = [&](double t) {
            const double r = s - t;
            return 0.5 * k_ii * t * t + 0.5 * k_jj * r * r + k_ij * t * r
                   + t * (g_i - y_(i)) + r * (g_j - y_(j)) + eps_ * (std::fabs(t) + std::fabs(r));
        };

        std::vector<double> candidates{lo, hi};
        if (0.0 > lo && 0.0 < hi) candidates.push_back(0.0);
        if (s > lo && s < hi) candidates.push_back(s);
        if (eta > 0.0) {
            for (const double sig_i : {-1.0, 1.0}) {
                for (const double sig_j : {-1.0, 1.0}) {
                    const double t = ((k_jj - k_ij) * s + (y_(i) - g_i) - (y_(j) - g_j)
                                      - eps_ * (sig_i - sig_j))
                                     / eta;
                    if (t < lo || t > hi) continue;
                    // The stationary point must sit in its assumed sign region.
                    if (t * sig_i < 0.0 || (s - t) * sig_j < 0.0) continue;
                    candidates.push_back(t);
                }
            }
        }
        double best_t = beta_(i);
        double best_obj = objective(beta_(i));
        for (double t : candidates) {
            const double obj = objective(t);
            if (obj < best_obj - 1e-14 || (std::fabs(obj - best_obj) <= 1e-14 && t < best_t)) {
                best_obj = obj;
                best_t = t;
            }
        }
        if (std::fabs(best_t - beta_(i)) < 1e-12) return false;

        const double d_i = best_t - beta_(i);
        const double d_j = (s - best_t) - beta_(j);
        beta_(i) = best_t;
        beta_(j) = s - best_t;
        u_ += d_i * k_.col(i) + d_j * k_.col(j);
        recompute_bias();
        return true;
    }

    void recompute_bias() {
        // Free vectors pin the bias exactly; otherwise take the midpoint of
        // the interval the bound and zero vectors allow.
        const double bound_eps = 1e-10 * c_;
        double free_sum = 0.0;
        int free_count = 0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (long l = 0; l < y_.size(); ++l) {
            const double base = y_(l) - u_(l);
            if (std::fabs(beta_(l)) <= bound_eps) {
                lo = std::max(lo, base - eps_);
                hi = std::min(hi, base + eps_);
            } else if (beta_(l) >= c_ - bound_eps) {
                hi = std::min(hi, base - eps_);
            } else if (beta_(l) <= -c_ + bound_eps) {
                lo = std::max(lo, base + eps_);
            } else if (beta_(l) > 0.0) {
                free_sum += base - eps_;
                ++free_count;
            } else {
                free_sum += base + eps_;
                ++free_count;
            }
        }
        if (free_count > 0) {
            b_ = free_sum / free_count;
        } else if (std::isfinite(lo) && std::isfinite(hi)) {
            b_ = (lo + hi) / 2.0;
        } else if (std::isfinite(lo)) {
            b_ = lo;
        } else if (std::isfinite(hi)) {
            b_ = hi;
        }
    }

    const Eigen::MatrixXd& k_;
    const Eigen::VectorXd& y_;
    double c_, eps_, tol_;
    Eigen::VectorXd beta_;
    Eigen::VectorXd u_;
    double b_ = 0.0;
};

} // namespace

SvmModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double gamma,
                 double epsilon, double c, double tol, int max_sweeps) {
    if (x.rows() == 0) throw EmptyTrain("fit_svr: empty training set");
    if (y.size() != x.rows()) throw LengthMismatch("fit_svr: y length mismatch");
    if (!(gamma > 0.0) || !(c > 0.0) || !(tol > 0.0) || epsilon < 0.0)
        throw BadParams("fit_svr: gamma, c, tol must be > 0 and epsilon >= 0");

    const long n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (long i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (long j = i + 1; j < n; ++j) {
            const double v = rbf(x.row(i), x.row(j), gamma);
            k(i, j) = v;
            k(j, i) = v;
        }
    }

    SmoRegressor smo(k, y, c, epsilon, tol);
    const bool ok = smo.run(max_sweeps);

    SvmModel m;
    m.kernel = SvmKernel::Rbf;
    m.gamma = gamma;
    m.c = c;
    m.epsilon = epsilon;
    m.train = x;
    m.duals = smo.beta();
    m.y_signed = y;
    m.bias = smo.bias();
    m.converged = ok;
    m.sv_count = 0;
    for (long i = 0; i < n; ++i)
        if (std::fabs(m.duals(i)) > 1e-8) ++m.sv_count;
    return m;
}

Eigen::VectorXd svr_predict(const SvmModel& m, const Eigen::MatrixXd& x) {
    if (x.cols() != m.train.cols()) throw ShapeMismatch("svr_predict: column mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), m.bias);
    for (long i = 0; i < m.train.rows(); ++i) {
        if (m.duals(i) == 0.0) continue;
        for (long q = 0; q < x.rows(); ++q)
            out(q) += m.duals(i) * rbf(x.row(q), m.train.row(i), m.gamma);
    }
    return out;
}

} // namespace slotcast
