#include "slotcast/mars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"

namespace slotcast {

double mars_gcv(double rss, long n, int n_terms, double penalty) {
    const double cm = n_terms + penalty * (n_terms - 1) / 2.0;
    if (cm >= static_cast<double>(n)) return std::numeric_limits<double>::infinity();
    const double denom = 1.0 - cm / static_cast<double>(n);
    return (rss / static_cast<double>(n)) / (denom * denom);
}

double MarsModel::predict_one(const Eigen::RowVectorXd& row) const {
    double out = 0.0;
    for (const auto& t : terms)
        out += t.coefficient * (t.hinge ? t.hinge->eval(row(t.hinge->feature)) : 1.0);
    return out;
}

Eigen::VectorXd MarsModel::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out(x.rows());
    for (long i = 0; i < x.rows(); ++i) out(i) = predict_one(x.row(i));
    return out;
}

std::string MarsModel::describe(const std::vector<std::string>& names) const {
    std::string out;
    for (const auto& t : terms) {
        if (!t.hinge) {
            out += double_to_string(t.coefficient) + "\n";
            continue;
        }
        const std::string& n = names[static_cast<std::size_t>(t.hinge->feature)];
        out += double_to_string(t.coefficient) + " * h(";
        if (t.hinge->plus)
            out += n + " - " + double_to_string(t.hinge->knot);
        else
            out += double_to_string(t.hinge->knot) + " - " + n;
        out += ")\n";
    }
    return out;
}

namespace {

Eigen::VectorXd hinge_column(const Eigen::MatrixXd& x, const HingeBasis& h) {
    Eigen::VectorXd col(x.rows());
    for (long i = 0; i < x.rows(); ++i) col(i) = h.eval(x(i, h.feature));
    return col;
}

// dot(hinge column, v) without materializing the column.
double hinge_dot(const Eigen::MatrixXd& x, const HingeBasis& h, const Eigen::VectorXd& v) {
    double s = 0.0;
    const long n = x.rows();
    if (h.plus) {
        for (long i = 0; i < n; ++i) {
            const double d = x(i, h.feature) - h.knot;
            if (d > 0.0) s += d * v(i);
        }
    } else {
        for (long i = 0; i < n; ++i) {
            const double d = h.knot - x(i, h.feature);
            if (d > 0.0) s += d * v(i);
        }
    }
    return s;
}

double hinge_norm2(const Eigen::MatrixXd& x, const HingeBasis& h) {
    double s = 0.0;
    const long n = x.rows();
    for (long i = 0; i < n; ++i) {
        const double d = h.plus ? x(i, h.feature) - h.knot : h.knot - x(i, h.feature);
        if (d > 0.0) s += d * d;
    }
    return s;
}

Eigen::MatrixXd term_design(const Eigen::MatrixXd& x, const std::vector<MarsTerm>& terms) {
    Eigen::MatrixXd b(x.rows(), static_cast<Eigen::Index>(terms.size()));
    for (std::size_t j = 0; j < terms.size(); ++j) {
        if (terms[j].hinge)
            b.col(static_cast<Eigen::Index>(j)) = hinge_column(x, *terms[j].hinge);
        else
            b.col(static_cast<Eigen::Index>(j)).setOnes();
    }
    return b;
}

struct LsResult {
    Eigen::VectorXd beta;
    double rss = 0.0;
};

LsResult least_squares(const Eigen::MatrixXd& b, const Eigen::VectorXd& y) {
    LsResult r;
    r.beta = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(b).solve(y);
    r.rss = (y - b * r.beta).squaredNorm();
    return r;
}

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const MarsControls& controls) {
    if (x.rows() == 0) throw EmptyTrain("mars: empty training set");
    if (y.size() != x.rows()) throw LengthMismatch("mars: y length mismatch");
    if (controls.max_terms < 1 || controls.rsq_delta < 0.0 || controls.penalty < 0.0)
        throw BadParams("mars: bad controls");
}

} // namespace

std::vector<HingeBasis> mars_forward(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const MarsControls& controls) {
    check_inputs(x, y, controls);
    const long n = x.rows();
    const long p = x.cols();
    const double mean_y = y.mean();
    const double tss = (y.array() - mean_y).matrix().squaredNorm();
    std::vector<HingeBasis> hinges;
    if (tss <= 0.0 || n < 4) return hinges;

    // Candidate knots: sorted distinct values per feature.
    std::vector<std::vector<double>> knots(static_cast<std::size_t>(p));
    for (long f = 0; f < p; ++f) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = x(i, f);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        knots[static_cast<std::size_t>(f)] = std::move(v);
    }

    // Orthonormal basis of the current design, grown two columns per step.
    Eigen::MatrixXd q(n, std::min<long>(controls.max_terms + 2, n));
    q.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    long k = 1;
    std::vector<double> qty{q.col(0).dot(y)};

    // Per-candidate-column caches: c.c, c.y and Q^T c, appended as q grows.
    struct Cand {
        HingeBasis h;
        double cc = 0.0, cy = 0.0;
        std::vector<double> qtc;
    };
    std::vector<Cand> cands;
    const Eigen::VectorXd q0 = q.col(0);
    for (long f = 0; f < p; ++f) {
        for (double t : knots[static_cast<std::size_t>(f)]) {
            for (bool plus : {true, false}) {
                Cand c;
                c.h = HingeBasis{static_cast<int>(f), t, plus};
                c.cc = hinge_norm2(x, c.h);
                c.cy = hinge_dot(x, c.h, y);
                c.qtc.push_back(hinge_dot(x, c.h, q0));
                cands.push_back(std::move(c));
            }
        }
    }

    const int cap = std::min<long>(controls.max_terms, n - 2);
    double rss = tss; // the basis starts at the intercept

    while (static_cast<int>(hinges.size()) + 1 + 2 <= cap) {
        if (rss / tss < 1e-12) break;

        // Score every pair: candidates come in (plus, minus) adjacency.
        double best_gain = -1.0;
        std::size_t best_pair = 0;
        int best_n_new = 0;
        for (std::size_t ci = 0; ci + 1 < cands.size(); ci += 2) {
            const Cand& c1 = cands[ci];     // h(x - t)
            const Cand& c2 = cands[ci + 1]; // h(t - x)

            double s1 = 0.0, y1 = 0.0;
            for (long j = 0; j < k; ++j) {
                s1 += c1.qtc[static_cast<std::size_t>(j)] * c1.qtc[static_cast<std::size_t>(j)];
                y1 += c1.qtc[static_cast<std::size_t>(j)] * qty[static_cast<std::size_t>(j)];
            }
            const double r1sq = c1.cc - s1;
            const bool ok1 = r1sq > 1e-10 * std::max(c1.cc, 1.0);
            double gain = 0.0;
            double q1y = 0.0, r1 = 0.0;
            if (ok1) {
                r1 = std::sqrt(r1sq);
                q1y = (c1.cy - y1) / r1;
                gain += q1y * q1y;
            }

            double s2 = 0.0, y2 = 0.0, cross = 0.0;
            for (long j = 0; j < k; ++j) {
                s2 += c2.qtc[static_cast<std::size_t>(j)] * c2.qtc[static_cast<std::size_t>(j)];
                y2 += c2.qtc[static_cast<std::size_t>(j)] * qty[static_cast<std::size_t>(j)];
                cross += c1.qtc[static_cast<std::size_t>(j)] * c2.qtc[static_cast<std::size_t>(j)];
            }
            // Pointwise h+ * h- = 0, so the raw dot of the pair is zero.
            double r2sq = c2.cc - s2;
            double q2y_num = c2.cy - y2;
            if (ok1) {
                const double q1c2 = (0.0 - cross) / r1;
                r2sq -= q1c2 * q1c2;
                q2y_num -= q1c2 * q1y;
            }
            const bool ok2 = r2sq > 1e-10 * std::max(c2.cc, 1.0);
            if (ok2) gain += q2y_num * q2y_num / r2sq;
            if (!ok1 && !ok2) continue;
            if (gain > best_gain + 1e-14) {
                best_gain = gain;
                best_pair = ci;
                best_n_new = (ok1 ? 1 : 0) + (ok2 ? 1 : 0);
            }
        }
        if (best_gain <= 0.0) break;
        if (best_gain / tss < controls.rsq_delta) break;

        // Accept the pair (or its single usable direction) and extend Q by
        // fresh two-pass Gram-Schmidt for numerical hygiene.
        for (std::size_t ci = best_pair; ci < best_pair + 2; ++ci) {
            const Cand& c = cands[ci];
            Eigen::VectorXd col = hinge_column(x, c.h);
            for (int pass = 0; pass < 2; ++pass)
                col -= q.leftCols(k) * (q.leftCols(k).transpose() * col);
            const double norm = col.norm();
            if (norm * norm <= 1e-10 * std::max(c.cc, 1.0)) continue;
            col /= norm;
            q.col(k) = col;
            const double qy = col.dot(y);
            qty.push_back(qy);
            rss -= qy * qy;
            for (auto& cc : cands) cc.qtc.push_back(hinge_dot(x, cc.h, col));
            ++k;
            hinges.push_back(c.h);
        }
        (void)best_n_new;
        if (static_cast<int>(hinges.size()) + 1 >= cap) break;
    }
    return hinges;
}

MarsModel mars_backward(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<HingeBasis>& forward_hinges,
                        const MarsControls& controls) {
    check_inputs(x, y, controls);
    const long n = x.rows();
    const double mean_y = y.mean();
    const double tss = (y.array() - mean_y).matrix().squaredNorm();

    std::vector<MarsTerm> terms;
    terms.push_back(MarsTerm{std::nullopt, 0.0});
    for (const auto& h : forward_hinges) terms.push_back(MarsTerm{h, 0.0});

    auto fit_terms = [&](const std::vector<MarsTerm>& ts) {
        return least_squares(term_design(x, ts), y);
    };

    LsResult cur = fit_terms(terms);
    double cur_gcv = mars_gcv(cur.rss, n, static_cast<int>(terms.size()), controls.penalty);
    int pruned = 0;

    while (terms.size() > 1) {
        double best_gcv = cur_gcv;
        std::size_t best_drop = 0;
        LsResult best_fit;
        bool improved = false;
        for (std::size_t j = 1; j < terms.size(); ++j) { // intercept is fixed
            std::vector<MarsTerm> trial = terms;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(j));
            LsResult f = fit_terms(trial);
            const double g = mars_gcv(f.rss, n, static_cast<int>(trial.size()), controls.penalty);
            if (g < best_gcv) {
                best_gcv = g;
                best_drop = j;
                best_fit = std::move(f);
                improved = true;
            }
        }
        if (!improved) break;
        terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(best_drop));
        cur = std::move(best_fit);
        cur_gcv = best_gcv;
        ++pruned;
    }

    MarsModel m;
    m.terms = terms;
    for (std::size_t j = 0; j < terms.size(); ++j)
        m.terms[j].coefficient = cur.beta(static_cast<Eigen::Index>(j));
    m.rss = cur.rss;
    m.r2 = tss > 0.0 ? 1.0 - cur.rss / tss : 0.0;
    m.gcv = cur_gcv;
    m.gcv_null = mars_gcv(tss, n, 1, controls.penalty);
    m.grsq = m.gcv_null > 0.0 ? 1.0 - m.gcv / m.gcv_null : 0.0;
    m.forward_terms = static_cast<int>(forward_hinges.size()) + 1;
    m.pruned = pruned;
    return m;
}

MarsModel fit_mars(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const MarsControls& controls) {
    return mars_backward(x, y, mars_forward(x, y, controls), controls);
}

} // namespace slotcast
