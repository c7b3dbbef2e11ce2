#include "slotcast/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slotcast/csv.hpp"
#include "slotcast/errors.hpp"

namespace slotcast {
namespace {

void check_labels(const Eigen::VectorXd& y) {
    for (long i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0)
            throw BadParams("classification targets must be 0 or 1");
}

void check_controls(const CartControls& c) {
    if (c.min_node < 1 || c.max_depth < 0 || c.min_impurity_decrease < 0.0)
        throw BadParams("bad CartControls");
}

struct NodeStats {
    double w = 0.0, w1 = 0.0;       // cls: total weight / class-1 weight
    double sw = 0.0, swy = 0.0, swy2 = 0.0; // reg moments
};

NodeStats gather(const Eigen::VectorXd& y, const std::vector<int>& rows,
                 const std::vector<double>& weights, TreeTask task) {
    NodeStats s;
    for (int r : rows) {
        const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(r)];
        if (task == TreeTask::Classification) {
            s.w += w;
            if (y(r) == 1.0) s.w1 += w;
        } else {
            s.sw += w;
            s.swy += w * y(r);
            s.swy2 += w * y(r) * y(r);
        }
    }
    return s;
}

double gini(double w, double w1) {
    if (w <= 0.0) return 0.0;
    const double p1 = w1 / w;
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1);
}

double sse(double sw, double swy, double swy2) {
    if (sw <= 0.0) return 0.0;
    return std::max(swy2 - swy * swy / sw, 0.0);
}

} // namespace

CartTree::SplitChoice CartTree::best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                           TreeTask task, const std::vector<int>& rows,
                                           const std::vector<double>& weights, int min_node,
                                           const std::vector<int>& features) {
    SplitChoice best;
    const std::size_t n = rows.size();
    if (n < 2) return best;

    const NodeStats parent = gather(y, rows, weights, task);
    const double parent_impurity = task == TreeTask::Classification
                                       ? gini(parent.w, parent.w1)
                                       : sse(parent.sw, parent.swy, parent.swy2);

    struct Entry {
        double v, y, w;
    };
    std::vector<Entry> col(n);

    for (int f : features) {
        for (std::size_t i = 0; i < n; ++i) {
            const int r = rows[i];
            col[i] = {x(r, f), y(r), weights.empty() ? 1.0 : weights[static_cast<std::size_t>(r)]};
        }
        std::sort(col.begin(), col.end(), [](const Entry& a, const Entry& b) { return a.v < b.v; });

        double lw = 0.0, lw1 = 0.0, lsw = 0.0, lswy = 0.0, lswy2 = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const Entry& e = col[i];
            if (task == TreeTask::Classification) {
                lw += e.w;
                if (e.y == 1.0) lw1 += e.w;
            } else {
                lsw += e.w;
                lswy += e.w * e.y;
                lswy2 += e.w * e.y * e.y;
            }
            if (col[i + 1].v == e.v) continue; // not a boundary between distinct values
            const std::size_t n_left = i + 1;
            const std::size_t n_right = n - n_left;
            if (n_left < static_cast<std::size_t>(min_node)
                || n_right < static_cast<std::size_t>(min_node))
                continue;
            double decrease;
            if (task == TreeTask::Classification) {
                const double rw = parent.w - lw;
                const double rw1 = parent.w1 - lw1;
                decrease = parent_impurity
                           - (lw * gini(lw, lw1) + rw * gini(rw, rw1)) / parent.w;
            } else {
                const double rsw = parent.sw - lsw;
                const double rswy = parent.swy - lswy;
                const double rswy2 = parent.swy2 - lswy2;
                decrease = parent_impurity - sse(lsw, lswy, lswy2) - sse(rsw, rswy, rswy2);
            }
            if (!best.found || decrease > best.decrease) {
                best.found = true;
                best.feature = f;
                best.threshold = (e.v + col[i + 1].v) / 2.0;
                best.decrease = decrease;
            }
        }
    }
    return best;
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TreeTask task,
                const CartControls& controls, const std::vector<double>& weights, int mtry,
                Rng* rng, CartTree& tree)
        : x_(x), y_(y), task_(task), controls_(controls), weights_(weights), mtry_(mtry),
          rng_(rng), tree_(tree) {
        all_features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(all_features_.begin(), all_features_.end(), 0);
    }

    int build(std::vector<int>& rows, int depth) {
        const NodeStats s = gather(y_, rows, weights_, task_);
        CartTree::Node node;
        node.n_rows = static_cast<int>(rows.size());
        if (task_ == TreeTask::Classification) {
            node.value = s.w > 0.0 ? s.w1 / s.w : 0.0;
            node.majority = s.w1 > s.w - s.w1 ? 1 : 0;
        } else {
            node.value = s.sw > 0.0 ? s.swy / s.sw : 0.0;
        }

        const int index = static_cast<int>(tree_.nodes_.size());
        tree_.nodes_.push_back(node);

        if (depth >= controls_.max_depth
            || rows.size() < 2 * static_cast<std::size_t>(controls_.min_node))
            return index;

        std::vector<int> candidates;
        const std::vector<int>* feats = &all_features_;
        if (mtry_ > 0 && mtry_ < x_.cols()) {
            rng_->sample_indices(static_cast<std::size_t>(x_.cols()),
                                 static_cast<std::size_t>(mtry_), candidates);
            std::sort(candidates.begin(), candidates.end());
            feats = &candidates;
        }

        const auto split = CartTree::best_split(x_, y_, task_, rows, weights_,
                                                controls_.min_node, *feats);
        if (!split.found || !(split.decrease > controls_.min_impurity_decrease)) return index;

        std::vector<int> left, right;
        for (int r : rows)
            (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        tree_.nodes_[static_cast<std::size_t>(index)].feature = split.feature;
        tree_.nodes_[static_cast<std::size_t>(index)].threshold = split.threshold;
        const int l = build(left, depth + 1);
        tree_.nodes_[static_cast<std::size_t>(index)].left = l;
        const int r = build(right, depth + 1);
        tree_.nodes_[static_cast<std::size_t>(index)].right = r;
        return index;
    }

private:
    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    TreeTask task_;
    const CartControls& controls_;
    const std::vector<double>& weights_;
    int mtry_;
    Rng* rng_;
    CartTree& tree_;
    std::vector<int> all_features_;
};

CartTree CartTree::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TreeTask task,
                       const CartControls& controls, const std::vector<double>& weights,
                       int mtry, Rng* rng) {
    check_controls(controls);
    const long n = x.rows();
    if (y.size() != n) throw LengthMismatch("CartTree::fit: y length mismatch");
    if (n < 2 * controls.min_node) throw TooFewRows("CartTree::fit: need >= 2*min_node rows");
    if (task == TreeTask::Classification) check_labels(y);
    if (!weights.empty()) {
        if (weights.size() != static_cast<std::size_t>(n))
            throw LengthMismatch("CartTree::fit: weights length mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w)) throw BadParams("CartTree::fit: bad weight");
            sum += w;
        }
        if (!(sum > 0.0)) throw BadParams("CartTree::fit: weights sum to zero");
    }
    if (mtry < 0 || mtry > x.cols()) throw BadParams("CartTree::fit: mtry out of range");
    if (mtry > 0 && mtry < x.cols() && rng == nullptr)
        throw BadParams("CartTree::fit: mtry subsampling needs an rng");

    CartTree tree;
    tree.task_ = task;
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    TreeBuilder(x, y, task, controls, weights, mtry, rng, tree).build(rows, 0);
    return tree;
}

double CartTree::predict_value(const Eigen::RowVectorXd& row) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        i = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
}

int CartTree::predict_class(const Eigen::RowVectorXd& row) const {
    if (task_ != TreeTask::Classification)
        throw BadParams("predict_class on a regression tree");
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        i = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].majority;
}

Eigen::VectorXd CartTree::predict_values(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out(x.rows());
    for (long i = 0; i < x.rows(); ++i) out(i) = predict_value(x.row(i));
    return out;
}

std::vector<int> CartTree::predict_classes(const Eigen::MatrixXd& x) const {
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (long i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_class(x.row(i));
    return out;
}

int CartTree::leaf_count() const {
    int c = 0;
    for (const auto& n : nodes_)
        if (n.feature < 0) ++c;
    return c;
}

int CartTree::depth() const {
    // Depth via recomputation over the preorder layout.
    std::vector<int> depth_of(nodes_.size(), 0);
    int max_depth = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.feature >= 0) {
            depth_of[static_cast<std::size_t>(n.left)] = depth_of[i] + 1;
            depth_of[static_cast<std::size_t>(n.right)] = depth_of[i] + 1;
        }
        max_depth = std::max(max_depth, depth_of[i]);
    }
    return max_depth;
}

namespace {

void render(const std::vector<CartTree::Node>& nodes, int i,
            const std::vector<std::string>& names, TreeTask task, std::string& out) {
    const CartTree::Node& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0) {
        out += "(leaf value=" + double_to_string(n.value);
        if (task == TreeTask::Classification)
            out += " majority=" + std::to_string(n.majority);
        out += " n=" + std::to_string(n.n_rows) + ")";
        return;
    }
    out += "(split f=" + names[static_cast<std::size_t>(n.feature)]
           + " t=" + double_to_string(n.threshold) + " ";
    render(nodes, n.left, names, task, out);
    out += " ";
    render(nodes, n.right, names, task, out);
    out += ")";
}

} // namespace

std::string CartTree::to_sexpr(const std::vector<std::string>& names) const {
    std::string out;
    render(nodes_, 0, names, task_, out);
    return out;
}

double Ensemble::predict_value(const Eigen::RowVectorXd& row) const {
    switch (kind) {
    case EnsembleKind::Bagging:
    case EnsembleKind::RandomForest: {
        if (task == TreeTask::Classification) {
            int votes = 0;
            for (const auto& t : members) votes += t.predict_class(row);
            return static_cast<double>(votes) / static_cast<double>(members.size());
        }
        double sum = 0.0;
        for (const auto& t : members) sum += t.predict_value(row);
        return sum / static_cast<double>(members.size());
    }
    case EnsembleKind::AdaBoost: {
        double num = 0.0, den = 0.0;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const int h = members[m].predict_class(row);
            num += alphas[m] * (h == 1 ? 1.0 : -1.0);
            den += alphas[m];
        }
        return den > 0.0 ? num / den : 0.0;
    }
    case EnsembleKind::GradBoost: {
        double sum = f0;
        for (const auto& t : members) sum += learn_rate * t.predict_value(row);
        return sum;
    }
    }
    throw BadParams("Ensemble::predict_value: unknown kind");
}

int Ensemble::predict_class(const Eigen::RowVectorXd& row) const {
    if (task != TreeTask::Classification)
        throw BadParams("predict_class on a regression ensemble");
    if (kind == EnsembleKind::AdaBoost) return predict_value(row) > 0.0 ? 1 : 0;
    // Majority vote; an exact tie resolves to class 0.
    return predict_value(row) > 0.5 ? 1 : 0;
}

Eigen::VectorXd Ensemble::predict_values(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out(x.rows());
    for (long i = 0; i < x.rows(); ++i) out(i) = predict_value(x.row(i));
    return out;
}

std::vector<int> Ensemble::predict_classes(const Eigen::MatrixXd& x) const {
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (long i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_class(x.row(i));
    return out;
}

std::string Ensemble::to_sexpr(const std::vector<std::string>& names) const {
    std::string out = "(ensemble";
    switch (kind) {
    case EnsembleKind::Bagging: out += " kind=bagging"; break;
    case EnsembleKind::AdaBoost: out += " kind=adaboost"; break;
    case EnsembleKind::GradBoost:
        out += " kind=gradboost f0=" + double_to_string(f0)
               + " lr=" + double_to_string(learn_rate);
        break;
    case EnsembleKind::RandomForest: out += " kind=random_forest"; break;
    }
    for (std::size_t m = 0; m < members.size(); ++m) {
        out += "\n  ";
        if (kind == EnsembleKind::AdaBoost) out += "alpha=" + double_to_string(alphas[m]) + " ";
        out += members[m].to_sexpr(names);
    }
    out += ")";
    return out;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& y, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(idx[i]);
    return out;
}

} // namespace

Ensemble fit_bagging(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TreeTask task,
                     int nbag, std::uint64_t seed, const CartControls& controls,
                     bool bootstrap) {
    if (nbag < 1) throw BadParams("fit_bagging: nbag >= 1 required");
    const long n = x.rows();
    if (n == 0) throw EmptyTrain("fit_bagging: empty input");
    Ensemble e;
    e.kind = EnsembleKind::Bagging;
    e.task = task;
    e.members.reserve(static_cast<std::size_t>(nbag));
    for (int m = 0; m < nbag; ++m) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
        std::vector<int> idx(static_cast<std::size_t>(n));
        if (bootstrap) {
            for (auto& v : idx) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        e.members.push_back(CartTree::fit(take_rows(x, idx), take(y, idx), task, controls));
    }
    return e;
}

Ensemble fit_adaboost(const Eigen::MatrixXd& x, const std::vector<int>& y, int rounds,
                      CartControls controls) {
    if (rounds < 1) throw BadParams("fit_adaboost: rounds >= 1 required");
    const long n = x.rows();
    if (static_cast<std::size_t>(n) != y.size())
        throw LengthMismatch("fit_adaboost: y length mismatch");
    Eigen::VectorXd yv(n);
    for (long i = 0; i < n; ++i) {
        if (y[static_cast<std::size_t>(i)] != 0 && y[static_cast<std::size_t>(i)] != 1)
            throw BadParams("fit_adaboost: labels must be 0 or 1");
        yv(i) = y[static_cast<std::size_t>(i)];
    }

    Ensemble e;
    e.kind = EnsembleKind::AdaBoost;
    e.task = TreeTask::Classification;
    std::vector<double> w(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
    constexpr double kEpsFloor = 1e-12;

    for (int t = 0; t < rounds; ++t) {
        CartTree tree = CartTree::fit(x, yv, TreeTask::Classification, controls, w);
        const std::vector<int> pred = tree.predict_classes(x);
        double eps = 0.0;
        for (long i = 0; i < n; ++i)
            if (pred[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(i)])
                eps += w[static_cast<std::size_t>(i)];

        if (eps >= 0.5) {
            if (e.members.empty()) {
                e.members.push_back(std::move(tree));
                e.alphas.push_back(1e-6);
                e.degenerate = true;
            }
            break;
        }
        if (eps < kEpsFloor) {
            e.members.push_back(std::move(tree));
            e.alphas.push_back(0.5 * std::log((1.0 - kEpsFloor) / kEpsFloor));
            break;
        }
        const double alpha = 0.5 * std::log((1.0 - eps) / eps);
        e.members.push_back(std::move(tree));
        e.alphas.push_back(alpha);
        double sum = 0.0;
        for (long i = 0; i < n; ++i) {
            const bool wrong = pred[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(i)];
            w[static_cast<std::size_t>(i)] *= std::exp(wrong ? alpha : -alpha);
            sum += w[static_cast<std::size_t>(i)];
        }
        for (auto& v : w) v /= sum;
    }
    return e;
}

Ensemble fit_gradboost(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int rounds,
                       double learn_rate, CartControls controls) {
    if (rounds < 1) throw BadParams("fit_gradboost: rounds >= 1 required");
    if (!(learn_rate > 0.0)) throw BadParams("fit_gradboost: learn_rate must be positive");
    const long n = x.rows();
    if (y.size() != n) throw LengthMismatch("fit_gradboost: y length mismatch");
    if (n == 0) throw EmptyTrain("fit_gradboost: empty input");

    Ensemble e;
    e.kind = EnsembleKind::GradBoost;
    e.task = TreeTask::Regression;
    e.learn_rate = learn_rate;
    e.f0 = y.mean();
    Eigen::VectorXd current = Eigen::VectorXd::Constant(n, e.f0);
    for (int t = 0; t < rounds; ++t) {
        const Eigen::VectorXd resid = y - current;
        CartTree tree = CartTree::fit(x, resid, TreeTask::Regression, controls);
        current += learn_rate * tree.predict_values(x);
        e.members.push_back(std::move(tree));
    }
    return e;
}

Ensemble fit_random_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TreeTask task,
                           int n_trees, int mtry, std::uint64_t seed,
                           const CartControls& controls, bool bootstrap) {
    const long n = x.rows();
    const long p = x.cols();
    if (n_trees < 1) throw BadParams("fit_random_forest: n_trees >= 1 required");
    if (mtry < 1 || mtry > p) throw BadParams("fit_random_forest: mtry must be in [1, columns]");
    if (n == 0) throw EmptyTrain("fit_random_forest: empty input");

    Ensemble e;
    e.kind = EnsembleKind::RandomForest;
    e.task = task;
    e.members.reserve(static_cast<std::size_t>(n_trees));
    std::vector<std::vector<char>> inbag(static_cast<std::size_t>(n_trees),
                                         std::vector<char>(static_cast<std::size_t>(n), 0));

    for (int m = 0; m < n_trees; ++m) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
        std::vector<int> idx(static_cast<std::size_t>(n));
        if (bootstrap) {
            for (auto& v : idx) {
                v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                inbag[static_cast<std::size_t>(m)][static_cast<std::size_t>(v)] = 1;
            }
        } else {
            std::iota(idx.begin(), idx.end(), 0);
            std::fill(inbag[static_cast<std::size_t>(m)].begin(),
                      inbag[static_cast<std::size_t>(m)].end(), 1);
        }
        const int effective_mtry = mtry == p ? 0 : mtry;
        e.members.push_back(CartTree::fit(take_rows(x, idx), take(y, idx), task, controls, {},
                                          effective_mtry, &rng));
    }

    // Out-of-bag error over rows that were left out by at least one member.
    long counted = 0, wrong = 0;
    double sq_sum = 0.0;
    for (long i = 0; i < n; ++i) {
        int votes1 = 0, votes = 0;
        double sum = 0.0;
        for (int m = 0; m < n_trees; ++m) {
            if (inbag[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)]) continue;
            ++votes;
            if (task == TreeTask::Classification)
                votes1 += e.members[static_cast<std::size_t>(m)].predict_class(x.row(i));
            else
                sum += e.members[static_cast<std::size_t>(m)].predict_value(x.row(i));
        }
        if (votes == 0) continue;
        ++counted;
        if (task == TreeTask::Classification) {
            const int pred = 2 * votes1 > votes ? 1 : 0;
            if (pred != static_cast<int>(y(i))) ++wrong;
        } else {
            const double err = sum / votes - y(i);
            sq_sum += err * err;
        }
    }
    if (counted > 0) {
        if (task == TreeTask::Classification)
            e.oob_error_pct = static_cast<double>(wrong) / static_cast<double>(counted) * 100.0;
        else
            e.oob_mse = sq_sum / static_cast<double>(counted);
    }
    return e;
}

} // namespace slotcast
