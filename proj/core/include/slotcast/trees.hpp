#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slotcast/rng.hpp"

namespace slotcast {

enum class TreeTask { Classification, Regression };

struct CartControls {
    int min_node = 5;                    // minimum rows in each child
    int max_depth = 30;
    double min_impurity_decrease = 1e-7; // split kept only if decrease exceeds this
};

// Binary CART. Classification impurity is weighted Gini, regression impurity
// is the (weighted) sum of squared errors; splits are exhaustive over the
// midpoints of consecutive distinct feature values. Equal decreases resolve
// to the lower feature index, then the lower threshold.
class CartTree {
public:
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        double value = 0.0; // mean target (reg) or P(class 1) (cls)
        int majority = 0;   // cls only; vote ties resolve to class 0
        int n_rows = 0;
    };

    struct SplitChoice {
        bool found = false;
        int feature = -1;
        double threshold = 0.0;
        double decrease = 0.0;
    };

    // Best split over the given rows; exposed so the search can be checked
    // against an exhaustive oracle. Weights may be empty (all ones).
    static SplitChoice best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  TreeTask task, const std::vector<int>& rows,
                                  const std::vector<double>& weights, int min_node,
                                  const std::vector<int>& features);

    // mtry = 0 (or = columns) considers every feature at every node; otherwise
    // each node scores an rng-sampled subset of mtry features.
    static CartTree fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TreeTask task,
                        const CartControls& controls = {},
                        const std::vector<double>& weights = {}, int mtry = 0,
                        Rng* rng = nullptr);

    double predict_value(const Eigen::RowVectorXd& row) const;
    int predict_class(const Eigen::RowVectorXd& row) const;
    Eigen::VectorXd predict_values(const Eigen::MatrixXd& x) const;
    std::vector<int> predict_classes(const Eigen::MatrixXd& x) const;

    TreeTask task() const { return task_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    int leaf_count() const;
    int depth() const;
    const std::vector<Node>& nodes() const { return nodes_; }

    // S-expression rendering, stable across runs: either
    // (leaf value=.. n=..) or (split f=<name> t=<threshold> <left> <right>).
    std::string to_sexpr(const std::vector<std::string>& feature_names) const;

private:
    std::vector<Node> nodes_;
    TreeTask task_ = TreeTask::Classification;

    friend class TreeBuilder;
};

enum class EnsembleKind { Bagging, AdaBoost, GradBoost, RandomForest };

// Shared container for the tree ensembles. predict_value means: class-1 vote
// fraction (bagging / random forest classification), weighted margin in
// [-1, 1] (AdaBoost), or the regression prediction (everything else).
struct Ensemble {
    EnsembleKind kind = EnsembleKind::Bagging;
    TreeTask task = TreeTask::Classification;
    std::vector<CartTree> members;
    std::vector<double> alphas;   // AdaBoost member weights, all > 0
    double f0 = 0.0;              // GradBoost initial prediction
    double learn_rate = 0.0;      // GradBoost shrinkage
    double oob_error_pct = std::numeric_limits<double>::quiet_NaN(); // random forest, cls
    double oob_mse = std::numeric_limits<double>::quiet_NaN();       // random forest, reg
    bool degenerate = false;      // AdaBoost stopped on its first round

    double predict_value(const Eigen::RowVectorXd& row) const;
    int predict_class(const Eigen::RowVectorXd& row) const;
    Eigen::VectorXd predict_values(const Eigen::MatrixXd& x) const;
    std::vector<int> predict_classes(const Eigen::MatrixXd& x) const;

    std::string to_sexpr(const std::vector<std::string>& feature_names) const;
};

// Bootstrap aggregation; bootstrap = false fits every member on the identity
// sample (members then differ only if the tree fit is randomized, which plain
// bagging's is not).
Ensemble fit_bagging(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TreeTask task,
                     int nbag, std::uint64_t seed, const CartControls& controls = {},
                     bool bootstrap = true);

// AdaBoost.M1 over depth-limited stumps (default depth 3). Stops when the
// weighted error reaches 0 (alpha capped) or 0.5 (round discarded unless it
// is the first, which is kept with a floor weight and flagged degenerate).
Ensemble fit_adaboost(const Eigen::MatrixXd& x, const std::vector<int>& y, int rounds,
                      CartControls controls = {5, 3, 1e-7});

// Least-squares gradient boosting: f0 = mean(y), each round fits the current
// residuals with a depth-limited tree (default depth 4).
Ensemble fit_gradboost(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int rounds = 100,
                       double learn_rate = 0.1, CartControls controls = {5, 4, 1e-7});

// Random forest with per-node feature subsampling (mtry) and out-of-bag
// error. Member m draws its bootstrap and node subsets from sub-seed
// mix_seed(seed, m), so results do not depend on fit order.
Ensemble fit_random_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TreeTask task,
                           int n_trees = 500, int mtry = 3, std::uint64_t seed = 0,
                           const CartControls& controls = {}, bool bootstrap = true);

} // namespace slotcast
