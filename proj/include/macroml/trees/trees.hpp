#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "macroml/common/linalg.hpp"
#include "macroml/common/rng.hpp"

namespace macroml::trees {

/// Internal nodes have feature >= 0 and send x[feature] <= threshold left.
/// Leaves have feature = -1 and predict `value`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int count = 0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    int min_node = 1;
    int mtry = 0;

    int leaf_of(const MatrixXd& z, Index row) const;
    double predict_row(const MatrixXd& z, Index row) const { return nodes[leaf_of(z, row)].value; }
    VectorXd predict(const MatrixXd& z) const;
    int leaf_count() const;
    int depth() const;
};

struct TreeOptions {
    int min_node = 3;   // every leaf holds at least this many rows
    int mtry = 0;       // features tried per split; 0 = all
    int max_depth = 0;  // 0 = unlimited
};

/// Greedy CART on rows `rows` (duplicates allowed, as in a bootstrap sample).
/// Candidate thresholds are midpoints between consecutive distinct values;
/// ties in children SSE go to the lowest feature, then the smallest value.
/// Adds each split's SSE reduction to (*gain)[feature] when gain is given.
RegressionTree fit_tree(const MatrixXd& z, const VectorXd& y, std::span<const int> rows, const TreeOptions& opt,
                        Rng& rng, VectorXd* gain = nullptr);
RegressionTree fit_tree(const MatrixXd& z, const VectorXd& y, const TreeOptions& opt, Rng& rng);

/// Rows of z with their per-column sort order, for growing several trees on
/// the same rows (boosting refits one design at every step).
struct PresortedRows {
    std::vector<int> rows;
    MatrixXd z;              // z(rows, :)
    std::vector<int> order;  // (p + 1) x rows.size()
};

PresortedRows presort_rows(const MatrixXd& z, std::span<const int> rows);
/// Same tree as fit_tree(z, y, rows, ...); y is indexed by the original rows.
RegressionTree fit_tree(const PresortedRows& pre, const VectorXd& y, const TreeOptions& opt, Rng& rng,
                        VectorXd* gain = nullptr);

/// ceil(p / 3), at least 1.
int default_mtry(Index p);

struct ForestOptions {
    int trees = 500;
    int min_node = 3;
    int mtry = 0;  // 0 = default_mtry
    bool bootstrap = true;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct ForestModel {
    std::vector<RegressionTree> trees;
    std::vector<std::vector<int>> oob;  // per tree, ascending rows not drawn
    std::uint64_t seed = 0;
    VectorXd split_gain;  // mean SSE reduction per feature, averaged over trees

    VectorXd predict(const MatrixXd& z) const;
    /// Per-row average over the trees where the row is out of bag (NaN if none).
    VectorXd oob_predict(const MatrixXd& z) const;
};

/// Tree b draws its bootstrap sample (T draws with replacement) and its
/// feature subsets from Rng(derive_seed(seed, {b})).
ForestModel fit_forest(const MatrixXd& z, const VectorXd& y, const ForestOptions& opt = {});

/// Relative OOB RMSE increase in percent when column j is permuted.
VectorXd oob_permutation_importance(const ForestModel& f, const MatrixXd& z, const VectorXd& y, std::uint64_t seed);

/// `feature,split_gain,oob_permutation_pct` sorted by feature order.
void write_importance_csv(std::ostream& os, const std::vector<std::string>& names, const VectorXd& split_gain,
                          const VectorXd& permutation);

struct BoostOptions {
    double eta = 0.1;
    int n_steps = 100;
    int max_depth = 10;
    int min_node = 3;
};

struct BoostModel {
    double init = 0.0;
    double eta = 0.0;
    std::vector<RegressionTree> trees;
    std::vector<double> train_mse;  // after init and after each step

    /// Uses the first `steps` trees (all when steps < 0).
    VectorXd predict(const MatrixXd& z, int steps = -1) const;
};

/// Square-loss gradient boosting: f_0 = mean(y), f_{m+1} = f_m + eta * tree fit
/// to y - f_m with all features eligible at every split.
BoostModel fit_boost(const MatrixXd& z, const VectorXd& y, const BoostOptions& opt);

struct BoostTuneOptions {
    std::vector<double> etas{0.01, 0.05, 0.1, 0.3};
    std::vector<int> steps{25, 50, 100, 200, 500};
    int folds = 5;
    int max_depth = 10;
    int min_node = 3;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct BoostTuneResult {
    double eta = 0.0;
    int n_steps = 0;
    double cv_mse = 0.0;
};

/// K-fold grid search. Ties go to fewer steps, then the smaller eta.
BoostTuneResult boost_tune(const MatrixXd& z, const VectorXd& y, const BoostTuneOptions& opt = {});

}  // namespace macroml::trees
