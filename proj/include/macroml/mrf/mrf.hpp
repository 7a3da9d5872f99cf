#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "macroml/common/linalg.hpp"
#include "macroml/common/rng.hpp"
#include "macroml/common/year_month.hpp"

namespace macroml::mrf {

/// 1 at `center`, zeta at distance 1, zeta^2 at distance 2, 0 elsewhere,
/// truncated to [0, T).
std::vector<double> podium_weights(int center, double zeta, int T);

/// argmin_b sum_t w_t (y_t - x_t b)^2 + lambda ||b_{1:}||^2 with x_t holding a
/// leading intercept column that is not penalized. Throws DataError when the
/// system is singular.
VectorXd ridge_wls(const MatrixXd& x1, const VectorXd& y, const VectorXd& w, double lambda);

struct MrfConfig {
    int trees = 500;
    double mtry_frac = 1.0 / 3.0;
    int min_leaf = 0;  // 0 = max(10, 2 (dim X~ + 1))
    double ridge_lambda = 0.1;
    double zeta = 0.5;
    int block_size = 12;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Checks ranges against dim X~ (intercept included) and fills in min_leaf.
MrfConfig resolve_config(MrfConfig cfg, int d);

/// Features tried per split: ceil(frac * p), at least 1.
int mrf_mtry(double frac, Index p);

struct MrfNode {
    int feature = -1;  // column of S; -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    VectorXd beta;  // leaves only: intercept first
    int count = 0;
};

struct MrfTree {
    std::vector<MrfNode> nodes;
    int leaf_of(const MatrixXd& s, Index row) const;
    const VectorXd& beta(const MatrixXd& s, Index row) const { return nodes[leaf_of(s, row)].beta; }
};

struct MrfModel {
    std::vector<MrfTree> trees;
    std::vector<std::vector<int>> oob;  // per tree, ascending training rows not drawn
    MrfConfig config;
    int d = 1;  // dim X~ + 1

    /// mean over trees of [1, X~_t] beta_leaf(S_t).
    VectorXd predict(const MatrixXd& s, const MatrixXd& xt) const;
    /// Per-row mean over trees where the row is out of bag (NaN if none).
    VectorXd oob_predict(const MatrixXd& s, const MatrixXd& xt) const;
    /// trees x d matrix of the leaf coefficients at S row `row`.
    MatrixXd tree_betas(const MatrixXd& s, Index row) const;
};

/// Prepends a column of ones.
MatrixXd with_intercept(const MatrixXd& xt);

/// Draws ceil(T / block) blocks of `block` consecutive rows with
/// rng.index(T - block + 1) for each start and truncates to T rows.
std::vector<int> block_bootstrap(int T, int block, Rng& rng);

struct SplitChoice {
    int feature = -1;  // -1: no admissible split
    double threshold = 0.0;
    double loss = 0.0;
};

/// Best split of the node holding training rows `rows` (duplicates allowed):
/// minimizes the sum of both children's ridge-WLS objectives, where each row
/// brings its podium neighbours (by original time index) into the child's
/// weighted fit. Draws the candidate features from rng. Exposed for tests.
SplitChoice mrf_split_search(const std::vector<int>& rows, const MatrixXd& s, const MatrixXd& xt, const VectorXd& y,
                             const MrfConfig& cfg, Rng& rng);

/// Tree b resamples blocks and draws feature subsets from
/// Rng(derive_seed(seed, {b})), the same streams the random forest uses.
MrfModel fit_mrf(const VectorXd& y, const MatrixXd& s, const MatrixXd& xt, const MrfConfig& cfg = {});

struct CoefficientPath {
    std::string name;
    VectorXd mean, lo68, hi68, lo90, hi90;
};

struct GtvpPaths {
    std::vector<YearMonth> dates;
    std::vector<CoefficientPath> coefficients;  // intercept, then X~ columns
    std::optional<CoefficientPath> persistence;  // sum of the y-lag coefficients
    std::optional<CoefficientPath> long_run_mean;  // NaN where |1 - persistence| < 0.05
};

/// Tree-wise coefficient quantiles at each S row. `lag_columns` lists the X~
/// columns (0-based, intercept excluded) holding lags of y.
GtvpPaths gtvp_extract(const MrfModel& m, const MatrixXd& s, const std::vector<YearMonth>& dates,
                       const std::vector<std::string>& xt_names, const std::vector<int>& lag_columns = {});

/// `date,coefficient,mean,lo68,hi68,lo90,hi90`
void write_gtvp_csv(std::ostream& os, const GtvpPaths& p);

enum class VIKind { OOB, OOS, BETA };

struct VIEntry {
    std::string feature;
    int column = 0;
    double gain = 0.0;  // percent, mean over permutations
    double sd = 0.0;    // across permutations
};

struct Holdout {
    MatrixXd s, xt;
    VectorXd y;
};

struct VIOptions {
    int permutations = 1;
    std::uint64_t seed = 0;
    /// Overrides the random permutations (tests use the identity).
    std::optional<std::vector<int>> fixed_permutation;
};

/// OOB/OOS: relative RMSE increase in percent after permuting an S column
/// (OOB on the training rows, OOS on the hold-out rows). BETA: RMS change in
/// the out-of-bag beta paths relative to their RMS variation over time, in
/// percent. Sorted by decreasing gain.
std::vector<VIEntry> mrf_variable_importance(const MrfModel& m, const MatrixXd& s, const MatrixXd& xt,
                                             const VectorXd& y, VIKind kind, const std::vector<std::string>& names,
                                             const VIOptions& opt = {}, const std::optional<Holdout>& holdout = {});

/// `rank,feature,gain_pct,sd`
void write_vi_csv(std::ostream& os, const std::vector<VIEntry>& vi);

}  // namespace macroml::mrf
