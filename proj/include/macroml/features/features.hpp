#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "macroml/common/year_month.hpp"

namespace macroml::features {

/// Direct h-step target indexed by origin date: values[t] is the average
/// change from t to t+h, NaN when either end is unobserved or out of sample.
struct TargetSeries {
    std::string target_id;
    int h = 1;
    bool use_log = true;
    std::vector<YearMonth> dates;
    std::vector<double> values;
};

/// use_log: (1/h) ln(Y_{t+h} / Y_t); otherwise (1/h) (Y_{t+h} - Y_t).
/// Throws DataError for a non-positive level under logs and
/// std::invalid_argument when h < 1 or h >= length.
TargetSeries build_target(const std::string& id, std::span<const YearMonth> dates, std::span<const double> levels,
                          int h, bool use_log);

/// One-period change of the level series (NaN in the first slot). This is
/// the `y` whose lags enter every design.
std::vector<double> one_period_change(std::span<const double> levels, bool use_log);

/// Input sets of the model registry.
enum class Recipe {
    None,      // no regressors
    AR,        // y lags
    ARDI,      // y lags, factor lags
    Data,      // y lags, factor lags, X
    DataMarx,  // y lags, factor lags, X, MARX
};

const char* recipe_name(Recipe r);

struct FeatureSet {
    Recipe recipe = Recipe::Data;
    int py = 6;
    int pf = 6;
    int k = 8;
    int p_marx = 6;
    bool include_X = true;
    bool include_MARX = false;

    /// Defaults for a recipe; the booleans follow from it.
    static FeatureSet for_recipe(Recipe r);
    void validate() const;  // throws std::invalid_argument
    /// Py + k Pf + N 1{X} + N P_marx 1{MARX}, with the factor block present
    /// only for ARDI and richer recipes.
    int column_count(int n_series) const;
};

struct DesignMatrix {
    std::vector<YearMonth> rows;
    std::vector<std::string> names;
    Eigen::MatrixXd values;

    int column(const std::string& name) const;  // -1 when absent
    int row(const YearMonth& date) const;       // -1 when absent
};

/// Lags 0..P-1 of every column, grouped by column: `{name}_L0 .. {name}_L{P-1}`.
/// The first P-1 dates are dropped. Throws std::invalid_argument unless 1 <= P < T.
DesignMatrix build_lags(const Eigen::MatrixXd& x, std::span<const std::string> names,
                        std::span<const YearMonth> dates, int P);

/// Moving averages of depth p = 1..P of every column: `MARX_{name}_{p}` is
/// (1/p) (x_t + ... + x_{t-p+1}). Same row and argument contract as build_lags.
DesignMatrix marx(const Eigen::MatrixXd& x, std::span<const std::string> names, std::span<const YearMonth> dates,
                  int P);

/// Inverse rotation: recovers (x_t .. x_{t-P+1}) from (MARX_1 .. MARX_P).
Eigen::VectorXd marx_inverse(const Eigen::VectorXd& m);

/// Columns in the fixed order [y lags | factor lags | X | MARX], names
/// `y_L*`, `F{j}_L*`, `{id}_L0`, `MARX_{id}_{p}`. All blocks share `dates`
/// (length T); rows with any unavailable or missing feature are dropped.
/// Throws std::invalid_argument when F has fewer than k columns or X is
/// needed but absent.
DesignMatrix assemble_design(const FeatureSet& spec, std::span<const YearMonth> dates, std::span<const double> y,
                             const Eigen::MatrixXd& F, const Eigen::MatrixXd& X,
                             std::span<const std::string> x_names);

void write_design_csv(std::ostream& out, const DesignMatrix& d);

}  // namespace macroml::features
