#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace macroml {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// LDL' solve of a small symmetric positive definite system, no pivoting.
/// Returns nullopt when a pivot falls below `rel_tol` times the largest
/// diagonal entry. A 1x1 system is solved as b/a.
std::optional<VectorXd> solve_spd_small(const MatrixXd& a, const VectorXd& b, double rel_tol = 1e-12);

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

double mean(std::span<const double> x);

/// Logarithmically spaced grid from hi down to lo (inclusive), `n` points.
std::vector<double> log_grid_desc(double hi, double lo, int n);

}  // namespace macroml

namespace macroml {

/// Column means and population standard deviations (divisor n). Columns with
/// zero spread get std 1 and constant[j] = true.
struct ColumnScaling {
    VectorXd mean;
    VectorXd std;
    std::vector<bool> constant;

    MatrixXd apply(const MatrixXd& x) const;
};

ColumnScaling column_scaling(const MatrixXd& x);

}  // namespace macroml
