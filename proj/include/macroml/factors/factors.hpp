#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "macroml/common/year_month.hpp"
#include "macroml/panel/panel.hpp"

namespace macroml::factors {

/// Principal-component factors of a standardized T x N matrix X.
/// F'F/T = I_k and Lambda = X'F/T. `spectrum` holds every eigenvalue of
/// X'X/(NT), descending; `eigenvalues` is its first k entries.
struct FactorModel {
    Eigen::MatrixXd F;
    Eigen::MatrixXd loadings;
    Eigen::VectorXd eigenvalues;
    Eigen::VectorXd spectrum;
    int k = 0;

    Eigen::MatrixXd common_component() const { return F * loadings.transpose(); }
};

/// Each factor is signed so that the series with the largest |loading| (lowest
/// index on ties) loads positively on it.
FactorModel extract_factors(const Eigen::MatrixXd& x, int k);

struct PcP2Result {
    int k = 0;
    std::vector<double> v;          // V(k), k = 0..kmax
    std::vector<double> criterion;  // PC_p2(k), k = 1..kmax (index 0 unused, NaN)
};

/// Bai-Ng PC_p2 with sigma^2 = V(kmax), searched over k = 1..kmax. Ties go to
/// the smaller k. Requires 1 <= kmax <= min(T, N) / 2.
PcP2Result pc_p2(const Eigen::MatrixXd& x, int kmax = 15);

struct FactorDiagnostics {
    Eigen::MatrixXd mr2;      // N x k
    Eigen::VectorXd avg_mr2;  // k
    double total_r2 = 0.0;
};

/// Incremental R^2 of factor j for series i, from regressions on an intercept
/// and F_1..F_j.
FactorDiagnostics marginal_r2(const Eigen::MatrixXd& x, const FactorModel& fm);

struct FactorCount {
    YearMonth date;
    int k = 0;
    double total_r2 = 0.0;
};

/// For every month from `start` to the panel end: balance (if needed) and
/// standardize the sub-panel ending that month, select k by PC_p2, and report
/// the implied total R^2. Needs at least 24 rows up to `start`.
std::vector<FactorCount> recursive_factor_count(const panel::Panel& p, YearMonth start, int kmax = 15,
                                                unsigned threads = 1);

/// Long CSV `factor,avg_mr2,rank,series,group,mr2` with the `top` series per
/// factor ranked by mR^2.
void write_factor_table_csv(std::ostream& out, const panel::Panel& p, const FactorDiagnostics& d, int top = 10);

/// Fixed-width text grid, three factors per block: a header line
/// `mR2(j) avg G#` then `top` rows of `series mr2 group`.
void write_factor_table_text(std::ostream& out, const panel::Panel& p, const FactorDiagnostics& d, int top = 10);

/// `series,factor,mr2` with N x k rows.
void write_mr2_long_csv(std::ostream& out, const panel::Panel& p, const FactorDiagnostics& d);

}  // namespace macroml::factors
