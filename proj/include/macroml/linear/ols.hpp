#pragma once

#include <span>
#include <string>
#include <vector>

#include "macroml/common/linalg.hpp"

namespace macroml::linear {

/// Linear predictor on the original feature scale: beta[0] is the intercept,
/// beta[j + 1] multiplies column j. `means`/`stds` record the standardization
/// used while fitting.
struct LinearFit {
    VectorXd beta;
    std::vector<std::string> column_names;
    VectorXd means;
    VectorXd stds;

    VectorXd predict(const MatrixXd& z) const;
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& z) const;
    /// JSON text {"intercept": b0, "coefficients": {name: b, ...}}.
    std::string to_json() const;
};

/// Least squares with an intercept. Columns are standardized before a
/// column-pivoted QR; a rank-deficient design throws DataError naming the
/// collinear columns.
LinearFit ols(const MatrixXd& z, const VectorXd& y, std::vector<std::string> names = {});

/// Gaussian BIC, T ln(SSR / T) + q ln T.
double bic(double ssr, Index n, Index q);

struct ArFit {
    LinearFit fit;
    int p = 0;
    std::vector<double> bic;  // bic[p - 1] for p = 1..pmax
};

/// Regresses `target` on the first p columns of `ylags` (y_t, y_{t-1}, ...)
/// for p = 1..pmax over the same rows and keeps the BIC minimizer (smaller p
/// on ties).
ArFit ar_bic(const MatrixXd& ylags, const VectorXd& target, int pmax = 6);

/// One-step AR on a single series: y_{t+1} on y_t .. y_{t-p+1}.
ArFit ar_bic(std::span<const double> y, int pmax = 6);

struct ArdiFit {
    LinearFit fit;
    int py = 0;
    int pf = 0;
    int k = 0;
    double bic = 0.0;
    std::vector<int> columns;  // selected columns of the input design
};

/// Exhaustive BIC search over P_y = 1..py_max, P_f = 1..pf_max and
/// k = 1..k_max factors. `design` must contain columns named y_L{l} and
/// F{j}_L{l} (as produced by the ARDI recipe). Ties favor the smaller model.
ArdiFit ardi_bic(const MatrixXd& design, std::span<const std::string> names, const VectorXd& target, int py_max = 6,
                 int pf_max = 6, int k_max = 8);

}  // namespace macroml::linear
