#pragma once

#include <cstdint>
#include <vector>

#include "macroml/common/linalg.hpp"

namespace macroml::linear {

/// K(a_i, b_j) = exp(-||a_i - b_j||^2 / (2 sigma^2)).
MatrixXd rbf_kernel(const MatrixXd& a, const MatrixXd& b, double sigma);

struct KrrFit {
    VectorXd alpha_weights;
    MatrixXd train_z;
    double sigma = 1.0;
    double lambda = 0.0;
};

/// Solves (K + lambda I) alpha = y with a pivoted LDL' factorization and two
/// rounds of iterative refinement. lambda = 0 is allowed when K is positive
/// definite. Throws std::runtime_error when the system cannot be solved.
KrrFit krr_fit(const MatrixXd& z, const VectorXd& y, double sigma, double lambda);

VectorXd krr_predict(const KrrFit& fit, const MatrixXd& z_new);

struct KrrTuneOptions {
    std::vector<double> sigma_quantiles{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> lambdas = log_grid_desc(1e2, 1e-6, 30);
    int folds = 5;
    std::uint64_t seed = 0;
};

struct KrrTuneResult {
    double sigma = 1.0;
    double lambda = 1.0;
    double cv_mse = 0.0;
};

/// Sorted pairwise Euclidean distances between distinct rows.
std::vector<double> pairwise_distances(const MatrixXd& z);

/// K-fold CV over sigma = quantiles of the pairwise training distances and
/// the lambda grid. Each (sigma, fold) needs one eigendecomposition. Ties go
/// to the larger lambda, then the larger sigma.
KrrTuneResult krr_tune(const MatrixXd& z, const VectorXd& y, const KrrTuneOptions& opt = {});

}  // namespace macroml::linear
