#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "macroml/common/linalg.hpp"
#include "macroml/linear/ols.hpp"

namespace macroml::linear {

/// Elastic net on standardized features (population std, so z'z/T = 1):
///   (1/2T) ||y - b0 - Z b||^2 + lambda (alpha ||b||_1 + (1 - alpha)/2 ||b||_2^2)
/// The intercept is unpenalized; coefficients are reported on the original scale.
struct EnetConfig {
    double alpha = 1.0;
    double lambda = 0.0;
    double tol = 1e-10;  // on the largest standardized coefficient change, relative to sd(y)
    int max_iter = 100000;
};

/// max_j |z_j'y| / (T alpha) for standardized Z and centered y: the smallest
/// lambda at which every coefficient is zero. Throws for alpha <= 0.
double lambda_max(const MatrixXd& z_std, const VectorXd& y_centered, double alpha);

/// Cyclic coordinate descent with soft-thresholding (alpha > 0); closed-form
/// ridge for alpha = 0. Constant columns get a zero coefficient. Throws
/// ConvergenceError after max_iter sweeps.
LinearFit enet_cd(const MatrixXd& z, const VectorXd& y, const EnetConfig& cfg, std::vector<std::string> names = {});

/// As enet_cd at the last lambda, reached by warm starts along `lambdas`
/// (descending). Much faster than a cold start at small lambda when p > n.
LinearFit enet_fit_path(const MatrixXd& z, const VectorXd& y, double alpha, const std::vector<double>& lambdas,
                        double tol = 1e-10, int max_iter = 100000, std::vector<std::string> names = {},
                        bool early_stop = false);

/// {step, 2 step, ..., 1}.
std::vector<double> alpha_grid(double step = 0.01);

struct EnetTuneOptions {
    std::vector<double> alphas = alpha_grid();
    int n_lambda = 100;
    double lambda_ratio = 1e-4;  // smallest lambda = ratio * lambda_max
    int folds = 5;
    std::uint64_t seed = 0;
    double tol = 1e-7;
    bool early_stop = true;  // see enet_path
    unsigned threads = 1;
};

struct EnetTuneResult {
    EnetConfig config;
    double cv_mse = 0.0;
    int lambda_index = 0;  // position in the selected alpha's grid (0 = lambda_max)
    std::vector<double> lambdas;
};

/// K-fold CV over alphas x a log-spaced lambda grid from lambda_max(alpha)
/// down to ratio * lambda_max(alpha), computed on the full sample. alpha = 0
/// uses the grid of alpha = 0.001. Ties go to the larger lambda, then the
/// larger alpha.
EnetTuneResult enet_tune(const MatrixXd& z, const VectorXd& y, const EnetTuneOptions& opt = {});

/// Coefficients (standardized scale, one column per lambda) along a lambda
/// path with warm starts. With early_stop the path ends once R^2 exceeds
/// 0.999 or grows by less than 1e-5 relative (after at least five lambdas,
/// as glmnet does); later columns repeat the last solution.
MatrixXd enet_path(const MatrixXd& z_std, const VectorXd& y_centered, double alpha, const std::vector<double>& lambdas,
                   double tol = 1e-10, int max_iter = 100000, bool early_stop = false);

}  // namespace macroml::linear
