#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "macroml/common/linalg.hpp"
#include "macroml/common/rng.hpp"

namespace macroml::nn {

struct MlpConfig {
    std::vector<int> layers{32, 16};
    int epochs_max = 100;
    int batch = 32;
    double lr = 0.001;
    double l1 = 0.0001;
    int patience = 20;
    double validation_frac = 0.15;  // chronological tail used for early stopping
    std::uint64_t seed = 0;

    // nn_forecast only
    std::vector<double> lr_grid{0.001, 0.01};
    std::vector<double> l1_grid{0.001, 0.0001};
    int folds = 5;
    int ensemble = 5;
    bool distinct_member_seeds = true;
    unsigned threads = 1;
};

/// ReLU hidden layers and a linear scalar output. All parameters live in one
/// vector; layer k holds its (out x in) weight matrix, column major, followed
/// by its bias.
struct MlpModel {
    std::vector<int> sizes;  // inputs, hidden..., 1
    VectorXd theta;
    std::vector<double> train_mse;  // per epoch, no penalty
    std::vector<double> val_mse;
    int best_epoch = -1;  // 0-based index into the traces

    int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
    Eigen::Map<const MatrixXd> weight(int k) const;
    Eigen::Map<MatrixXd> weight(int k);
    Eigen::Map<const VectorXd> bias(int k) const;
    Eigen::Map<VectorXd> bias(int k);
    /// True where theta holds a weight (penalized), false for biases.
    std::vector<bool> weight_mask() const;

    VectorXd predict(const MatrixXd& z) const;
};

/// He-style uniform init: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases 0.
/// With zero_output the output layer starts at 0, so the untrained net is
/// the constant predictor; mlp_train uses this.
MlpModel mlp_init(int inputs, const std::vector<int>& hidden, Rng& rng, bool zero_output = false);

/// mean((f(z) - y)^2) + l1 * sum |weights|.
double mlp_loss(const MlpModel& m, const MatrixXd& z, const VectorXd& y, double l1);

/// Gradient of mlp_loss by backpropagation (ReLU'(0) = 0, sign(0) = 0).
VectorXd mlp_gradient(const MlpModel& m, const MatrixXd& z, const VectorXd& y, double l1);

struct GradCheck {
    double max_rel_error = 0.0;
    int checked = 0;
    int skipped = 0;  // ReLU pattern changes within +-step, or |w| <= 1e-3 under l1
};

/// Central differences with the given step on every parameter. The relative
/// error is |g - g_fd| / max(|g|, |g_fd|, 1e-8).
GradCheck finite_diff_gradcheck(const MlpModel& m, const MatrixXd& z, const VectorXd& y, double l1,
                                double step = 1e-5);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8, Keras update form) on shuffled
/// mini-batches of the leading rows; the last validation_frac rows drive early
/// stopping and the best weights are restored. Throws ConvergenceError when
/// the loss becomes non-finite.
MlpModel mlp_train(const MatrixXd& z, const VectorXd& y, const MlpConfig& cfg);

/// `epoch,train_mse,val_mse`
void write_trace_csv(std::ostream& os, const MlpModel& m);

struct NnForecast {
    VectorXd prediction;
    double lr = 0.0;
    double l1 = 0.0;
    std::vector<double> cv_mse;  // lr-major over the grid
};

/// Standardizes inputs and centers y, picks (lr, l1) by K-fold CV (ties to
/// the earlier grid entry), then averages an ensemble trained on all rows.
NnForecast nn_forecast(const MatrixXd& z_train, const VectorXd& y, const MatrixXd& z_next, const MlpConfig& cfg);

}  // namespace macroml::nn
