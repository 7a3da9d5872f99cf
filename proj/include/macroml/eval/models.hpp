#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "macroml/common/linalg.hpp"
#include "macroml/features/features.hpp"
#include "macroml/mrf/mrf.hpp"
#include "macroml/nn/mlp.hpp"

namespace macroml::eval {

enum class Estimator {
    ArBic,
    RandomWalk,
    ArdiBic,
    Lasso,
    Ridge,
    ElasticNet,
    Krr,
    RandomForest,
    Boosting,
    Mrf,
    NeuralNet,
};

/// One forecasting model: estimator, input recipe and, for MRF variants,
/// the linear part (y lags 0..mrf_y_lags-1 and factors 1..mrf_factors at lag 0).
struct ModelSpec {
    std::string name;
    Estimator estimator = Estimator::ArBic;
    features::Recipe recipe = features::Recipe::AR;
    int mrf_y_lags = 0;
    int mrf_factors = 0;
    std::string tuning;  // human-readable
};

/// The 20 models, in table order. AR,BIC is the benchmark.
const std::vector<ModelSpec>& model_registry();

/// Throws DataError for an unknown name.
const ModelSpec& find_model(std::string_view name);

/// Registry entries in the given order, or all when `names` is empty.
std::vector<ModelSpec> select_models(std::span<const std::string> names);

/// Knobs of the estimators. Defaults are the full-size settings.
struct ModelSettings {
    int folds = 5;
    int forest_trees = 500;
    double enet_alpha_step = 0.01;
    int enet_lambdas = 100;
    double enet_tol = 1e-5;  // coordinate descent stop, relative to sd(y)
    std::vector<double> boost_etas{0.01, 0.05, 0.1, 0.3};
    std::vector<int> boost_steps{25, 50, 100, 200, 500};
    mrf::MrfConfig mrf;
    nn::MlpConfig nn;
};

/// Tuned hyperparameters, reused between retuning origins.
struct Hyper {
    bool set = false;
    int py = 0, pf = 0, k = 0;   // AR / ARDI orders
    double alpha = 0.0, lambda = 0.0;  // enet, krr lambda
    double sigma = 0.0;          // krr
    double eta = 0.0;            // boosting
    int steps = 0;
    double lr = 0.0, l1 = 0.0;  // nn
};

struct ModelForecast {
    double forecast = 0.0;
    Hyper hyper;
};

/// Fits `spec` on (z, y) and predicts at `z_next` (one row). With
/// hyper.set the hyperparameters are used as given, otherwise they are
/// tuned on (z, y) first. `names` are the design column names.
ModelForecast fit_and_forecast(const ModelSpec& spec, const MatrixXd& z, const VectorXd& y,
                               std::span<const std::string> names, const RowVectorXd& z_next,
                               const ModelSettings& settings, std::uint64_t seed, const Hyper& hyper = {});

}  // namespace macroml::eval
