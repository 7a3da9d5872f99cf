#pragma once

#include <string>
#include <vector>

#include "macroml/eval/poos.hpp"

namespace macroml::eval {

/// A `run` configuration. Relative paths are resolved against the config
/// file's directory.
struct RunConfig {
    std::string manifest;
    std::string data;
    std::string output;
    ExperimentPlan plan;
};

/// JSON object with keys manifest, data, output, targets (ids or
/// {"id", "log", "end"}), horizons, models, exclude_models, poos_start,
/// poos_end, retune_every, factors, min_observations, seed, threads and
/// settings {folds, forest_trees, enet_alpha_step, enet_lambdas, enet_tol,
/// boost_etas, boost_steps, mrf {...}, nn {...}}. Unknown keys, bad values
/// and unknown models raise DataError.
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir = ".");
RunConfig read_run_config(const std::string& path);

/// The resolved configuration, in the same schema.
std::string run_config_json(const RunConfig& cfg);

}  // namespace macroml::eval
