#include "macroml/eval/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "macroml/common/error.hpp"
#include "macroml/common/parallel.hpp"

namespace macroml::eval {

namespace {

using nlohmann::json;

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw DataError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw DataError(where + ": unknown key '" + k + "'");
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw DataError(where + ": bad value for '" + key + "'");
    }
}

template <class T>
void maybe(const json& j, const std::string& key, T& out, const std::string& where) {
    if (j.contains(key)) out = get<T>(j, key, where);
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (std::filesystem::path(base) / path).lexically_normal().string();
}

void parse_mrf(const json& j, mrf::MrfConfig& m) {
    const std::string w = "settings.mrf";
    only_keys(j, {"trees", "mtry_frac", "min_leaf", "ridge_lambda", "zeta", "block_size"}, w);
    maybe(j, "trees", m.trees, w);
    maybe(j, "mtry_frac", m.mtry_frac, w);
    maybe(j, "min_leaf", m.min_leaf, w);
    maybe(j, "ridge_lambda", m.ridge_lambda, w);
    maybe(j, "zeta", m.zeta, w);
    maybe(j, "block_size", m.block_size, w);
}

void parse_nn(const json& j, nn::MlpConfig& c) {
    const std::string w = "settings.nn";
    only_keys(j, {"layers", "epochs_max", "batch", "patience", "validation_frac", "lr_grid", "l1_grid", "folds", "ensemble"}, w);
    maybe(j, "layers", c.layers, w);
    maybe(j, "epochs_max", c.epochs_max, w);
    maybe(j, "batch", c.batch, w);
    maybe(j, "patience", c.patience, w);
    maybe(j, "validation_frac", c.validation_frac, w);
    maybe(j, "lr_grid", c.lr_grid, w);
    maybe(j, "l1_grid", c.l1_grid, w);
    maybe(j, "folds", c.folds, w);
    maybe(j, "ensemble", c.ensemble, w);
}

void parse_settings(const json& j, ModelSettings& s) {
    const std::string w = "settings";
    only_keys(j, {"folds", "forest_trees", "enet_alpha_step", "enet_lambdas", "enet_tol", "boost_etas", "boost_steps", "mrf", "nn"}, w);
    maybe(j, "folds", s.folds, w);
    maybe(j, "forest_trees", s.forest_trees, w);
    maybe(j, "enet_alpha_step", s.enet_alpha_step, w);
    maybe(j, "enet_lambdas", s.enet_lambdas, w);
    maybe(j, "enet_tol", s.enet_tol, w);
    maybe(j, "boost_etas", s.boost_etas, w);
    maybe(j, "boost_steps", s.boost_steps, w);
    if (j.contains("mrf")) parse_mrf(j["mrf"], s.mrf);
    if (j.contains("nn")) parse_nn(j["nn"], s.nn);
    if (s.folds < 2 || s.forest_trees < 1 || s.enet_lambdas < 1 || !(s.enet_alpha_step > 0.0) || s.mrf.trees < 1 ||
        s.nn.ensemble < 1 || s.boost_etas.empty() || s.boost_steps.empty())
        throw DataError("settings: value out of range");
}

YearMonth parse_date(const json& j, const std::string& key) {
    return YearMonth::parse(get<std::string>(j, key, "config"));
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("config: invalid JSON: ") + e.what());
    }
    const std::string w = "config";
    only_keys(j,
              {"manifest", "data", "output", "targets", "horizons", "models", "exclude_models", "poos_start", "poos_end",
               "retune_every", "factors", "min_observations", "seed", "threads", "settings"},
              w);
    RunConfig cfg;
    cfg.manifest = resolve(base_dir, get<std::string>(j, "manifest", w));
    cfg.data = resolve(base_dir, get<std::string>(j, "data", w));
    cfg.output = j.contains("output") ? resolve(base_dir, get<std::string>(j, "output", w)) : std::string("out");

    auto& p = cfg.plan;
    if (!j.contains("targets") || !j["targets"].is_array() || j["targets"].empty())
        throw DataError("config: 'targets' must be a non-empty array");
    for (const auto& t : j["targets"]) {
        TargetSpec ts;
        if (t.is_string()) {
            ts.id = t.get<std::string>();
        } else {
            only_keys(t, {"id", "log", "end"}, "config.targets");
            ts.id = get<std::string>(t, "id", "config.targets");
            if (t.contains("log")) ts.use_log = get<bool>(t, "log", "config.targets");
            if (t.contains("end")) ts.end = parse_date(t, "end");
        }
        p.targets.push_back(ts);
    }
    maybe(j, "horizons", p.horizons, w);
    std::vector<std::string> models, exclude;
    maybe(j, "models", models, w);
    maybe(j, "exclude_models", exclude, w);
    p.models = select_models(models);
    for (const auto& e : exclude) {
        find_model(e);
        std::erase_if(p.models, [&](const ModelSpec& m) { return m.name == e; });
    }
    if (j.contains("poos_start")) p.poos_start = parse_date(j, "poos_start");
    if (j.contains("poos_end")) p.poos_end = parse_date(j, "poos_end");
    maybe(j, "retune_every", p.retune_every, w);
    maybe(j, "factors", p.factors, w);
    maybe(j, "min_observations", p.min_observations, w);
    maybe(j, "seed", p.seed, w);
    p.threads = default_threads();
    maybe(j, "threads", p.threads, w);
    if (p.threads == 0) p.threads = default_threads();
    if (j.contains("settings")) parse_settings(j["settings"], p.settings);
    if (p.models.empty()) throw DataError("config: no models left after exclusions");
    return cfg;
}

RunConfig read_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_run_config(ss.str(), dir.empty() ? "." : dir);
}

std::string run_config_json(const RunConfig& cfg) {
    const auto& p = cfg.plan;
    json j;
    j["manifest"] = cfg.manifest;
    j["data"] = cfg.data;
    j["output"] = cfg.output;
    j["targets"] = json::array();
    for (const auto& t : p.targets) {
        json tj{{"id", t.id}};
        if (t.use_log) tj["log"] = *t.use_log;
        if (t.end) tj["end"] = t.end->str();
        j["targets"].push_back(tj);
    }
    j["horizons"] = p.horizons;
    j["models"] = json::array();
    for (const auto& m : p.models) j["models"].push_back(m.name);
    j["poos_start"] = p.poos_start.str();
    if (p.poos_end) j["poos_end"] = p.poos_end->str();
    j["retune_every"] = p.retune_every;
    j["factors"] = p.factors;
    j["min_observations"] = p.min_observations;
    j["seed"] = p.seed;
    j["threads"] = p.threads;
    const auto& s = p.settings;
    j["settings"] = {{"folds", s.folds},
                     {"forest_trees", s.forest_trees},
                     {"enet_alpha_step", s.enet_alpha_step},
                     {"enet_lambdas", s.enet_lambdas},
                     {"enet_tol", s.enet_tol},
                     {"boost_etas", s.boost_etas},
                     {"boost_steps", s.boost_steps},
                     {"mrf",
                      {{"trees", s.mrf.trees},
                       {"mtry_frac", s.mrf.mtry_frac},
                       {"min_leaf", s.mrf.min_leaf},
                       {"ridge_lambda", s.mrf.ridge_lambda},
                       {"zeta", s.mrf.zeta},
                       {"block_size", s.mrf.block_size}}},
                     {"nn",
                      {{"layers", s.nn.layers},
                       {"epochs_max", s.nn.epochs_max},
                       {"batch", s.nn.batch},
                       {"patience", s.nn.patience},
                       {"validation_frac", s.nn.validation_frac},
                       {"lr_grid", s.nn.lr_grid},
                       {"l1_grid", s.nn.l1_grid},
                       {"folds", s.nn.folds},
                       {"ensemble", s.nn.ensemble}}}};
    return j.dump(2) + "\n";
}

}  // namespace macroml::eval
