#include "macroml/eval/models.hpp"

#include <algorithm>
#include <stdexcept>

#include "macroml/common/error.hpp"
#include "macroml/linear/enet.hpp"
#include "macroml/linear/krr.hpp"
#include "macroml/linear/ols.hpp"
#include "macroml/trees/trees.hpp"

namespace macroml::eval {

using features::Recipe;

const std::vector<ModelSpec>& model_registry() {
    static const std::vector<ModelSpec> registry{
        {"AR,BIC", Estimator::ArBic, Recipe::AR, 0, 0, "BIC over P_y = 1..6"},
        {"RW", Estimator::RandomWalk, Recipe::None, 0, 0, "none"},
        {"ARDI,BIC", Estimator::ArdiBic, Recipe::ARDI, 0, 0, "BIC over P_y, P_f = 1..6, k = 1..8"},
        {"LASSO", Estimator::Lasso, Recipe::Data, 0, 0, "K-fold CV over lambda"},
        {"LASSO+MARX", Estimator::Lasso, Recipe::DataMarx, 0, 0, "K-fold CV over lambda"},
        {"RIDGE", Estimator::Ridge, Recipe::Data, 0, 0, "K-fold CV over lambda"},
        {"RIDGE+MARX", Estimator::Ridge, Recipe::DataMarx, 0, 0, "K-fold CV over lambda"},
        {"E-NET", Estimator::ElasticNet, Recipe::Data, 0, 0, "K-fold CV over alpha x lambda"},
        {"E-NET+MARX", Estimator::ElasticNet, Recipe::DataMarx, 0, 0, "K-fold CV over alpha x lambda"},
        {"KRR", Estimator::Krr, Recipe::ARDI, 0, 0, "K-fold CV over sigma x lambda"},
        {"RF", Estimator::RandomForest, Recipe::Data, 0, 0, "none"},
        {"RF+MARX", Estimator::RandomForest, Recipe::DataMarx, 0, 0, "none"},
        {"Boosting", Estimator::Boosting, Recipe::Data, 0, 0, "K-fold CV over eta x steps"},
        {"Boosting+MARX", Estimator::Boosting, Recipe::DataMarx, 0, 0, "K-fold CV over eta x steps"},
        {"ARRF(2)", Estimator::Mrf, Recipe::DataMarx, 2, 0, "none"},
        {"ARRF(6)", Estimator::Mrf, Recipe::DataMarx, 6, 0, "none"},
        {"FA-ARRF(2,2)", Estimator::Mrf, Recipe::DataMarx, 2, 2, "none"},
        {"FA-ARRF(2,4)", Estimator::Mrf, Recipe::DataMarx, 2, 4, "none"},
        {"NN-ARDI", Estimator::NeuralNet, Recipe::Data, 0, 0, "K-fold CV over lr x l1"},
        {"NN-ARDI+MARX", Estimator::NeuralNet, Recipe::DataMarx, 0, 0, "K-fold CV over lr x l1"},
    };
    return registry;
}

const ModelSpec& find_model(std::string_view name) {
    for (const auto& m : model_registry())
        if (m.name == name) return m;
    throw DataError("unknown model '" + std::string(name) + "'");
}

std::vector<ModelSpec> select_models(std::span<const std::string> names) {
    if (names.empty()) return model_registry();
    std::vector<ModelSpec> out;
    for (const auto& n : names) {
        const auto& m = find_model(n);
        if (std::none_of(out.begin(), out.end(), [&](const ModelSpec& o) { return o.name == m.name; })) out.push_back(m);
    }
    return out;
}

namespace {

int column_of(std::span<const std::string> names, const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("design lacks column " + name);
    return static_cast<int>(it - names.begin());
}

int factor_count(std::span<const std::string> names) {
    int k = 0;
    while (std::find(names.begin(), names.end(), "F" + std::to_string(k + 1) + "_L0") != names.end()) ++k;
    return k;
}

std::vector<int> ardi_columns(std::span<const std::string> names, int py, int pf, int k) {
    std::vector<int> cols;
    for (int l = 0; l < py; ++l) cols.push_back(column_of(names, "y_L" + std::to_string(l)));
    for (int j = 1; j <= k; ++j)
        for (int l = 0; l < pf; ++l) cols.push_back(column_of(names, "F" + std::to_string(j) + "_L" + std::to_string(l)));
    return cols;
}

ModelForecast linear_forecast(const ModelSpec& spec, const MatrixXd& z, const VectorXd& y,
                              std::span<const std::string> names, const RowVectorXd& zn, const ModelSettings& st,
                              std::uint64_t seed, Hyper h) {
    linear::EnetTuneOptions opt;
    opt.tol = st.enet_tol;
    if (!h.set) {
        if (spec.estimator == Estimator::Lasso) opt.alphas = {1.0};
        else if (spec.estimator == Estimator::Ridge) opt.alphas = {0.0};
        else opt.alphas = linear::alpha_grid(st.enet_alpha_step);
        opt.n_lambda = st.enet_lambdas;
        opt.folds = st.folds;
        opt.seed = seed;
        const auto r = linear::enet_tune(z, y, opt);
        h.set = true;
        h.alpha = r.config.alpha;
        h.lambda = r.config.lambda;
    }
    // warm starts from the top of a grid like the one searched
    const auto sc = column_scaling(z);
    MatrixXd zs = sc.apply(z);
    for (std::size_t j = 0; j < sc.constant.size(); ++j)
        if (sc.constant[j]) zs.col(static_cast<Index>(j)).setZero();
    const VectorXd yc = y.array() - y.mean();
    const double lmax = std::max(linear::lambda_max(zs, yc, h.alpha > 0.0 ? h.alpha : 0.001), h.lambda);
    std::vector<double> path;
    if (h.alpha > 0.0)
        for (double l : log_grid_desc(lmax, lmax * opt.lambda_ratio, st.enet_lambdas))
            if (l > h.lambda) path.push_back(l);
    path.push_back(h.lambda);
    const auto fit = linear::enet_fit_path(z, y, h.alpha, path, opt.tol, 100000, {names.begin(), names.end()}, true);
    return {fit.predict_row(zn), h};
}

}  // namespace

ModelForecast fit_and_forecast(const ModelSpec& spec, const MatrixXd& z, const VectorXd& y,
                               std::span<const std::string> names, const RowVectorXd& zn, const ModelSettings& st,
                               std::uint64_t seed, const Hyper& hyper) {
    Hyper h = hyper;
    switch (spec.estimator) {
        case Estimator::RandomWalk:
            h.set = true;
            return {0.0, h};

        case Estimator::ArBic: {
            if (!h.set) {
                h.py = linear::ar_bic(z, y, static_cast<int>(z.cols())).p;
                h.set = true;
            }
            const auto fit = linear::ols(z.leftCols(h.py), y);
            return {fit.predict_row(zn.head(h.py)), h};
        }

        case Estimator::ArdiBic: {
            if (!h.set) {
                const auto r = linear::ardi_bic(z, names, y, 6, 6, std::min(8, factor_count(names)));
                h.py = r.py;
                h.pf = r.pf;
                h.k = r.k;
                h.set = true;
            }
            const auto cols = ardi_columns(names, h.py, h.pf, h.k);
            const auto fit = linear::ols(z(Eigen::all, cols), y);
            return {fit.predict_row(zn(cols)), h};
        }

        case Estimator::Lasso:
        case Estimator::Ridge:
        case Estimator::ElasticNet: return linear_forecast(spec, z, y, names, zn, st, seed, h);

        case Estimator::Krr: {
            const auto sc = column_scaling(z);
            const MatrixXd zs = sc.apply(z);
            const double ybar = y.mean();
            const VectorXd yc = y.array() - ybar;
            if (!h.set) {
                linear::KrrTuneOptions opt;
                opt.folds = st.folds;
                opt.seed = seed;
                const auto r = linear::krr_tune(zs, yc, opt);
                h.sigma = r.sigma;
                h.lambda = r.lambda;
                h.set = true;
            }
            const auto fit = linear::krr_fit(zs, yc, h.sigma, h.lambda);
            return {linear::krr_predict(fit, sc.apply(MatrixXd(zn)))(0) + ybar, h};
        }

        case Estimator::RandomForest: {
            trees::ForestOptions opt;
            opt.trees = st.forest_trees;
            opt.seed = seed;
            h.set = true;
            return {trees::fit_forest(z, y, opt).predict(MatrixXd(zn))(0), h};
        }

        case Estimator::Boosting: {
            if (!h.set) {
                trees::BoostTuneOptions opt;
                opt.etas = st.boost_etas;
                opt.steps = st.boost_steps;
                opt.folds = st.folds;
                opt.seed = seed;
                const auto r = trees::boost_tune(z, y, opt);
                h.eta = r.eta;
                h.steps = r.n_steps;
                h.set = true;
            }
            trees::BoostOptions opt;
            opt.eta = h.eta;
            opt.n_steps = h.steps;
            return {trees::fit_boost(z, y, opt).predict(MatrixXd(zn))(0), h};
        }

        case Estimator::Mrf: {
            std::vector<int> cols;
            for (int l = 0; l < spec.mrf_y_lags; ++l) cols.push_back(column_of(names, "y_L" + std::to_string(l)));
            for (int j = 1; j <= spec.mrf_factors; ++j) cols.push_back(column_of(names, "F" + std::to_string(j) + "_L0"));
            auto cfg = st.mrf;
            cfg.seed = seed;
            cfg.threads = 1;
            const auto m = mrf::fit_mrf(y, z, z(Eigen::all, cols), cfg);
            h.set = true;
            return {m.predict(MatrixXd(zn), MatrixXd(zn(cols)))(0), h};
        }

        case Estimator::NeuralNet: {
            auto cfg = st.nn;
            cfg.seed = seed;
            cfg.threads = 1;
            if (h.set) {
                cfg.lr_grid = {h.lr};
                cfg.l1_grid = {h.l1};
            }
            const auto r = nn::nn_forecast(z, y, MatrixXd(zn), cfg);
            h.lr = r.lr;
            h.l1 = r.l1;
            h.set = true;
            return {r.prediction(0), h};
        }
    }
    throw std::logic_error("unhandled estimator");
}

}  // namespace macroml::eval
