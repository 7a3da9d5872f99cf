#include <algorithm>
#include <numeric>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/kfold.hpp"
#include "macroml/common/parallel.hpp"
#include "macroml/trees/trees.hpp"

namespace macroml::trees {

namespace {

double rmse(const VectorXd& pred, const VectorXd& y) {
    double s = 0.0;
    int n = 0;
    for (Index i = 0; i < y.size(); ++i)
        if (!std::isnan(pred(i))) {
            s += (y(i) - pred(i)) * (y(i) - pred(i));
            ++n;
        }
    return n ? std::sqrt(s / n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ForestModel fit_forest(const MatrixXd& z, const VectorXd& y, const ForestOptions& opt) {
    if (opt.trees < 1) throw std::invalid_argument("fit_forest: need at least one tree");
    if (z.rows() == 0 || z.cols() == 0) throw DataError("fit_forest: empty data");
    if (z.rows() != y.size()) throw std::invalid_argument("fit_forest: row count mismatch");
    if (!z.allFinite() || !y.allFinite()) throw DataError("fit_forest: non-finite input");
    const int T = static_cast<int>(z.rows());
    TreeOptions topt{opt.min_node, opt.mtry > 0 ? opt.mtry : default_mtry(z.cols()), 0};

    ForestModel f;
    f.seed = opt.seed;
    f.trees.resize(static_cast<std::size_t>(opt.trees));
    f.oob.resize(f.trees.size());
    std::vector<VectorXd> gains(f.trees.size(), VectorXd::Zero(z.cols()));
    parallel_for(f.trees.size(), opt.threads, [&](std::size_t b) {
        Rng rng(derive_seed(opt.seed, {b}));
        std::vector<int> rows(static_cast<std::size_t>(T));
        std::vector<char> drawn(static_cast<std::size_t>(T), 0);
        for (int i = 0; i < T; ++i) {
            rows[i] = opt.bootstrap ? static_cast<int>(rng.index(static_cast<std::size_t>(T))) : i;
            drawn[rows[i]] = 1;
        }
        f.trees[b] = fit_tree(z, y, rows, topt, rng, &gains[b]);
        for (int i = 0; i < T; ++i)
            if (!drawn[i]) f.oob[b].push_back(i);
    });
    f.split_gain = VectorXd::Zero(z.cols());
    for (const auto& g : gains) f.split_gain += g;
    f.split_gain /= static_cast<double>(opt.trees);
    return f;
}

VectorXd ForestModel::predict(const MatrixXd& z) const {
    VectorXd out = VectorXd::Zero(z.rows());
    for (Index i = 0; i < z.rows(); ++i) {
        double s = 0.0;
        for (const auto& t : trees) s += t.predict_row(z, i);
        out(i) = s / static_cast<double>(trees.size());
    }
    return out;
}

VectorXd ForestModel::oob_predict(const MatrixXd& z) const {
    VectorXd sum = VectorXd::Zero(z.rows());
    Eigen::VectorXi count = Eigen::VectorXi::Zero(z.rows());
    for (std::size_t b = 0; b < trees.size(); ++b)
        for (int i : oob[b]) {
            sum(i) += trees[b].predict_row(z, i);
            ++count(i);
        }
    VectorXd out(z.rows());
    for (Index i = 0; i < z.rows(); ++i)
        out(i) = count(i) ? sum(i) / count(i) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

VectorXd oob_permutation_importance(const ForestModel& f, const MatrixXd& z, const VectorXd& y, std::uint64_t seed) {
    const double base = rmse(f.oob_predict(z), y);
    VectorXd out(z.cols());
    for (Index j = 0; j < z.cols(); ++j) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(j)}));
        const auto perm = rng.permutation(static_cast<int>(z.rows()));
        MatrixXd zp = z;
        for (Index i = 0; i < z.rows(); ++i) zp(i, j) = z(perm[i], j);
        out(j) = 100.0 * (rmse(f.oob_predict(zp), y) / base - 1.0);
    }
    return out;
}

void write_importance_csv(std::ostream& os, const std::vector<std::string>& names, const VectorXd& split_gain,
                          const VectorXd& permutation) {
    if (static_cast<Index>(names.size()) != split_gain.size() || split_gain.size() != permutation.size())
        throw std::invalid_argument("write_importance_csv: size mismatch");
    os << "feature,split_gain,oob_permutation_pct\n";
    for (std::size_t j = 0; j < names.size(); ++j)
        os << names[j] << ',' << csv::format_double(split_gain(j)) << ',' << csv::format_double(permutation(j)) << '\n';
}

BoostModel fit_boost(const MatrixXd& z, const VectorXd& y, const BoostOptions& opt) {
    if (!(opt.eta >= 0.0 && opt.eta <= 1.0)) throw std::invalid_argument("fit_boost: eta must be in [0, 1]");
    if (opt.n_steps < 1) throw std::invalid_argument("fit_boost: n_steps must be >= 1");
    if (z.rows() == 0 || z.cols() == 0) throw DataError("fit_boost: empty data");
    if (z.rows() != y.size()) throw std::invalid_argument("fit_boost: row count mismatch");
    BoostModel m;
    m.init = y.mean();
    m.eta = opt.eta;
    VectorXd f = VectorXd::Constant(y.size(), m.init);
    m.train_mse.push_back((y - f).squaredNorm() / static_cast<double>(y.size()));
    const TreeOptions topt{opt.min_node, 0, opt.max_depth};
    // No feature sampling, so the stream is never consumed in a way that matters.
    Rng rng(0);
    std::vector<int> rows(static_cast<std::size_t>(z.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    const auto pre = presort_rows(z, rows);
    for (int s = 0; s < opt.n_steps; ++s) {
        const VectorXd resid = y - f;
        m.trees.push_back(fit_tree(pre, resid, topt, rng));
        f += opt.eta * m.trees.back().predict(z);
        m.train_mse.push_back((y - f).squaredNorm() / static_cast<double>(y.size()));
    }
    return m;
}

VectorXd BoostModel::predict(const MatrixXd& z, int steps) const {
    const std::size_t n = steps < 0 ? trees.size() : std::min(trees.size(), static_cast<std::size_t>(steps));
    VectorXd out = VectorXd::Constant(z.rows(), init);
    for (std::size_t s = 0; s < n; ++s) out += eta * trees[s].predict(z);
    return out;
}

BoostTuneResult boost_tune(const MatrixXd& z, const VectorXd& y, const BoostTuneOptions& opt) {
    const Index n = z.rows();
    if (y.size() != n) throw std::invalid_argument("boost_tune: row count mismatch");
    if (opt.etas.empty() || opt.steps.empty()) throw std::invalid_argument("boost_tune: empty grid");
    if (n < opt.folds) throw DataError("boost_tune: fewer rows than folds");
    const auto fold = kfold_split(static_cast<int>(n), opt.folds, opt.seed);
    const int max_steps = *std::max_element(opt.steps.begin(), opt.steps.end());
    const std::size_t ne = opt.etas.size();
    std::vector<std::vector<double>> sse(static_cast<std::size_t>(opt.folds) * ne);

    parallel_for(sse.size(), opt.threads, [&](std::size_t task) {
        const int k = static_cast<int>(task / ne);
        const double eta = opt.etas[task % ne];
        const auto tr = fold_rows(fold, k, false);
        const auto te = fold_rows(fold, k, true);
        if (tr.empty() || te.empty()) throw DataError("boost_tune: degenerate fold");
        const MatrixXd ztr = z(tr, Eigen::all), zte = z(te, Eigen::all);
        const BoostModel m = fit_boost(ztr, y(tr), {eta, max_steps, opt.max_depth, opt.min_node});
        const VectorXd yte = y(te);
        VectorXd pred = VectorXd::Constant(zte.rows(), m.init);
        std::vector<double> out;
        for (int s = 1; s <= max_steps; ++s) {
            pred += eta * m.trees[static_cast<std::size_t>(s - 1)].predict(zte);
            if (std::find(opt.steps.begin(), opt.steps.end(), s) != opt.steps.end())
                out.push_back((yte - pred).squaredNorm());
        }
        sse[task] = std::move(out);
    });

    std::vector<int> sorted_steps = opt.steps;
    std::sort(sorted_steps.begin(), sorted_steps.end());
    sorted_steps.erase(std::unique(sorted_steps.begin(), sorted_steps.end()), sorted_steps.end());
    BoostTuneResult best;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < ne; ++e)
        for (std::size_t s = 0; s < sorted_steps.size(); ++s) {
            double total = 0.0;
            for (int k = 0; k < opt.folds; ++k) total += sse[static_cast<std::size_t>(k) * ne + e][s];
            const double mse = total / static_cast<double>(n);
            const int st = sorted_steps[s];
            const double eta = opt.etas[e];
            const bool better = mse < best_mse ||
                                (mse == best_mse && (st < best.n_steps || (st == best.n_steps && eta < best.eta)));
            if (better) {
                best_mse = mse;
                best = {eta, st, mse};
            }
        }
    return best;
}

}  // namespace macroml::trees
