#include "macroml/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/kfold.hpp"
#include "macroml/common/parallel.hpp"

namespace macroml::nn {

namespace {

std::vector<Index> offsets(const std::vector<int>& sizes) {
    std::vector<Index> off{0};
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k)
        off.push_back(off.back() + static_cast<Index>(sizes[k + 1]) * (sizes[k] + 1));
    return off;
}

// Forward pass with samples as columns. acts[0] is the input, acts[L] the
// output row; pre[k] holds the pre-activation of layer k + 1.
struct Forward {
    std::vector<MatrixXd> acts;
    std::vector<MatrixXd> pre;
};

Forward forward(const MlpModel& m, const MatrixXd& z) {
    const int L = m.layer_count();
    Forward f;
    f.acts.reserve(static_cast<std::size_t>(L) + 1);
    f.acts.push_back(z.transpose());
    for (int k = 0; k < L; ++k) {
        MatrixXd pre = m.weight(k) * f.acts.back();
        pre.colwise() += m.bias(k);
        f.pre.push_back(pre);
        f.acts.push_back(k + 1 < L ? MatrixXd(pre.cwiseMax(0.0)) : pre);
    }
    return f;
}

double penalty(const MlpModel& m, double l1) {
    if (l1 == 0.0) return 0.0;
    double s = 0.0;
    for (int k = 0; k < m.layer_count(); ++k) s += m.weight(k).cwiseAbs().sum();
    return l1 * s;
}

double mse(const MlpModel& m, const MatrixXd& z, const VectorXd& y) {
    return (m.predict(z) - y).squaredNorm() / static_cast<double>(y.size());
}

std::vector<bool> relu_pattern(const Forward& f) {
    std::vector<bool> out;
    for (std::size_t k = 0; k + 1 < f.pre.size(); ++k)
        for (Index i = 0; i < f.pre[k].size(); ++i) out.push_back(f.pre[k](i) > 0.0);
    return out;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Eigen::Map<const MatrixXd> MlpModel::weight(int k) const {
    const auto off = offsets(sizes);
    return {theta.data() + off[k], sizes[k + 1], sizes[k]};
}

Eigen::Map<MatrixXd> MlpModel::weight(int k) {
    const auto off = offsets(sizes);
    return {theta.data() + off[k], sizes[k + 1], sizes[k]};
}

Eigen::Map<const VectorXd> MlpModel::bias(int k) const {
    const auto off = offsets(sizes);
    return {theta.data() + off[k] + static_cast<Index>(sizes[k + 1]) * sizes[k], sizes[k + 1]};
}

Eigen::Map<VectorXd> MlpModel::bias(int k) {
    const auto off = offsets(sizes);
    return {theta.data() + off[k] + static_cast<Index>(sizes[k + 1]) * sizes[k], sizes[k + 1]};
}

std::vector<bool> MlpModel::weight_mask() const {
    std::vector<bool> mask;
    for (int k = 0; k < layer_count(); ++k) {
        mask.insert(mask.end(), static_cast<std::size_t>(sizes[k + 1]) * sizes[k], true);
        mask.insert(mask.end(), static_cast<std::size_t>(sizes[k + 1]), false);
    }
    return mask;
}

VectorXd MlpModel::predict(const MatrixXd& z) const {
    if (z.cols() != sizes.front()) throw std::invalid_argument("mlp predict: input width mismatch");
    return forward(*this, z).acts.back().row(0).transpose();
}

MlpModel mlp_init(int inputs, const std::vector<int>& hidden, Rng& rng, bool zero_output) {
    if (inputs < 1) throw std::invalid_argument("mlp_init: need at least one input");
    MlpModel m;
    m.sizes.push_back(inputs);
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("mlp_init: empty hidden layer");
        m.sizes.push_back(h);
    }
    m.sizes.push_back(1);
    m.theta = VectorXd::Zero(offsets(m.sizes).back());
    const int init_layers = zero_output ? m.layer_count() - 1 : m.layer_count();
    for (int k = 0; k < init_layers; ++k) {
        const double limit = std::sqrt(6.0 / m.sizes[k]);
        auto w = m.weight(k);
        for (Index j = 0; j < w.cols(); ++j)
            for (Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
    }
    return m;
}

double mlp_loss(const MlpModel& m, const MatrixXd& z, const VectorXd& y, double l1) {
    return mse(m, z, y) + penalty(m, l1);
}

VectorXd mlp_gradient(const MlpModel& m, const MatrixXd& z, const VectorXd& y, double l1) {
    const int L = m.layer_count();
    const Forward f = forward(m, z);
    MlpModel g;
    g.sizes = m.sizes;
    g.theta = VectorXd::Zero(m.theta.size());
    MatrixXd d = 2.0 * (f.acts.back() - y.transpose()) / static_cast<double>(y.size());
    for (int k = L - 1; k >= 0; --k) {
        g.weight(k) = d * f.acts[k].transpose();
        g.bias(k) = d.rowwise().sum();
        if (k > 0) d = (m.weight(k).transpose() * d).cwiseProduct((f.pre[k - 1].array() > 0.0).cast<double>().matrix());
    }
    if (l1 != 0.0) {
        const auto mask = m.weight_mask();
        for (Index i = 0; i < m.theta.size(); ++i)
            if (mask[i]) g.theta(i) += l1 * sign(m.theta(i));
    }
    return g.theta;
}

GradCheck finite_diff_gradcheck(const MlpModel& m, const MatrixXd& z, const VectorXd& y, double l1, double step) {
    const VectorXd g = mlp_gradient(m, z, y, l1);
    const auto mask = m.weight_mask();
    const auto base = relu_pattern(forward(m, z));
    GradCheck out;
    MlpModel p = m;
    for (Index i = 0; i < m.theta.size(); ++i) {
        if (l1 != 0.0 && mask[i] && std::abs(m.theta(i)) <= 1e-3) {
            ++out.skipped;
            continue;
        }
        p.theta(i) = m.theta(i) + step;
        const bool up_same = relu_pattern(forward(p, z)) == base;
        const double lp = mlp_loss(p, z, y, l1);
        p.theta(i) = m.theta(i) - step;
        const bool down_same = relu_pattern(forward(p, z)) == base;
        const double lm = mlp_loss(p, z, y, l1);
        p.theta(i) = m.theta(i);
        if (!up_same || !down_same) {
            ++out.skipped;
            continue;
        }
        const double fd = (lp - lm) / (2.0 * step);
        const double rel = std::abs(g(i) - fd) / std::max({std::abs(g(i)), std::abs(fd), 1e-8});
        out.max_rel_error = std::max(out.max_rel_error, rel);
        ++out.checked;
    }
    return out;
}

MlpModel mlp_train(const MatrixXd& z, const VectorXd& y, const MlpConfig& cfg) {
    const Index n = z.rows();
    if (y.size() != n) throw std::invalid_argument("mlp_train: row count mismatch");
    if (cfg.batch < 1 || cfg.epochs_max < 1 || cfg.patience < 1) throw std::invalid_argument("mlp_train: bad config");
    if (n <= cfg.batch) throw DataError("mlp_train: need more rows than the batch size");
    if (!z.allFinite() || !y.allFinite()) throw DataError("mlp_train: non-finite input");
    const Index n_val = std::max<Index>(1, static_cast<Index>(std::floor(cfg.validation_frac * static_cast<double>(n))));
    const Index n_tr = n - n_val;
    const MatrixXd ztr = z.topRows(n_tr), zva = z.bottomRows(n_val);
    const VectorXd ytr = y.head(n_tr), yva = y.tail(n_val);

    Rng rng(cfg.seed);
    MlpModel m = mlp_init(static_cast<int>(z.cols()), cfg.layers, rng, true);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    VectorXd mom = VectorXd::Zero(m.theta.size()), vel = VectorXd::Zero(m.theta.size());
    long step = 0;
    double best = std::numeric_limits<double>::infinity();
    VectorXd best_theta = m.theta;
    int wait = 0;
    for (int epoch = 0; epoch < cfg.epochs_max; ++epoch) {
        const auto perm = rng.permutation(static_cast<int>(n_tr));
        for (Index start = 0; start < n_tr; start += cfg.batch) {
            const Index len = std::min<Index>(cfg.batch, n_tr - start);
            std::vector<int> idx(perm.begin() + start, perm.begin() + start + len);
            const VectorXd g = mlp_gradient(m, ztr(idx, Eigen::all), ytr(idx), cfg.l1);
            ++step;
            mom = b1 * mom + (1.0 - b1) * g;
            vel = b2 * vel + (1.0 - b2) * g.cwiseAbs2();
            const double lr_t = cfg.lr * std::sqrt(1.0 - std::pow(b2, step)) / (1.0 - std::pow(b1, step));
            m.theta.array() -= lr_t * mom.array() / (vel.array().sqrt() + eps);
        }
        const double tr = mse(m, ztr, ytr);
        const double va = mse(m, zva, yva);
        if (!std::isfinite(tr) || !std::isfinite(va) || !m.theta.allFinite())
            throw ConvergenceError("mlp_train: loss diverged at epoch " + std::to_string(epoch));
        m.train_mse.push_back(tr);
        m.val_mse.push_back(va);
        if (va < best) {
            best = va;
            best_theta = m.theta;
            m.best_epoch = epoch;
            wait = 0;
        } else if (++wait >= cfg.patience) {
            break;
        }
    }
    m.theta = best_theta;
    return m;
}

void write_trace_csv(std::ostream& os, const MlpModel& m) {
    os << "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < m.train_mse.size(); ++e)
        os << e << ',' << csv::format_double(m.train_mse[e]) << ',' << csv::format_double(m.val_mse[e]) << '\n';
}

NnForecast nn_forecast(const MatrixXd& z_train, const VectorXd& y, const MatrixXd& z_next, const MlpConfig& cfg) {
    if (cfg.lr_grid.empty() || cfg.l1_grid.empty() || cfg.ensemble < 1) throw std::invalid_argument("nn_forecast: empty grid");
    if (z_next.cols() != z_train.cols()) throw std::invalid_argument("nn_forecast: input width mismatch");
    const auto sc = column_scaling(z_train);
    const MatrixXd zs = sc.apply(z_train);
    const MatrixXd zn = sc.apply(z_next);
    const double ybar = y.mean();
    const VectorXd yc = y.array() - ybar;

    struct Combo {
        double lr, l1;
    };
    std::vector<Combo> grid;
    for (double lr : cfg.lr_grid)
        for (double l1 : cfg.l1_grid) grid.push_back({lr, l1});

    NnForecast out;
    std::size_t pick = 0;
    if (grid.size() > 1) {
        const Index n = zs.rows();
        const auto fold = kfold_split(static_cast<int>(n), cfg.folds, derive_seed(cfg.seed, {1}));
        const std::size_t nt = grid.size() * static_cast<std::size_t>(cfg.folds);
        std::vector<double> sse(nt, 0.0);
        parallel_for(nt, cfg.threads, [&](std::size_t task) {
            const std::size_t c = task / static_cast<std::size_t>(cfg.folds);
            const int k = static_cast<int>(task % static_cast<std::size_t>(cfg.folds));
            const auto tr = fold_rows(fold, k, false);
            const auto te = fold_rows(fold, k, true);
            MlpConfig c2 = cfg;
            c2.lr = grid[c].lr;
            c2.l1 = grid[c].l1;
            c2.seed = derive_seed(cfg.seed, {2, c, static_cast<std::uint64_t>(k)});
            const MlpModel m = mlp_train(zs(tr, Eigen::all), yc(tr), c2);
            sse[task] = (m.predict(zs(te, Eigen::all)) - yc(te)).squaredNorm();
        });
        for (std::size_t c = 0; c < grid.size(); ++c) {
            double s = 0.0;
            for (int k = 0; k < cfg.folds; ++k) s += sse[c * static_cast<std::size_t>(cfg.folds) + static_cast<std::size_t>(k)];
            out.cv_mse.push_back(s / static_cast<double>(n));
            if (out.cv_mse.back() < out.cv_mse[pick]) pick = c;
        }
    }
    out.lr = grid[pick].lr;
    out.l1 = grid[pick].l1;

    std::vector<VectorXd> preds(static_cast<std::size_t>(cfg.ensemble));
    parallel_for(preds.size(), cfg.threads, [&](std::size_t e) {
        MlpConfig c2 = cfg;
        c2.lr = out.lr;
        c2.l1 = out.l1;
        c2.seed = derive_seed(cfg.seed, {3, cfg.distinct_member_seeds ? e : 0});
        preds[e] = mlp_train(zs, yc, c2).predict(zn);
    });
    out.prediction = VectorXd::Zero(zn.rows());
    for (const auto& p : preds) out.prediction += p;
    out.prediction = (out.prediction / static_cast<double>(cfg.ensemble)).array() + ybar;
    return out;
}

}  // namespace macroml::nn
