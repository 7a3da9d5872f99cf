#include "macroml/linear/enet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "macroml/common/error.hpp"
#include "macroml/common/kfold.hpp"
#include "macroml/common/parallel.hpp"

namespace macroml::linear {

namespace {

double soft(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

double y_scale(const VectorXd& yc) {
    return yc.size() ? std::sqrt(yc.squaredNorm() / static_cast<double>(yc.size())) : 0.0;
}

// One coordinate pass over `cols`; returns the largest coefficient change.
double sweep(const MatrixXd& z, const std::vector<int>& cols, VectorXd& beta, VectorXd& r, double l1, double l2) {
    const double inv_n = 1.0 / static_cast<double>(z.rows());
    double change = 0.0;
    for (int j : cols) {
        const double old = beta(j);
        const double g = z.col(j).dot(r) * inv_n + old;
        const double nb = soft(g, l1) / (1.0 + l2);
        const double d = nb - old;
        if (d != 0.0) {
            r.noalias() -= d * z.col(j);
            beta(j) = nb;
            change = std::max(change, std::abs(d));
        }
    }
    return change;
}

// Coordinate descent from the warm start `beta` (with r = y - z beta).
// Full sweeps alternate with sweeps over the active set until a full sweep
// moves no coefficient by more than tol_abs.
void cd_solve(const MatrixXd& z, const std::vector<int>& usable, VectorXd& beta, VectorXd& r, double l1, double l2,
              double tol_abs, int max_iter) {
    int iter = 0;
    double change = std::numeric_limits<double>::infinity();
    while (iter < max_iter) {
        change = sweep(z, usable, beta, r, l1, l2);
        ++iter;
        if (change < tol_abs) return;
        std::vector<int> active;
        for (int j : usable)
            if (beta(j) != 0.0) active.push_back(j);
        while (iter < max_iter) {
            const double c = sweep(z, active, beta, r, l1, l2);
            ++iter;
            if (c < tol_abs) break;
        }
    }
    throw ConvergenceError("enet_cd: no convergence after " + std::to_string(max_iter) +
                           " sweeps (last max coefficient change " + std::to_string(change) + ")");
}

struct RidgeBasis {
    MatrixXd v;
    VectorXd d;
    VectorXd uty;
};

RidgeBasis ridge_basis(const MatrixXd& z, const VectorXd& yc) {
    Eigen::BDCSVD<MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixV(), svd.singularValues(), svd.matrixU().transpose() * yc};
}

// Minimizer of (1/2T)||y - Zb||^2 + (lambda/2)||b||^2.
VectorXd ridge_solve(const RidgeBasis& rb, double lambda, Index n) {
    VectorXd w(rb.d.size());
    for (Index i = 0; i < rb.d.size(); ++i) {
        const double den = rb.d(i) * rb.d(i) + static_cast<double>(n) * lambda;
        w(i) = den > 0.0 && rb.d(i) > 1e-12 * rb.d(0) ? rb.d(i) / den * rb.uty(i) : 0.0;
    }
    return rb.v * w;
}

void check_config(double alpha, double lambda) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("elastic net: alpha must be in [0, 1]");
    if (!(lambda >= 0.0)) throw std::invalid_argument("elastic net: lambda must be >= 0");
}

MatrixXd standardized_design(const MatrixXd& z, const ColumnScaling& sc) {
    MatrixXd zs = sc.apply(z);
    for (std::size_t j = 0; j < sc.constant.size(); ++j)
        if (sc.constant[j]) zs.col(static_cast<Index>(j)).setZero();
    return zs;
}

}  // namespace

double lambda_max(const MatrixXd& z_std, const VectorXd& y_centered, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("lambda_max: alpha must be > 0");
    if (z_std.cols() == 0) return 0.0;
    return (z_std.transpose() * y_centered).cwiseAbs().maxCoeff() / (static_cast<double>(z_std.rows()) * alpha);
}

MatrixXd enet_path(const MatrixXd& z_std, const VectorXd& y_centered, double alpha, const std::vector<double>& lambdas,
                   double tol, int max_iter, bool early_stop) {
    const Index p = z_std.cols();
    MatrixXd out = MatrixXd::Zero(p, static_cast<Index>(lambdas.size()));
    std::vector<int> usable;
    for (Index j = 0; j < p; ++j)
        if (z_std.col(j).squaredNorm() > 0.0) usable.push_back(static_cast<int>(j));
    const double scale = y_scale(y_centered);
    if (usable.empty() || scale == 0.0) return out;
    if (alpha == 0.0) {
        const MatrixXd zu = z_std(Eigen::all, usable);
        const auto rb = ridge_basis(zu, y_centered);
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            const VectorXd b = ridge_solve(rb, lambdas[l], z_std.rows());
            for (std::size_t i = 0; i < usable.size(); ++i) out(usable[i], static_cast<Index>(l)) = b(static_cast<Index>(i));
        }
        return out;
    }
    VectorXd beta = VectorXd::Zero(p);
    VectorXd r = y_centered;
    const double null_dev = y_centered.squaredNorm();
    // lambda_max and the soft threshold round differently; at or above it the
    // solution is exactly zero.
    const double lmax = lambda_max(z_std, y_centered, alpha);
    double prev_rsq = 0.0;
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        check_config(alpha, lambdas[l]);
        if (lambdas[l] >= lmax) {
            beta.setZero();
            r = y_centered;
            prev_rsq = 0.0;
            continue;
        }
        cd_solve(z_std, usable, beta, r, lambdas[l] * alpha, lambdas[l] * (1.0 - alpha), tol * scale, max_iter);
        out.col(static_cast<Index>(l)) = beta;
        if (!early_stop) continue;
        const double rsq = 1.0 - r.squaredNorm() / null_dev;
        if (l >= 4 && (rsq > 0.999 || rsq - prev_rsq < 1e-5 * rsq)) {
            for (std::size_t m = l + 1; m < lambdas.size(); ++m) out.col(static_cast<Index>(m)) = beta;
            break;
        }
        prev_rsq = rsq;
    }
    return out;
}

LinearFit enet_fit_path(const MatrixXd& z, const VectorXd& y, double alpha, const std::vector<double>& lambdas,
                        double tol, int max_iter, std::vector<std::string> names, bool early_stop) {
    if (lambdas.empty()) throw std::invalid_argument("enet_fit_path: empty lambda path");
    for (double l : lambdas) check_config(alpha, l);
    const Index n = z.rows(), p = z.cols();
    if (y.size() != n) throw std::invalid_argument("enet_cd: row count mismatch");
    if (n < 2) throw DataError("enet_cd: need at least two rows");
    if (!z.allFinite() || !y.allFinite()) throw DataError("enet_cd: non-finite input");
    if (!names.empty() && static_cast<Index>(names.size()) != p) throw std::invalid_argument("enet_cd: name count mismatch");
    if (names.empty())
        for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));

    const auto sc = column_scaling(z);
    const MatrixXd zs = standardized_design(z, sc);
    const double ybar = y.mean();
    const VectorXd yc = y.array() - ybar;
    const VectorXd bs = enet_path(zs, yc, alpha, lambdas, tol, max_iter, early_stop).rightCols(1);

    LinearFit fit;
    fit.column_names = std::move(names);
    fit.means = sc.mean;
    fit.stds = sc.std;
    fit.beta.resize(p + 1);
    fit.beta.tail(p) = bs.cwiseQuotient(sc.std);
    fit.beta(0) = ybar - fit.beta.tail(p).dot(sc.mean);
    return fit;
}

LinearFit enet_cd(const MatrixXd& z, const VectorXd& y, const EnetConfig& cfg, std::vector<std::string> names) {
    return enet_fit_path(z, y, cfg.alpha, {cfg.lambda}, cfg.tol, cfg.max_iter, std::move(names));
}

std::vector<double> alpha_grid(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("alpha_grid: step must be in (0, 1]");
    std::vector<double> g;
    const int n = static_cast<int>(std::llround(1.0 / step));
    for (int i = 1; i <= n; ++i) g.push_back(std::min(1.0, i * step));
    if (g.empty() || g.back() != 1.0) g.push_back(1.0);
    return g;
}

EnetTuneResult enet_tune(const MatrixXd& z, const VectorXd& y, const EnetTuneOptions& opt) {
    const Index n = z.rows();
    if (y.size() != n) throw std::invalid_argument("enet_tune: row count mismatch");
    if (opt.alphas.empty() || opt.n_lambda < 1) throw std::invalid_argument("enet_tune: empty grid");
    for (double a : opt.alphas) check_config(a, 0.0);
    if (n < 2 * opt.folds) throw DataError("enet_tune: too few rows for the folds");

    const auto sc = column_scaling(z);
    const MatrixXd zs = standardized_design(z, sc);
    const VectorXd yc = y.array() - y.mean();
    std::vector<std::vector<double>> grids;
    for (double a : opt.alphas) {
        const double lmax = std::max(lambda_max(zs, yc, a > 0.0 ? a : 0.001), 1e-300);
        grids.push_back(log_grid_desc(lmax, lmax * opt.lambda_ratio, opt.n_lambda));
    }

    const auto fold = kfold_split(static_cast<int>(n), opt.folds, opt.seed);
    struct FoldData {
        MatrixXd z_train, z_test;
        VectorXd y_train, y_test;
        double ybar = 0.0;
    };
    std::vector<FoldData> fd(static_cast<std::size_t>(opt.folds));
    for (int k = 0; k < opt.folds; ++k) {
        const auto tr = fold_rows(fold, k, false);
        const auto te = fold_rows(fold, k, true);
        const MatrixXd ztr = z(tr, Eigen::all);
        const auto fsc = column_scaling(ztr);
        fd[k].z_train = standardized_design(ztr, fsc);
        fd[k].z_test = standardized_design(z(te, Eigen::all), fsc);
        const VectorXd ytr = y(tr);
        fd[k].ybar = ytr.mean();
        fd[k].y_train = ytr.array() - fd[k].ybar;
        fd[k].y_test = y(te);
    }

    const std::size_t na = opt.alphas.size();
    std::vector<std::vector<double>> sse(static_cast<std::size_t>(opt.folds) * na);
    parallel_for(sse.size(), opt.threads, [&](std::size_t task) {
        const auto k = task / na;
        const auto a = task % na;
        const auto& f = fd[k];
        const MatrixXd b = enet_path(f.z_train, f.y_train, opt.alphas[a], grids[a], opt.tol, 100000, opt.early_stop);
        const MatrixXd pred = (f.z_test * b).array() + f.ybar;
        std::vector<double> s(grids[a].size());
        for (std::size_t l = 0; l < s.size(); ++l)
            s[l] = (f.y_test - pred.col(static_cast<Index>(l))).squaredNorm();
        sse[task] = std::move(s);
    });

    EnetTuneResult best;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t l = 0; l < grids[a].size(); ++l) {
            double total = 0.0;
            for (int k = 0; k < opt.folds; ++k) total += sse[static_cast<std::size_t>(k) * na + a][l];
            const double mse = total / static_cast<double>(n);
            const double lam = grids[a][l];
            const bool better = mse < best_mse ||
                                (mse == best_mse && (lam > best.config.lambda ||
                                                     (lam == best.config.lambda && opt.alphas[a] > best.config.alpha)));
            if (better) {
                best_mse = mse;
                best.config.alpha = opt.alphas[a];
                best.config.lambda = lam;
                best.lambda_index = static_cast<int>(l);
                best.lambdas = grids[a];
            }
        }
    best.cv_mse = best_mse;
    return best;
}

}  // namespace macroml::linear
