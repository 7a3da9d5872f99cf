#include "macroml/linear/krr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "macroml/common/error.hpp"
#include "macroml/common/kfold.hpp"

namespace macroml::linear {

MatrixXd rbf_kernel(const MatrixXd& a, const MatrixXd& b, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("rbf_kernel: sigma must be > 0");
    if (a.cols() != b.cols()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
    const double c = 1.0 / (2.0 * sigma * sigma);
    MatrixXd k(a.rows(), b.rows());
    for (Index j = 0; j < b.rows(); ++j)
        for (Index i = 0; i < a.rows(); ++i) k(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() * c);
    return k;
}

KrrFit krr_fit(const MatrixXd& z, const VectorXd& y, double sigma, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("krr_fit: lambda must be >= 0");
    if (z.rows() != y.size() || z.rows() < 1) throw std::invalid_argument("krr_fit: row count mismatch");
    if (!z.allFinite() || !y.allFinite()) throw DataError("krr_fit: non-finite input");
    MatrixXd a = rbf_kernel(z, z, sigma);
    a.diagonal().array() += lambda;
    Eigen::LDLT<MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw std::runtime_error("krr_fit: kernel system is not positive definite");
    VectorXd x = ldlt.solve(y);
    for (int round = 0; round < 2; ++round) x += ldlt.solve(y - a * x);
    if (!x.allFinite()) throw std::runtime_error("krr_fit: linear solve failed");
    return {x, z, sigma, lambda};
}

VectorXd krr_predict(const KrrFit& fit, const MatrixXd& z_new) {
    return rbf_kernel(z_new, fit.train_z, fit.sigma) * fit.alpha_weights;
}

std::vector<double> pairwise_distances(const MatrixXd& z) {
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(z.rows() * (z.rows() - 1) / 2));
    for (Index i = 0; i < z.rows(); ++i)
        for (Index j = i + 1; j < z.rows(); ++j) d.push_back((z.row(i) - z.row(j)).norm());
    std::sort(d.begin(), d.end());
    return d;
}

KrrTuneResult krr_tune(const MatrixXd& z, const VectorXd& y, const KrrTuneOptions& opt) {
    const Index n = z.rows();
    if (y.size() != n) throw std::invalid_argument("krr_tune: row count mismatch");
    if (n < 2 * opt.folds) throw DataError("krr_tune: too few rows for the folds");
    if (opt.sigma_quantiles.empty() || opt.lambdas.empty()) throw std::invalid_argument("krr_tune: empty grid");
    const auto dist = pairwise_distances(z);
    std::vector<double> sigmas;
    for (double q : opt.sigma_quantiles) sigmas.push_back(std::max(quantile_sorted(dist, q), 1e-8));

    const auto fold = kfold_split(static_cast<int>(n), opt.folds, opt.seed);
    std::vector<std::vector<double>> sse(sigmas.size(), std::vector<double>(opt.lambdas.size(), 0.0));
    for (int k = 0; k < opt.folds; ++k) {
        const auto tr = fold_rows(fold, k, false);
        const auto te = fold_rows(fold, k, true);
        const MatrixXd ztr = z(tr, Eigen::all), zte = z(te, Eigen::all);
        const VectorXd ytr = y(tr), yte = y(te);
        for (std::size_t s = 0; s < sigmas.size(); ++s) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(rbf_kernel(ztr, ztr, sigmas[s]));
            const MatrixXd kte = rbf_kernel(zte, ztr, sigmas[s]);
            const MatrixXd kv = kte * es.eigenvectors();
            const VectorXd vty = es.eigenvectors().transpose() * ytr;
            const VectorXd ev = es.eigenvalues().cwiseMax(0.0);
            for (std::size_t l = 0; l < opt.lambdas.size(); ++l) {
                const VectorXd w = vty.array() / (ev.array() + opt.lambdas[l]);
                sse[s][l] += (yte - kv * w).squaredNorm();
            }
        }
    }

    KrrTuneResult best;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < sigmas.size(); ++s)
        for (std::size_t l = 0; l < opt.lambdas.size(); ++l) {
            const double mse = sse[s][l] / static_cast<double>(n);
            const double lam = opt.lambdas[l];
            const bool better = mse < best_mse ||
                                (mse == best_mse && (lam > best.lambda || (lam == best.lambda && sigmas[s] > best.sigma)));
            if (better) {
                best_mse = mse;
                best = {sigmas[s], lam, mse};
            }
        }
    return best;
}

}  // namespace macroml::linear
