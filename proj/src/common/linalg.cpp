#include "macroml/common/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace macroml {

std::optional<VectorXd> solve_spd_small(const MatrixXd& a, const VectorXd& b, double rel_tol) {
    const Index n = a.rows();
    if (n == 1) {
        if (!(a(0, 0) > 0.0)) return std::nullopt;
        VectorXd x(1);
        x(0) = b(0) / a(0, 0);
        return x;
    }
    double scale = 0.0;
    for (Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
    if (!(scale > 0.0)) return std::nullopt;

    MatrixXd l = MatrixXd::Identity(n, n);
    VectorXd d(n);
    for (Index j = 0; j < n; ++j) {
        double dj = a(j, j);
        for (Index k = 0; k < j; ++k) dj -= l(j, k) * l(j, k) * d(k);
        if (!(dj > rel_tol * scale)) return std::nullopt;
        d(j) = dj;
        for (Index i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k) * d(k);
            l(i, j) = v / dj;
        }
    }
    VectorXd z = b;
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < i; ++k) z(i) -= l(i, k) * z(k);
    for (Index i = 0; i < n; ++i) z(i) /= d(i);
    for (Index i = n - 1; i >= 0; --i)
        for (Index k = i + 1; k < n; ++k) z(i) -= l(k, i) * z(k);
    return z;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> x) {
    if (x.empty()) return std::nan("");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

std::vector<double> log_grid_desc(double hi, double lo, int n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = hi;
        return g;
    }
    const double a = std::log(hi), b = std::log(lo);
    for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
    g.front() = hi;
    g.back() = lo;
    return g;
}

}  // namespace macroml

namespace macroml {

MatrixXd ColumnScaling::apply(const MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

ColumnScaling column_scaling(const MatrixXd& x) {
    const auto n = static_cast<double>(x.rows());
    ColumnScaling s{x.colwise().mean().transpose(), VectorXd(x.cols()), std::vector<bool>(x.cols(), false)};
    for (Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt((x.col(j).array() - s.mean(j)).square().sum() / n);
        s.constant[j] = !(sd > 1e-12 * std::max(1.0, std::abs(s.mean(j))));
        s.std(j) = s.constant[j] ? 1.0 : sd;
    }
    return s;
}

}  // namespace macroml
