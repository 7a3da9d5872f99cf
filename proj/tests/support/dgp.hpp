#pragma once

// Synthetic data shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>

#include "macroml/common/linalg.hpp"
#include "macroml/common/rng.hpp"

namespace macroml::testing {

/// Persistent state variables with uniform marginals: Phi of a unit-variance
/// AR(1) with coefficient rho.
inline MatrixXd persistent_uniform(int n, int cols, double rho, Rng& rng) {
    MatrixXd s(n, cols);
    const double sd = std::sqrt(1.0 - rho * rho);
    for (int j = 0; j < cols; ++j) {
        double v = rng.normal();
        for (int t = 0; t < n; ++t) {
            v = rho * v + sd * rng.normal();
            s(t, j) = 0.5 * std::erfc(-v / std::sqrt(2.0));
        }
    }
    return s;
}

/// y_t = beta_t x_t + noise_sd e_t with beta_t = +1 when S_{t,j} > 0.5 and -1
/// otherwise. The last `hold` rows form a hold-out window.
struct BreakData {
    MatrixXd s, xt, s_hold, xt_hold;
    VectorXd y, y_hold, beta, beta_hold;
    int j = 0;
};

inline BreakData planted_break(std::uint64_t seed, int T = 200, int hold = 100, int n_s = 5, int j = 2,
                               double rho = 0.9, double noise_sd = 0.5) {
    Rng rng(seed);
    const int n = T + hold;
    const MatrixXd s = persistent_uniform(n, n_s, rho, rng);
    MatrixXd x(n, 1);
    VectorXd y(n), beta(n);
    for (int t = 0; t < n; ++t) {
        x(t, 0) = rng.normal();
        beta(t) = s(t, j) > 0.5 ? 1.0 : -1.0;
        y(t) = beta(t) * x(t, 0) + noise_sd * rng.normal();
    }
    BreakData d;
    d.j = j;
    d.s = s.topRows(T);
    d.xt = x.topRows(T);
    d.y = y.head(T);
    d.beta = beta.head(T);
    d.s_hold = s.bottomRows(hold);
    d.xt_hold = x.bottomRows(hold);
    d.y_hold = y.tail(hold);
    d.beta_hold = beta.tail(hold);
    return d;
}

/// y_t = c + rho y_{t-1} + e_t after a burn-in, length n.
inline VectorXd ar1_series(int n, double rho, double c, Rng& rng, double sd = 1.0) {
    VectorXd y(n);
    double v = c / (1.0 - rho);
    for (int t = -100; t < n; ++t) {
        v = c + rho * v + sd * rng.normal();
        if (t >= 0) y(t) = v;
    }
    return y;
}

/// Regression layout for an AR(p) on `y`: row r holds y_{t-1..t-p} for
/// target y_t, t = p + r.
struct LagData {
    MatrixXd lags;
    VectorXd target;
};

inline LagData lag_matrix(const VectorXd& y, int p) {
    const Index n = y.size() - p;
    LagData d{MatrixXd(n, p), VectorXd(n)};
    for (Index r = 0; r < n; ++r) {
        for (int l = 0; l < p; ++l) d.lags(r, l) = y(p + r - 1 - l);
        d.target(r) = y(p + r);
    }
    return d;
}

}  // namespace macroml::testing
