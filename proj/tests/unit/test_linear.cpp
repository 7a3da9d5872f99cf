#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/rng.hpp"
#include "macroml/linear/enet.hpp"
#include "macroml/linear/krr.hpp"
#include "macroml/linear/ols.hpp"

using namespace macroml;
using namespace macroml::linear;

namespace {

MatrixXd randn(Index r, Index c, Rng& rng) {
    MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

VectorXd noise(Index n, double sd, Rng& rng) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = sd * rng.normal();
    return v;
}

std::vector<double> ar1(int T, double rho, Rng& rng) {
    std::vector<double> y(T, 0.0);
    double prev = 0.0;
    for (int t = -100; t < T; ++t) {
        prev = rho * prev + rng.normal();
        if (t >= 0) y[t] = prev;
    }
    return y;
}

// Largest KKT violation on the standardized scale.
double kkt_residual(const MatrixXd& z, const VectorXd& y, const LinearFit& fit, double alpha, double lambda) {
    const auto sc = column_scaling(z);
    const MatrixXd zs = sc.apply(z);
    const VectorXd bs = fit.beta.tail(z.cols()).cwiseProduct(sc.std);
    const VectorXd r = (y.array() - y.mean()).matrix() - zs * bs;
    const VectorXd g = zs.transpose() * r / static_cast<double>(z.rows());
    double worst = 0.0;
    for (Index j = 0; j < z.cols(); ++j) {
        const double grad = g(j) - lambda * (1.0 - alpha) * bs(j);
        if (bs(j) != 0.0)
            worst = std::max(worst, std::abs(grad - lambda * alpha * (bs(j) > 0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::max(0.0, std::abs(grad) - lambda * alpha));
    }
    return worst;
}

}  // namespace

TEST_CASE("ols examples") {
    MatrixXd z(5, 1);
    z << 1, 2, 3, 4, 5;
    const VectorXd y = 2.0 * z.col(0);
    const auto fit = ols(z, y);
    CHECK(std::abs(fit.beta(0)) < 1e-12);
    CHECK(std::abs(fit.beta(1) - 2.0) < 1e-12);

    const VectorXd y2 = VectorXd::LinSpaced(6, 1, 6);
    const auto icpt = ols(MatrixXd(6, 0), y2);
    REQUIRE(icpt.beta.size() == 1);
    CHECK(icpt.beta(0) == doctest::Approx(3.5));

    Rng rng(3);
    const MatrixXd a = randn(80, 6, rng);
    const VectorXd b = randn(80, 1, rng).col(0);
    const auto f = ols(a, b);
    const VectorXd resid = b - f.predict(a);
    CHECK((a.transpose() * resid).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(resid.sum()) < 1e-8);
}

TEST_CASE("ols names collinear columns") {
    Rng rng(1);
    MatrixXd z = randn(30, 3, rng);
    z.col(2) = z.col(0) * 2.0 - z.col(1);
    CHECK_THROWS_WITH_AS(ols(z, VectorXd::Ones(30), {"a", "b", "c"}), doctest::Contains("collinear"), DataError);
    MatrixXd k = randn(30, 2, rng);
    k.col(1).setConstant(4.0);
    CHECK_THROWS_WITH_AS(ols(k, VectorXd::Ones(30), {"a", "const"}), doctest::Contains("const"), DataError);
}

TEST_CASE("LinearFit json export") {
    MatrixXd z(4, 1);
    z << 0, 1, 2, 3;
    const auto fit = ols(z, VectorXd::LinSpaced(4, 1, 7), {"y_L0"});
    const auto j = nlohmann::json::parse(fit.to_json());
    CHECK(j["coefficients"]["y_L0"].get<double>() == doctest::Approx(2.0));
    CHECK(j["intercept"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("ar_bic selects one lag on a persistent AR(1)") {
    int hits = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        Rng rng(s);
        hits += ar_bic(ar1(400, 0.9, rng), 6).p == 1;
    }
    CHECK(hits >= 90);
}

TEST_CASE("ar_bic on white noise favors the smallest model") {
    int ones = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        Rng rng(1000 + s);
        const auto r = ar_bic(ar1(300, 0.0, rng), 6);
        CHECK(r.bic.size() == 6);
        ones += r.p == 1;
    }
    CHECK(ones > 50);
}

TEST_CASE("ar_bic with pmax 1 and errors") {
    Rng rng(2);
    CHECK(ar_bic(ar1(50, 0.5, rng), 1).p == 1);
    CHECK_THROWS_AS(ar_bic(std::vector<double>{1, 2, 3, 4}, 2), DataError);
}

TEST_CASE("ardi_bic on a planted factor model") {
    Rng rng(5);
    const int n = 200;
    MatrixXd design(n, 6 + 8 * 6);
    std::vector<std::string> names;
    for (int l = 0; l < 6; ++l) names.push_back("y_L" + std::to_string(l));
    for (int j = 1; j <= 8; ++j)
        for (int l = 0; l < 6; ++l) names.push_back("F" + std::to_string(j) + "_L" + std::to_string(l));
    design = randn(n, 54, rng);
    const VectorXd target = design.col(6) + noise(n, 1e-6, rng);
    const auto r = ardi_bic(design, names, target);
    CHECK(r.k >= 1);
    const VectorXd resid = target - r.fit.predict(design(Eigen::all, r.columns));
    CHECK(resid.norm() / std::sqrt(double(n)) < 1e-5);
}

TEST_CASE("ardi_bic with a one-point grid equals ols on that design") {
    Rng rng(6);
    const MatrixXd design = randn(60, 2, rng);
    const VectorXd target = design * VectorXd::Constant(2, 0.5) + noise(60, 1.0, rng);
    const std::vector<std::string> names{"y_L0", "F1_L0"};
    const auto r = ardi_bic(design, names, target, 1, 1, 1);
    const auto o = ols(design, target);
    CHECK((r.fit.beta - o.beta).norm() < 1e-12);
    CHECK_THROWS_AS(ardi_bic(design, names, target, 1, 1, 2), std::invalid_argument);
}

TEST_CASE("ardi_bic on a pure AR process picks a small k") {
    int small = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        Rng rng(70 + s);
        const auto y = ar1(260, 0.6, rng);
        const int n = 250;
        MatrixXd design(n, 6 + 4 * 6);
        VectorXd target(n);
        const MatrixXd f = randn(260, 4, rng);
        std::vector<std::string> names;
        for (int l = 0; l < 6; ++l) names.push_back("y_L" + std::to_string(l));
        for (int j = 1; j <= 4; ++j)
            for (int l = 0; l < 6; ++l) names.push_back("F" + std::to_string(j) + "_L" + std::to_string(l));
        for (int r = 0; r < n; ++r) {
            const int t = r + 8;
            for (int l = 0; l < 6; ++l) design(r, l) = y[t - l];
            for (int j = 0; j < 4; ++j)
                for (int l = 0; l < 6; ++l) design(r, 6 + j * 6 + l) = f(t - l, j);
            target(r) = y[t + 1];
        }
        const auto ardi = ardi_bic(design, names, target, 6, 6, 4);
        const auto ar = ar_bic(design.leftCols(6), target, 6);
        small += ardi.k == 1 && ardi.pf == 1;
        CHECK(ardi.bic - ar.bic[ar.p - 1] < 2.0 * std::log(double(n)));
    }
    CHECK(small >= 15);
}

TEST_CASE("lambda_max examples") {
    VectorXd z(4), y(4);
    z << 1, -1, 1, -1;
    y << 0.7, -0.7, 0.7, -0.7;
    CHECK(lambda_max(z, y, 1.0) == doctest::Approx(0.7));
    CHECK(lambda_max(z, y, 0.5) == doctest::Approx(1.4));
    CHECK_THROWS_AS(lambda_max(z, y, 0.0), std::invalid_argument);
}

TEST_CASE("enet at and above lambda_max is exactly zero") {
    Rng rng(9);
    const MatrixXd z = randn(100, 10, rng);
    const VectorXd y = z.col(0) + noise(100, 1.0, rng);
    const auto sc = column_scaling(z);
    const double lm = lambda_max(sc.apply(z), (y.array() - y.mean()).matrix(), 0.7);
    for (double f : {1.0, 1.0001, 2.0}) {
        const auto fit = enet_cd(z, y, {0.7, lm * f});
        CHECK((fit.beta.tail(10).array() == 0.0).all());
        CHECK(fit.beta(0) == doctest::Approx(y.mean()));
    }
    const auto below = enet_cd(z, y, {0.7, lm * 0.99});
    CHECK((below.beta.tail(10).array() != 0.0).any());
}

TEST_CASE("enet at lambda 0 matches ols") {
    Rng rng(10);
    const MatrixXd z = randn(120, 5, rng);
    const VectorXd y = z * VectorXd::LinSpaced(5, -1, 1) + noise(120, 0.5, rng);
    const auto o = ols(z, y);
    for (double a : {1.0, 0.5}) {
        const auto e = enet_cd(z, y, {a, 0.0});
        CHECK((e.beta - o.beta).cwiseAbs().maxCoeff() < 1e-8);
    }
    const auto r = enet_cd(z, y, {0.0, 0.0});
    CHECK((r.beta - o.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("alpha 0 matches the closed-form ridge") {
    Rng rng(11);
    const MatrixXd z = randn(60, 8, rng);
    const VectorXd y = z.col(1) - z.col(3) + noise(60, 1.0, rng);
    const auto sc = column_scaling(z);
    const MatrixXd zs = sc.apply(z);
    const VectorXd yc = y.array() - y.mean();
    for (double lam : {0.01, 0.3, 5.0}) {
        const MatrixXd a = zs.transpose() * zs + 60.0 * lam * MatrixXd::Identity(8, 8);
        const VectorXd bs = a.ldlt().solve(zs.transpose() * yc);
        const auto fit = enet_cd(z, y, {0.0, lam});
        CHECK((fit.beta.tail(8).cwiseProduct(sc.std) - bs).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("enet KKT conditions over random alpha and lambda") {
    Rng rng(12);
    const MatrixXd z = randn(50, 3, rng);
    const VectorXd y = z * Eigen::Vector3d(1.0, -0.5, 0.0) + noise(50, 0.7, rng);
    const auto sc = column_scaling(z);
    const double lm1 = lambda_max(sc.apply(z), (y.array() - y.mean()).matrix(), 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(0.01, 1.0);
        const double lam = lm1 * std::pow(10.0, rng.uniform(-4.0, 0.5));
        worst = std::max(worst, kkt_residual(z, y, enet_cd(z, y, {a, lam}), a, lam));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("enet standardization equivariance") {
    Rng rng(13);
    MatrixXd z = randn(80, 4, rng);
    const VectorXd y = z.col(0) * 2.0 + noise(80, 1.0, rng);
    const auto a = enet_cd(z, y, {0.5, 0.05});
    z.col(2) *= 7.5;
    const auto b = enet_cd(z, y, {0.5, 0.05});
    CHECK(std::abs(b.beta(3) - a.beta(3) / 7.5) < 1e-9);
    z.col(2) /= 7.5;
    CHECK((a.predict(z) - b.predict(MatrixXd(z * Eigen::Vector4d(1, 1, 7.5, 1).asDiagonal()))).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("lasso l1 norm is monotone along the lambda path") {
    Rng rng(14);
    const MatrixXd z = randn(100, 20, rng);
    const VectorXd y = z.leftCols(5) * VectorXd::Ones(5) + noise(100, 1.0, rng);
    const auto sc = column_scaling(z);
    const MatrixXd zs = sc.apply(z);
    const VectorXd yc = y.array() - y.mean();
    const double lm = lambda_max(zs, yc, 1.0);
    const auto grid = log_grid_desc(lm, lm * 1e-4, 100);
    const MatrixXd path = enet_path(zs, yc, 1.0, grid);
    for (int l = 1; l < 100; ++l) CHECK(path.col(l).lpNorm<1>() >= path.col(l - 1).lpNorm<1>() - 1e-9);
}

TEST_CASE("alpha grid") {
    const auto g = alpha_grid();
    CHECK(g.size() == 100);
    CHECK(g.front() == doctest::Approx(0.01));
    CHECK(g.back() == 1.0);
    CHECK(alpha_grid(0.25).size() == 4);
}

TEST_CASE("enet_tune shrinks hard on a pure-noise target") {
    int top = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        Rng rng(500 + s);
        const MatrixXd z = randn(100, 20, rng);
        const VectorXd y = noise(100, 1.0, rng);
        EnetTuneOptions opt;
        opt.alphas = {1.0};
        opt.seed = s;
        top += enet_tune(z, y, opt).lambda_index < 10;
    }
    CHECK(top >= 80);
}

TEST_CASE("enet_tune recovers a sparse support") {
    int ok = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        Rng rng(900 + s);
        const MatrixXd z = randn(300, 50, rng);
        const VectorXd y = 1.0 * z.col(3) - 1.0 * z.col(17) + noise(300, 1.0, rng);
        EnetTuneOptions opt;
        opt.alphas = {1.0};
        opt.seed = s;
        const auto t = enet_tune(z, y, opt);
        const auto fit = enet_cd(z, y, t.config);
        const VectorXd b = fit.beta.tail(50).cwiseAbs();
        VectorXd rest = b;
        rest(3) = rest(17) = 0.0;
        ok += b(3) > rest.maxCoeff() && b(17) > rest.maxCoeff();
    }
    CHECK(ok >= 80);
}

TEST_CASE("enet_tune is deterministic and breaks ties toward shrinkage") {
    Rng rng(15);
    const MatrixXd z = randn(60, 5, rng);
    const VectorXd y = z.col(0) + noise(60, 1.0, rng);
    EnetTuneOptions opt;
    opt.alphas = {0.5, 1.0};
    opt.n_lambda = 20;
    opt.seed = 4;
    const auto a = enet_tune(z, y, opt);
    opt.threads = 3;
    const auto b = enet_tune(z, y, opt);
    CHECK(a.config.lambda == b.config.lambda);
    CHECK(a.config.alpha == b.config.alpha);
    CHECK(a.cv_mse == b.cv_mse);

    const VectorXd flat = VectorXd::Constant(60, 2.0);
    const auto c = enet_tune(z, flat, opt);
    CHECK(c.lambda_index == 0);
    CHECK(c.config.alpha == 1.0);
    opt.alphas = {0.0, 1.0};
    CHECK_NOTHROW(enet_tune(z, y, opt));
}

TEST_CASE("rbf kernel examples") {
    MatrixXd a(2, 2);
    a << 0, 0, 1, 1;
    const double sigma = 1.0;
    const MatrixXd k = rbf_kernel(a, a, sigma);
    CHECK(k(0, 0) == 1.0);
    CHECK(k(1, 1) == 1.0);
    CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)));  // ||x - x'||^2 = 2 sigma^2
    CHECK(k(0, 1) == k(1, 0));
    CHECK_THROWS_AS(rbf_kernel(a, a, 0.0), std::invalid_argument);

    Rng rng(16);
    const MatrixXd r = randn(40, 3, rng);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(rbf_kernel(r, r, 0.8));
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("krr solve residual, interpolation and shrinkage") {
    Rng rng(17);
    const MatrixXd z = randn(30, 3, rng);
    const VectorXd y = z.col(0).array().sin().matrix() + noise(30, 0.1, rng);
    const auto fit = krr_fit(z, y, 1.0, 0.1);
    MatrixXd a = rbf_kernel(z, z, 1.0);
    a.diagonal().array() += 0.1;
    CHECK((a * fit.alpha_weights - y).norm() < 1e-8);

    const auto interp = krr_fit(z, y, 1.0, 1e-10);
    CHECK((krr_predict(interp, z) - y).cwiseAbs().maxCoeff() < 1e-6);

    const VectorXd yc = y.array() - y.mean();
    const auto heavy = krr_fit(z, yc, 1.0, 1e12);
    CHECK(krr_predict(heavy, z).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("krr predictions are linear in y") {
    Rng rng(18);
    const MatrixXd z = randn(25, 2, rng);
    const VectorXd y1 = noise(25, 1.0, rng), y2 = noise(25, 1.0, rng);
    const MatrixXd zn = randn(5, 2, rng);
    const VectorXd p1 = krr_predict(krr_fit(z, y1, 0.7, 0.05), zn);
    const VectorXd p2 = krr_predict(krr_fit(z, y2, 0.7, 0.05), zn);
    const VectorXd p12 = krr_predict(krr_fit(z, y1 + y2, 0.7, 0.05), zn);
    CHECK((p12 - p1 - p2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("krr_tune is deterministic and picks from the grid") {
    Rng rng(19);
    const MatrixXd z = randn(60, 3, rng);
    const VectorXd y = z.col(0).array().sin().matrix() + noise(60, 0.1, rng);
    KrrTuneOptions opt;
    opt.seed = 3;
    const auto a = krr_tune(z, y, opt);
    const auto b = krr_tune(z, y, opt);
    CHECK(a.sigma == b.sigma);
    CHECK(a.lambda == b.lambda);
    CHECK(std::find(opt.lambdas.begin(), opt.lambdas.end(), a.lambda) != opt.lambdas.end());
    CHECK(a.lambda < 1e2);
}
