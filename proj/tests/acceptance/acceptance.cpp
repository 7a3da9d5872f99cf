// Acceptance checks: one PASS/FAIL line per criterion. Tolerances and seed
// counts are fixed below; the exit status is non-zero if any gating check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dgp.hpp"
#include "macroml/common/linalg.hpp"
#include "macroml/common/rng.hpp"
#include "macroml/eval/dm.hpp"
#include "macroml/eval/poos.hpp"
#include "macroml/eval/report.hpp"
#include "macroml/factors/factors.hpp"
#include "macroml/features/features.hpp"
#include "macroml/linear/enet.hpp"
#include "macroml/linear/krr.hpp"
#include "macroml/linear/ols.hpp"
#include "macroml/mrf/mrf.hpp"
#include "macroml/nn/mlp.hpp"
#include "macroml/panel/panel.hpp"
#include "macroml/trees/trees.hpp"

using namespace macroml;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // runtime limit
    bool gating;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

MatrixXd randn(Index r, Index c, Rng& rng) {
    MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

std::vector<YearMonth> months(int n) {
    std::vector<YearMonth> d;
    for (int i = 0; i < n; ++i) d.push_back(YearMonth{2000, 1}.plus(i));
    return d;
}

// 1. restricted MRF equals RF

Outcome mrf_reduces_to_rf() {
    constexpr double tol = 1e-10;
    double worst = 0.0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        Rng data(1000 + s);
        const int n = 80 + 10 * static_cast<int>(s % 5);
        const int p = 3 + static_cast<int>(s % 7);
        const MatrixXd z = randn(n, p, data);
        VectorXd y = z.col(0) + randn(n, 1, data).col(0);
        for (Index t = 0; t < n; ++t) y(t) += z(t, p - 1) > 0.0 ? 1.0 : -0.5;
        const MatrixXd probe = randn(50, p, data);

        trees::ForestOptions fo;
        fo.trees = 100;
        fo.min_node = 3;
        fo.seed = s;
        mrf::MrfConfig mc;
        mc.trees = 100;
        mc.ridge_lambda = 0.0;
        mc.zeta = 0.0;
        mc.block_size = 1;
        mc.min_leaf = 3;
        mc.mtry_frac = static_cast<double>(trees::default_mtry(p)) / p;
        mc.seed = s;
        if (mrf::mrf_mtry(mc.mtry_frac, p) != trees::default_mtry(p)) return {false, "mtry mismatch"};
        const VectorXd rf = trees::fit_forest(z, y, fo).predict(probe);
        const VectorXd mr = mrf::fit_mrf(y, z, MatrixXd(n, 0), mc).predict(probe, MatrixXd(50, 0));
        worst = std::max(worst, (rf - mr).cwiseAbs().maxCoeff());
    }
    return {worst < tol, fmt("20 instances, max |MRF - RF| = %.3g (tol %.0e)", worst, tol)};
}

// 2. trees stay in the hull; ARRF extrapolates

Outcome hull_and_extrapolation() {
    int rf_out = 0, boost_out = 0;
    double boost_excess = 0.0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        Rng rng(2000 + s);
        const MatrixXd z = randn(120, 3, rng);
        const VectorXd y = 2.0 * z.col(0) - z.col(1) + 0.3 * randn(120, 1, rng).col(0);
        // every coordinate beyond the training range, on a random side
        MatrixXd probe(50, 3);
        for (Index i = 0; i < probe.rows(); ++i)
            for (Index j = 0; j < 3; ++j)
                probe(i, j) = rng.uniform() < 0.5 ? z.col(j).maxCoeff() + rng.uniform(0.1, 5.0)
                                                  : z.col(j).minCoeff() - rng.uniform(0.1, 5.0);
        trees::ForestOptions fo;
        fo.trees = 100;
        fo.seed = s;
        trees::BoostOptions bo;
        bo.eta = 0.1;
        bo.n_steps = 100;
        const VectorXd pf = trees::fit_forest(z, y, fo).predict(probe);
        const VectorXd pb = trees::fit_boost(z, y, bo).predict(probe);
        const double lo = y.minCoeff(), hi = y.maxCoeff();
        if (pf.minCoeff() < lo || pf.maxCoeff() > hi) ++rf_out;
        if (pb.minCoeff() < lo || pb.maxCoeff() > hi) {
            ++boost_out;
            boost_excess = std::max({boost_excess, pb.maxCoeff() - hi, lo - pb.minCoeff()});
        }
    }

    int exceed = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        Rng rng(3000 + s);
        const VectorXd series = macroml::testing::ar1_series(201, 0.9, 0.5, rng);
        const auto lag = macroml::testing::lag_matrix(series, 1);
        mrf::MrfConfig mc;
        mc.trees = 100;
        mc.seed = s;
        const auto m = mrf::fit_mrf(lag.target, lag.lags, lag.lags, mc);
        MatrixXd probe(1, 1);
        probe(0, 0) = 3.0 * lag.target.cwiseAbs().maxCoeff();
        if (m.predict(probe, probe)(0) > lag.target.maxCoeff()) ++exceed;
    }
    return {rf_out == 0 && boost_out == 0 && exceed >= 95,
            fmt("RF outside [min y, max y] in %d/100 seeds, Boosting in %d/100 (largest excess %.3g) (need 0 for "
                "both); ARRF above max y %d/100 (need >= 95)",
                rf_out, boost_out, boost_excess, exceed)};
}

// 3. elastic net

double kkt_residual(const MatrixXd& z, const VectorXd& y, const linear::LinearFit& fit, double alpha, double lambda) {
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

Outcome enet_correctness() {
    constexpr double kkt_tol = 1e-6, ols_tol = 1e-8;
    Rng rng(4000);
    double kkt = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int n = 40 + static_cast<int>(rng.index(80));
        const int p = 2 + static_cast<int>(rng.index(9));
        const MatrixXd z = randn(n, p, rng);
        const VectorXd y = z * VectorXd::LinSpaced(p, 1.0, -0.5) + 0.7 * randn(n, 1, rng).col(0);
        const auto sc = column_scaling(z);
        const double lm1 = linear::lambda_max(sc.apply(z), (y.array() - y.mean()).matrix(), 1.0);
        const double a = rng.uniform(0.01, 1.0);
        const double lam = lm1 * std::pow(10.0, rng.uniform(-4.0, 0.5));
        kkt = std::max(kkt, kkt_residual(z, y, linear::enet_cd(z, y, {a, lam}), a, lam));
    }

    double ols_gap = 0.0;
    bool zeros = true;
    for (int i = 0; i < 10; ++i) {
        const MatrixXd z = randn(120, 6, rng);
        const VectorXd y = z * VectorXd::LinSpaced(6, -1.0, 1.0) + 0.5 * randn(120, 1, rng).col(0);
        const auto o = linear::ols(z, y);
        for (double a : {1.0, 0.5, 0.0})
            ols_gap = std::max(ols_gap, (linear::enet_cd(z, y, {a, 0.0}).beta - o.beta).cwiseAbs().maxCoeff());
        const auto sc = column_scaling(z);
        for (double a : {1.0, 0.3}) {
            const double lm = linear::lambda_max(sc.apply(z), (y.array() - y.mean()).matrix(), a);
            for (double f : {1.0, 1.5, 10.0})
                zeros = zeros && (linear::enet_cd(z, y, {a, lm * f}).beta.tail(6).array() == 0.0).all();
        }
    }
    return {kkt < kkt_tol && ols_gap < ols_tol && zeros,
            fmt("KKT max %.2g (tol %.0e); lambda=0 vs OLS %.2g (tol %.0e); zero above lambda_max: %s", kkt, kkt_tol,
                ols_gap, ols_tol, zeros ? "yes" : "no")};
}

// 4. kernel ridge

Outcome krr_correctness() {
    constexpr double res_tol = 1e-8, interp_tol = 1e-6;
    double res = 0.0, interp = 0.0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        Rng rng(5000 + s);
        const MatrixXd z = randn(30, 3, rng);
        const VectorXd y = z.col(0).array().sin().matrix() + 0.1 * randn(30, 1, rng).col(0);
        const double lam = std::pow(10.0, rng.uniform(-3.0, 1.0));
        const auto fit = linear::krr_fit(z, y, 1.0, lam);
        MatrixXd a = linear::rbf_kernel(z, z, 1.0);
        a.diagonal().array() += lam;
        res = std::max(res, (a * fit.alpha_weights - y).norm());
        const auto near = linear::krr_fit(z, y, 1.0, 1e-10);
        interp = std::max(interp, (linear::krr_predict(near, z) - y).cwiseAbs().maxCoeff());
    }
    return {res < res_tol && interp < interp_tol,
            fmt("20 instances, system residual %.2g (tol %.0e), interpolation error %.2g (tol %.0e)", res, res_tol,
                interp, interp_tol)};
}

// 5. factor machinery

panel::Panel masked_rank2(std::uint64_t seed, panel::Panel& truth) {
    Rng rng(seed);
    const int T = 60, N = 10;
    const MatrixXd f = randn(T, 2, rng), l = randn(N, 2, rng);
    truth = panel::synth_dgp(T, N, 0, 1.0, seed);
    truth.values = f * l.transpose();
    panel::Panel p = truth;
    for (Index t = 0; t < T; ++t)
        for (Index j = 0; j < N; ++j)
            if (rng.uniform() < 0.1 && j != t % N) {
                p.mask(t, j) = false;
                p.values(t, j) = std::nan("");
            }
    return p;
}

Outcome factor_machinery() {
    constexpr double tele_tol = 1e-10, em_tol = 1e-6;
    int hits = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) hits += factors::pc_p2(panel::synth_dgp(200, 50, 3, 10.0, s).values, 15).k == 3;

    double tele = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const MatrixXd x = panel::standardize(panel::synth_dgp(100, 20, 3, 2.0, s)).panel.values;
        const auto fm = factors::extract_factors(x, 5);
        const auto d = factors::marginal_r2(x, fm);
        MatrixXd design(100, 6);
        design.col(0).setOnes();
        design.rightCols(5) = fm.F;
        for (Index i = 0; i < x.cols(); ++i) {
            const VectorXd beta = design.colPivHouseholderQr().solve(x.col(i));
            const double sst = (x.col(i).array() - x.col(i).mean()).square().sum();
            const double r2 = 1.0 - (x.col(i) - design * beta).squaredNorm() / sst;
            tele = std::max(tele, std::abs(d.mr2.row(i).sum() - r2));
        }
    }

    double em_err = 0.0;
    bool monotone = true;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        panel::Panel truth;
        const auto p = masked_rank2(6000 + s, truth);
        // the 1e-6 default stops on the step size, which leaves an error above
        // 1e-6 when EM converges slowly; the criterion is about the fixed point
        const auto [out, rep] = panel::balance_panel_em(p, {.k = 2, .tol = 1e-10, .max_iter = 5000});
        for (std::size_t i = 1; i < rep.objective_trace.size(); ++i)
            monotone = monotone && rep.objective_trace[i] <= rep.objective_trace[i - 1];
        for (Index t = 0; t < p.rows(); ++t)
            for (Index j = 0; j < p.cols(); ++j)
                if (!p.mask(t, j)) em_err = std::max(em_err, std::abs(out.values(t, j) - truth.values(t, j)));
    }
    return {hits >= 95 && tele < tele_tol && em_err < em_tol && monotone,
            fmt("PC_p2 k=3 in %d/100 (need >= 95); mR2 telescoping %.2g (tol %.0e); EM error %.2g (tol %.0e), "
                "monotone %s",
                hits, tele, tele_tol, em_err, em_tol, monotone ? "yes" : "no")};
}

// 6. DM size

Outcome dm_size() {
    Rng rng(7000);
    int rej = 0;
    std::vector<double> d(150);
    for (int s = 0; s < 1000; ++s) {
        for (auto& v : d) v = rng.normal();
        if (eval::dm_test(d, 1).p_value < 0.05) ++rej;
    }
    return {rej >= 30 && rej <= 70, fmt("rejections at 5%%: %d/1000 = %.1f%% (need 3%%..7%%)", rej, rej / 10.0)};
}

// 7. NN gradient

Outcome nn_gradient() {
    constexpr double tol = 1e-4;
    double worst = 0.0;
    int checked = 0, total = 0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        Rng rng(8000 + s);
        auto m = nn::mlp_init(6, {32, 16}, rng);
        for (int k = 0; k < m.layer_count(); ++k)
            for (auto& v : m.bias(k)) v = 0.1 * rng.normal();
        const MatrixXd z = randn(16, 6, rng);
        const VectorXd y = randn(16, 1, rng).col(0);
        for (double l1 : {0.0, 0.001}) {
            const auto g = nn::finite_diff_gradcheck(m, z, y, l1);
            worst = std::max(worst, g.max_rel_error);
            checked += g.checked;
            total += g.checked + g.skipped;
        }
    }
    return {worst < tol, fmt("10 inits, max relative error %.2g (tol %.0e), %d/%d parameters compared", worst, tol,
                             checked, total)};
}

// 8. MARX

Outcome marx_rotation() {
    constexpr double tol = 1e-12;
    Rng rng(9000);
    const MatrixXd x = randn(60, 4, rng);
    std::vector<std::string> names{"A", "B", "C", "D"};
    const auto dates = months(60);
    double err = 0.0;
    for (int P = 1; P <= 12; ++P) {
        const auto lags = features::build_lags(x, names, dates, P);
        const auto m = features::marx(x, names, dates, P);
        if (m.values.rows() != lags.values.rows()) return {false, fmt("row mismatch at P=%d", P)};
        for (Index r = 0; r < m.values.rows(); ++r)
            for (int j = 0; j < 4; ++j) {
                const VectorXd back = features::marx_inverse(m.values.row(r).segment(j * P, P).transpose());
                err = std::max(err, (back - lags.values.row(r).segment(j * P, P).transpose()).cwiseAbs().maxCoeff());
            }
    }
    const auto p1 = features::marx(x, names, dates, 1);
    const bool identity = p1.values == x;
    return {err < tol && identity,
            fmt("max inversion error %.2g over P=1..12 (tol %.0e); P=1 equals X exactly: %s", err, tol,
                identity ? "yes" : "no")};
}

// 9. POOS end to end

eval::ExperimentPlan poos_plan(std::uint64_t seed, std::vector<std::string> models) {
    eval::ExperimentPlan plan;
    plan.targets = {{"Y001", std::nullopt, std::nullopt}};
    plan.horizons = {1};
    plan.models = eval::select_models(models);
    plan.poos_start = YearMonth{2000, 1}.plus(140);
    plan.seed = seed;
    return plan;
}

panel::Panel poos_panel(std::uint64_t seed) {
    panel::SynthTargetOptions o;
    o.T = 200;
    o.n_predictors = 30;
    o.seed = seed;
    return panel::synth_target_panel(o);
}

bool bitwise_equal(const std::vector<eval::ForecastRecord>& a, const std::vector<eval::ForecastRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].target != b[i].target || a[i].model != b[i].model || a[i].h != b[i].h || a[i].origin != b[i].origin)
            return false;
        if (std::memcmp(&a[i].forecast, &b[i].forecast, sizeof(double)) != 0) return false;
        if (std::memcmp(&a[i].realized, &b[i].realized, sizeof(double)) != 0) return false;
    }
    return true;
}

Outcome poos_end_to_end() {
    int wins = 0, failures = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        auto plan = poos_plan(s, {"AR,BIC", "RW"});
        plan.threads = 4;
        const auto res = eval::run_poos(plan, poos_panel(s));
        failures += static_cast<int>(res.failures.size());
        const auto table = eval::build_eval_table(res.records, {eval::Window{"all", "all", std::nullopt, std::nullopt}});
        const auto* rw = table.find("all", "RW", "Y001", 1);
        if (rw && rw->ratio > 1.0) ++wins;
    }

    auto plan = poos_plan(11, {"AR,BIC", "RW", "ARDI,BIC", "LASSO", "E-NET+MARX", "KRR", "RF", "Boosting",
                               "FA-ARRF(2,2)", "NN-ARDI"});
    plan.poos_end = plan.poos_start.plus(3);
    plan.settings.forest_trees = 100;
    plan.settings.enet_lambdas = 30;
    plan.settings.enet_alpha_step = 0.25;
    plan.settings.mrf.trees = 50;
    plan.settings.nn.epochs_max = 30;
    plan.settings.nn.ensemble = 2;
    const auto raw = poos_panel(11);
    plan.threads = 1;
    const auto a = eval::run_poos(plan, raw);
    const auto b = eval::run_poos(plan, raw);
    plan.threads = 4;
    const auto c = eval::run_poos(plan, raw);
    std::ostringstream ca, cc;
    eval::write_records_csv(ca, a.records);
    eval::write_records_csv(cc, c.records);
    const bool repro = a.failures.empty() && bitwise_equal(a.records, b.records) &&
                       bitwise_equal(a.records, c.records) && ca.str() == cc.str();
    return {wins >= 90 && repro && failures == 0,
            fmt("RW/AR,BIC > 1 in %d/100 seeds (need >= 90), %d failed tasks; %zu records of 10 models "
                "bit-identical across runs and 1/4 threads: %s",
                wins, failures, a.records.size(), repro ? "yes" : "no")};
}

// 10. planted TVP

Outcome planted_tvp() {
    int sign_ok = 0, vi_all = 0;
    int vi_kind[3] = {0, 0, 0};
    const std::vector<std::string> names{"S1", "S2", "S3", "S4", "S5"};
    for (std::uint64_t s = 1; s <= 100; ++s) {
        const auto d = macroml::testing::planted_break(10000 + s);
        mrf::MrfConfig mc;
        mc.trees = 100;
        mc.seed = s;
        const auto m = mrf::fit_mrf(d.y, d.s, d.xt, mc);
        const auto p = mrf::gtvp_extract(m, d.s, months(static_cast<int>(d.y.size())), {"x"});
        const VectorXd& path = p.coefficients[1].mean;
        double up = 0.0, down = 0.0;
        int nu = 0, nd = 0;
        for (Index t = 0; t < path.size(); ++t) {
            if (d.beta(t) > 0) {
                up += path(t);
                ++nu;
            } else {
                down += path(t);
                ++nd;
            }
        }
        up /= std::max(nu, 1);
        down /= std::max(nd, 1);
        // regime means with the right signs and at least half the true shift of 2
        if (nu > 0 && nd > 0 && up > 0.0 && down < 0.0 && up - down > 1.0) ++sign_ok;

        const mrf::Holdout h{d.s_hold, d.xt_hold, d.y_hold};
        bool all = true;
        int k = 0;
        for (auto kind : {mrf::VIKind::OOB, mrf::VIKind::OOS, mrf::VIKind::BETA}) {
            mrf::VIOptions o;
            o.permutations = 5;
            o.seed = s;
            const bool first =
                mrf::mrf_variable_importance(m, d.s, d.xt, d.y, kind, names, o, h).front().column == d.j;
            vi_kind[k++] += first;
            all = all && first;
        }
        vi_all += all;
    }
    return {sign_ok >= 90 && vi_all >= 90,
            fmt("GTVP regimes sign-correct in %d/100 (need >= 90); S_j ranked first OOB %d, OOS %d, BETA %d, all "
                "three %d/100 (need >= 90)",
                sign_ok, vi_kind[0], vi_kind[1], vi_kind[2], vi_all)};
}

// 11. format fixtures

std::vector<eval::ForecastRecord> fixture_records() {
    std::vector<eval::ForecastRecord> recs;
    Rng rng(12000);
    const YearMonth start{2008, 1};
    for (int i = 1; i <= 7; ++i)
        for (int t = 0; t < 150; ++t) {
            const double y = rng.normal();
            const double e = rng.normal();
            const auto o = start.plus(t);
            const std::string id = "T" + std::to_string(i);
            recs.push_back({id, "AR,BIC", 1, o, y + e, y});
            recs.push_back({id, "RF", 1, o, y + 0.8 * e, y});
        }
    return recs;
}

Outcome format_fixtures() {
    std::vector<std::string> bad;
    if (eval::format_cell(1.296, 0.004) != "1.30***") bad.push_back("cell");
    if (eval::format_cell(0.874, 0.03) != "0.87**" || eval::format_cell(1.04, 0.08) != "1.04*" ||
        eval::format_cell(1.04, 0.2) != "1.04")
        bad.push_back("stars");

    const auto p = panel::synth_dgp(120, 30, 3, 10.0, 1);
    const MatrixXd x = panel::standardize(p).panel.values;
    const auto diag = factors::marginal_r2(x, factors::extract_factors(x, 3));
    std::ostringstream ft;
    factors::write_factor_table_text(ft, p, diag, 10);
    const std::string fts = ft.str();
    for (const char* h : {"mR2(1)", "mR2(2)", "mR2(3)"})
        if (fts.find(h) == std::string::npos) bad.push_back("factor table header");
    // header, rule, then one line per rank with the factors side by side
    std::istringstream lines(fts);
    int n_lines = 0, side_by_side = 0;
    for (std::string line; std::getline(lines, line);) {
        if (line.empty()) continue;
        ++n_lines;
        if (std::count(line.begin(), line.end(), '|') == 2) ++side_by_side;
    }
    if (n_lines != 12 || side_by_side != 11) bad.push_back("factor table rows");

    const auto table = eval::build_eval_table(fixture_records(), eval::default_windows());
    std::ostringstream rt;
    eval::write_eval_text(rt, table);
    const std::string rts = rt.str();
    if (rts.rfind("All Sample (2008-2020)\n", 0) != 0) bad.push_back("table label");
    if (rts.find(", Continued") == std::string::npos) bad.push_back("continued block");
    if (rts.find("AR,BIC          1.00") == std::string::npos) bad.push_back("benchmark row");
    if (rts.find("h=1") == std::string::npos) bad.push_back("horizon row");
    if (table.find("full", "RF", "T1", 1)->text.find('*') == std::string::npos) bad.push_back("DM stars");

    std::string detail = "cell \"" + eval::format_cell(1.296, 0.004) + "\", factor table and report layouts";
    for (const auto& b : bad) detail += "; bad " + b;
    return {bad.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    // optional arguments select criteria by number
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    const std::vector<Criterion> criteria{
        {1, "MRF reduces to RF", 120, true, mrf_reduces_to_rf},
        {2, "no-extrapolation vs extrapolation", 120, true, hull_and_extrapolation},
        {3, "elastic net correctness", 60, true, enet_correctness},
        {4, "KRR correctness", 30, true, krr_correctness},
        {5, "factor machinery", 180, true, factor_machinery},
        {6, "DM test size", 60, true, dm_size},
        {7, "NN gradient check", 60, true, nn_gradient},
        {8, "MARX rotation", 10, true, marx_rotation},
        {9, "POOS end to end", 600, true, poos_end_to_end},
        {10, "planted TVP recovery", 300, true, planted_tvp},
        {11, "format fixtures", 60, false, format_fixtures},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass && c.gating) ++failed;
        std::printf("[%s] C%-2d %s: %s (%.1fs, limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s, c.gating ? "" : " [non-gating]");
        std::fflush(stdout);
    }
    std::printf("%d gating criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
