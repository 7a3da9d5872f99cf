#include <cmath>
#include <sstream>

#include "doctest.h"
#include "macroml/common/error.hpp"
#include "macroml/common/rng.hpp"
#include "macroml/trees/trees.hpp"

using namespace macroml;
using namespace macroml::trees;

namespace {

MatrixXd randu(Index r, Index c, Rng& rng) {
    MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = rng.uniform();
    return m;
}

VectorXd signal(const MatrixXd& z, Rng& rng, double sd) {
    VectorXd y(z.rows());
    for (Index i = 0; i < z.rows(); ++i) y(i) = std::sin(3.0 * z(i, 0)) + 2.0 * (z(i, 1) > 0.5) + sd * rng.normal();
    return y;
}

// Rows far outside the training box in every direction.
MatrixXd out_of_range(Index r, Index c, Rng& rng) {
    MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = (rng.uniform() < 0.5 ? -1.0 : 2.0) * (1.0 + 10.0 * rng.uniform());
    return m;
}

bool same_trees(const RegressionTree& a, const RegressionTree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t k = 0; k < a.nodes.size(); ++k) {
        const auto &x = a.nodes[k], &y = b.nodes[k];
        if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left || x.value != y.value ||
            x.count != y.count)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("fit_tree examples") {
    Rng rng(1);
    MatrixXd z(4, 1);
    z << 0, 0, 1, 1;
    VectorXd y(4);
    y << 0, 0, 1, 1;
    const auto t = fit_tree(z, y, {1, 0, 0}, rng);
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == 0.5);
    CHECK(t.nodes[t.nodes[0].left].value == 0.0);
    CHECK(t.nodes[t.nodes[0].right].value == 1.0);

    const VectorXd flat = VectorXd::Constant(4, 3.25);
    const auto c = fit_tree(z, flat, {1, 0, 0}, rng);
    CHECK(c.nodes.size() == 1);
    CHECK(c.nodes[0].value == 3.25);

    const MatrixXd zr = randu(50, 3, rng);
    const VectorXd yr = signal(zr, rng, 1.0);
    const auto full = fit_tree(zr, yr, {1, 0, 0}, rng);
    CHECK((full.predict(zr) - yr).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(fit_tree(MatrixXd(0, 2), VectorXd(0), {}, rng), DataError);
}

TEST_CASE("tree invariants: leaf sizes and leaf means") {
    Rng rng(2);
    const MatrixXd z = randu(200, 4, rng);
    const VectorXd y = signal(z, rng, 0.5);
    for (int min_node : {1, 3, 7}) {
        const auto t = fit_tree(z, y, {min_node, 2, 0}, rng);
        std::vector<double> sum(t.nodes.size(), 0.0);
        std::vector<int> cnt(t.nodes.size(), 0);
        for (Index i = 0; i < z.rows(); ++i) {
            const int l = t.leaf_of(z, i);
            sum[l] += y(i);
            ++cnt[l];
        }
        for (std::size_t k = 0; k < t.nodes.size(); ++k) {
            if (t.nodes[k].feature >= 0) continue;
            CHECK(cnt[k] >= min_node);
            CHECK(cnt[k] == t.nodes[k].count);
            CHECK(t.nodes[k].value == doctest::Approx(sum[k] / cnt[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("split ties go to the lowest feature") {
    Rng rng(3);
    MatrixXd z(6, 2);
    z << 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1;
    VectorXd y(6);
    y << 1, 1, 1, 5, 5, 5;
    const auto t = fit_tree(z, y, {1, 0, 0}, rng);
    CHECK(t.nodes[0].feature == 0);
}

TEST_CASE("single tree does not depend on row order") {
    Rng data(4);
    const MatrixXd z = randu(80, 3, data);
    const VectorXd y = signal(z, data, 0.3);
    const auto perm = data.permutation(80);
    MatrixXd zp(80, 3);
    VectorXd yp(80);
    for (int i = 0; i < 80; ++i) {
        zp.row(i) = z.row(perm[i]);
        yp(i) = y(perm[i]);
    }
    Rng a(9), b(9);
    const auto ta = fit_tree(z, y, {3, 0, 0}, a);
    const auto tb = fit_tree(zp, yp, {3, 0, 0}, b);
    const MatrixXd probe = randu(40, 3, data);
    CHECK((ta.predict(probe) - tb.predict(probe)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("presorted rows grow the same trees") {
    Rng data(14);
    const MatrixXd z = randu(90, 5, data);
    std::vector<int> rows;
    for (int i = 0; i < 90; ++i) rows.push_back(data.index(90));
    const auto pre = presort_rows(z, rows);
    for (int k = 0; k < 3; ++k) {
        const VectorXd y = signal(z, data, 0.5);
        Rng a(k), b(k);
        const auto direct = fit_tree(z, y, rows, {2, 2, 0}, a);
        const auto reused = fit_tree(pre, y, {2, 2, 0}, b);
        REQUIRE(direct.nodes.size() == reused.nodes.size());
        for (std::size_t i = 0; i < direct.nodes.size(); ++i) {
            CHECK(direct.nodes[i].feature == reused.nodes[i].feature);
            CHECK(direct.nodes[i].threshold == reused.nodes[i].threshold);
            CHECK(direct.nodes[i].value == reused.nodes[i].value);
        }
    }
}

TEST_CASE("forest is deterministic across thread counts") {
    Rng rng(5);
    const MatrixXd z = randu(120, 6, rng);
    const VectorXd y = signal(z, rng, 0.5);
    ForestOptions o;
    o.trees = 60;
    o.seed = 77;
    const auto a = fit_forest(z, y, o);
    o.threads = 4;
    const auto b = fit_forest(z, y, o);
    for (std::size_t k = 0; k < a.trees.size(); ++k) CHECK(same_trees(a.trees[k], b.trees[k]));
    CHECK(a.oob == b.oob);
    const MatrixXd probe = randu(30, 6, rng);
    CHECK((a.predict(probe).array() == b.predict(probe).array()).all());
    CHECK(a.trees.size() == 60);
    CHECK(a.trees[0].mtry == 2);
}

TEST_CASE("forest with one unbagged tree equals fit_tree") {
    Rng rng(6);
    const MatrixXd z = randu(60, 5, rng);
    const VectorXd y = signal(z, rng, 0.5);
    ForestOptions o;
    o.trees = 1;
    o.bootstrap = false;
    o.mtry = 5;
    o.min_node = 1;
    o.seed = 11;
    const auto f = fit_forest(z, y, o);
    Rng r(derive_seed(11, {0}));
    const auto t = fit_tree(z, y, {1, 5, 0}, r);
    CHECK(same_trees(f.trees[0], t));
    CHECK(f.oob[0].empty());
}

// Boosting has no such bound: sums of shrunken residual-mean leaves can leave
// the range of y off-sample, so only the forest is checked here.
TEST_CASE("forest stays inside the training range of y") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
        Rng rng(100 + s);
        const MatrixXd z = randu(100, 4, rng);
        const VectorXd y = signal(z, rng, 1.0);
        const MatrixXd probe = out_of_range(200, 4, rng);
        ForestOptions o;
        o.trees = 50;
        o.seed = s;
        const VectorXd pf = fit_forest(z, y, o).predict(probe);
        CHECK(pf.minCoeff() >= y.minCoeff());
        CHECK(pf.maxCoeff() <= y.maxCoeff());
    }
}

TEST_CASE("forest prediction variance shrinks with more trees") {
    Rng rng(7);
    const MatrixXd z = randu(100, 4, rng);
    const VectorXd y = signal(z, rng, 1.0);
    const MatrixXd probe = randu(50, 4, rng);
    auto spread = [&](int B) {
        ForestOptions o;
        o.trees = B;
        o.seed = 1;
        const VectorXd a = fit_forest(z, y, o).predict(probe);
        o.seed = 2;
        const VectorXd b = fit_forest(z, y, o).predict(probe);
        return (a - b).squaredNorm();
    };
    CHECK(spread(250) < spread(10));
}

TEST_CASE("oob importance and csv") {
    Rng rng(8);
    const MatrixXd z = randu(150, 4, rng);
    const VectorXd y = signal(z, rng, 0.2);
    ForestOptions o;
    o.trees = 100;
    o.seed = 3;
    const auto f = fit_forest(z, y, o);
    const VectorXd vi = oob_permutation_importance(f, z, y, 5);
    CHECK(vi(1) > vi(2));
    CHECK(vi(1) > vi(3));
    CHECK(f.split_gain(1) > f.split_gain(3));
    std::ostringstream os;
    write_importance_csv(os, {"a", "b", "c", "d"}, f.split_gain, vi);
    CHECK(os.str().rfind("feature,split_gain,oob_permutation_pct\na,", 0) == 0);
}

TEST_CASE("boosting examples") {
    Rng rng(9);
    const MatrixXd z = randu(60, 3, rng);
    const VectorXd y = signal(z, rng, 1.0);

    const auto zero = fit_boost(z, y, {0.0, 20, 10, 1});
    CHECK((zero.predict(z).array() == y.mean()).all());

    const auto full = fit_boost(z, y, {1.0, 30, 10, 1});
    for (std::size_t s = 1; s < full.train_mse.size(); ++s) CHECK(full.train_mse[s] <= full.train_mse[s - 1]);
    CHECK(full.train_mse.back() < 1e-20);

    CHECK_THROWS_AS(fit_boost(z, y, {1.5, 10, 10, 1}), std::invalid_argument);
    CHECK_THROWS_AS(fit_boost(z, y, {0.5, 0, 10, 1}), std::invalid_argument);
}

TEST_CASE("boosting training mse is non-increasing") {
    for (std::uint64_t s = 1; s <= 20; ++s) {
        Rng rng(200 + s);
        const MatrixXd z = randu(80, 5, rng);
        const VectorXd y = signal(z, rng, 1.0);
        const auto m = fit_boost(z, y, {rng.uniform(0.01, 1.0), 50, 10, 3});
        bool mono = true;
        for (std::size_t k = 1; k < m.train_mse.size(); ++k) mono &= m.train_mse[k] <= m.train_mse[k - 1] + 1e-15;
        CHECK(mono);
        CHECK(m.trees[0].depth() <= 10);
    }
}

TEST_CASE("boost_tune prefers few steps on white noise") {
    int few = 0;
    for (std::uint64_t s = 1; s <= 15; ++s) {
        Rng rng(300 + s);
        const MatrixXd z = randu(80, 3, rng);
        VectorXd y(80);
        for (auto& v : y) v = rng.normal();
        BoostTuneOptions o;
        o.seed = s;
        o.threads = 4;
        few += boost_tune(z, y, o).n_steps == 25;
    }
    CHECK(few > 7);
}

TEST_CASE("boost_tune is deterministic and beats the overfit configuration") {
    Rng rng(10);
    const MatrixXd z = randu(100, 3, rng);
    const VectorXd y = signal(z, rng, 0.5);
    BoostTuneOptions o;
    o.seed = 4;
    const auto a = boost_tune(z, y, o);
    o.threads = 3;
    const auto b = boost_tune(z, y, o);
    CHECK(a.eta == b.eta);
    CHECK(a.n_steps == b.n_steps);
    CHECK(a.cv_mse == b.cv_mse);
    BoostTuneOptions over = o;
    over.etas = {1.0};
    over.steps = {500};
    CHECK(a.cv_mse <= boost_tune(z, y, over).cv_mse);
}
