#include "macroml/mrf/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/parallel.hpp"

namespace macroml::mrf {

namespace {

// Flat sufficient statistics of a weighted ridge fit: A (d x d, row major),
// b (d), yy. With d = 1 and unit weights these are (count, sum y, sum y^2)
// and every operation below reduces to the random forest's arithmetic.
struct Stats {
    int d = 1;
    std::vector<double> v;

    explicit Stats(int dim) : d(dim), v(static_cast<std::size_t>(dim * dim + dim + 1), 0.0) {}
    double* a() { return v.data(); }
    double* b() { return v.data() + d * d; }
    double& yy() { return v[static_cast<std::size_t>(d * d + d)]; }
    void add(const std::vector<double>& p) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += p[k];
    }
    void set_minus(const Stats& x, const Stats& y) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = x.v[k] - y.v[k];
    }
};

// Solves (A + lambda D) beta = b by an unpivoted LDL' factorization, with D
// the identity minus its intercept entry. Returns false when a pivot is not
// positive. For d = 1 this is beta = b / A exactly.
bool solve_leaf(Stats& st, double lambda, double* beta, double* work) {
    const int d = st.d;
    double* m = work;            // d x d
    double* dg = work + d * d;   // d
    const double* a = st.a();
    double scale = 0.0;
    for (int i = 0; i < d; ++i) scale = std::max(scale, std::abs(a[i * d + i]));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m[i * d + j] = a[i * d + j] + (i == j && i > 0 ? lambda : 0.0);
    for (int j = 0; j < d; ++j) {
        double dj = m[j * d + j];
        for (int k = 0; k < j; ++k) dj -= m[j * d + k] * m[j * d + k] * dg[k];
        if (!(dj > 1e-12 * scale) || !std::isfinite(dj)) return false;
        dg[j] = dj;
        for (int i = j + 1; i < d; ++i) {
            double l = m[i * d + j];
            for (int k = 0; k < j; ++k) l -= m[i * d + k] * m[j * d + k] * dg[k];
            m[i * d + j] = l / dj;
        }
    }
    const double* b = st.b();
    for (int i = 0; i < d; ++i) {
        double z = b[i];
        for (int k = 0; k < i; ++k) z -= m[i * d + k] * beta[k];
        beta[i] = z;
    }
    for (int i = 0; i < d; ++i) beta[i] /= dg[i];
    for (int i = d - 1; i >= 0; --i)
        for (int k = i + 1; k < d; ++k) beta[i] -= m[k * d + i] * beta[k];
    return true;
}

// yy - b'beta: the minimized objective (ridge penalty included).
double leaf_loss(Stats& st, double lambda, double* beta, double* work) {
    if (!solve_leaf(st, lambda, beta, work)) return std::numeric_limits<double>::infinity();
    double dot = 0.0;
    const double* b = st.b();
    for (int k = 0; k < st.d; ++k) dot += b[k] * beta[k];
    return st.yy() - dot;
}

struct Engine {
    const MatrixXd& s;
    const VectorXd& y;
    MatrixXd x1;
    MrfConfig cfg;
    int d;
    int mtry;
    std::vector<std::vector<double>> contrib;  // per training row: podium-weighted stats

    Engine(const MatrixXd& s_, const MatrixXd& xt, const VectorXd& y_, const MrfConfig& c)
        : s(s_), y(y_), x1(with_intercept(xt)), d(static_cast<int>(xt.cols()) + 1) {
        if (s.rows() != y.size() || xt.rows() != y.size()) throw std::invalid_argument("mrf: row count mismatch");
        if (s.cols() == 0 || s.rows() == 0) throw DataError("mrf: empty data");
        if (!s.allFinite() || !xt.allFinite() || !y.allFinite()) throw DataError("mrf: non-finite input");
        cfg = resolve_config(c, d);
        mtry = mrf_mtry(cfg.mtry_frac, s.cols());
        const int T = static_cast<int>(y.size());
        contrib.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(d * d + d + 1), 0.0));
        for (int t = 0; t < T; ++t) {
            auto& p = contrib[t];
            for (int off = -2; off <= 2; ++off) {
                const int u = t + off;
                if (u < 0 || u >= T) continue;
                const double w = off == 0 ? 1.0 : (std::abs(off) == 1 ? cfg.zeta : cfg.zeta * cfg.zeta);
                if (w == 0.0) continue;
                for (int i = 0; i < d; ++i) {
                    const double wx = w * x1(u, i);
                    for (int j = 0; j < d; ++j) p[i * d + j] += wx * x1(u, j);
                    p[d * d + i] += wx * y(u);
                }
                p[d * d + d] += w * y(u) * y(u);
            }
        }
    }

    Stats node_stats(const std::vector<int>& rows) const {
        Stats st(d);
        for (int r : rows) st.add(contrib[r]);
        return st;
    }

    SplitChoice search(const std::vector<int>& rows, Stats& total, Rng& rng) const {
        SplitChoice best;
        best.loss = std::numeric_limits<double>::infinity();
        const int n = static_cast<int>(rows.size());
        const auto feats = rng.sample_without_replacement(static_cast<int>(s.cols()), mtry);
        std::vector<std::pair<double, int>> ord(rows.size());
        std::vector<double> beta(static_cast<std::size_t>(d)), work(static_cast<std::size_t>(d * d + d));
        Stats left(d), right(d);
        for (int j : feats) {
            for (int i = 0; i < n; ++i) ord[i] = {s(rows[i], j), i};
            std::sort(ord.begin(), ord.end());
            std::fill(left.v.begin(), left.v.end(), 0.0);
            for (int i = 0; i + 1 < n; ++i) {
                left.add(contrib[rows[ord[i].second]]);
                const int nl = i + 1;
                if (nl < cfg.min_leaf) continue;
                if (n - nl < cfg.min_leaf) break;
                if (ord[i].first == ord[i + 1].first) continue;
                right.set_minus(total, left);
                const double loss = leaf_loss(left, cfg.ridge_lambda, beta.data(), work.data()) +
                                    leaf_loss(right, cfg.ridge_lambda, beta.data(), work.data());
                if (loss < best.loss) {
                    best.loss = loss;
                    best.feature = j;
                    best.threshold = ord[i].first + 0.5 * (ord[i + 1].first - ord[i].first);
                    if (!(best.threshold < ord[i + 1].first)) best.threshold = ord[i].first;
                }
            }
        }
        return best;
    }

    int grow(std::vector<MrfNode>& nodes, const std::vector<int>& rows, Rng& rng) const {
        Stats total = node_stats(rows);
        const int id = static_cast<int>(nodes.size());
        MrfNode leaf;
        leaf.beta.resize(d);
        std::vector<double> work(static_cast<std::size_t>(d * d + d));
        if (!solve_leaf(total, cfg.ridge_lambda, leaf.beta.data(), work.data()))
            throw DataError("mrf: singular leaf system (raise ridge_lambda or min_leaf)");
        leaf.count = static_cast<int>(rows.size());
        nodes.push_back(std::move(leaf));

        const int n = static_cast<int>(rows.size());
        if (n < 2 * cfg.min_leaf) return id;
        const double y0 = y(rows[0]);
        if (std::all_of(rows.begin(), rows.end(), [&](int r) { return y(r) == y0; })) return id;
        const SplitChoice sc = search(rows, total, rng);
        if (sc.feature < 0) return id;

        std::vector<int> lrows, rrows;
        for (int r : rows) (s(r, sc.feature) <= sc.threshold ? lrows : rrows).push_back(r);
        nodes[id].feature = sc.feature;
        nodes[id].threshold = sc.threshold;
        nodes[id].beta.resize(0);
        const int l = grow(nodes, lrows, rng);
        nodes[id].left = l;
        const int r = grow(nodes, rrows, rng);
        nodes[id].right = r;
        return id;
    }
};

double row_dot(const MatrixXd& x1, Index row, const VectorXd& beta) {
    double v = 0.0;
    for (Index k = 0; k < beta.size(); ++k) v += x1(row, k) * beta(k);
    return v;
}

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

// Out-of-bag mean beta per row; rows never out of bag are NaN.
MatrixXd oob_betas(const MrfModel& m, const MatrixXd& s) {
    MatrixXd out = MatrixXd::Zero(s.rows(), m.d);
    Eigen::VectorXi count = Eigen::VectorXi::Zero(s.rows());
    for (std::size_t b = 0; b < m.trees.size(); ++b)
        for (int i : m.oob[b]) {
            out.row(i) += m.trees[b].beta(s, i).transpose();
            ++count(i);
        }
    for (Index i = 0; i < s.rows(); ++i)
        out.row(i) = count(i) ? (out.row(i) / count(i)).eval()
                              : RowVectorXd::Constant(m.d, std::numeric_limits<double>::quiet_NaN());
    return out;
}

double beta_shift(const MatrixXd& base, const MatrixXd& perm) {
    double num = 0.0, var = 0.0, mag = 0.0;
    int n = 0;
    RowVectorXd centre = RowVectorXd::Zero(base.cols());
    for (Index i = 0; i < base.rows(); ++i)
        if (base.row(i).allFinite()) {
            centre += base.row(i);
            ++n;
        }
    if (n == 0) return 0.0;
    centre /= n;
    for (Index i = 0; i < base.rows(); ++i) {
        if (!base.row(i).allFinite()) continue;
        num += (perm.row(i) - base.row(i)).squaredNorm();
        var += (base.row(i) - centre).squaredNorm();
        mag += base.row(i).squaredNorm();
    }
    const double den = var > 0.0 ? var : mag;
    return den > 0.0 ? 100.0 * std::sqrt(num / den) : 0.0;
}

CoefficientPath summarize(const std::string& name, const std::vector<std::vector<double>>& per_row) {
    const Index n = static_cast<Index>(per_row.size());
    CoefficientPath p{name, VectorXd(n), VectorXd(n), VectorXd(n), VectorXd(n), VectorXd(n)};
    for (Index t = 0; t < n; ++t) {
        std::vector<double> v = per_row[t];
        if (v.empty()) {
            p.mean(t) = p.lo68(t) = p.hi68(t) = p.lo90(t) = p.hi90(t) = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        std::sort(v.begin(), v.end());
        p.mean(t) = mean(v);
        p.lo68(t) = quantile_sorted(v, 0.16);
        p.hi68(t) = quantile_sorted(v, 0.84);
        p.lo90(t) = quantile_sorted(v, 0.05);
        p.hi90(t) = quantile_sorted(v, 0.95);
    }
    return p;
}

}  // namespace

std::vector<double> podium_weights(int center, double zeta, int T) {
    if (!(zeta >= 0.0 && zeta < 1.0)) throw std::invalid_argument("podium_weights: zeta must be in [0, 1)");
    if (center < 0 || center >= T) throw std::invalid_argument("podium_weights: center out of range");
    std::vector<double> w(static_cast<std::size_t>(T), 0.0);
    w[center] = 1.0;
    for (int off : {1, 2}) {
        const double v = off == 1 ? zeta : zeta * zeta;
        if (center - off >= 0) w[center - off] = v;
        if (center + off < T) w[center + off] = v;
    }
    return w;
}

VectorXd ridge_wls(const MatrixXd& x1, const VectorXd& y, const VectorXd& w, double lambda) {
    if (x1.rows() != y.size() || w.size() != y.size()) throw std::invalid_argument("ridge_wls: size mismatch");
    if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_wls: lambda must be >= 0");
    if (!(w.sum() > 0.0) || (w.array() < 0.0).any()) throw std::invalid_argument("ridge_wls: weights must be >= 0 with positive sum");
    const int d = static_cast<int>(x1.cols());
    Stats st(d);
    for (Index t = 0; t < y.size(); ++t) {
        if (w(t) == 0.0) continue;
        for (int i = 0; i < d; ++i) {
            const double wx = w(t) * x1(t, i);
            for (int j = 0; j < d; ++j) st.a()[i * d + j] += wx * x1(t, j);
            st.b()[i] += wx * y(t);
        }
    }
    VectorXd beta(d);
    std::vector<double> work(static_cast<std::size_t>(d * d + d));
    if (!solve_leaf(st, lambda, beta.data(), work.data())) throw DataError("ridge_wls: singular system");
    return beta;
}

MrfConfig resolve_config(MrfConfig cfg, int d) {
    if (cfg.trees < 1) throw std::invalid_argument("mrf: need at least one tree");
    if (!(cfg.zeta >= 0.0 && cfg.zeta < 1.0)) throw std::invalid_argument("mrf: zeta must be in [0, 1)");
    if (!(cfg.ridge_lambda >= 0.0)) throw std::invalid_argument("mrf: ridge_lambda must be >= 0");
    if (!(cfg.mtry_frac > 0.0 && cfg.mtry_frac <= 1.0)) throw std::invalid_argument("mrf: mtry_frac must be in (0, 1]");
    if (cfg.block_size < 1) throw std::invalid_argument("mrf: block_size must be >= 1");
    if (cfg.min_leaf == 0) cfg.min_leaf = std::max(10, 2 * d);
    if (cfg.min_leaf < d) throw std::invalid_argument("mrf: min_leaf must be >= dim X~ + 1");
    return cfg;
}

int mrf_mtry(double frac, Index p) {
    const int m = static_cast<int>(std::ceil(frac * static_cast<double>(p) - 1e-9));
    return std::clamp(m, 1, static_cast<int>(p));
}

MatrixXd with_intercept(const MatrixXd& xt) {
    MatrixXd x1(xt.rows(), xt.cols() + 1);
    x1.col(0).setOnes();
    x1.rightCols(xt.cols()) = xt;
    return x1;
}

std::vector<int> block_bootstrap(int T, int block, Rng& rng) {
    block = std::min(block, T);
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(T));
    while (static_cast<int>(rows.size()) < T) {
        const int start = static_cast<int>(rng.index(static_cast<std::size_t>(T - block + 1)));
        for (int k = 0; k < block && static_cast<int>(rows.size()) < T; ++k) rows.push_back(start + k);
    }
    return rows;
}

int MrfTree::leaf_of(const MatrixXd& s, Index row) const {
    int k = 0;
    while (nodes[k].feature >= 0) k = s(row, nodes[k].feature) <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
    return k;
}

VectorXd MrfModel::predict(const MatrixXd& s, const MatrixXd& xt) const {
    if (xt.cols() + 1 != d || s.rows() != xt.rows()) throw std::invalid_argument("mrf predict: shape mismatch");
    const MatrixXd x1 = with_intercept(xt);
    VectorXd out(s.rows());
    for (Index i = 0; i < s.rows(); ++i) {
        double sum = 0.0;
        for (const auto& t : trees) sum += row_dot(x1, i, t.beta(s, i));
        out(i) = sum / static_cast<double>(trees.size());
    }
    return out;
}

VectorXd MrfModel::oob_predict(const MatrixXd& s, const MatrixXd& xt) const {
    const MatrixXd x1 = with_intercept(xt);
    VectorXd sum = VectorXd::Zero(s.rows());
    Eigen::VectorXi count = Eigen::VectorXi::Zero(s.rows());
    for (std::size_t b = 0; b < trees.size(); ++b)
        for (int i : oob[b]) {
            sum(i) += row_dot(x1, i, trees[b].beta(s, i));
            ++count(i);
        }
    VectorXd out(s.rows());
    for (Index i = 0; i < s.rows(); ++i)
        out(i) = count(i) ? sum(i) / count(i) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

MatrixXd MrfModel::tree_betas(const MatrixXd& s, Index row) const {
    MatrixXd out(static_cast<Index>(trees.size()), d);
    for (std::size_t b = 0; b < trees.size(); ++b) out.row(static_cast<Index>(b)) = trees[b].beta(s, row).transpose();
    return out;
}

SplitChoice mrf_split_search(const std::vector<int>& rows, const MatrixXd& s, const MatrixXd& xt, const VectorXd& y,
                             const MrfConfig& cfg, Rng& rng) {
    const Engine e(s, xt, y, cfg);
    if (static_cast<int>(rows.size()) < 2 * e.cfg.min_leaf) return {};
    Stats total = e.node_stats(rows);
    return e.search(rows, total, rng);
}

MrfModel fit_mrf(const VectorXd& y, const MatrixXd& s, const MatrixXd& xt, const MrfConfig& cfg) {
    const Engine e(s, xt, y, cfg);
    const int T = static_cast<int>(y.size());
    MrfModel m;
    m.config = e.cfg;
    m.d = e.d;
    m.trees.resize(static_cast<std::size_t>(e.cfg.trees));
    m.oob.resize(m.trees.size());
    parallel_for(m.trees.size(), e.cfg.threads, [&](std::size_t b) {
        Rng rng(derive_seed(e.cfg.seed, {b}));
        const auto rows = block_bootstrap(T, e.cfg.block_size, rng);
        std::vector<char> drawn(static_cast<std::size_t>(T), 0);
        for (int r : rows) drawn[r] = 1;
        e.grow(m.trees[b].nodes, rows, rng);
        for (int i = 0; i < T; ++i)
            if (!drawn[i]) m.oob[b].push_back(i);
    });
    return m;
}

GtvpPaths gtvp_extract(const MrfModel& m, const MatrixXd& s, const std::vector<YearMonth>& dates,
                       const std::vector<std::string>& xt_names, const std::vector<int>& lag_columns) {
    if (static_cast<Index>(dates.size()) != s.rows()) throw std::invalid_argument("gtvp_extract: one date per row");
    if (static_cast<int>(xt_names.size()) + 1 != m.d) throw std::invalid_argument("gtvp_extract: name count mismatch");
    for (int c : lag_columns)
        if (c < 0 || c + 1 >= m.d) throw std::invalid_argument("gtvp_extract: lag column out of range");
    const std::size_t T = dates.size();
    std::vector<std::vector<std::vector<double>>> coef(static_cast<std::size_t>(m.d),
                                                       std::vector<std::vector<double>>(T));
    std::vector<std::vector<double>> pers(T), lrm(T);
    for (std::size_t t = 0; t < T; ++t) {
        const MatrixXd b = m.tree_betas(s, static_cast<Index>(t));
        for (Index k = 0; k < m.d; ++k) coef[k][t].assign(b.col(k).data(), b.col(k).data() + b.rows());
        if (lag_columns.empty()) continue;
        for (Index r = 0; r < b.rows(); ++r) {
            double p = 0.0;
            for (int c : lag_columns) p += b(r, c + 1);
            pers[t].push_back(p);
            if (std::abs(1.0 - p) >= 0.05) lrm[t].push_back(b(r, 0) / (1.0 - p));
        }
    }
    GtvpPaths out;
    out.dates = dates;
    out.coefficients.push_back(summarize("intercept", coef[0]));
    for (std::size_t k = 0; k < xt_names.size(); ++k) out.coefficients.push_back(summarize(xt_names[k], coef[k + 1]));
    if (!lag_columns.empty()) {
        out.persistence = summarize("persistence", pers);
        auto l = summarize("long_run_mean", lrm);
        for (std::size_t t = 0; t < T; ++t) {
            const double p = out.persistence->mean(static_cast<Index>(t));
            const double c = out.coefficients[0].mean(static_cast<Index>(t));
            if (std::abs(1.0 - p) < 0.05) {
                l.mean(t) = l.lo68(t) = l.hi68(t) = l.lo90(t) = l.hi90(t) = std::numeric_limits<double>::quiet_NaN();
            } else {
                l.mean(t) = c / (1.0 - p);
            }
        }
        out.long_run_mean = std::move(l);
    }
    return out;
}

void write_gtvp_csv(std::ostream& os, const GtvpPaths& p) {
    os << "date,coefficient,mean,lo68,hi68,lo90,hi90\n";
    auto emit = [&](const CoefficientPath& c) {
        for (std::size_t t = 0; t < p.dates.size(); ++t) {
            const auto i = static_cast<Index>(t);
            os << p.dates[t].str() << ',' << csv::escape(c.name) << ',' << csv::format_double(c.mean(i)) << ','
               << csv::format_double(c.lo68(i)) << ',' << csv::format_double(c.hi68(i)) << ','
               << csv::format_double(c.lo90(i)) << ',' << csv::format_double(c.hi90(i)) << '\n';
        }
    };
    for (const auto& c : p.coefficients) emit(c);
    if (p.persistence) emit(*p.persistence);
    if (p.long_run_mean) emit(*p.long_run_mean);
}

std::vector<VIEntry> mrf_variable_importance(const MrfModel& m, const MatrixXd& s, const MatrixXd& xt,
                                             const VectorXd& y, VIKind kind, const std::vector<std::string>& names,
                                             const VIOptions& opt, const std::optional<Holdout>& holdout) {
    if (static_cast<Index>(names.size()) != s.cols()) throw std::invalid_argument("mrf VI: one name per S column");
    if (opt.permutations < 1) throw std::invalid_argument("mrf VI: permutations must be >= 1");
    if (kind == VIKind::OOS && !holdout) throw std::invalid_argument("mrf VI: OOS needs a hold-out window");
    const MatrixXd& sv = kind == VIKind::OOS ? holdout->s : s;
    const MatrixXd& xv = kind == VIKind::OOS ? holdout->xt : xt;
    const VectorXd& yv = kind == VIKind::OOS ? holdout->y : y;
    const int n = static_cast<int>(sv.rows());
    if (opt.fixed_permutation && static_cast<int>(opt.fixed_permutation->size()) != n)
        throw std::invalid_argument("mrf VI: permutation length mismatch");

    double base_rmse = 0.0;
    MatrixXd base_beta;
    if (kind == VIKind::OOB) base_rmse = rmse(m.oob_predict(sv, xv), yv);
    if (kind == VIKind::OOS) base_rmse = rmse(m.predict(sv, xv), yv);
    if (kind == VIKind::BETA) base_beta = oob_betas(m, sv);

    std::vector<VIEntry> out;
    for (Index j = 0; j < sv.cols(); ++j) {
        std::vector<double> g;
        for (int r = 0; r < opt.permutations; ++r) {
            std::vector<int> perm;
            if (opt.fixed_permutation) {
                perm = *opt.fixed_permutation;
            } else {
                Rng rng(derive_seed(opt.seed, {static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(r)}));
                perm = rng.permutation(n);
            }
            MatrixXd sp = sv;
            for (int i = 0; i < n; ++i) sp(i, j) = sv(perm[i], j);
            double v = 0.0;
            if (kind == VIKind::OOB) v = 100.0 * (rmse(m.oob_predict(sp, xv), yv) / base_rmse - 1.0);
            if (kind == VIKind::OOS) v = 100.0 * (rmse(m.predict(sp, xv), yv) / base_rmse - 1.0);
            if (kind == VIKind::BETA) v = beta_shift(base_beta, oob_betas(m, sp));
            g.push_back(v);
        }
        VIEntry e{names[j], static_cast<int>(j), mean(g), 0.0};
        if (g.size() > 1) {
            double ss = 0.0;
            for (double v : g) ss += (v - e.gain) * (v - e.gain);
            e.sd = std::sqrt(ss / static_cast<double>(g.size() - 1));
        }
        out.push_back(e);
    }
    std::stable_sort(out.begin(), out.end(), [](const VIEntry& a, const VIEntry& b) { return a.gain > b.gain; });
    return out;
}

void write_vi_csv(std::ostream& os, const std::vector<VIEntry>& vi) {
    os << "rank,feature,gain_pct,sd\n";
    for (std::size_t k = 0; k < vi.size(); ++k)
        os << k + 1 << ',' << csv::escape(vi[k].feature) << ',' << csv::format_double(vi[k].gain) << ','
           << csv::format_double(vi[k].sd) << '\n';
}

}  // namespace macroml::mrf
