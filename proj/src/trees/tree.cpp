#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "macroml/common/error.hpp"
#include "macroml/trees/trees.hpp"

namespace macroml::trees {

namespace {

// Running sums for one child. The SSE formula and the order of additions
// match the intercept-only MRF leaf so both forests pick identical splits.
struct Stats {
    double n = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double v) {
        n += 1.0;
        sum += v;
        sumsq += v * v;
    }
    Stats minus(const Stats& o) const { return {n - o.n, sum - o.sum, sumsq - o.sumsq}; }
    double sse() const { return sumsq - sum * (sum / n); }
};

// Rows are addressed by their position in the root row list. `order` holds,
// for the positions themselves and then for each feature, a list sorted by
// (value, position); a node owns the range [lo, hi) of every list and children
// get stable partitions of it, so nothing is re-sorted below the root. Within
// a node this is the order of sorting its rows by (value, node position).
struct Grower {
    const TreeOptions& opt;
    Rng& rng;
    VectorXd* gain;
    int mtry;
    const std::vector<int>& root;  // row ids
    const MatrixXd& zr;            // z rows in root order
    VectorXd yr;
    std::vector<int> order;  // (p + 1) x n, list 0 is the positions in root order
    std::vector<char> goes_left;
    std::vector<int> buf;
    std::vector<TreeNode> nodes;

    int* list(Index k) { return order.data() + k * static_cast<Index>(root.size()); }

    int grow(int lo, int hi, int depth) {
        const int* pos = list(0);
        Stats total;
        for (int i = lo; i < hi; ++i) total.add(yr(pos[i]));
        const int id = static_cast<int>(nodes.size());
        TreeNode leaf;
        leaf.value = total.sum / total.n;
        leaf.count = hi - lo;
        nodes.push_back(leaf);

        const int n = hi - lo;
        if (n < 2 * opt.min_node) return id;
        if (opt.max_depth > 0 && depth >= opt.max_depth) return id;
        const double y0 = yr(pos[lo]);
        if (std::all_of(pos + lo, pos + hi, [&](int q) { return yr(q) == y0; })) return id;

        const auto feats = rng.sample_without_replacement(static_cast<int>(zr.cols()), mtry);
        double best = std::numeric_limits<double>::infinity();
        int best_j = -1;
        double best_thr = 0.0;
        for (int j : feats) {
            const int* ord = list(j + 1) + lo;
            const double* col = zr.col(j).data();
            Stats left;
            for (int i = 0; i + 1 < n; ++i) {
                left.add(yr(ord[i]));
                const int nl = i + 1;
                if (nl < opt.min_node) continue;
                if (n - nl < opt.min_node) break;
                const double v = col[ord[i]], next = col[ord[i + 1]];
                if (v == next) continue;
                const double loss = left.sse() + total.minus(left).sse();
                if (loss < best) {
                    best = loss;
                    best_j = j;
                    best_thr = v + 0.5 * (next - v);
                    if (!(best_thr < next)) best_thr = v;
                }
            }
        }
        if (best_j < 0) return id;
        if (gain) (*gain)(best_j) += total.sse() - best;

        int n_left = 0;
        for (int i = lo; i < hi; ++i) {
            const bool l = zr(pos[i], best_j) <= best_thr;
            goes_left[pos[i]] = l;
            n_left += l;
        }
        for (Index k = 0; k <= zr.cols(); ++k) {
            int* a = list(k);
            int nl = lo, nr = 0;
            for (int i = lo; i < hi; ++i) {
                if (goes_left[a[i]]) a[nl++] = a[i];
                else buf[nr++] = a[i];
            }
            std::copy(buf.begin(), buf.begin() + nr, a + nl);
        }
        nodes[id].feature = best_j;
        nodes[id].threshold = best_thr;
        const int l = grow(lo, lo + n_left, depth + 1);
        nodes[id].left = l;
        const int r = grow(lo + n_left, hi, depth + 1);
        nodes[id].right = r;
        return id;
    }

    int grow_root(const VectorXd& y, const std::vector<int>& sorted) {
        yr = y(root);
        order = sorted;
        goes_left.assign(root.size(), 0);
        buf.resize(root.size());
        return grow(0, static_cast<int>(root.size()), 0);
    }
};

}  // namespace

int default_mtry(Index p) { return std::max<int>(1, static_cast<int>((p + 2) / 3)); }

int RegressionTree::leaf_of(const MatrixXd& z, Index row) const {
    int k = 0;
    while (nodes[k].feature >= 0) k = z(row, nodes[k].feature) <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
    return k;
}

VectorXd RegressionTree::predict(const MatrixXd& z) const {
    VectorXd out(z.rows());
    for (Index i = 0; i < z.rows(); ++i) out(i) = predict_row(z, i);
    return out;
}

int RegressionTree::leaf_count() const {
    return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int RegressionTree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        deepest = std::max(deepest, d[k]);
        if (nodes[k].feature >= 0) d[nodes[k].left] = d[nodes[k].right] = d[k] + 1;
    }
    return deepest;
}

PresortedRows presort_rows(const MatrixXd& z, std::span<const int> rows) {
    PresortedRows pre;
    pre.rows.assign(rows.begin(), rows.end());
    pre.z = z(pre.rows, Eigen::all);
    const Index n = static_cast<Index>(rows.size());
    pre.order.resize(static_cast<std::size_t>((z.cols() + 1) * n));
    int* pos = pre.order.data();
    std::iota(pos, pos + n, 0);
    for (Index j = 0; j < z.cols(); ++j) {
        int* ord = pos + (j + 1) * n;
        std::copy(pos, pos + n, ord);
        const double* col = pre.z.col(j).data();
        std::sort(ord, ord + n, [&](int a, int b) { return col[a] < col[b] || (col[a] == col[b] && a < b); });
    }
    return pre;
}

RegressionTree fit_tree(const PresortedRows& pre, const VectorXd& y, const TreeOptions& opt, Rng& rng,
                        VectorXd* gain) {
    if (pre.rows.empty() || pre.z.cols() == 0) throw DataError("fit_tree: empty data");
    if (opt.min_node < 1) throw std::invalid_argument("fit_tree: min_node must be >= 1");
    const int p = static_cast<int>(pre.z.cols());
    const int mtry = opt.mtry <= 0 ? p : std::min(opt.mtry, p);
    if (gain && gain->size() != p) gain->setZero(p);
    Grower g{opt, rng, gain, mtry, pre.rows, pre.z, {}, {}, {}, {}, {}};
    g.grow_root(y, pre.order);
    RegressionTree t;
    t.nodes = std::move(g.nodes);
    t.min_node = opt.min_node;
    t.mtry = mtry;
    return t;
}

RegressionTree fit_tree(const MatrixXd& z, const VectorXd& y, std::span<const int> rows, const TreeOptions& opt, Rng& rng,
                        VectorXd* gain) {
    if (rows.empty() || z.cols() == 0) throw DataError("fit_tree: empty data");
    if (z.rows() != y.size()) throw std::invalid_argument("fit_tree: row count mismatch");
    return fit_tree(presort_rows(z, rows), y, opt, rng, gain);
}

RegressionTree fit_tree(const MatrixXd& z, const VectorXd& y, const TreeOptions& opt, Rng& rng) {
    std::vector<int> rows(static_cast<std::size_t>(z.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(z, y, rows, opt, rng);
}

}  // namespace macroml::trees
