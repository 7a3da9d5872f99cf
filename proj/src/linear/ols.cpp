#include "macroml/linear/ols.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "macroml/common/error.hpp"

namespace macroml::linear {

VectorXd LinearFit::predict(const MatrixXd& z) const {
    if (z.cols() + 1 != beta.size()) throw std::invalid_argument("LinearFit::predict: column count mismatch");
    return (z * beta.tail(beta.size() - 1)).array() + beta(0);
}

double LinearFit::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
    if (z.size() + 1 != beta.size()) throw std::invalid_argument("LinearFit::predict_row: column count mismatch");
    return beta(0) + z.dot(beta.tail(beta.size() - 1));
}

std::string LinearFit::to_json() const {
    nlohmann::json coefs = nlohmann::json::object();
    for (Index j = 0; j + 1 < beta.size(); ++j) {
        const std::string name = j < static_cast<Index>(column_names.size()) ? column_names[j] : "x" + std::to_string(j);
        coefs[name] = beta(j + 1);
    }
    return nlohmann::json{{"intercept", beta(0)}, {"coefficients", coefs}}.dump();
}

LinearFit ols(const MatrixXd& z, const VectorXd& y, std::vector<std::string> names) {
    const Index n = z.rows(), p = z.cols();
    if (y.size() != n) throw std::invalid_argument("ols: row count mismatch");
    if (!names.empty() && static_cast<Index>(names.size()) != p) throw std::invalid_argument("ols: name count mismatch");
    if (names.empty())
        for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    if (n < p + 1) throw DataError("ols: more parameters than rows");
    if (!z.allFinite() || !y.allFinite()) throw DataError("ols: non-finite input");

    const auto sc = column_scaling(z);
    std::string collinear;
    for (Index j = 0; j < p; ++j)
        if (sc.constant[j]) collinear += (collinear.empty() ? "" : ", ") + names[j];
    if (!collinear.empty()) throw DataError("ols: rank-deficient design, collinear columns: " + collinear + " (constant)");

    MatrixXd a(n, p + 1);
    a.col(0).setOnes();
    a.rightCols(p) = sc.apply(z);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < p + 1) {
        const auto& perm = qr.colsPermutation().indices();
        for (Index i = qr.rank(); i < p + 1; ++i) {
            const int c = perm(i);
            collinear += (collinear.empty() ? "" : ", ") + (c == 0 ? std::string("(intercept)") : names[c - 1]);
        }
        throw DataError("ols: rank-deficient design, collinear columns: " + collinear);
    }
    const VectorXd coef = qr.solve(y);

    LinearFit fit;
    fit.column_names = std::move(names);
    fit.means = sc.mean;
    fit.stds = sc.std;
    fit.beta.resize(p + 1);
    fit.beta.tail(p) = coef.tail(p).cwiseQuotient(sc.std);
    fit.beta(0) = coef(0) - fit.beta.tail(p).dot(sc.mean);
    return fit;
}

double bic(double ssr, Index n, Index q) {
    const double nn = static_cast<double>(n);
    return nn * std::log(ssr / nn) + static_cast<double>(q) * std::log(nn);
}

ArFit ar_bic(const MatrixXd& ylags, const VectorXd& target, int pmax) {
    if (pmax < 1 || pmax > ylags.cols()) throw std::invalid_argument("ar_bic: pmax out of range");
    if (ylags.rows() != target.size()) throw std::invalid_argument("ar_bic: row count mismatch");
    if (target.size() < pmax + 3) throw DataError("ar_bic: degenerate sample");
    ArFit best;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= pmax; ++p) {
        std::vector<std::string> names;
        for (int l = 0; l < p; ++l) names.push_back("y_L" + std::to_string(l));
        auto fit = ols(ylags.leftCols(p), target, names);
        const double ssr = (target - fit.predict(ylags.leftCols(p))).squaredNorm();
        const double b = bic(ssr, target.size(), p + 1);
        best.bic.push_back(b);
        if (b < best_bic) {
            best_bic = b;
            best.fit = std::move(fit);
            best.p = p;
        }
    }
    return best;
}

ArFit ar_bic(std::span<const double> y, int pmax) {
    const auto T = static_cast<Index>(y.size());
    if (pmax < 1) throw std::invalid_argument("ar_bic: pmax must be >= 1");
    const Index rows = T - pmax;
    if (rows < pmax + 3) throw DataError("ar_bic: degenerate sample");
    MatrixXd lags(rows, pmax);
    VectorXd target(rows);
    for (Index r = 0; r < rows; ++r) {
        const Index t = r + pmax - 1;
        for (int l = 0; l < pmax; ++l) lags(r, l) = y[t - l];
        target(r) = y[t + 1];
    }
    return ar_bic(lags, target, pmax);
}

ArdiFit ardi_bic(const MatrixXd& design, std::span<const std::string> names, const VectorXd& target, int py_max,
                 int pf_max, int k_max) {
    if (design.rows() != target.size()) throw std::invalid_argument("ardi_bic: row count mismatch");
    auto col = [&](const std::string& name) {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) return static_cast<int>(j);
        return -1;
    };
    std::vector<int> ycols;
    for (int l = 0; l < py_max; ++l) {
        const int c = col("y_L" + std::to_string(l));
        if (c < 0) throw std::invalid_argument("ardi_bic: design lacks y_L" + std::to_string(l));
        ycols.push_back(c);
    }
    std::vector<std::vector<int>> fcols(static_cast<std::size_t>(k_max));
    for (int j = 0; j < k_max; ++j)
        for (int l = 0; l < pf_max; ++l) {
            const int c = col("F" + std::to_string(j + 1) + "_L" + std::to_string(l));
            if (c < 0) throw std::invalid_argument("ardi_bic: infeasible grid, missing factor lag column");
            fcols[j].push_back(c);
        }
    if (py_max < 1 || pf_max < 1 || k_max < 1) throw std::invalid_argument("ardi_bic: empty grid");
    const Index n = design.rows();
    if (n < py_max + k_max * pf_max + 3) throw DataError("ardi_bic: infeasible grid for the sample size");

    // Selection uses the Gram matrix of the standardized candidate columns;
    // the chosen model is refit by QR.
    std::vector<int> all = ycols;
    for (const auto& f : fcols) all.insert(all.end(), f.begin(), f.end());
    const MatrixXd zc = design(Eigen::all, all);
    const auto sc = column_scaling(zc);
    const MatrixXd zs = sc.apply(zc);
    const VectorXd yc = target.array() - target.mean();
    const MatrixXd gram = zs.transpose() * zs;
    const VectorXd zy = zs.transpose() * yc;
    const double yy = yc.squaredNorm();

    ArdiFit best;
    double best_bic = std::numeric_limits<double>::infinity();
    int best_q = 0;
    for (int py = 1; py <= py_max; ++py)
        for (int pf = 1; pf <= pf_max; ++pf)
            for (int k = 1; k <= k_max; ++k) {
                std::vector<int> idx;
                for (int l = 0; l < py; ++l) idx.push_back(l);
                for (int j = 0; j < k; ++j)
                    for (int l = 0; l < pf; ++l) idx.push_back(py_max + j * pf_max + l);
                const MatrixXd g = gram(idx, idx);
                const VectorXd b = zy(idx);
                Eigen::LDLT<MatrixXd> ldlt(g);
                if (ldlt.info() != Eigen::Success) continue;
                const double ssr = std::max(yy - b.dot(ldlt.solve(b)), 1e-300);
                const int q = static_cast<int>(idx.size()) + 1;
                const double v = bic(ssr, n, q);
                if (v < best_bic || (v == best_bic && q < best_q)) {
                    best_bic = v;
                    best_q = q;
                    best.py = py;
                    best.pf = pf;
                    best.k = k;
                    best.columns.clear();
                    for (int i : idx) best.columns.push_back(all[i]);
                }
            }
    if (best.columns.empty()) throw DataError("ardi_bic: no estimable model in the grid");
    std::vector<std::string> sel_names;
    for (int c : best.columns) sel_names.push_back(names[c]);
    best.fit = ols(design(Eigen::all, best.columns), target, sel_names);
    best.bic = bic((target - best.fit.predict(design(Eigen::all, best.columns))).squaredNorm(), n, best_q);
    return best;
}

}  // namespace macroml::linear
