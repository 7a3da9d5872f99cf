#include "macroml/factors/factors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/parallel.hpp"

namespace macroml::factors {

namespace {

void require_finite(const Eigen::MatrixXd& x) {
    if (!x.allFinite()) throw DataError("factor input contains non-finite entries");
}

Eigen::VectorXd squared_singular_values(const Eigen::MatrixXd& x) {
    // Gram matrix on the short side; eigenvalues are the squared singular values.
    Eigen::MatrixXd g = x.rows() <= x.cols() ? Eigen::MatrixXd(x * x.transpose()) : Eigen::MatrixXd(x.transpose() * x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues().reverse();
    return ev.cwiseMax(0.0);
}

}  // namespace

FactorModel extract_factors(const Eigen::MatrixXd& x, int k) {
    const auto T = x.rows(), N = x.cols();
    if (k < 1 || k > std::min(T, N)) throw std::invalid_argument("extract_factors: k out of range");
    require_finite(x);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    const double nt = static_cast<double>(N) * static_cast<double>(T);

    FactorModel fm;
    fm.k = k;
    fm.spectrum = s.array().square() / nt;
    fm.eigenvalues = fm.spectrum.head(k);
    fm.F = std::sqrt(static_cast<double>(T)) * svd.matrixU().leftCols(k);
    fm.loadings = x.transpose() * fm.F / static_cast<double>(T);
    for (int j = 0; j < k; ++j) {
        Eigen::Index imax = 0;
        fm.loadings.col(j).cwiseAbs().maxCoeff(&imax);
        if (fm.loadings(imax, j) < 0.0) {
            fm.F.col(j) = -fm.F.col(j);
            fm.loadings.col(j) = -fm.loadings.col(j);
        }
    }
    return fm;
}

PcP2Result pc_p2(const Eigen::MatrixXd& x, int kmax) {
    const auto T = x.rows(), N = x.cols();
    if (kmax < 1 || 2 * kmax > std::min(T, N)) throw std::invalid_argument("pc_p2: kmax out of range");
    require_finite(x);
    const Eigen::VectorXd s2 = squared_singular_values(x);
    const double nt = static_cast<double>(N) * static_cast<double>(T);

    PcP2Result r;
    r.v.resize(kmax + 1);
    // V(k) = sum of trailing squared singular values / NT.
    for (int k = 0; k <= kmax; ++k) r.v[k] = s2.tail(s2.size() - k).sum() / nt;
    const double sigma2 = r.v[kmax];
    const double penalty = sigma2 * (static_cast<double>(N + T) / nt) * std::log(static_cast<double>(std::min(N, T)));
    r.criterion.assign(kmax + 1, std::numeric_limits<double>::quiet_NaN());
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= kmax; ++k) {
        r.criterion[k] = r.v[k] + k * penalty;
        if (r.criterion[k] < best) {
            best = r.criterion[k];
            r.k = k;
        }
    }
    return r;
}

FactorDiagnostics marginal_r2(const Eigen::MatrixXd& x, const FactorModel& fm) {
    const auto T = x.rows(), N = x.cols();
    if (fm.F.rows() != T || fm.loadings.rows() != N || fm.F.cols() != fm.k)
        throw std::invalid_argument("marginal_r2: dimension mismatch");
    const int k = fm.k;
    Eigen::MatrixXd design(T, k + 1);
    design.col(0).setOnes();
    design.rightCols(k) = fm.F;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(T, k + 1);
    const Eigen::MatrixXd proj = q.transpose() * x;  // (k+1) x N

    FactorDiagnostics d;
    d.mr2.resize(N, k);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double sst = (x.col(i).array() - x.col(i).mean()).square().sum();
        for (int j = 0; j < k; ++j) d.mr2(i, j) = sst > 0.0 ? proj(j + 1, i) * proj(j + 1, i) / sst : 0.0;
    }
    d.avg_mr2 = d.mr2.colwise().mean().transpose();
    d.total_r2 = d.avg_mr2.sum();
    return d;
}

std::vector<FactorCount> recursive_factor_count(const panel::Panel& p, YearMonth start, int kmax, unsigned threads) {
    const int first = p.row_of(start);
    if (first < 0) throw DataError("recursive_factor_count: start " + start.str() + " outside the panel");
    if (first + 1 < 24) throw DataError("recursive_factor_count: insufficient history before " + start.str());
    const auto n = static_cast<std::size_t>(p.rows() - first);
    std::vector<FactorCount> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto last = static_cast<Eigen::Index>(first + i);
        panel::Panel sub = p.slice_rows(0, last);
        const int limit = static_cast<int>(std::min(sub.rows(), sub.cols())) / 2;
        if (!sub.fully_observed()) {
            panel::EmOptions em;
            em.k = std::max(1, std::min(em.k, limit));
            sub = balance_panel_em(sub, em).first;
        }
        const auto z = panel::standardize(sub).panel.values;
        const auto sel = pc_p2(z, std::max(1, std::min(kmax, limit)));
        const auto fm = extract_factors(z, sel.k);
        out[i] = {p.dates[last], sel.k, marginal_r2(z, fm).total_r2};
    });
    return out;
}

namespace {

std::vector<int> top_series(const FactorDiagnostics& d, int j, int top) {
    std::vector<int> idx(static_cast<std::size_t>(d.mr2.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return d.mr2(a, j) > d.mr2(b, j); });
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(top)));
    return idx;
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

void write_factor_table_csv(std::ostream& out, const panel::Panel& p, const FactorDiagnostics& d, int top) {
    out << "factor,avg_mr2,rank,series,group,mr2\n";
    for (Eigen::Index j = 0; j < d.mr2.cols(); ++j) {
        const auto idx = top_series(d, static_cast<int>(j), top);
        for (std::size_t r = 0; r < idx.size(); ++r)
            out << j + 1 << ',' << csv::format_double(d.avg_mr2(j)) << ',' << r + 1 << ','
                << csv::escape(p.meta[idx[r]].id) << ',' << p.meta[idx[r]].group << ','
                << csv::format_double(d.mr2(idx[r], j)) << '\n';
    }
}

void write_factor_table_text(std::ostream& out, const panel::Panel& p, const FactorDiagnostics& d, int top) {
    const auto k = static_cast<int>(d.mr2.cols());
    char line[256];
    for (int b = 0; b < k; b += 3) {
        const int width = std::min(3, k - b);
        std::string head;
        for (int c = 0; c < width; ++c) {
            std::snprintf(line, sizeof line, "%-20s %6s %3s", ("mR2(" + std::to_string(b + c + 1) + ")").c_str(),
                          fixed3(d.avg_mr2(b + c)).c_str(), "G#");
            head += (c ? " | " : "") + std::string(line);
        }
        out << head << '\n' << std::string(head.size(), '-') << '\n';
        std::vector<std::vector<int>> cols;
        for (int c = 0; c < width; ++c) cols.push_back(top_series(d, b + c, top));
        for (std::size_t r = 0; r < cols[0].size(); ++r) {
            std::string row;
            for (int c = 0; c < width; ++c) {
                const int i = cols[c][r];
                std::snprintf(line, sizeof line, "%-20s %6s %3d", p.meta[i].id.c_str(),
                              fixed3(d.mr2(i, b + c)).c_str(), p.meta[i].group);
                row += (c ? " | " : "") + std::string(line);
            }
            out << row << '\n';
        }
        out << '\n';
    }
}

void write_mr2_long_csv(std::ostream& out, const panel::Panel& p, const FactorDiagnostics& d) {
    out << "series,factor,mr2\n";
    for (Eigen::Index i = 0; i < d.mr2.rows(); ++i)
        for (Eigen::Index j = 0; j < d.mr2.cols(); ++j)
            out << csv::escape(p.meta[i].id) << ',' << j + 1 << ',' << csv::format_double(d.mr2(i, j)) << '\n';
}

}  // namespace macroml::factors
