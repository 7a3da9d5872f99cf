#include "macroml/features/features.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"

namespace macroml::features {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lag_args(Eigen::Index T, std::size_t n_names, Eigen::Index cols, std::size_t n_dates, int P) {
    if (P < 1 || P >= T) throw std::invalid_argument("lag depth P must satisfy 1 <= P < T");
    if (static_cast<Eigen::Index>(n_names) != cols || static_cast<Eigen::Index>(n_dates) != T)
        throw std::invalid_argument("names/dates do not match the data");
}

// T x P block of lags of one column; NaN where a lag precedes the sample.
Eigen::MatrixXd lag_block(const Eigen::VectorXd& x, int P) {
    const auto T = x.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(T, P, kNaN);
    for (Eigen::Index t = 0; t < T; ++t)
        for (int l = 0; l < P && l <= t; ++l) out(t, l) = x(t - l);
    return out;
}

Eigen::MatrixXd marx_block(const Eigen::VectorXd& x, int P) {
    const auto T = x.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(T, P, kNaN);
    for (Eigen::Index t = 0; t < T; ++t) {
        double s = 0.0;
        for (int p = 1; p <= P && p - 1 <= t; ++p) {
            s += x(t - p + 1);
            out(t, p - 1) = s / p;
        }
    }
    return out;
}

DesignMatrix trim_incomplete(std::span<const YearMonth> dates, std::vector<std::string> names,
                             const Eigen::MatrixXd& full) {
    DesignMatrix d;
    d.names = std::move(names);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index t = 0; t < full.rows(); ++t)
        if (full.row(t).allFinite()) keep.push_back(t);
    d.values.resize(static_cast<Eigen::Index>(keep.size()), full.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        d.values.row(static_cast<Eigen::Index>(i)) = full.row(keep[i]);
        d.rows.push_back(dates[keep[i]]);
    }
    return d;
}

}  // namespace

TargetSeries build_target(const std::string& id, std::span<const YearMonth> dates, std::span<const double> levels,
                          int h, bool use_log) {
    if (dates.size() != levels.size()) throw std::invalid_argument("build_target: dates/levels length mismatch");
    if (h < 1 || static_cast<std::size_t>(h) >= levels.size())
        throw std::invalid_argument("build_target: horizon exceeds sample");
    if (use_log)
        for (double v : levels)
            if (!std::isnan(v) && !(v > 0.0)) throw DataError("non-positive level under log target for " + id);
    TargetSeries ts{id, h, use_log, {dates.begin(), dates.end()}, std::vector<double>(levels.size(), kNaN)};
    for (std::size_t t = 0; t + h < levels.size(); ++t) {
        const double a = levels[t], b = levels[t + h];
        if (std::isnan(a) || std::isnan(b)) continue;
        ts.values[t] = (use_log ? std::log(b / a) : b - a) / h;
    }
    return ts;
}

std::vector<double> one_period_change(std::span<const double> levels, bool use_log) {
    std::vector<double> out(levels.size(), kNaN);
    for (std::size_t t = 1; t < levels.size(); ++t) {
        const double a = levels[t - 1], b = levels[t];
        if (std::isnan(a) || std::isnan(b)) continue;
        if (use_log && !(a > 0.0 && b > 0.0)) throw DataError("non-positive level under log change");
        out[t] = use_log ? std::log(b / a) : b - a;
    }
    return out;
}

const char* recipe_name(Recipe r) {
    switch (r) {
        case Recipe::None: return "none";
        case Recipe::AR: return "AR";
        case Recipe::ARDI: return "ARDI";
        case Recipe::Data: return "Data";
        case Recipe::DataMarx: return "Data+MARX";
    }
    return "?";
}

FeatureSet FeatureSet::for_recipe(Recipe r) {
    FeatureSet f;
    f.recipe = r;
    f.include_X = r == Recipe::Data || r == Recipe::DataMarx;
    f.include_MARX = r == Recipe::DataMarx;
    return f;
}

void FeatureSet::validate() const {
    if (py < 1 || pf < 1 || p_marx < 1 || k < 1) throw std::invalid_argument("FeatureSet: lag depths and k must be >= 1");
    const auto expect = for_recipe(recipe);
    if (include_X != expect.include_X || include_MARX != expect.include_MARX)
        throw std::invalid_argument(std::string("FeatureSet: flags inconsistent with recipe ") + recipe_name(recipe));
}

int FeatureSet::column_count(int n_series) const {
    if (recipe == Recipe::None) return 0;
    int c = py;
    if (recipe != Recipe::AR) c += k * pf;
    if (include_X) c += n_series;
    if (include_MARX) c += n_series * p_marx;
    return c;
}

int DesignMatrix::column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<int>(j);
    return -1;
}

int DesignMatrix::row(const YearMonth& date) const {
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i] == date) return static_cast<int>(i);
    return -1;
}

DesignMatrix build_lags(const Eigen::MatrixXd& x, std::span<const std::string> names, std::span<const YearMonth> dates,
                        int P) {
    check_lag_args(x.rows(), names.size(), x.cols(), dates.size(), P);
    Eigen::MatrixXd full(x.rows(), x.cols() * P);
    std::vector<std::string> out_names;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        full.middleCols(j * P, P) = lag_block(x.col(j), P);
        for (int l = 0; l < P; ++l) out_names.push_back(names[j] + "_L" + std::to_string(l));
    }
    // Leading rows are dropped by position so NaN inside the data is kept.
    DesignMatrix d;
    d.names = std::move(out_names);
    d.values = full.bottomRows(x.rows() - P + 1);
    d.rows.assign(dates.begin() + P - 1, dates.end());
    return d;
}

DesignMatrix marx(const Eigen::MatrixXd& x, std::span<const std::string> names, std::span<const YearMonth> dates, int P) {
    check_lag_args(x.rows(), names.size(), x.cols(), dates.size(), P);
    Eigen::MatrixXd full(x.rows(), x.cols() * P);
    std::vector<std::string> out_names;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        full.middleCols(j * P, P) = marx_block(x.col(j), P);
        for (int p = 1; p <= P; ++p) out_names.push_back("MARX_" + names[j] + "_" + std::to_string(p));
    }
    DesignMatrix d;
    d.names = std::move(out_names);
    d.values = full.bottomRows(x.rows() - P + 1);
    d.rows.assign(dates.begin() + P - 1, dates.end());
    return d;
}

Eigen::VectorXd marx_inverse(const Eigen::VectorXd& m) {
    Eigen::VectorXd x(m.size());
    for (Eigen::Index p = 1; p <= m.size(); ++p)
        x(p - 1) = p == 1 ? m(0) : static_cast<double>(p) * m(p - 1) - static_cast<double>(p - 1) * m(p - 2);
    return x;
}

DesignMatrix assemble_design(const FeatureSet& spec, std::span<const YearMonth> dates, std::span<const double> y,
                             const Eigen::MatrixXd& F, const Eigen::MatrixXd& X, std::span<const std::string> x_names) {
    spec.validate();
    const auto T = static_cast<Eigen::Index>(dates.size());
    if (static_cast<Eigen::Index>(y.size()) != T) throw std::invalid_argument("assemble_design: y length mismatch");
    const bool use_f = spec.recipe != Recipe::AR && spec.recipe != Recipe::None;
    if (use_f && (F.rows() != T || F.cols() < spec.k))
        throw std::invalid_argument("assemble_design: factor matrix does not provide k columns over the dates");
    if (spec.include_X && (X.rows() != T || X.cols() < 1 || static_cast<std::size_t>(X.cols()) != x_names.size()))
        throw std::invalid_argument("assemble_design: recipe needs X with matching names");

    const int n_series = spec.include_X ? static_cast<int>(X.cols()) : 0;
    const int cols = spec.column_count(n_series);
    Eigen::MatrixXd full(T, cols);
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(cols));
    if (spec.recipe == Recipe::None) return trim_incomplete(dates, names, full);

    Eigen::Index c = 0;
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), T);
    full.middleCols(c, spec.py) = lag_block(yv, spec.py);
    for (int l = 0; l < spec.py; ++l) names.push_back("y_L" + std::to_string(l));
    c += spec.py;
    if (use_f) {
        for (int j = 0; j < spec.k; ++j) {
            full.middleCols(c, spec.pf) = lag_block(F.col(j), spec.pf);
            for (int l = 0; l < spec.pf; ++l) names.push_back("F" + std::to_string(j + 1) + "_L" + std::to_string(l));
            c += spec.pf;
        }
    }
    if (spec.include_X) {
        full.middleCols(c, X.cols()) = X;
        for (const auto& n : x_names) names.push_back(n + "_L0");
        c += X.cols();
    }
    if (spec.include_MARX) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            full.middleCols(c, spec.p_marx) = marx_block(X.col(j), spec.p_marx);
            for (int p = 1; p <= spec.p_marx; ++p) names.push_back("MARX_" + x_names[j] + "_" + std::to_string(p));
            c += spec.p_marx;
        }
    }
    return trim_incomplete(dates, std::move(names), full);
}

void write_design_csv(std::ostream& out, const DesignMatrix& d) {
    out << "date";
    for (const auto& n : d.names) out << ',' << csv::escape(n);
    out << '\n';
    for (Eigen::Index i = 0; i < d.values.rows(); ++i) {
        out << d.rows[static_cast<std::size_t>(i)].str();
        for (Eigen::Index j = 0; j < d.values.cols(); ++j) out << ',' << csv::format_double(d.values(i, j));
        out << '\n';
    }
}

}  // namespace macroml::features
