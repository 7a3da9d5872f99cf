#include "macroml/panel/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/rng.hpp"

namespace macroml::panel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

double parse_number(const std::string& s, bool& ok) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    ok = res.ec == std::errc{} && res.ptr == last;
    return v;
}

int parse_int(const std::string& s, const char* what) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError(std::string("manifest: bad ") + what + " '" + s + "'");
    return v;
}

}  // namespace

TransformCode parse_tcode(int code) {
    switch (code) {
        case 1: case 2: case 4: case 5: case 6: case 7: return static_cast<TransformCode>(code);
        default: throw DataError("unknown transform code " + std::to_string(code));
    }
}

int differencing_order(TransformCode code) {
    switch (code) {
        case TransformCode::Level: case TransformCode::Log: return 0;
        case TransformCode::Diff: case TransformCode::LogDiff: return 1;
        case TransformCode::LogDiff2: case TransformCode::PctChangeDiff: return 2;
    }
    return 0;
}

bool uses_log(TransformCode code) {
    return code == TransformCode::Log || code == TransformCode::LogDiff || code == TransformCode::LogDiff2 ||
           code == TransformCode::PctChangeDiff;
}

std::vector<std::string> Panel::ids() const {
    std::vector<std::string> out;
    out.reserve(meta.size());
    for (const auto& m : meta) out.push_back(m.id);
    return out;
}

int Panel::find(const std::string& id) const {
    for (std::size_t i = 0; i < meta.size(); ++i)
        if (meta[i].id == id) return static_cast<int>(i);
    return -1;
}

int Panel::row_of(const YearMonth& date) const {
    if (dates.empty()) return -1;
    const int r = months_between(dates.front(), date);
    return (r >= 0 && r < static_cast<int>(dates.size())) ? r : -1;
}

Panel Panel::slice_rows(Eigen::Index first, Eigen::Index last) const {
    if (first < 0 || last >= rows() || first > last) throw std::out_of_range("Panel::slice_rows");
    Panel out;
    out.dates.assign(dates.begin() + first, dates.begin() + last + 1);
    out.values = values.middleRows(first, last - first + 1);
    out.mask = mask.middleRows(first, last - first + 1);
    out.meta = meta;
    return out;
}

void Panel::validate() const {
    if (static_cast<Eigen::Index>(dates.size()) != values.rows() || mask.rows() != values.rows() ||
        mask.cols() != values.cols() || static_cast<Eigen::Index>(meta.size()) != values.cols())
        throw DataError("panel shape mismatch");
    if (values.cols() < 1 || values.rows() < 2) throw DataError("panel needs N >= 1 and T >= 2");
    for (std::size_t t = 1; t < dates.size(); ++t)
        if (dates[t].index() != dates[t - 1].index() + 1) throw DataError("non-consecutive months at " + dates[t].str());
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        for (Eigen::Index t = 0; t < values.rows(); ++t)
            if (mask(t, j) && !std::isfinite(values(t, j)))
                throw DataError("mask marks non-finite value as observed in " + meta[j].id);
}

std::vector<SeriesMeta> read_manifest(std::istream& in) {
    const auto table = csv::read(in);
    const char* required[] = {"id", "group", "tcode", "start_date", "source"};
    int pos[5];
    for (int i = 0; i < 5; ++i) {
        pos[i] = table.column(required[i]);
        if (pos[i] < 0) throw DataError(std::string("manifest: missing column '") + required[i] + "'");
    }
    std::vector<SeriesMeta> out;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        SeriesMeta m;
        m.id = row[pos[0]];
        if (m.id.empty()) throw DataError("manifest: empty id");
        if (!seen.insert(m.id).second) throw DataError("manifest: duplicate id " + m.id);
        m.group = parse_int(row[pos[1]], "group");
        if (m.group < 1 || m.group > 9) throw DataError("manifest: group out of range for " + m.id);
        m.tcode = parse_tcode(parse_int(row[pos[2]], "tcode"));
        m.start_date = YearMonth::parse(row[pos[3]]);
        m.source = row[pos[4]];
        out.push_back(std::move(m));
    }
    if (out.empty()) throw DataError("manifest: no series");
    return out;
}

void write_manifest(std::ostream& out, std::span<const SeriesMeta> meta) {
    out << "id,group,tcode,start_date,source\n";
    for (const auto& m : meta)
        out << csv::escape(m.id) << ',' << m.group << ',' << static_cast<int>(m.tcode) << ',' << m.start_date.str()
            << ',' << csv::escape(m.source) << '\n';
}

Panel load_panel(std::span<const SeriesMeta> manifest, std::istream& in) {
    const auto table = csv::read(in);
    if (table.header.empty() || table.header[0] != "date") throw DataError("data CSV must start with a 'date' column");
    std::vector<int> cols;
    for (const auto& m : manifest) {
        const int c = table.column(m.id);
        if (c < 0) throw DataError("missing series: " + m.id);
        cols.push_back(c);
    }
    const auto T = static_cast<Eigen::Index>(table.rows.size());
    const auto N = static_cast<Eigen::Index>(manifest.size());
    Panel p;
    p.meta.assign(manifest.begin(), manifest.end());
    p.values = Eigen::MatrixXd::Constant(T, N, kNaN);
    p.mask = Mask::Constant(T, N, false);
    std::set<int> seen;
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& row = table.rows[t];
        const auto date = YearMonth::parse(row[0]);
        if (!seen.insert(date.index()).second) throw DataError("duplicate dates: " + date.str());
        if (!p.dates.empty() && date.index() != p.dates.back().index() + 1)
            throw DataError("non-consecutive months: " + p.dates.back().str() + " -> " + date.str());
        p.dates.push_back(date);
        for (Eigen::Index j = 0; j < N; ++j) {
            const auto& cell = row[cols[j]];
            if (is_missing_token(cell)) continue;
            bool ok = false;
            const double v = parse_number(cell, ok);
            if (!ok)
                throw DataError("non-numeric value '" + cell + "' in series " + manifest[j].id + " at " + date.str());
            if (!std::isfinite(v) || date < manifest[j].start_date) continue;
            p.values(t, j) = v;
            p.mask(t, j) = true;
        }
    }
    if (T < 2) throw DataError("data CSV needs at least two dates");
    for (const auto& m : manifest)
        if (m.start_date > p.dates.back()) throw DataError("start_date after panel end for " + m.id);
    p.validate();
    return p;
}

void write_panel_csv(std::ostream& out, const Panel& p) {
    out << "date";
    for (const auto& m : p.meta) out << ',' << csv::escape(m.id);
    out << '\n';
    for (Eigen::Index t = 0; t < p.rows(); ++t) {
        out << p.dates[t].str();
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            out << ',';
            if (p.mask(t, j)) out << csv::format_double(p.values(t, j));
        }
        out << '\n';
    }
}

std::vector<double> apply_transform(std::span<const double> x, TransformCode code) {
    const int d = differencing_order(code);
    if (static_cast<int>(x.size()) <= d) throw DataError("sequence too short for transform");
    std::vector<double> base(x.begin(), x.end());
    if (uses_log(code) && code != TransformCode::PctChangeDiff) {
        for (auto& v : base) {
            if (std::isnan(v)) continue;
            if (!(v > 0.0)) throw DataError("non-positive value under log transform");
            v = std::log(v);
        }
    }
    if (code == TransformCode::PctChangeDiff) {
        for (double v : base)
            if (!std::isnan(v) && !(v > 0.0)) throw DataError("non-positive value under growth-rate transform");
    }
    auto diff = [](const std::vector<double>& v) {
        std::vector<double> out(v.size() - 1);
        for (std::size_t i = 1; i < v.size(); ++i) out[i - 1] = v[i] - v[i - 1];
        return out;
    };
    switch (code) {
        case TransformCode::Level:
        case TransformCode::Log: return base;
        case TransformCode::Diff:
        case TransformCode::LogDiff: return diff(base);
        case TransformCode::LogDiff2: return diff(diff(base));
        case TransformCode::PctChangeDiff: {
            std::vector<double> growth(base.size() - 1);
            for (std::size_t i = 1; i < base.size(); ++i) growth[i - 1] = base[i] / base[i - 1] - 1.0;
            return diff(growth);
        }
    }
    return base;
}

Panel transform_panel(const Panel& raw) {
    raw.validate();
    int max_d = 0;
    for (const auto& m : raw.meta) max_d = std::max(max_d, differencing_order(m.tcode));
    const Eigen::Index T = raw.rows() - max_d;
    if (T < 2) throw DataError("panel too short for its transform codes");
    Panel out;
    out.dates.assign(raw.dates.begin() + max_d, raw.dates.end());
    out.meta = raw.meta;
    out.values.resize(T, raw.cols());
    out.mask.resize(T, raw.cols());
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        std::vector<double> col(static_cast<std::size_t>(raw.rows()));
        for (Eigen::Index t = 0; t < raw.rows(); ++t) col[t] = raw.mask(t, j) ? raw.values(t, j) : kNaN;
        std::vector<double> tr;
        try {
            tr = apply_transform(col, raw.meta[j].tcode);
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " in series " + raw.meta[j].id);
        }
        const std::size_t offset = tr.size() - static_cast<std::size_t>(T);
        for (Eigen::Index t = 0; t < T; ++t) {
            const double v = tr[offset + t];
            out.mask(t, j) = std::isfinite(v);
            out.values(t, j) = out.mask(t, j) ? v : kNaN;
        }
    }
    return out;
}

Standardized standardize(const Panel& p) {
    Standardized s{p, Eigen::VectorXd(p.cols()), Eigen::VectorXd(p.cols())};
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        double sum = 0.0;
        int n = 0;
        for (Eigen::Index t = 0; t < p.rows(); ++t)
            if (p.mask(t, j)) {
                sum += p.values(t, j);
                ++n;
            }
        if (n < 2) throw DataError("fewer than two observations in series " + p.meta[j].id);
        const double mu = sum / n;
        double ss = 0.0;
        for (Eigen::Index t = 0; t < p.rows(); ++t)
            if (p.mask(t, j)) ss += (p.values(t, j) - mu) * (p.values(t, j) - mu);
        const double sd = std::sqrt(ss / (n - 1));
        if (!(sd > 0.0)) throw DataError("zero variance in series " + p.meta[j].id);
        s.means(j) = mu;
        s.stds(j) = sd;
        for (Eigen::Index t = 0; t < p.rows(); ++t)
            if (p.mask(t, j)) s.panel.values(t, j) = (p.values(t, j) - mu) / sd;
    }
    return s;
}

Panel unstandardize(const Panel& p, const Eigen::VectorXd& means, const Eigen::VectorXd& stds) {
    Panel out = p;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index t = 0; t < p.rows(); ++t)
            if (p.mask(t, j)) out.values(t, j) = p.values(t, j) * stds(j) + means(j);
    return out;
}

std::pair<Panel, BalanceReport> balance_panel_em(const Panel& p, const EmOptions& opt) {
    const Eigen::Index T = p.rows(), N = p.cols();
    if (opt.k < 1 || opt.k >= std::min(T, N))
        throw std::invalid_argument("EM factor count k must satisfy 1 <= k < min(T, N)");
    for (Eigen::Index j = 0; j < N; ++j)
        if (!p.mask.col(j).any()) throw DataError("empty column: " + p.meta[j].id);
    for (Eigen::Index t = 0; t < T; ++t)
        if (!p.mask.row(t).any()) throw DataError("empty row at " + p.dates[t].str());

    // Scales are fixed from the observed entries and column means are refit
    // on the completed panel each iteration. Both steps minimize the same
    // residual, so the objective cannot increase.
    Eigen::VectorXd mu(N), sd(N);
    for (Eigen::Index j = 0; j < N; ++j) {
        double sum = 0.0;
        int n = 0;
        for (Eigen::Index t = 0; t < T; ++t)
            if (p.mask(t, j)) {
                sum += p.values(t, j);
                ++n;
            }
        mu(j) = sum / n;
        double ss = 0.0;
        for (Eigen::Index t = 0; t < T; ++t)
            if (p.mask(t, j)) ss += (p.values(t, j) - mu(j)) * (p.values(t, j) - mu(j));
        sd(j) = (n >= 2 && ss > 0.0) ? std::sqrt(ss / (n - 1)) : 1.0;  // centering only when degenerate
    }

    Eigen::MatrixXd z(T, N);
    for (Eigen::Index j = 0; j < N; ++j)
        for (Eigen::Index t = 0; t < T; ++t) z(t, j) = p.mask(t, j) ? (p.values(t, j) - mu(j)) / sd(j) : 0.0;

    BalanceReport report;
    report.imputed_count = static_cast<int>((!p.mask).count());
    auto rank_k_fit = [&](const Eigen::MatrixXd& m) {
        const Eigen::RowVectorXd center = m.colwise().mean();
        const Eigen::MatrixXd c = m.rowwise() - center;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& u = svd.matrixU();
        const auto& v = svd.matrixV();
        const auto& s = svd.singularValues();
        Eigen::MatrixXd fit = u.leftCols(opt.k) * s.head(opt.k).asDiagonal() * v.leftCols(opt.k).transpose();
        fit.rowwise() += center;
        return fit;
    };

    for (int it = 0; it < opt.max_iter; ++it) {
        const Eigen::MatrixXd fit = rank_k_fit(z);
        report.objective_trace.push_back((z - fit).squaredNorm());
        report.iterations = it + 1;
        if (report.imputed_count == 0) break;
        double change = 0.0;
        for (Eigen::Index j = 0; j < N; ++j)
            for (Eigen::Index t = 0; t < T; ++t)
                if (!p.mask(t, j)) {
                    change = std::max(change, std::abs(fit(t, j) - z(t, j)) * sd(j));
                    z(t, j) = fit(t, j);
                }
        if (change < opt.tol) break;
    }

    Panel out = p;
    for (Eigen::Index j = 0; j < N; ++j)
        for (Eigen::Index t = 0; t < T; ++t)
            if (!p.mask(t, j)) {
                out.values(t, j) = z(t, j) * sd(j) + mu(j);
                out.mask(t, j) = true;
            }
    return {std::move(out), std::move(report)};
}

namespace {

std::string series_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03d", prefix, i + 1);
    return buf;
}

Panel empty_panel(int T, int N, YearMonth start) {
    Panel p;
    for (int t = 0; t < T; ++t) p.dates.push_back(start.plus(t));
    p.values = Eigen::MatrixXd::Zero(T, N);
    p.mask = Mask::Constant(T, N, true);
    return p;
}

}  // namespace

Panel synth_dgp(int T, int N, int r, double snr, std::uint64_t seed, YearMonth start) {
    if (T < 2 || N < 1) throw std::invalid_argument("synth_dgp: need T >= 2, N >= 1");
    if (r < 0 || r >= std::min(T, N)) throw std::invalid_argument("synth_dgp: need 0 <= r < min(T, N)");
    if (!(snr > 0.0)) throw std::invalid_argument("synth_dgp: snr must be positive");
    Rng rng(seed);
    Eigen::MatrixXd f(T, r), lambda(N, r);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < r; ++j) f(t, j) = rng.normal();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < r; ++j) lambda(i, j) = rng.normal();
    const double noise_sd = r > 0 ? std::sqrt(r / snr) : 1.0;
    Panel p = empty_panel(T, N, start);
    p.values = f * lambda.transpose();
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i) p.values(t, i) += noise_sd * rng.normal();
    for (int i = 0; i < N; ++i) p.meta.push_back({series_name("S", i), 1, TransformCode::Level, start, "synthetic"});
    return p;
}

Panel synth_target_panel(const SynthTargetOptions& o) {
    if (o.T < 10 || o.n_predictors < 1 || o.n_targets < 0 || o.r < 1)
        throw std::invalid_argument("synth_target_panel: bad dimensions");
    Rng rng(o.seed);
    const int burn = 50;
    const int total = o.T + burn;
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(total, o.r);
    for (int t = 1; t < total; ++t)
        for (int j = 0; j < o.r; ++j) f(t, j) = o.factor_persistence * f(t - 1, j) + rng.normal();
    Eigen::MatrixXd lambda(o.n_predictors, o.r);
    for (int i = 0; i < o.n_predictors; ++i)
        for (int j = 0; j < o.r; ++j) lambda(i, j) = rng.normal();

    const int N = o.n_predictors + o.n_targets;
    Panel p = empty_panel(o.T, N, o.start);
    for (int t = 0; t < o.T; ++t)
        for (int i = 0; i < o.n_predictors; ++i)
            p.values(t, i) = f.row(t + burn).dot(lambda.row(i)) + rng.normal();
    for (int i = 0; i < o.n_predictors; ++i)
        p.meta.push_back({series_name("X", i), 1, TransformCode::Level, o.start, "synthetic"});

    for (int k = 0; k < o.n_targets; ++k) {
        std::vector<double> g(total, 0.0);
        for (int t = 1; t < total; ++t)
            g[t] = o.mean_growth * (1.0 - o.target_persistence) + o.target_persistence * g[t - 1] +
                   o.target_noise * (o.factor_loading * f(t - 1, k % o.r) + rng.normal());
        double level = 100.0;
        for (int t = 0; t < total; ++t) {
            level *= std::exp(g[t]);
            if (t >= burn) p.values(t - burn, o.n_predictors + k) = level;
        }
        p.meta.push_back({series_name("Y", k), 2, TransformCode::LogDiff, o.start, "synthetic"});
    }
    return p;
}

}  // namespace macroml::panel
