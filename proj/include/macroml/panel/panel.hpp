#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "macroml/common/year_month.hpp"

namespace macroml::panel {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Stationarity transformation applied to a raw series.
enum class TransformCode : int {
    Level = 1,          // x
    Diff = 2,           // dx
    Log = 4,            // ln x
    LogDiff = 5,        // d ln x
    LogDiff2 = 6,       // d^2 ln x
    PctChangeDiff = 7,  // d(x_t / x_{t-1} - 1)
};

TransformCode parse_tcode(int code);  // throws DataError for codes outside {1,2,4,5,6,7}
int differencing_order(TransformCode code);
bool uses_log(TransformCode code);

struct SeriesMeta {
    std::string id;
    int group = 1;
    TransformCode tcode = TransformCode::Level;
    YearMonth start_date;
    std::string source;
};

/// Date-indexed T x N panel. Missing cells are NaN with mask == false.
struct Panel {
    std::vector<YearMonth> dates;
    Eigen::MatrixXd values;
    Mask mask;
    std::vector<SeriesMeta> meta;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    bool fully_observed() const { return mask.all(); }
    std::vector<std::string> ids() const;

    /// Position of series `id`, or -1.
    int find(const std::string& id) const;
    /// Row of `date`, or -1.
    int row_of(const YearMonth& date) const;

    /// Rows [first, last] inclusive.
    Panel slice_rows(Eigen::Index first, Eigen::Index last) const;

    /// Throws DataError when dates are not strictly consecutive months, the
    /// shape is inconsistent, or the mask disagrees with finiteness.
    void validate() const;
};

struct BalanceReport {
    int iterations = 0;
    std::vector<double> objective_trace;
    int imputed_count = 0;
};

struct EmOptions {
    int k = 8;
    double tol = 1e-6;
    int max_iter = 500;
};

struct Standardized {
    Panel panel;
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
};

/// Manifest CSV with header `id,group,tcode,start_date,source`.
std::vector<SeriesMeta> read_manifest(std::istream& in);
void write_manifest(std::ostream& out, std::span<const SeriesMeta> meta);

/// Data CSV: `date` column (YYYY-MM) plus one column per manifest id; extra
/// columns are ignored. Empty, "NA" and "NaN" cells are missing, as are cells
/// dated before the series' start_date.
Panel load_panel(std::span<const SeriesMeta> manifest, std::istream& csv);

/// Writes the `date,<ids...>` CSV layout read by load_panel.
void write_panel_csv(std::ostream& out, const Panel& p);

/// Output is shorter than the input by the code's differencing order. NaN
/// inputs propagate. Throws DataError for a non-positive value under a log
/// code or a sequence not longer than the differencing order.
std::vector<double> apply_transform(std::span<const double> x, TransformCode code);

/// Applies every series' code and trims the leading max-order rows so all
/// transformed series share the first date.
Panel transform_panel(const Panel& raw);

/// Per-column mean 0 / sample std 1 over observed entries.
Standardized standardize(const Panel& p);
Panel unstandardize(const Panel& p, const Eigen::VectorXd& means, const Eigen::VectorXd& stds);

/// EM balancing with a rank-k principal-components model: missing cells start
/// at their column mean, then are repeatedly replaced by the rank-k fit of
/// the (standardized) completed panel. Observed cells are never modified.
std::pair<Panel, BalanceReport> balance_panel_em(const Panel& p, const EmOptions& opt = {});

/// X = F L' + e with standard normal factors and loadings; noise variance r/snr
/// (1 when r == 0). Series are named S001.. with tcode 1.
Panel synth_dgp(int T, int N, int r, double snr, std::uint64_t seed, YearMonth start = {2000, 1});

/// Synthetic forecasting panel: `n_predictors` level (tcode 1) series loading
/// on AR(1) factors, and `n_targets` positive level series (tcode 5) whose
/// monthly log growth follows an AR(1) plus a factor term.
struct SynthTargetOptions {
    int T = 200;
    int n_predictors = 30;
    int n_targets = 1;
    int r = 3;
    double factor_persistence = 0.5;
    double target_persistence = 0.6;
    double factor_loading = 0.3;
    double target_noise = 0.01;
    double mean_growth = 0.002;
    std::uint64_t seed = 1;
    YearMonth start{2000, 1};
};
Panel synth_target_panel(const SynthTargetOptions& opt);

}  // namespace macroml::panel
