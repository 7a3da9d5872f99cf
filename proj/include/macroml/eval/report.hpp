#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "macroml/common/year_month.hpp"
#include "macroml/eval/poos.hpp"

namespace macroml::eval {

/// Origins from `from` to `to`, inclusive; open ends are unbounded.
struct Window {
    std::string name;
    std::string label;
    std::optional<YearMonth> from;
    std::optional<YearMonth> to;

    bool contains(YearMonth d) const { return (!from || !(d < *from)) && (!to || !(*to < d)); }
};

/// full (2008-), restricted (2011-), covid (2020-01-), quiet (2011-2019),
/// precovid (2008-2019).
std::vector<Window> default_windows();

/// gr (2008-2010), quiet (2011-2019), covid (2020-01-): a partition of the
/// full window.
std::vector<Window> partition_windows();

/// "name=YYYY-MM:YYYY-MM", either bound may be empty; a bare name picks a
/// default window. Throws DataError.
Window parse_window(const std::string& text);

struct EvalCell {
    std::string model;
    std::string target;
    int h = 1;
    std::string window;
    int n = 0;                 // origins compared
    double mse = 0.0;          // model MSE over the window
    double ratio = 0.0;        // mse / benchmark mse; NaN when missing
    double dm_stat = 0.0;
    double p_value = 1.0;      // NaN when fewer than 10 origins
    bool missing = false;      // model failed or lacks origins the benchmark has
    std::string text;          // "1.30***" style
};

struct EvalTable {
    std::string benchmark;
    std::vector<std::string> models;
    std::vector<std::string> targets;
    std::vector<int> horizons;
    std::vector<Window> windows;
    std::vector<EvalCell> cells;

    const EvalCell* find(const std::string& window, const std::string& model, const std::string& target, int h) const;
};

/// Relative MSE against the benchmark within each window's origins, with a
/// DM test on e_model^2 - e_bench^2 (NW lags h - 1). The benchmark's cells
/// are exactly 1 without stars. Records without a realized value are
/// ignored. Throws DataError when some (target, h) has no benchmark records.
EvalTable build_eval_table(const std::vector<ForecastRecord>& records, const std::vector<Window>& windows,
                           const std::string& benchmark = "AR,BIC");

/// `window,target,h,model,n,mse,ratio,dm_stat,p_value,cell`
void write_eval_csv(std::ostream& os, const EvalTable& t);
void write_eval_json(std::ostream& os, const EvalTable& t);
/// One block per window and group of up to six targets: a target header,
/// an h=1.. row and one row of cells per model.
void write_eval_text(std::ostream& os, const EvalTable& t);

/// Plot-ready forecast-vs-realized series:
/// `target,h,origin,target_date,model,forecast,realized`, origins >= from.
void write_forecast_series_csv(std::ostream& os, const std::vector<ForecastRecord>& records,
                               std::optional<YearMonth> from = {});

}  // namespace macroml::eval
