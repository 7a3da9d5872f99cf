#pragma once

#include <span>
#include <string>

namespace macroml::eval {

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Diebold-Mariano test on the loss differential d_t = e1_t^2 - e2_t^2.
/// Long-run variance: Newey-West with h - 1 lags and Bartlett weights
/// 1 - l/h; two-sided p from the standard normal. d identically zero gives
/// (0, 1); zero variance with a nonzero mean gives (+-inf, 0). Throws
/// std::invalid_argument for fewer than 10 observations or h < 1.
DmResult dm_test(std::span<const double> loss_diff, int h);

/// "***", "**", "*" at 1/5/10%, "" otherwise (and for NaN).
const char* significance_stars(double p);

/// "%.2f" of the ratio followed by the stars, e.g. "1.30***"; "NA" for NaN.
std::string format_cell(double ratio, double p);

}  // namespace macroml::eval
