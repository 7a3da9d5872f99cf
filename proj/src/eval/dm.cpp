#include "macroml/eval/dm.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace macroml::eval {

DmResult dm_test(std::span<const double> d, int h) {
    const auto n = d.size();
    if (n < 10) throw std::invalid_argument("dm_test: need at least 10 observations");
    if (h < 1) throw std::invalid_argument("dm_test: h must be >= 1");
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);

    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = lag; t < n; ++t) s += (d[t] - mean) * (d[t - lag] - mean);
        return s / static_cast<double>(n);
    };
    double lrv = autocov(0);
    for (int l = 1; l < h && static_cast<std::size_t>(l) < n; ++l)
        lrv += 2.0 * (1.0 - static_cast<double>(l) / h) * autocov(static_cast<std::size_t>(l));

    // rounding leaves a tiny positive variance on a constant series
    double scale = 0.0;
    for (double v : d) scale += v * v;
    scale /= static_cast<double>(n);
    if (!(lrv > 1e-20 * scale)) {
        if (mean == 0.0) return {0.0, 1.0};
        return {std::copysign(std::numeric_limits<double>::infinity(), mean), 0.0};
    }
    const double stat = mean / std::sqrt(lrv / static_cast<double>(n));
    return {stat, std::erfc(std::abs(stat) / std::sqrt(2.0))};
}

const char* significance_stars(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.10) return "*";
    return "";
}

std::string format_cell(double ratio, double p) {
    if (std::isnan(ratio)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", ratio);
    return std::string(buf) + significance_stars(p);
}

}  // namespace macroml::eval
