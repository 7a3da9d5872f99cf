#include "macroml/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/eval/dm.hpp"

namespace macroml::eval {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<Window> default_windows() {
    return {
        {"full", "All Sample (2008-2020)", YearMonth{2008, 1}, std::nullopt},
        {"restricted", "Restricted Sample (2011-2020)", YearMonth{2011, 1}, std::nullopt},
        {"covid", "Covid Sample (from 2020m1)", YearMonth{2020, 1}, std::nullopt},
        {"quiet", "Quiet(er) Period (2011-2019)", YearMonth{2011, 1}, YearMonth{2019, 12}},
        {"precovid", "Pre-Covid (2008-2019)", YearMonth{2008, 1}, YearMonth{2019, 12}},
    };
}

std::vector<Window> partition_windows() {
    return {
        {"gr", "Great Recession (2008-2010)", YearMonth{2008, 1}, YearMonth{2010, 12}},
        {"quiet", "Quiet(er) Period (2011-2019)", YearMonth{2011, 1}, YearMonth{2019, 12}},
        {"covid", "Covid Sample (from 2020m1)", YearMonth{2020, 1}, std::nullopt},
    };
}

Window parse_window(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
        for (const auto& w : default_windows())
            if (w.name == text) return w;
        for (const auto& w : partition_windows())
            if (w.name == text) return w;
        throw DataError("unknown window '" + text + "'");
    }
    Window w;
    w.name = text.substr(0, eq);
    if (w.name.empty()) throw DataError("window without a name: '" + text + "'");
    const std::string range = text.substr(eq + 1);
    const auto colon = range.find(':');
    if (colon == std::string::npos) throw DataError("window range must be FROM:TO in '" + text + "'");
    const std::string a = range.substr(0, colon), b = range.substr(colon + 1);
    if (!a.empty()) w.from = YearMonth::parse(a);
    if (!b.empty()) w.to = YearMonth::parse(b);
    if (w.from && w.to && *w.to < *w.from) throw DataError("window ends before it starts: '" + text + "'");
    w.label = w.name + " (" + (a.empty() ? "start" : a) + " to " + (b.empty() ? "end" : b) + ")";
    return w;
}

const EvalCell* EvalTable::find(const std::string& window, const std::string& model, const std::string& target,
                                int h) const {
    for (const auto& c : cells)
        if (c.window == window && c.model == model && c.target == target && c.h == h) return &c;
    return nullptr;
}

EvalTable build_eval_table(const std::vector<ForecastRecord>& records, const std::vector<Window>& windows,
                           const std::string& benchmark) {
    EvalTable t;
    t.benchmark = benchmark;
    t.windows = windows;
    t.models.push_back(benchmark);
    auto add_unique = [](auto& v, const auto& x) {
        if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    };
    // (target, h, model) -> origin index -> (forecast, realized)
    std::map<std::tuple<std::string, int, std::string>, std::map<int, std::pair<double, double>>> series;
    for (const auto& r : records) {
        add_unique(t.targets, r.target);
        add_unique(t.horizons, r.h);
        add_unique(t.models, r.model);
        if (std::isnan(r.realized)) continue;
        series[{r.target, r.h, r.model}][r.origin.index()] = {r.forecast, r.realized};
    }
    std::sort(t.horizons.begin(), t.horizons.end());

    for (const auto& target : t.targets)
        for (int h : t.horizons) {
            bool any = false;
            for (const auto& m : t.models) any = any || series.count({target, h, m});
            if (!any) continue;
            const auto bit = series.find({target, h, benchmark});
            if (bit == series.end())
                throw DataError("missing benchmark " + benchmark + " for " + target + " h=" + std::to_string(h));
            const auto& bench = bit->second;
            for (const auto& w : windows) {
                std::vector<int> origins;
                for (const auto& [o, fr] : bench)
                    if (w.contains(YearMonth::from_index(o))) origins.push_back(o);
                double bench_mse = 0.0;
                for (int o : origins) {
                    const auto& [f, y] = bench.at(o);
                    bench_mse += (y - f) * (y - f);
                }
                for (const auto& m : t.models) {
                    EvalCell c;
                    c.model = m;
                    c.target = target;
                    c.h = h;
                    c.window = w.name;
                    c.n = static_cast<int>(origins.size());
                    const auto mit = series.find({target, h, m});
                    c.missing = mit == series.end();
                    std::vector<double> d;
                    double sse = 0.0;
                    for (int o : origins) {
                        if (c.missing) break;
                        const auto it = mit->second.find(o);
                        if (it == mit->second.end()) {
                            c.missing = true;
                            break;
                        }
                        const double e = it->second.second - it->second.first;
                        const auto& [bf, by] = bench.at(o);
                        sse += e * e;
                        d.push_back(e * e - (by - bf) * (by - bf));
                    }
                    if (c.missing || origins.empty()) {
                        c.missing = true;
                        c.ratio = c.mse = c.dm_stat = c.p_value = kNaN;
                    } else if (m == benchmark) {
                        c.mse = bench_mse / c.n;
                        c.ratio = 1.0;
                        c.dm_stat = 0.0;
                        c.p_value = 1.0;
                    } else {
                        c.mse = sse / c.n;
                        c.ratio = sse / bench_mse;
                        if (c.n >= 10) {
                            const auto r = dm_test(d, h);
                            c.dm_stat = r.statistic;
                            c.p_value = r.p_value;
                        } else {
                            c.dm_stat = c.p_value = kNaN;
                        }
                    }
                    c.text = format_cell(c.ratio, c.p_value);
                    t.cells.push_back(std::move(c));
                }
            }
        }
    return t;
}

void write_eval_csv(std::ostream& os, const EvalTable& t) {
    os << "window,target,h,model,n,mse,ratio,dm_stat,p_value,cell\n";
    for (const auto& c : t.cells)
        os << csv::escape(c.window) << ',' << csv::escape(c.target) << ',' << c.h << ',' << csv::escape(c.model) << ','
           << c.n << ',' << csv::format_double(c.mse) << ',' << csv::format_double(c.ratio) << ','
           << csv::format_double(c.dm_stat) << ',' << csv::format_double(c.p_value) << ',' << csv::escape(c.text)
           << '\n';
}

void write_eval_json(std::ostream& os, const EvalTable& t) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["benchmark"] = t.benchmark;
    j["models"] = t.models;
    j["targets"] = t.targets;
    j["horizons"] = t.horizons;
    j["windows"] = nlohmann::json::array();
    for (const auto& w : t.windows)
        j["windows"].push_back({{"name", w.name},
                                {"label", w.label},
                                {"from", w.from ? nlohmann::json(w.from->str()) : nlohmann::json(nullptr)},
                                {"to", w.to ? nlohmann::json(w.to->str()) : nlohmann::json(nullptr)}});
    j["cells"] = nlohmann::json::array();
    for (const auto& c : t.cells)
        j["cells"].push_back({{"window", c.window},
                              {"target", c.target},
                              {"h", c.h},
                              {"model", c.model},
                              {"n", c.n},
                              {"mse", num(c.mse)},
                              {"ratio", num(c.ratio)},
                              {"dm_stat", num(c.dm_stat)},
                              {"p_value", num(c.p_value)},
                              {"missing", c.missing},
                              {"cell", c.text}});
    os << j.dump(2) << '\n';
}

void write_eval_text(std::ostream& os, const EvalTable& t) {
    constexpr int name_w = 16, cell_w = 9;
    constexpr std::size_t per_block = 6;
    auto pad = [](const std::string& s, int w) {
        return s.size() >= static_cast<std::size_t>(w) ? s + " " : s + std::string(static_cast<std::size_t>(w) - s.size(), ' ');
    };
    const int group_w = cell_w * static_cast<int>(t.horizons.size());
    for (const auto& w : t.windows) {
        for (std::size_t first = 0; first < t.targets.size(); first += per_block) {
            const std::size_t last = std::min(t.targets.size(), first + per_block);
            os << w.label << (first > 0 ? ", Continued" : "") << '\n';
            std::string line = pad("", name_w);
            for (std::size_t i = first; i < last; ++i) line += pad(t.targets[i], group_w);
            os << line << '\n';
            line = pad("", name_w);
            for (std::size_t i = first; i < last; ++i)
                for (int h : t.horizons) line += pad("h=" + std::to_string(h), cell_w);
            os << line << '\n';
            for (const auto& m : t.models) {
                line = pad(m, name_w);
                for (std::size_t i = first; i < last; ++i)
                    for (int h : t.horizons) {
                        const auto* c = t.find(w.name, m, t.targets[i], h);
                        line += pad(c ? c->text : "", cell_w);
                    }
                while (!line.empty() && line.back() == ' ') line.pop_back();
                os << line << '\n';
            }
            os << "Relative MSE vs " << t.benchmark << "; ***, **, * mark 1%, 5%, 10% DM significance.\n\n";
        }
    }
}

void write_forecast_series_csv(std::ostream& os, const std::vector<ForecastRecord>& records,
                               std::optional<YearMonth> from) {
    os << "target,h,origin,target_date,model,forecast,realized\n";
    for (const auto& r : records) {
        if (from && r.origin < *from) continue;
        os << csv::escape(r.target) << ',' << r.h << ',' << r.origin.str() << ',' << r.origin.plus(r.h).str() << ','
           << csv::escape(r.model) << ',' << csv::format_double(r.forecast) << ',' << csv::format_double(r.realized)
           << '\n';
    }
}

}  // namespace macroml::eval
