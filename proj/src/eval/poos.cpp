#include "macroml/eval/poos.hpp"

#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/parallel.hpp"
#include "macroml/common/rng.hpp"
#include "macroml/factors/factors.hpp"

namespace macroml::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int target_column(const panel::Panel& raw, const TargetSpec& t) {
    const int j = raw.find(t.id);
    if (j < 0) throw DataError("unknown target series '" + t.id + "'");
    return j;
}

bool target_uses_log(const panel::Panel& raw, const TargetSpec& t) {
    return t.use_log.value_or(panel::uses_log(raw.meta[static_cast<std::size_t>(target_column(raw, t))].tcode));
}

YearMonth target_end(const panel::Panel& raw, const TargetSpec& t) {
    const int j = target_column(raw, t);
    Index last = raw.rows() - 1;
    while (last >= 0 && !raw.mask(last, j)) --last;
    if (last < 0) throw DataError("target series '" + t.id + "' has no observations");
    YearMonth end = raw.dates[static_cast<std::size_t>(last)];
    if (t.end && *t.end < end) end = *t.end;
    return end;
}

/// Levels of the target over raw rows 0..last_row, NaN where unobserved or
/// after the target's end.
std::vector<double> target_levels(const panel::Panel& raw, const TargetSpec& t, Index last_row) {
    const int j = target_column(raw, t);
    const YearMonth end = target_end(raw, t);
    std::vector<double> lv(static_cast<std::size_t>(last_row + 1), kNaN);
    for (Index r = 0; r <= last_row; ++r)
        if (raw.mask(r, j) && raw.dates[static_cast<std::size_t>(r)] <= end) lv[static_cast<std::size_t>(r)] = raw.values(r, j);
    return lv;
}

}  // namespace

void ExperimentPlan::validate(const panel::Panel& raw) const {
    if (targets.empty()) throw DataError("plan: no targets");
    for (const auto& t : targets) target_column(raw, t);
    if (horizons.empty()) throw DataError("plan: no horizons");
    for (int h : horizons)
        if (h < 1 || h > 3) throw DataError("plan: horizon " + std::to_string(h) + " outside {1,2,3}");
    if (models.empty()) throw DataError("plan: no models");
    if (retune_every < 1) throw DataError("plan: retune_every must be >= 1");
    if (factors < 1) throw DataError("plan: factors must be >= 1");
    if (raw.row_of(poos_start) < 0) throw DataError("plan: poos_start " + poos_start.str() + " outside the panel");
}

OriginData build_origin_data(const panel::Panel& raw, YearMonth origin, int factors, int min_observations) {
    const int row = raw.row_of(origin);
    if (row < 0) throw DataError("origin " + origin.str() + " outside the panel");
    const panel::Panel tp = panel::transform_panel(raw.slice_rows(0, row));

    std::vector<Index> keep;
    for (Index j = 0; j < tp.cols(); ++j) {
        const auto n = tp.mask.col(j).count();
        if (n < std::max(2, min_observations)) continue;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Index t = 0; t < tp.rows(); ++t)
            if (tp.mask(t, j)) {
                lo = std::min(lo, tp.values(t, j));
                hi = std::max(hi, tp.values(t, j));
            }
        if (hi > lo) keep.push_back(j);
    }
    if (keep.empty()) throw DataError("no usable predictor series at " + origin.str());

    panel::Panel p;
    p.dates = tp.dates;
    p.values = tp.values(Eigen::all, keep);
    p.mask = tp.mask(Eigen::all, keep);
    for (Index j : keep) p.meta.push_back(tp.meta[static_cast<std::size_t>(j)]);

    const int limit = std::max(1, static_cast<int>(std::min(p.rows(), p.cols())) / 2);
    const int k = std::min(factors, limit);
    if (!p.fully_observed()) {
        panel::EmOptions em;
        em.k = k;
        p = panel::balance_panel_em(p, em).first;
    }
    OriginData od;
    od.origin = origin;
    od.dates = p.dates;
    od.X = panel::standardize(p).panel.values;
    od.x_names = p.ids();
    od.F = factors::extract_factors(od.X, k).F;
    return od;
}

TrainingSet build_training_set(const panel::Panel& raw, const OriginData& od, const TargetSpec& target, int h,
                               features::Recipe recipe) {
    const Index row = raw.row_of(od.origin);
    const bool use_log = target_uses_log(raw, target);
    const auto levels = target_levels(raw, target, row);
    const std::vector<YearMonth> raw_dates(raw.dates.begin(), raw.dates.begin() + row + 1);
    const auto tgt = features::build_target(target.id, raw_dates, levels, h, use_log);

    TrainingSet ts;
    if (recipe == features::Recipe::None) return ts;

    const auto y_full = features::one_period_change(levels, use_log);
    const Index offset = raw.row_of(od.dates.front());
    const std::vector<double> y(y_full.begin() + offset, y_full.end());

    auto fs = features::FeatureSet::for_recipe(recipe);
    fs.k = static_cast<int>(od.F.cols());
    const auto d = features::assemble_design(fs, od.dates, y, od.F, od.X, od.x_names);

    const int at = d.row(od.origin);
    if (at < 0) throw DataError("no complete feature row at origin " + od.origin.str());
    std::vector<Index> rows;
    std::vector<double> yv;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        if (d.rows[i].plus(h) > od.origin) continue;
        const double v = tgt.values[static_cast<std::size_t>(raw.row_of(d.rows[i]))];
        if (std::isnan(v)) continue;
        rows.push_back(static_cast<Index>(i));
        yv.push_back(v);
        ts.dates.push_back(d.rows[i]);
    }
    if (rows.size() < 10) throw DataError("fewer than 10 training rows at origin " + od.origin.str());
    ts.z = d.values(rows, Eigen::all);
    ts.y = Eigen::Map<const VectorXd>(yv.data(), static_cast<Index>(yv.size()));
    ts.names = d.names;
    ts.z_next = d.values.row(at);
    return ts;
}

std::vector<YearMonth> poos_origins(const ExperimentPlan& plan, const panel::Panel& raw, const TargetSpec& target,
                                    int h) {
    YearMonth last = target_end(raw, target);
    if (raw.dates.back() < last) last = raw.dates.back();
    last = last.plus(-h);
    if (plan.poos_end && *plan.poos_end < last) last = *plan.poos_end;
    std::vector<YearMonth> out;
    for (YearMonth o = plan.poos_start; o <= last; o = o.plus(1)) out.push_back(o);
    return out;
}

std::uint64_t task_seed(std::uint64_t master, const std::string& target, const std::string& model, int h,
                        YearMonth origin) {
    return derive_seed(master, {hash_name(target.c_str()), hash_name(model.c_str()), static_cast<std::uint64_t>(h),
                                static_cast<std::uint64_t>(origin.index())});
}

namespace {

struct OriginSlot {
    std::optional<OriginData> data;
    std::string error;
};

OriginSlot make_slot(const ExperimentPlan& plan, const panel::Panel& raw, YearMonth o) {
    OriginSlot s;
    try {
        s.data = build_origin_data(raw, o, plan.factors, plan.min_observations);
    } catch (const std::exception& e) {
        s.error = e.what();
    }
    return s;
}

struct Task {
    std::size_t target;
    int h;
    std::size_t model;
    YearMonth origin;
};

struct TaskResult {
    bool ok = false;
    double forecast = kNaN;
    Hyper hyper;
    std::string error;
};

TaskResult run_task(const ExperimentPlan& plan, const panel::Panel& raw, const OriginSlot& slot, const Task& t,
                    const Hyper& hyper) {
    TaskResult r;
    try {
        if (!slot.data) throw DataError(slot.error);
        const auto& target = plan.targets[t.target];
        const auto& spec = plan.models[t.model];
        const auto ts = build_training_set(raw, *slot.data, target, t.h, spec.recipe);
        const auto seed = task_seed(plan.seed, target.id, spec.name, t.h, t.origin);
        const auto mf = fit_and_forecast(spec, ts.z, ts.y, ts.names, ts.z_next, plan.settings, seed, hyper);
        if (!std::isfinite(mf.forecast)) throw ConvergenceError("non-finite forecast");
        r.ok = true;
        r.forecast = mf.forecast;
        r.hyper = mf.hyper;
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

YearMonth tuning_origin(const ExperimentPlan& plan, YearMonth o) {
    const int q = months_between(plan.poos_start, o);
    return plan.poos_start.plus((q / plan.retune_every) * plan.retune_every);
}

double realized_value(const panel::Panel& raw, const TargetSpec& t, int h, YearMonth origin) {
    const Index last = raw.row_of(origin.plus(h));
    if (last < 0) return kNaN;
    const auto levels = target_levels(raw, t, last);
    const double a = levels[static_cast<std::size_t>(last - h)], b = levels[static_cast<std::size_t>(last)];
    if (std::isnan(a) || std::isnan(b)) return kNaN;
    return (target_uses_log(raw, t) ? std::log(b / a) : b - a) / h;
}

void emit(PoosResult& out, const ExperimentPlan& plan, const panel::Panel& raw, const Task& t, const TaskResult& r) {
    const auto& target = plan.targets[t.target].id;
    const auto& model = plan.models[t.model].name;
    if (r.ok)
        out.records.push_back({target, model, t.h, t.origin, r.forecast, realized_value(raw, plan.targets[t.target], t.h, t.origin)});
    else
        out.failures.push_back({target, model, t.h, t.origin, r.error});
}

TaskResult with_tuned(const TaskResult& tuned, YearMonth at, const std::function<TaskResult(const Hyper&)>& fit) {
    if (!tuned.ok) {
        TaskResult r;
        r.error = "hyperparameter search failed at " + at.str() + ": " + tuned.error;
        return r;
    }
    return fit(tuned.hyper);
}

}  // namespace

PoosResult run_poos(const ExperimentPlan& plan, const panel::Panel& raw) {
    plan.validate(raw);
    std::vector<Task> tasks;
    YearMonth last = plan.poos_start.plus(-1);
    for (std::size_t ti = 0; ti < plan.targets.size(); ++ti)
        for (int h : plan.horizons)
            for (std::size_t mi = 0; mi < plan.models.size(); ++mi)
                for (const auto& o : poos_origins(plan, raw, plan.targets[ti], h)) {
                    tasks.push_back({ti, h, mi, o});
                    if (last < o) last = o;
                }

    const int n_origins = months_between(plan.poos_start, last) + 1;
    std::vector<OriginSlot> slots(static_cast<std::size_t>(std::max(0, n_origins)));
    parallel_for(slots.size(), plan.threads, [&](std::size_t i) {
        slots[i] = make_slot(plan, raw, plan.poos_start.plus(static_cast<int>(i)));
    });
    auto slot_of = [&](YearMonth o) -> const OriginSlot& {
        return slots[static_cast<std::size_t>(months_between(plan.poos_start, o))];
    };

    // Searches first, then the origins that reuse their block's search.
    std::vector<TaskResult> results(tasks.size());
    std::vector<std::size_t> searches, reuses;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        (tuning_origin(plan, tasks[i].origin) == tasks[i].origin ? searches : reuses).push_back(i);
    parallel_for(searches.size(), plan.threads, [&](std::size_t k) {
        const auto& t = tasks[searches[k]];
        results[searches[k]] = run_task(plan, raw, slot_of(t.origin), t, {});
    });
    std::vector<std::size_t> first_of_block(tasks.size());
    {
        // tasks are laid out origin-fastest, so a block's search precedes its reuses
        std::size_t current = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tuning_origin(plan, tasks[i].origin) == tasks[i].origin) current = i;
            first_of_block[i] = current;
        }
    }
    parallel_for(reuses.size(), plan.threads, [&](std::size_t k) {
        const auto i = reuses[k];
        const auto& t = tasks[i];
        const auto& tuned = results[first_of_block[i]];
        results[i] = with_tuned(tuned, tasks[first_of_block[i]].origin,
                                [&](const Hyper& hy) { return run_task(plan, raw, slot_of(t.origin), t, hy); });
    });

    PoosResult out;
    for (std::size_t i = 0; i < tasks.size(); ++i) emit(out, plan, raw, tasks[i], results[i]);
    return out;
}

PoosResult run_origin(const ExperimentPlan& plan, const panel::Panel& raw, YearMonth origin) {
    plan.validate(raw);
    const YearMonth tune_at = tuning_origin(plan, origin);
    const OriginSlot slot = make_slot(plan, raw, origin);
    std::optional<OriginSlot> tune_slot;
    if (tune_at != origin) tune_slot = make_slot(plan, raw, tune_at);

    PoosResult out;
    for (std::size_t ti = 0; ti < plan.targets.size(); ++ti)
        for (int h : plan.horizons) {
            const auto origins = poos_origins(plan, raw, plan.targets[ti], h);
            if (origins.empty() || origin < origins.front() || origins.back() < origin) continue;
            for (std::size_t mi = 0; mi < plan.models.size(); ++mi) {
                const Task t{ti, h, mi, origin};
                TaskResult r;
                if (!tune_slot) {
                    r = run_task(plan, raw, slot, t, {});
                } else {
                    const Task search{ti, h, mi, tune_at};
                    const auto tuned = run_task(plan, raw, *tune_slot, search, {});
                    r = with_tuned(tuned, tune_at, [&](const Hyper& hy) { return run_task(plan, raw, slot, t, hy); });
                }
                emit(out, plan, raw, t, r);
            }
        }
    return out;
}

void write_records_csv(std::ostream& os, const std::vector<ForecastRecord>& records, bool header) {
    if (header) os << "target,model,h,origin,forecast,realized\n";
    for (const auto& r : records)
        os << csv::escape(r.target) << ',' << csv::escape(r.model) << ',' << r.h << ',' << r.origin.str() << ','
           << csv::format_double(r.forecast) << ',' << csv::format_double(r.realized) << '\n';
}

std::vector<ForecastRecord> read_records_csv(std::istream& is) {
    const auto table = csv::read(is);
    const char* cols[] = {"target", "model", "h", "origin", "forecast", "realized"};
    int pos[6];
    for (int i = 0; i < 6; ++i) {
        pos[i] = table.column(cols[i]);
        if (pos[i] < 0) throw DataError(std::string("records: missing column '") + cols[i] + "'");
    }
    auto number = [](const std::string& s) {
        if (s.empty() || s == "NA" || s == "NaN") return kNaN;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size()) throw DataError("records: non-numeric value '" + s + "'");
        return v;
    };
    std::vector<ForecastRecord> out;
    for (const auto& row : table.rows) {
        ForecastRecord r;
        r.target = row[static_cast<std::size_t>(pos[0])];
        r.model = row[static_cast<std::size_t>(pos[1])];
        const double h = number(row[static_cast<std::size_t>(pos[2])]);
        if (!(h >= 1.0) || h != std::floor(h)) throw DataError("records: bad horizon '" + row[static_cast<std::size_t>(pos[2])] + "'");
        r.h = static_cast<int>(h);
        r.origin = YearMonth::parse(row[static_cast<std::size_t>(pos[3])]);
        r.forecast = number(row[static_cast<std::size_t>(pos[4])]);
        r.realized = number(row[static_cast<std::size_t>(pos[5])]);
        out.push_back(r);
    }
    return out;
}

void write_failures_csv(std::ostream& os, const std::vector<FailureRecord>& failures) {
    os << "target,model,h,origin,error\n";
    for (const auto& f : failures)
        os << csv::escape(f.target) << ',' << csv::escape(f.model) << ',' << f.h << ',' << f.origin.str() << ','
           << csv::escape(f.error) << '\n';
}

}  // namespace macroml::eval
