// macroml: ingest, factors, synth, run and report.
// Exit codes: 0 success, 1 internal error, 2 input or data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "macroml/common/csv.hpp"
#include "macroml/common/error.hpp"
#include "macroml/common/parallel.hpp"
#include "macroml/eval/config.hpp"
#include "macroml/eval/poos.hpp"
#include "macroml/eval/report.hpp"
#include "macroml/factors/factors.hpp"
#include "macroml/features/features.hpp"
#include "macroml/panel/panel.hpp"

namespace fs = std::filesystem;
using namespace macroml;

namespace {

bool verbose() {
    const char* v = std::getenv("MACROML_VERBOSE");
    return v && *v && std::string(v) != "0";
}

void note(const std::string& msg) {
    if (verbose()) std::cerr << msg << '\n';
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " not found: " + path);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

panel::Panel load(const std::string& manifest, const std::string& data) {
    require_file(manifest, "manifest");
    require_file(data, "data");
    auto min = open_in(manifest);
    const auto meta = panel::read_manifest(min);
    auto din = open_in(data);
    auto p = panel::load_panel(meta, din);
    p.validate();
    return p;
}

/// Splits a comma list of model names; names that contain a comma (AR,BIC,
/// ARDI,BIC) are rejoined.
std::vector<std::string> split_models(const std::string& text) {
    std::vector<std::string> tok;
    std::stringstream ss(text);
    for (std::string t; std::getline(ss, t, ',');) tok.push_back(t);
    auto known = [](const std::string& n) {
        for (const auto& m : eval::model_registry())
            if (m.name == n) return true;
        return false;
    };
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tok.size(); ++i) {
        if (i + 1 < tok.size() && known(tok[i] + "," + tok[i + 1])) {
            out.push_back(tok[i] + "," + tok[i + 1]);
            ++i;
        } else if (known(tok[i])) {
            out.push_back(tok[i]);
        } else {
            throw DataError("unknown model '" + tok[i] + "'");
        }
    }
    return out;
}

// ingest

struct IngestArgs {
    std::string manifest, data, out;
    int k = 8;
    bool dry_run = false;
};

int cmd_ingest(const IngestArgs& a) {
    const auto raw = load(a.manifest, a.data);
    auto tp = panel::transform_panel(raw);
    panel::BalanceReport report;
    report.iterations = 0;
    if (!tp.fully_observed()) {
        panel::EmOptions em;
        em.k = a.k;
        auto [balanced, rep] = panel::balance_panel_em(tp, em);
        tp = std::move(balanced);
        report = rep;
    }
    std::cout << "series " << tp.cols() << ", months " << tp.rows() << " (" << tp.dates.front().str() << " to "
              << tp.dates.back().str() << "), imputed " << report.imputed_count << ", EM iterations "
              << report.iterations << '\n';
    if (a.dry_run) return 0;

    fs::create_directories(a.out);
    auto pout = open_out(fs::path(a.out) / "panel_balanced.csv");
    panel::write_panel_csv(pout, tp);
    auto mout = open_out(fs::path(a.out) / "manifest.csv");
    panel::write_manifest(mout, tp.meta);
    auto rout = open_out(fs::path(a.out) / "balance_report.json");
    rout << "{\n  \"iterations\": " << report.iterations << ",\n  \"imputed_count\": " << report.imputed_count
         << ",\n  \"objective_trace\": [";
    for (std::size_t i = 0; i < report.objective_trace.size(); ++i)
        rout << (i ? ", " : "") << csv::format_double(report.objective_trace[i]);
    rout << "]\n}\n";
    return 0;
}

// factors

struct FactorArgs {
    std::string manifest, data, out;
    int kmax = 15;
    int k = 0;
    int top = 10;
    bool transformed = false;
    std::string recursive_start;
    unsigned threads = 0;
};

int cmd_factors(const FactorArgs& a) {
    auto p = load(a.manifest, a.data);
    if (!a.transformed) p = panel::transform_panel(p);
    if (!p.fully_observed()) p = panel::balance_panel_em(p).first;
    const auto z = panel::standardize(p).panel.values;
    const int limit = static_cast<int>(std::min(z.rows(), z.cols())) / 2;
    if (limit < 1) throw DataError("panel too small for factor selection");
    const auto sel = factors::pc_p2(z, std::min(a.kmax, limit));
    const int k = a.k > 0 ? a.k : sel.k;
    const auto fm = factors::extract_factors(z, k);
    const auto diag = factors::marginal_r2(z, fm);
    std::cout << "PC_p2 selects k = " << sel.k << "; using k = " << k << ", total R2 = " << diag.total_r2 << '\n';

    fs::create_directories(a.out);
    auto s = open_out(fs::path(a.out) / "factor_selection.csv");
    s << "k,v,pc_p2\n";
    for (std::size_t j = 1; j < sel.v.size(); ++j)
        s << j << ',' << csv::format_double(sel.v[j]) << ',' << csv::format_double(sel.criterion[j]) << '\n';
    auto t = open_out(fs::path(a.out) / "factor_table.csv");
    factors::write_factor_table_csv(t, p, diag, a.top);
    auto tt = open_out(fs::path(a.out) / "factor_table.txt");
    factors::write_factor_table_text(tt, p, diag, a.top);
    auto l = open_out(fs::path(a.out) / "mr2_long.csv");
    factors::write_mr2_long_csv(l, p, diag);
    if (!a.recursive_start.empty()) {
        const auto counts = factors::recursive_factor_count(p, YearMonth::parse(a.recursive_start), a.kmax,
                                                            a.threads ? a.threads : default_threads());
        auto r = open_out(fs::path(a.out) / "recursive_counts.csv");
        r << "date,k,total_r2\n";
        for (const auto& c : counts) r << c.date.str() << ',' << c.k << ',' << csv::format_double(c.total_r2) << '\n';
    }
    return 0;
}

// synth

struct SynthArgs {
    std::string kind = "factor", out, start = "2000-01";
    int T = 200, N = 50, r = 3, targets = 1;
    double snr = 10.0;
    std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
    const auto start = YearMonth::parse(a.start);
    panel::Panel p;
    if (a.kind == "factor") {
        p = panel::synth_dgp(a.T, a.N, a.r, a.snr, a.seed, start);
    } else if (a.kind == "target") {
        panel::SynthTargetOptions o;
        o.T = a.T;
        o.n_predictors = a.N;
        o.n_targets = a.targets;
        o.r = a.r;
        o.seed = a.seed;
        o.start = start;
        p = panel::synth_target_panel(o);
    } else {
        throw DataError("unknown synth kind '" + a.kind + "' (factor or target)");
    }
    fs::create_directories(a.out);
    auto m = open_out(fs::path(a.out) / "manifest.csv");
    panel::write_manifest(m, p.meta);
    auto d = open_out(fs::path(a.out) / "data.csv");
    panel::write_panel_csv(d, p);
    std::cout << "wrote " << p.cols() << " series x " << p.rows() << " months to " << a.out << '\n';
    return 0;
}

// run

struct RunArgs {
    std::string config, models, exclude, out, dump_design;
    int retune_every = 0;
    unsigned threads = 0;
    std::int64_t seed = -1;
};

void dump_designs(const eval::RunConfig& cfg, const panel::Panel& raw, YearMonth origin, const fs::path& dir) {
    const auto od = eval::build_origin_data(raw, origin, cfg.plan.factors, cfg.plan.min_observations);
    std::vector<features::Recipe> done;
    for (const auto& m : cfg.plan.models) {
        if (m.recipe == features::Recipe::None || std::find(done.begin(), done.end(), m.recipe) != done.end()) continue;
        done.push_back(m.recipe);
        for (const auto& t : cfg.plan.targets)
            for (int h : cfg.plan.horizons) {
                const auto ts = eval::build_training_set(raw, od, t, h, m.recipe);
                features::DesignMatrix d;
                d.names = ts.names;
                d.rows = ts.dates;
                d.rows.push_back(origin);
                d.values.resize(ts.z.rows() + 1, ts.z.cols());
                d.values << ts.z, ts.z_next;
                std::string recipe = features::recipe_name(m.recipe);
                std::replace(recipe.begin(), recipe.end(), '+', '_');
                auto out = open_out(dir / ("design_" + t.id + "_h" + std::to_string(h) + "_" + recipe + ".csv"));
                features::write_design_csv(out, d);
            }
    }
}

int cmd_run(const RunArgs& a) {
    require_file(a.config, "config");
    auto cfg = eval::read_run_config(a.config);
    if (!a.models.empty()) cfg.plan.models = eval::select_models(split_models(a.models));
    if (!a.exclude.empty())
        for (const auto& e : split_models(a.exclude))
            std::erase_if(cfg.plan.models, [&](const eval::ModelSpec& m) { return m.name == e; });
    if (cfg.plan.models.empty()) throw DataError("no models selected");
    if (a.retune_every > 0) cfg.plan.retune_every = a.retune_every;
    if (a.threads > 0) cfg.plan.threads = a.threads;
    if (a.seed >= 0) cfg.plan.seed = static_cast<std::uint64_t>(a.seed);
    if (!a.out.empty()) cfg.output = a.out;

    const auto raw = load(cfg.manifest, cfg.data);
    cfg.plan.validate(raw);
    fs::create_directories(cfg.output);
    if (!a.dump_design.empty()) dump_designs(cfg, raw, YearMonth::parse(a.dump_design), cfg.output);

    note("running " + std::to_string(cfg.plan.models.size()) + " models on " + std::to_string(cfg.plan.threads) +
         " threads");
    const auto res = eval::run_poos(cfg.plan, raw);
    auto r = open_out(fs::path(cfg.output) / "records.csv");
    eval::write_records_csv(r, res.records);
    auto f = open_out(fs::path(cfg.output) / "failures.csv");
    eval::write_failures_csv(f, res.failures);
    // threads do not change results, so they are left out of the saved config
    auto saved = cfg;
    saved.plan.threads = 1;
    auto c = open_out(fs::path(cfg.output) / "config_resolved.json");
    c << eval::run_config_json(saved);
    std::cout << res.records.size() << " forecasts, " << res.failures.size() << " failures -> " << cfg.output << '\n';
    for (const auto& fl : res.failures)
        note("failed: " + fl.target + " " + fl.model + " h=" + std::to_string(fl.h) + " " + fl.origin.str() + ": " +
             fl.error);
    return 0;
}

// report

struct ReportArgs {
    std::string records, out, windows, benchmark = "AR,BIC", plot_from = "2020-01";
};

int cmd_report(const ReportArgs& a) {
    require_file(a.records, "records");
    auto in = open_in(a.records);
    const auto recs = eval::read_records_csv(in);
    std::vector<eval::Window> windows;
    if (a.windows.empty()) {
        windows = eval::default_windows();
    } else {
        std::stringstream ss(a.windows);
        for (std::string w; std::getline(ss, w, ',');) windows.push_back(eval::parse_window(w));
    }
    const auto table = eval::build_eval_table(recs, windows, a.benchmark);

    fs::create_directories(a.out);
    auto c = open_out(fs::path(a.out) / "eval_table.csv");
    eval::write_eval_csv(c, table);
    auto j = open_out(fs::path(a.out) / "eval_table.json");
    eval::write_eval_json(j, table);
    auto t = open_out(fs::path(a.out) / "eval_table.txt");
    eval::write_eval_text(t, table);
    auto s = open_out(fs::path(a.out) / "forecast_series.csv");
    std::optional<YearMonth> from;
    if (!a.plot_from.empty()) from = YearMonth::parse(a.plot_from);
    eval::write_forecast_series_csv(s, recs, from);
    eval::write_eval_text(std::cout, table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"macroml: macroeconomic forecasting and pseudo-out-of-sample evaluation"};
    app.require_subcommand(1);

    IngestArgs ia;
    auto* ingest = app.add_subcommand("ingest", "transform and balance a raw panel");
    ingest->add_option("--manifest", ia.manifest, "series manifest CSV")->required();
    ingest->add_option("--data", ia.data, "raw data CSV")->required();
    ingest->add_option("--out", ia.out, "output directory");
    ingest->add_option("--k", ia.k, "EM factor count")->check(CLI::PositiveNumber);
    ingest->add_flag("--dry-run", ia.dry_run, "validate without writing");

    FactorArgs fa;
    auto* fac = app.add_subcommand("factors", "factor count and marginal R2 diagnostics");
    fac->add_option("--manifest", fa.manifest, "series manifest CSV")->required();
    fac->add_option("--data", fa.data, "data CSV")->required();
    fac->add_option("--out", fa.out, "output directory")->required();
    fac->add_option("--kmax", fa.kmax, "largest factor count searched")->check(CLI::PositiveNumber);
    fac->add_option("--k", fa.k, "factor count to report (default: PC_p2 choice)");
    fac->add_option("--top", fa.top, "series listed per factor")->check(CLI::PositiveNumber);
    fac->add_flag("--transformed", fa.transformed, "data is already transformed (e.g. ingest output)");
    fac->add_option("--recursive-start", fa.recursive_start, "first month of the recursive factor count (YYYY-MM)");
    fac->add_option("--threads", fa.threads, "worker threads (default: all cores)");

    SynthArgs sa;
    auto* syn = app.add_subcommand("synth", "write a synthetic panel");
    syn->add_option("--kind", sa.kind, "factor or target")->check(CLI::IsMember({"factor", "target"}));
    syn->add_option("--T", sa.T, "months")->check(CLI::PositiveNumber);
    syn->add_option("--N", sa.N, "series (predictors for kind=target)")->check(CLI::PositiveNumber);
    syn->add_option("--r", sa.r, "factors");
    syn->add_option("--snr", sa.snr, "signal-to-noise ratio (kind=factor)");
    syn->add_option("--targets", sa.targets, "target series (kind=target)")->check(CLI::PositiveNumber);
    syn->add_option("--seed", sa.seed, "random seed");
    syn->add_option("--start", sa.start, "first month (YYYY-MM)");
    syn->add_option("--out", sa.out, "output directory")->required();

    RunArgs ra;
    auto* run = app.add_subcommand("run", "pseudo-out-of-sample forecasting experiment");
    run->add_option("--config", ra.config, "run configuration JSON")->required();
    run->add_option("--models", ra.models, "comma-separated model subset");
    run->add_option("--exclude", ra.exclude, "comma-separated models to drop");
    run->add_option("--retune-every", ra.retune_every, "origins between hyperparameter searches")->check(CLI::PositiveNumber);
    run->add_option("--threads", ra.threads, "worker threads");
    run->add_option("--seed", ra.seed, "master seed");
    run->add_option("--out", ra.out, "output directory (overrides the config)");
    run->add_option("--dump-design", ra.dump_design, "also write the design matrices at this origin (YYYY-MM)");

    ReportArgs rpa;
    auto* rep = app.add_subcommand("report", "relative MSE tables with DM significance");
    rep->add_option("--records", rpa.records, "records CSV from run")->required();
    rep->add_option("--out", rpa.out, "output directory")->required();
    rep->add_option("--windows", rpa.windows, "comma-separated windows: names or name=FROM:TO");
    rep->add_option("--benchmark", rpa.benchmark, "benchmark model");
    rep->add_option("--plot-from", rpa.plot_from, "first origin of the forecast series (YYYY-MM, empty for all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            if (!ia.dry_run && ia.out.empty()) throw DataError("ingest: --out is required unless --dry-run");
            return cmd_ingest(ia);
        }
        if (*fac) return cmd_factors(fa);
        if (*syn) return cmd_synth(sa);
        if (*run) return cmd_run(ra);
        if (*rep) return cmd_report(rpa);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
