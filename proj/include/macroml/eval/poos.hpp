#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "macroml/common/year_month.hpp"
#include "macroml/eval/models.hpp"
#include "macroml/features/features.hpp"
#include "macroml/panel/panel.hpp"

namespace macroml::eval {

/// A series of the raw panel to forecast. use_log defaults to whether the
/// series' transform code takes logs (so a tcode-2 rate is forecast in
/// changes without logs); end defaults to the last observed level.
struct TargetSpec {
    std::string id;
    std::optional<bool> use_log;
    std::optional<YearMonth> end;
};

struct ExperimentPlan {
    std::vector<TargetSpec> targets;
    std::vector<int> horizons{1, 2, 3};
    std::vector<ModelSpec> models = model_registry();
    YearMonth poos_start{2008, 1};
    std::optional<YearMonth> poos_end;  // last origin considered
    int retune_every = 1;               // origins between hyperparameter searches
    int factors = 8;
    int min_observations = 24;  // series with fewer transformed values at an origin are left out
    std::uint64_t seed = 0;
    unsigned threads = 1;
    ModelSettings settings;

    /// Throws DataError for unknown targets, horizons outside {1,2,3}, an
    /// empty model list or retune_every < 1.
    void validate(const panel::Panel& raw) const;
};

struct ForecastRecord {
    std::string target;
    std::string model;
    int h = 1;
    YearMonth origin;
    double forecast = 0.0;
    double realized = 0.0;
};

struct FailureRecord {
    std::string target;
    std::string model;
    int h = 1;
    YearMonth origin;
    std::string error;
};

struct PoosResult {
    std::vector<ForecastRecord> records;
    std::vector<FailureRecord> failures;
};

/// Predictors at one origin: the transformed panel up to the origin,
/// balanced by EM when incomplete and standardized, with its first k
/// principal-component factors.
struct OriginData {
    YearMonth origin;
    std::vector<YearMonth> dates;
    MatrixXd X;
    std::vector<std::string> x_names;
    MatrixXd F;
};

/// Uses raw rows dated <= origin only.
OriginData build_origin_data(const panel::Panel& raw, YearMonth origin, int factors, int min_observations);

/// Training sample and prediction row for one (target, h, recipe) at an
/// origin: rows t of the design with t + h <= origin, their direct targets,
/// and the design row dated at the origin.
struct TrainingSet {
    MatrixXd z;
    VectorXd y;
    std::vector<std::string> names;
    std::vector<YearMonth> dates;
    RowVectorXd z_next;
};

TrainingSet build_training_set(const panel::Panel& raw, const OriginData& od, const TargetSpec& target, int h,
                               features::Recipe recipe);

/// Origins with a realized outcome for (target, h): poos_start .. min(end,
/// panel end) - h, capped by poos_end.
std::vector<YearMonth> poos_origins(const ExperimentPlan& plan, const panel::Panel& raw, const TargetSpec& target,
                                    int h);

/// Runs every (origin, target, h, model). Each task is pure given the plan,
/// the raw panel and its derived seed; hyperparameters are searched at every
/// retune_every-th origin and reused until the next search. A failing model
/// is recorded in `failures` and the run continues. Records are ordered by
/// target, h, model (plan order), origin.
PoosResult run_poos(const ExperimentPlan& plan, const panel::Panel& raw);

/// The records of a single origin, computed in isolation. Equal bitwise to
/// the corresponding records of run_poos.
PoosResult run_origin(const ExperimentPlan& plan, const panel::Panel& raw, YearMonth origin);

std::uint64_t task_seed(std::uint64_t master, const std::string& target, const std::string& model, int h,
                        YearMonth origin);

/// `target,model,h,origin,forecast,realized`
void write_records_csv(std::ostream& os, const std::vector<ForecastRecord>& records, bool header = true);
std::vector<ForecastRecord> read_records_csv(std::istream& is);
/// `target,model,h,origin,error`
void write_failures_csv(std::ostream& os, const std::vector<FailureRecord>& failures);

}  // namespace macroml::eval
