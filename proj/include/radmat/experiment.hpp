#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radmat/config.hpp"
#include "radmat/featurize.hpp"
#include "radmat/metrics.hpp"
#include "radmat/mlp.hpp"
#include "radmat/sim.hpp"

namespace radmat {

struct ExperimentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation regimes plus the two mitigations. The pooled rows merge their
// component conditions (summed confusion matrices and histograms).
enum class Condition {
    Baseline,
    Height35,
    Height55,
    HeightPooled,
    TiltPlus10,
    TiltMinus10,
    TiltPooled,
    SessionShift,
    MitigationR4Norm,
    MitigationAugmented,
};

std::string to_string(Condition c);
Condition parse_condition(const std::string& name);
std::vector<Condition> all_conditions();

struct ExperimentPlan {
    RadarConfig radar;
    std::vector<MaterialSpec> materials;
    int train_per_class = 200;
    int eval_per_class = 100;
    int hidden1 = 32;
    int hidden2 = 32;
    TrainConfig train;             // seed is derived from radar.master_seed
    double height_low_m = 0.35;
    double height_high_m = 0.55;
    double tilt_mag_deg = 10.0;
    int eval_sessions = 4;

    static ExperimentPlan defaults(std::uint64_t master_seed = 104);
    void validate() const;
};

// Trained classifier together with the featurization it was trained with.
struct Pipeline {
    MlpParams params;
    BinWindow window;
    Normalization norm;
    std::vector<EpochStats> history;
    TrainedOn meta;
};

// Runs conditions on demand and caches datasets, trained pipelines, and
// reports. Evaluation seeds are disjoint from training seeds by
// construction; all randomness descends from radar.master_seed.
class ExperimentContext {
  public:
    explicit ExperimentContext(ExperimentPlan plan);

    const ExperimentPlan& plan() const { return plan_; }
    const std::string& fingerprint() const { return fingerprint_; }

    EvalReport run_condition(Condition c);
    std::vector<EvalReport> run_conditions(std::span<const Condition> conditions);
    std::vector<EvalReport> run_all();

    const Pipeline& nominal_pipeline();
    const Pipeline& r4_pipeline();
    const Pipeline& augmented_pipeline();

    // Mean over metal-class profiles of the largest in-window magnitude, under
    // the nominal pipeline's window; supports the height-mechanism check.
    double metal_peak_mean(Condition eval_condition);

    // True when every session-shift eval profile sits at the nominal pose and
    // carries a non-reference session id.
    bool session_geometry_matches_nominal();

    const std::vector<std::string>& class_names() const { return class_names_; }

  private:
    const Dataset& eval_profiles(Condition c);
    Pipeline train_pipeline(const Scenario& scenario, NormMode norm_mode,
                            std::uint64_t seed_salt);
    EvalReport evaluate(const Pipeline& pipe, const Dataset& profiles,
                        const std::string& condition_name);

    ExperimentPlan plan_;
    std::string fingerprint_;
    std::vector<std::string> class_names_;
    std::optional<Pipeline> nominal_;
    std::optional<Pipeline> r4_;
    std::optional<Pipeline> augmented_;
    std::map<Condition, Dataset> eval_cache_;
    std::map<Condition, EvalReport> report_cache_;
};

// One acceptance-style threshold evaluated on a finished run.
struct CheckOutcome {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Thresholds enforced by `experiment --check`; the conditions argument
// selects which checks apply (checks run when every report they need is
// derivable from the requested set).
std::vector<CheckOutcome> run_checks(ExperimentContext& ctx,
                                     std::span<const Condition> conditions);

}  // namespace radmat
