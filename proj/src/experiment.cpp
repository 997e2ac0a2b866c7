#include "radmat/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace radmat {

namespace {

// Seed salts: training data, model init/shuffle, and per-condition eval data
// all live in disjoint streams under the master seed.
constexpr std::uint64_t kTrainDataSalt = 0xE0000001;
constexpr std::uint64_t kAugTrainDataSalt = 0xE0000002;
constexpr std::uint64_t kModelSeedSalt = 0xE0000010;
constexpr std::uint64_t kEvalDataSalt = 0xE0000100;

void require(bool ok, const std::string& msg) {
    if (!ok) throw ExperimentError(msg);
}

int eval_salt(Condition c) {
    switch (c) {
        case Condition::Baseline: return 0;
        case Condition::Height35: return 1;
        case Condition::Height55: return 2;
        case Condition::TiltPlus10: return 3;
        case Condition::TiltMinus10: return 4;
        case Condition::SessionShift: return 5;
        default: return -1;
    }
}

}  // namespace

std::string to_string(Condition c) {
    switch (c) {
        case Condition::Baseline: return "baseline";
        case Condition::Height35: return "height_35";
        case Condition::Height55: return "height_55";
        case Condition::HeightPooled: return "height_pooled";
        case Condition::TiltPlus10: return "tilt_plus10";
        case Condition::TiltMinus10: return "tilt_minus10";
        case Condition::TiltPooled: return "tilt_pooled";
        case Condition::SessionShift: return "session_shift";
        case Condition::MitigationR4Norm: return "mitigation_r4norm";
        case Condition::MitigationAugmented: return "mitigation_augmented";
    }
    return "unknown";
}

Condition parse_condition(const std::string& name) {
    for (const Condition c : all_conditions()) {
        if (to_string(c) == name) return c;
    }
    throw ExperimentError("unknown condition '" + name + "'");
}

std::vector<Condition> all_conditions() {
    return {Condition::Baseline,        Condition::Height35,
            Condition::Height55,        Condition::HeightPooled,
            Condition::TiltPlus10,      Condition::TiltMinus10,
            Condition::TiltPooled,      Condition::SessionShift,
            Condition::MitigationR4Norm, Condition::MitigationAugmented};
}

ExperimentPlan ExperimentPlan::defaults(std::uint64_t master_seed) {
    ExperimentPlan plan;
    plan.radar.master_seed = master_seed;
    plan.materials = default_materials();
    return plan;
}

void ExperimentPlan::validate() const {
    radar.validate();
    require(materials.size() == 5, "plan: expected 5 materials");
    for (const auto& m : materials) m.validate();
    require(train_per_class >= 2 && eval_per_class >= 1, "plan: dataset sizes too small");
    require(hidden1 >= 1 && hidden2 >= 1, "plan: hidden widths must be positive");
    require(eval_sessions >= 1, "plan: eval_sessions must be >= 1");
    require(height_low_m > 0.0 && height_high_m > height_low_m, "plan: bad height range");
    require(tilt_mag_deg > 0.0 && tilt_mag_deg < 90.0, "plan: bad tilt magnitude");
}

ExperimentContext::ExperimentContext(ExperimentPlan plan) : plan_(std::move(plan)) {
    plan_.validate();
    std::ostringstream extra;
    extra << "plan|" << plan_.train_per_class << '|' << plan_.eval_per_class << '|'
          << plan_.hidden1 << '|' << plan_.hidden2 << '|' << fmt_g(plan_.height_low_m, 17) << '|'
          << fmt_g(plan_.height_high_m, 17) << '|' << fmt_g(plan_.tilt_mag_deg, 17) << '|'
          << plan_.eval_sessions << '|' << fmt_g(plan_.train.learning_rate, 17) << '|'
          << plan_.train.epochs << '|' << plan_.train.batch_size;
    fingerprint_ = config_fingerprint(plan_.radar, plan_.materials, plan_.radar.master_seed,
                                      extra.str());
    class_names_.assign(5, "");
    for (const auto& m : plan_.materials) {
        class_names_[static_cast<std::size_t>(m.class_id)] = m.name;
    }
}

Pipeline ExperimentContext::train_pipeline(const Scenario& scenario, NormMode norm_mode,
                                           std::uint64_t seed_salt) {
    const std::uint64_t master = plan_.radar.master_seed;
    const std::uint64_t data_seed =
        seed_mix(master, scenario.kind == Scenario::Kind::Augmented ? kAugTrainDataSalt
                                                                    : kTrainDataSalt);
    const Dataset profiles = generate_dataset(plan_.radar, plan_.materials, scenario,
                                              plan_.train_per_class, data_seed);

    Pipeline pipe;
    pipe.window = select_window(profiles.profiles, kFeatureDim);
    pipe.norm.mode = norm_mode;
    pipe.norm.reference_range_m = plan_.radar.reference_range_m;
    pipe.norm.range_resolution_m = plan_.radar.range_resolution_m;

    const FeatureDataset feats = featurize(profiles, pipe.window, pipe.norm, plan_.materials);
    Mat x(static_cast<int>(feats.items.size()), kInputDim);
    std::vector<int> y(feats.items.size());
    for (std::size_t i = 0; i < feats.items.size(); ++i) {
        std::copy(feats.items[i].values.begin(), feats.items[i].values.end(),
                  x.row(static_cast<int>(i)));
        y[i] = feats.items[i].label;
    }

    TrainConfig cfg = plan_.train;
    cfg.seed = seed_mix(master, kModelSeedSalt, seed_salt);
    TrainResult result = train(x, y, cfg, plan_.hidden1, plan_.hidden2);

    pipe.params = std::move(result.params);
    pipe.history = std::move(result.history);

    std::ostringstream csv;
    write_features_csv(csv, feats);
    pipe.meta.scenario = scenario.name();
    pipe.meta.seed = cfg.seed;
    pipe.meta.dataset_hash = hex64(fnv1a(csv.str()));
    pipe.meta.config_fingerprint = fingerprint_;
    return pipe;
}

const Pipeline& ExperimentContext::nominal_pipeline() {
    if (!nominal_) nominal_ = train_pipeline(Scenario::nominal(), NormMode::None, 1);
    return *nominal_;
}

const Pipeline& ExperimentContext::r4_pipeline() {
    if (!r4_) r4_ = train_pipeline(Scenario::nominal(), NormMode::RangeR4, 2);
    return *r4_;
}

const Pipeline& ExperimentContext::augmented_pipeline() {
    if (!augmented_) {
        const Scenario aug = Scenario::augmented(plan_.height_low_m, plan_.height_high_m,
                                                 -plan_.tilt_mag_deg, plan_.tilt_mag_deg);
        augmented_ = train_pipeline(aug, NormMode::None, 3);
    }
    return *augmented_;
}

const Dataset& ExperimentContext::eval_profiles(Condition c) {
    auto it = eval_cache_.find(c);
    if (it != eval_cache_.end()) return it->second;

    Scenario scenario;
    switch (c) {
        case Condition::Baseline: scenario = Scenario::nominal(); break;
        case Condition::Height35: scenario = Scenario::height(plan_.height_low_m); break;
        case Condition::Height55: scenario = Scenario::height(plan_.height_high_m); break;
        case Condition::TiltPlus10: scenario = Scenario::tilt(plan_.tilt_mag_deg); break;
        case Condition::TiltMinus10: scenario = Scenario::tilt(-plan_.tilt_mag_deg); break;
        case Condition::SessionShift: scenario = Scenario::session(plan_.eval_sessions); break;
        default:
            throw ExperimentError("condition '" + to_string(c) + "' has no dataset of its own");
    }
    const std::uint64_t seed = seed_mix(plan_.radar.master_seed, kEvalDataSalt,
                                        static_cast<std::uint64_t>(eval_salt(c)));
    Dataset ds = generate_dataset(plan_.radar, plan_.materials, scenario, plan_.eval_per_class,
                                  seed);
    return eval_cache_.emplace(c, std::move(ds)).first->second;
}

EvalReport ExperimentContext::evaluate(const Pipeline& pipe, const Dataset& profiles,
                                       const std::string& condition_name) {
    std::vector<PredictionRecord> records;
    records.reserve(profiles.profiles.size());
    for (const auto& profile : profiles.profiles) {
        const FeatureVector fv =
            normalize(extract_features(profile, pipe.window), pipe.norm, pipe.window);
        const Prediction pred = predict(pipe.params, fv.values);
        records.push_back({fv.label, pred.predicted_class, pred.confidence});
    }
    return make_report(condition_name, records, fingerprint_);
}

EvalReport ExperimentContext::run_condition(Condition c) {
    auto it = report_cache_.find(c);
    if (it != report_cache_.end()) return it->second;

    EvalReport rep;
    switch (c) {
        case Condition::Baseline:
        case Condition::Height35:
        case Condition::Height55:
        case Condition::TiltPlus10:
        case Condition::TiltMinus10:
        case Condition::SessionShift:
            rep = evaluate(nominal_pipeline(), eval_profiles(c), to_string(c));
            break;
        case Condition::HeightPooled: {
            const std::vector<EvalReport> parts = {run_condition(Condition::Height35),
                                                   run_condition(Condition::Height55)};
            rep = pool_reports(to_string(c), parts);
            break;
        }
        case Condition::TiltPooled: {
            const std::vector<EvalReport> parts = {run_condition(Condition::TiltPlus10),
                                                   run_condition(Condition::TiltMinus10)};
            rep = pool_reports(to_string(c), parts);
            break;
        }
        case Condition::MitigationR4Norm: {
            // Same pooled-height evaluation data, run through the
            // range-normalized pipeline end to end.
            const EvalReport h35 = evaluate(r4_pipeline(), eval_profiles(Condition::Height35),
                                            "mitigation_r4norm_h35");
            const EvalReport h55 = evaluate(r4_pipeline(), eval_profiles(Condition::Height55),
                                            "mitigation_r4norm_h55");
            const std::vector<EvalReport> parts = {h35, h55};
            rep = pool_reports(to_string(c), parts);
            break;
        }
        case Condition::MitigationAugmented: {
            const EvalReport tp = evaluate(augmented_pipeline(),
                                           eval_profiles(Condition::TiltPlus10),
                                           "mitigation_augmented_tp");
            const EvalReport tm = evaluate(augmented_pipeline(),
                                           eval_profiles(Condition::TiltMinus10),
                                           "mitigation_augmented_tm");
            const std::vector<EvalReport> parts = {tp, tm};
            rep = pool_reports(to_string(c), parts);
            break;
        }
    }
    report_cache_.emplace(c, rep);
    return rep;
}

std::vector<EvalReport> ExperimentContext::run_conditions(std::span<const Condition> conditions) {
    std::vector<EvalReport> reports;
    reports.reserve(conditions.size());
    for (const Condition c : conditions) reports.push_back(run_condition(c));
    return reports;
}

std::vector<EvalReport> ExperimentContext::run_all() {
    const auto conds = all_conditions();
    return run_conditions(conds);
}

double ExperimentContext::metal_peak_mean(Condition eval_condition) {
    const BinWindow window = nominal_pipeline().window;
    const Dataset& ds = eval_profiles(eval_condition);
    double sum = 0.0;
    long count = 0;
    for (const auto& p : ds.profiles) {
        if (p.material_class != 0 && p.material_class != 1) continue;
        double peak = 0.0;
        for (int i = 0; i < window.width; ++i) {
            peak = std::max(peak, p.magnitudes[static_cast<std::size_t>(window.start_bin + i)]);
        }
        sum += peak;
        ++count;
    }
    require(count > 0, "metal_peak_mean: no metal-class profiles");
    return sum / static_cast<double>(count);
}

bool ExperimentContext::session_geometry_matches_nominal() {
    const Dataset& session_ds = eval_profiles(Condition::SessionShift);
    const Dataset& nominal_ds = eval_profiles(Condition::Baseline);
    require(!nominal_ds.profiles.empty(), "session check: empty nominal set");
    const GeometryConfig& ref = nominal_ds.profiles.front().geometry;
    for (const auto& p : session_ds.profiles) {
        if (p.geometry.height_m != ref.height_m || p.geometry.tilt_deg != ref.tilt_deg) {
            return false;
        }
        if (p.geometry.session_id == 0) return false;
    }
    return true;
}

namespace {

std::string f4(double v) { return fmt_f(v, 4); }

bool wants(std::span<const Condition> requested, Condition c) {
    return std::find(requested.begin(), requested.end(), c) != requested.end();
}

}  // namespace

std::vector<CheckOutcome> run_checks(ExperimentContext& ctx,
                                     std::span<const Condition> conditions) {
    std::vector<CheckOutcome> out;

    const bool has_baseline = wants(conditions, Condition::Baseline);
    const bool has_tilt = wants(conditions, Condition::TiltPooled) ||
                          (wants(conditions, Condition::TiltPlus10) &&
                           wants(conditions, Condition::TiltMinus10));
    const bool has_height = wants(conditions, Condition::Height55);
    const bool has_height_pooled = wants(conditions, Condition::HeightPooled) ||
                                   (wants(conditions, Condition::Height35) &&
                                    wants(conditions, Condition::Height55));
    const bool has_session = wants(conditions, Condition::SessionShift);
    const bool has_aug = wants(conditions, Condition::MitigationAugmented);
    const bool has_r4 = wants(conditions, Condition::MitigationR4Norm);

    if (has_baseline) {
        const EvalReport baseline = ctx.run_condition(Condition::Baseline);
        out.push_back({"baseline_macro_f1",
                       baseline.macro_f1 >= 0.90,
                       "macro_f1=" + f4(baseline.macro_f1) + " (threshold 0.90)"});
    }
    if (has_baseline && has_tilt) {
        const EvalReport baseline = ctx.run_condition(Condition::Baseline);
        const EvalReport tilt = ctx.run_condition(Condition::TiltPooled);
        const double drop = baseline.macro_f1 - tilt.macro_f1;
        out.push_back({"tilt_degradation",
                       drop >= 0.15,
                       "baseline=" + f4(baseline.macro_f1) + " tilt_pooled=" + f4(tilt.macro_f1) +
                           " drop=" + f4(drop) + " (threshold 0.15)"});
        const double conf_drop = baseline.mean_confidence - tilt.mean_confidence;
        out.push_back({"confidence_shift",
                       conf_drop >= 0.05,
                       "mean_conf baseline=" + f4(baseline.mean_confidence) +
                           " tilt=" + f4(tilt.mean_confidence) + " drop=" + f4(conf_drop) +
                           " (threshold 0.05)"});
    }
    if (has_baseline && has_height) {
        const EvalReport baseline = ctx.run_condition(Condition::Baseline);
        const EvalReport h55 = ctx.run_condition(Condition::Height55);
        const double peak_nominal = ctx.metal_peak_mean(Condition::Baseline);
        const double peak_h55 = ctx.metal_peak_mean(Condition::Height55);
        const bool pass = h55.macro_f1 < baseline.macro_f1 && peak_h55 < peak_nominal;
        out.push_back({"height_degradation_direction", pass,
                       "macro_f1 " + f4(h55.macro_f1) + " < " + f4(baseline.macro_f1) +
                           "; metal peak " + f4(peak_h55) + " < " + f4(peak_nominal)});
    }
    if (has_baseline && has_session) {
        const EvalReport baseline = ctx.run_condition(Condition::Baseline);
        const EvalReport session = ctx.run_condition(Condition::SessionShift);
        const bool geometry_ok = ctx.session_geometry_matches_nominal();
        out.push_back({"session_shift",
                       session.macro_f1 < baseline.macro_f1 && geometry_ok,
                       "session=" + f4(session.macro_f1) + " baseline=" +
                           f4(baseline.macro_f1) +
                           (geometry_ok ? "" : "; geometry metadata mismatch")});
    }
    if (has_tilt && has_aug) {
        const EvalReport tilt = ctx.run_condition(Condition::TiltPooled);
        const EvalReport aug = ctx.run_condition(Condition::MitigationAugmented);
        const double gain = aug.macro_f1 - tilt.macro_f1;
        out.push_back({"mitigation_augmented",
                       gain >= 0.10,
                       "augmented=" + f4(aug.macro_f1) + " nominal_trained=" + f4(tilt.macro_f1) +
                           " gain=" + f4(gain) + " (threshold 0.10)"});
    }
    if (has_height_pooled && has_r4) {
        const EvalReport heights = ctx.run_condition(Condition::HeightPooled);
        const EvalReport r4 = ctx.run_condition(Condition::MitigationR4Norm);
        const double gain = r4.macro_f1 - heights.macro_f1;
        out.push_back({"mitigation_r4norm",
                       gain >= 0.10,
                       "r4norm=" + f4(r4.macro_f1) + " raw=" + f4(heights.macro_f1) +
                           " gain=" + f4(gain) + " (threshold 0.10)"});
    }
    return out;
}

}  // namespace radmat
