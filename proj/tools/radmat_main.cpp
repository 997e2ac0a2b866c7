// radmat — synthetic FMCW radar material-classification workbench.
//
// One binary, subcommand style: gen-data, select-window, train, eval,
// experiment, report, bench. Config file plus flag overrides (flags win);
// every artifact of a run carries the resolved config fingerprint.
//
// Exit codes: 0 success, 1 usage error, 2 data/model error, 3 failed
// acceptance assertion under `experiment --check`.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alloc_probe.hpp"
#include "json.hpp"
#include "radmat/bench.hpp"
#include "radmat/config.hpp"
#include "radmat/experiment.hpp"
#include "radmat/featurize.hpp"
#include "radmat/metrics.hpp"
#include "radmat/mlp.hpp"
#include "radmat/report.hpp"
#include "radmat/sim.hpp"

namespace {

using namespace radmat;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    bool quiet = false;
};

AppConfig resolve_config(const GlobalOpts& g) {
    AppConfig cfg = g.config_path.empty() ? default_config() : load_config(g.config_path);
    if (g.seed) cfg.radar.master_seed = *g.seed;
    return cfg;
}

// Subcommands share the global flags; fallthrough lets them appear after
// the subcommand name.
CLI::App* add_sub(CLI::App& app, const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
    return sub;
}

void announce(const GlobalOpts& g, const AppConfig& cfg) {
    if (g.quiet) return;
    std::cout << "config fingerprint: "
              << config_fingerprint(cfg.radar, cfg.materials, cfg.radar.master_seed) << "\n";
}

void write_text(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << bytes;
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

// --- gen-data ---------------------------------------------------------

struct GenDataOpts {
    std::string scenario;
    int n = 0;
    bool features = false;
    int window_start = -1;  // -1: select on this data
    std::string norm = "none";
};

void cmd_gen_data(const GlobalOpts& g, const GenDataOpts& opt) {
    const AppConfig cfg = resolve_config(g);
    announce(g, cfg);
    write_text(fs::path(g.out_dir) / "fingerprint.txt",
               config_fingerprint(cfg.radar, cfg.materials, cfg.radar.master_seed) + "\n");

    Scenario scenario = cfg.scenario;
    if (!opt.scenario.empty()) {
        try {
            scenario = parse_scenario(opt.scenario);
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        }
    }
    const int n = opt.n > 0 ? opt.n : cfg.sequences_per_class;
    const Dataset ds =
        generate_dataset(cfg.radar, cfg.materials, scenario, n, cfg.radar.master_seed);

    fs::create_directories(g.out_dir);
    {
        std::ostringstream os;
        write_profiles_csv(os, ds, cfg.radar.num_range_bins);
        write_text(fs::path(g.out_dir) / "profiles.csv", os.str());
    }
    if (!g.quiet) {
        std::cout << "wrote " << ds.profiles.size() << " profiles (" << scenario.name()
                  << ") to " << (fs::path(g.out_dir) / "profiles.csv").string() << "\n";
    }

    if (opt.features) {
        BinWindow window{opt.window_start, kFeatureDim};
        if (opt.window_start < 0) window = select_window(ds.profiles, kFeatureDim);
        Normalization norm;
        try {
            norm.mode = parse_norm_mode(opt.norm);
        } catch (const FeaturizeError& e) {
            throw UsageError(e.what());
        }
        norm.reference_range_m = cfg.radar.reference_range_m;
        norm.range_resolution_m = cfg.radar.range_resolution_m;
        const FeatureDataset feats = featurize(ds, window, norm, cfg.materials);
        std::ostringstream os;
        write_features_csv(os, feats);
        write_text(fs::path(g.out_dir) / "features.csv", os.str());
        if (!g.quiet) {
            std::cout << "wrote features (window start " << window.start_bin << ", norm "
                      << to_string(norm.mode) << ") to "
                      << (fs::path(g.out_dir) / "features.csv").string() << "\n";
        }
    }
}

// --- select-window ----------------------------------------------------

void cmd_select_window(const GlobalOpts& g, const std::string& profiles_path, int width) {
    const AppConfig cfg = resolve_config(g);
    announce(g, cfg);

    std::ifstream is(profiles_path);
    if (!is) throw std::runtime_error("cannot open profiles file: " + profiles_path);
    const Dataset ds = read_profiles_csv(is);
    const BinWindow window = select_window(ds.profiles, width);

    nlohmann::ordered_json j;
    j["start_bin"] = window.start_bin;
    j["width"] = window.width;
    j["fingerprint"] = config_fingerprint(cfg.radar, cfg.materials, cfg.radar.master_seed);
    std::cout << j.dump() << "\n";
    write_text(fs::path(g.out_dir) / "window.json", j.dump(1) + "\n");
}

// --- train ------------------------------------------------------------

struct TrainOpts {
    std::string data_path;
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int hidden1 = 32;
    int hidden2 = 32;
};

void cmd_train(const GlobalOpts& g, const TrainOpts& opt) {
    const AppConfig cfg = resolve_config(g);
    announce(g, cfg);

    std::ifstream is(opt.data_path);
    if (!is) throw std::runtime_error("cannot open features file: " + opt.data_path);
    std::ostringstream raw;
    raw << is.rdbuf();
    std::istringstream text(raw.str());
    const FeatureDataset feats = read_features_csv(text);
    if (feats.items.empty()) throw std::runtime_error("training set is empty");

    Mat x(static_cast<int>(feats.items.size()), kInputDim);
    std::vector<int> y(feats.items.size());
    for (std::size_t i = 0; i < feats.items.size(); ++i) {
        std::copy(feats.items[i].values.begin(), feats.items[i].values.end(),
                  x.row(static_cast<int>(i)));
        y[i] = feats.items[i].label;
    }

    TrainConfig tc;
    tc.epochs = opt.epochs;
    tc.batch_size = opt.batch_size;
    tc.learning_rate = opt.learning_rate;
    tc.seed = cfg.radar.master_seed;
    const TrainResult result = train(x, y, tc, opt.hidden1, opt.hidden2);

    TrainedOn meta;
    meta.scenario = "features:" + fs::path(opt.data_path).filename().string();
    meta.seed = tc.seed;
    meta.dataset_hash = hex64(fnv1a(raw.str()));
    meta.config_fingerprint = config_fingerprint(cfg.radar, cfg.materials, cfg.radar.master_seed);

    const fs::path model_path = fs::path(g.out_dir) / "model.json";
    fs::create_directories(g.out_dir);
    save_params(result.params, meta, model_path);
    if (!g.quiet) {
        const EpochStats last = result.history.back();
        std::cout << "trained " << result.steps << " steps; final epoch loss "
                  << fmt_g(last.loss, 6) << ", train accuracy " << fmt_f(last.accuracy, 4)
                  << "\n";
        std::cout << "wrote " << model_path.string() << "\n";
    }
}

// --- eval -------------------------------------------------------------

void cmd_eval(const GlobalOpts& g, const std::string& model_path, const std::string& data_path,
              const std::string& name) {
    const AppConfig cfg = resolve_config(g);
    announce(g, cfg);

    TrainedOn meta;
    const MlpParams params = load_params(model_path, &meta);

    std::ifstream is(data_path);
    if (!is) throw std::runtime_error("cannot open features file: " + data_path);
    const FeatureDataset feats = [&] {
        std::ostringstream raw;
        raw << is.rdbuf();
        std::istringstream text(raw.str());
        return read_features_csv(text);
    }();
    if (feats.items.empty()) throw std::runtime_error("evaluation set is empty");

    std::vector<PredictionRecord> records;
    records.reserve(feats.items.size());
    for (const auto& fv : feats.items) {
        const Prediction pred = predict(params, fv.values);
        records.push_back({fv.label, pred.predicted_class, pred.confidence});
    }
    const std::string fingerprint = meta.config_fingerprint.empty()
                                        ? config_fingerprint(cfg.radar, cfg.materials,
                                                             cfg.radar.master_seed)
                                        : meta.config_fingerprint;
    const EvalReport report = make_report(name, records, fingerprint);

    std::vector<std::string> class_names(5);
    for (const auto& m : cfg.materials) class_names[static_cast<std::size_t>(m.class_id)] = m.name;
    for (std::size_t c = 0; c < feats.class_names.size(); ++c) {
        if (!feats.class_names[c].empty()) class_names[c] = feats.class_names[c];
    }
    const std::vector<EvalReport> reports = {report};
    render_reports(reports, class_names, g.out_dir);
    if (!g.quiet) {
        std::cout << name << ": macro_f1 " << fmt_f(report.macro_f1, 4) << " over " << report.n
                  << " samples\n";
    }
}

// --- experiment -------------------------------------------------------

struct ExperimentOpts {
    std::vector<std::string> conditions;
    bool check = false;
    int train_n = 200;
    int eval_n = 100;
};

std::vector<Condition> resolve_conditions(const std::vector<std::string>& names) {
    if (names.empty() || (names.size() == 1 && names[0] == "all")) return all_conditions();
    std::vector<Condition> out;
    for (const auto& name : names) {
        try {
            out.push_back(parse_condition(name));
        } catch (const ExperimentError& e) {
            throw UsageError(std::string(e.what()) + "; valid: all, baseline, height_35, "
                             "height_55, height_pooled, tilt_plus10, tilt_minus10, tilt_pooled, "
                             "session_shift, mitigation_r4norm, mitigation_augmented");
        }
    }
    return out;
}

void cmd_experiment(const GlobalOpts& g, const ExperimentOpts& opt) {
    const AppConfig cfg = resolve_config(g);
    const std::vector<Condition> conditions = resolve_conditions(opt.conditions);

    ExperimentPlan plan = ExperimentPlan::defaults(cfg.radar.master_seed);
    plan.radar = cfg.radar;
    plan.materials = cfg.materials;
    plan.train_per_class = opt.train_n;
    plan.eval_per_class = opt.eval_n;

    ExperimentContext ctx(plan);
    if (!g.quiet) std::cout << "config fingerprint: " << ctx.fingerprint() << "\n";

    const std::vector<EvalReport> reports = ctx.run_conditions(conditions);
    render_reports(reports, ctx.class_names(), g.out_dir);

    // Persist every pipeline the run trained, for reuse and reproducibility
    // checks.
    const fs::path models_dir = fs::path(g.out_dir) / "models";
    fs::create_directories(models_dir);
    save_params(ctx.nominal_pipeline().params, ctx.nominal_pipeline().meta,
                models_dir / "nominal.model.json");
    const bool used_r4 = std::find(conditions.begin(), conditions.end(),
                                   Condition::MitigationR4Norm) != conditions.end();
    const bool used_aug = std::find(conditions.begin(), conditions.end(),
                                    Condition::MitigationAugmented) != conditions.end();
    if (used_r4) {
        save_params(ctx.r4_pipeline().params, ctx.r4_pipeline().meta,
                    models_dir / "r4norm.model.json");
    }
    if (used_aug) {
        save_params(ctx.augmented_pipeline().params, ctx.augmented_pipeline().meta,
                    models_dir / "augmented.model.json");
    }

    if (!g.quiet) {
        for (const auto& r : reports) {
            std::cout << "  " << r.condition << ": macro_f1 " << fmt_f(r.macro_f1, 4) << " (n="
                      << r.n << ", mean confidence " << fmt_f(r.mean_confidence, 4) << ")\n";
        }
        std::cout << "reports written to " << g.out_dir << "\n";
    }

    if (opt.check) {
        const auto outcomes = run_checks(ctx, conditions);
        bool all_pass = true;
        for (const auto& o : outcomes) {
            std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << o.name << ": " << o.detail << "\n";
            all_pass = all_pass && o.pass;
        }
        if (outcomes.empty()) {
            std::cout << "no checks apply to the requested conditions\n";
        }
        if (!all_pass) throw CheckFailure("one or more experiment checks failed");
    }
}

// --- report -----------------------------------------------------------

void cmd_report(const GlobalOpts& g, const std::vector<std::string>& paths, bool force) {
    const AppConfig cfg = resolve_config(g);
    announce(g, cfg);
    if (paths.empty()) throw UsageError("report: need at least one report.json file");

    std::vector<EvalReport> reports;
    for (const auto& p : paths) reports.push_back(load_report(p));
    for (const auto& r : reports) {
        if (r.fingerprint != reports.front().fingerprint && !force) {
            throw std::runtime_error("report: fingerprint mismatch between '" +
                                     reports.front().condition + "' and '" + r.condition +
                                     "' (use --force to merge anyway)");
        }
    }
    std::vector<std::string> class_names(5);
    for (const auto& m : cfg.materials) class_names[static_cast<std::size_t>(m.class_id)] = m.name;
    render_reports(reports, class_names, g.out_dir);
    if (!g.quiet) {
        std::cout << "merged " << reports.size() << " reports into " << g.out_dir << "\n";
    }
}

// --- bench ------------------------------------------------------------

void cmd_bench(const GlobalOpts& g, const std::string& model_path, long iterations) {
    const AppConfig cfg = resolve_config(g);
    announce(g, cfg);
    if (iterations < 100000) iterations = 100000;

    const MlpParams params = load_params(model_path);
    const FusedMlp fused = fuse(params);
    const LatencyStats inference =
        bench_fused_inference(fused, iterations, cfg.radar.master_seed, &radmat_allocation_count);

    // Feature-extraction latency on one synthesized nominal sequence.
    GeometryConfig nominal;
    const RangeProfile profile =
        simulate_sequence(cfg.radar, cfg.materials.front(), nominal, cfg.radar.master_seed);
    const Dataset tiny{{profile}};
    const BinWindow window = select_window(tiny.profiles, kFeatureDim);
    Normalization norm;
    norm.reference_range_m = cfg.radar.reference_range_m;
    norm.range_resolution_m = cfg.radar.range_resolution_m;
    const LatencyStats extraction = bench_feature_extraction(profile, window, norm, iterations);

    if (inference.allocations_in_loop != 0) {
        throw std::runtime_error("bench: timed inference loop allocated " +
                                 std::to_string(inference.allocations_in_loop) + " times");
    }

    std::cout << "fused inference (batch of 1): median " << format_us(inference.median_us)
              << " us, p99 " << format_us(inference.p99_us) << " us over "
              << inference.iterations << " warm iterations\n";
    std::cout << "feature extraction:           median " << format_us(extraction.median_us)
              << " us, p99 " << format_us(extraction.p99_us) << " us over "
              << extraction.iterations << " iterations\n";
    std::cout << "allocations in timed loop: " << inference.allocations_in_loop << "\n";

    nlohmann::ordered_json j;
    j["model"] = model_path;
    j["fingerprint"] = config_fingerprint(cfg.radar, cfg.materials, cfg.radar.master_seed);
    j["inference_us"] = {{"median", inference.median_us},
                         {"p99", inference.p99_us},
                         {"iterations", inference.iterations}};
    j["feature_extraction_us"] = {{"median", extraction.median_us},
                                  {"p99", extraction.p99_us},
                                  {"iterations", extraction.iterations}};
    j["allocations_in_timed_loop"] = inference.allocations_in_loop;
    write_text(fs::path(g.out_dir) / "bench.json", j.dump(1) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radmat — synthetic FMCW radar material-classification workbench"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file (radar/materials/scenario)");
    app.add_option("--seed", g.seed, "master seed (overrides config)")->envname("RADMAT_SEED");
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    GenDataOpts gen;
    auto* cmd_gen = add_sub(app, "gen-data", "synthesize an integrated-profile dataset");
    cmd_gen->add_option("--scenario", gen.scenario,
                        "nominal | height:H | tilt:T | session:K | augmented[:h0,h1,t0,t1]");
    cmd_gen->add_option("--n", gen.n, "sequences per class");
    cmd_gen->add_flag("--features", gen.features, "also write the featurized dataset");
    cmd_gen->add_option("--window-start", gen.window_start,
                        "window start bin for --features (-1 selects from this data)");
    cmd_gen->add_option("--norm", gen.norm, "none | range_r4 | log_magnitude | max_unit");

    std::string sw_profiles;
    int sw_width = kFeatureDim;
    auto* cmd_sw = add_sub(app, "select-window", "pick the informative range-bin window");
    cmd_sw->add_option("--profiles", sw_profiles, "profiles.csv from gen-data")->required();
    cmd_sw->add_option("--width", sw_width, "window width")->capture_default_str();

    TrainOpts tr;
    auto* cmd_tr = add_sub(app, "train", "train the classifier on a features csv");
    cmd_tr->add_option("--data", tr.data_path, "features.csv")->required();
    cmd_tr->add_option("--epochs", tr.epochs)->capture_default_str();
    cmd_tr->add_option("--batch", tr.batch_size)->capture_default_str();
    cmd_tr->add_option("--lr", tr.learning_rate)->capture_default_str();
    cmd_tr->add_option("--h1", tr.hidden1)->capture_default_str();
    cmd_tr->add_option("--h2", tr.hidden2)->capture_default_str();

    std::string ev_model, ev_data, ev_name = "eval";
    auto* cmd_ev = add_sub(app, "eval", "evaluate a model on a features csv");
    cmd_ev->add_option("--model", ev_model, "model.json")->required();
    cmd_ev->add_option("--data", ev_data, "features.csv")->required();
    cmd_ev->add_option("--name", ev_name, "condition name for the report")
        ->capture_default_str();

    ExperimentOpts ex;
    auto* cmd_ex = add_sub(app, "experiment", "run evaluation conditions end to end");
    cmd_ex->add_option("conditions", ex.conditions, "condition names, or 'all'");
    cmd_ex->add_flag("--check", ex.check, "enforce the acceptance thresholds");
    cmd_ex->add_option("--train-n", ex.train_n, "training sequences per class")
        ->capture_default_str();
    cmd_ex->add_option("--eval-n", ex.eval_n, "evaluation sequences per class")
        ->capture_default_str();

    std::vector<std::string> rp_paths;
    bool rp_force = false;
    auto* cmd_rp = add_sub(app, "report", "re-render and merge report.json files");
    cmd_rp->add_option("reports", rp_paths, "report.json files");
    cmd_rp->add_flag("--force", rp_force, "merge despite fingerprint mismatch");

    std::string bn_model;
    long bn_iters = 200000;
    auto* cmd_bn = add_sub(app, "bench", "measure inference latency");
    cmd_bn->add_option("--model", bn_model, "model.json")->required();
    cmd_bn->add_option("--iters", bn_iters, "timed iterations (min 100000)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);

        if (cmd_gen->parsed()) cmd_gen_data(g, gen);
        if (cmd_sw->parsed()) cmd_select_window(g, sw_profiles, sw_width);
        if (cmd_tr->parsed()) cmd_train(g, tr);
        if (cmd_ev->parsed()) cmd_eval(g, ev_model, ev_data, ev_name);
        if (cmd_ex->parsed()) cmd_experiment(g, ex);
        if (cmd_rp->parsed()) cmd_report(g, rp_paths, rp_force);
        if (cmd_bn->parsed()) cmd_bench(g, bn_model, bn_iters);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        std::cerr << "run '" << (argc > 0 ? argv[0] : "radmat") << " --help' for usage\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const CheckFailure& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
