// Workbench front end: configuration, simulation campaigns, readout
// training, task runs, external-data ingestion, and plot-ready reports.
// Every subcommand prints a small JSON summary on stdout; failures exit
// nonzero with {"error": kind, "message": ...} on stderr.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "orc/calibration.hpp"
#include "orc/errors.hpp"
#include "orc/harness.hpp"
#include "orc/io.hpp"
#include "orc/tasks.hpp"

using namespace orc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::string> seed_hex;
    std::optional<std::string> output_dir;
    std::optional<int> parallelism;
    std::optional<std::string> store_dir;
};

ExperimentConfig resolve_config(const GlobalOpts& g) {
    ExperimentConfig cfg;
    if (!g.config_path.empty()) cfg = load_config(g.config_path);
    if (g.seed_hex) cfg.campaign_seed = parse_hex64(*g.seed_hex);
    if (g.output_dir) cfg.output_dir = *g.output_dir;
    if (g.parallelism) cfg.parallelism = *g.parallelism;
    return cfg;
}

// Tasks read trajectories from a live simulator unless --store points at a
// campaign directory; both sides of that switch share every downstream path.
std::unique_ptr<TrajectorySource> make_source(const GlobalOpts& g,
                                              const ExperimentConfig& cfg) {
    if (g.store_dir) return std::make_unique<StoreSource>(*g.store_dir);
    return std::make_unique<SimulatedSource>(build_model(cfg.model),
                                             cfg.campaign_seed);
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write file: " + path.string());
    out << text;
    if (!out) throw FormatError("write failed: " + path.string());
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int run(int argc, char** argv) {
    CLI::App app{"origami reservoir computing workbench"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path,
                   "experiment config JSON (defaults built in)")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed_hex, "campaign seed (hex)");
    app.add_option("--output", g.output_dir, "output directory override");
    app.add_option("--parallelism", g.parallelism,
                   "worker threads for campaigns (0 = all cores)");
    app.add_option("--store", g.store_dir,
                   "serve task trajectories from this campaign directory "
                   "instead of simulating");

    std::string out_path;

    // config: show the effective configuration.
    CLI::App* cmd_config = app.add_subcommand(
        "config", "print the effective config (defaults plus overrides)");
    cmd_config->add_option("--out", out_path, "write to file instead");

    // pattern: crease pattern / folded mesh export.
    CLI::App* cmd_pattern =
        app.add_subcommand("pattern", "emit the folded mesh as JSON");
    cmd_pattern->add_option("--out", out_path, "write to file instead");

    // calibrate
    double target_hz = 3.0, cal_mass = 10.0, cal_tol = 0.01;
    std::string cal_station = "a";
    CLI::App* cmd_cal = app.add_subcommand(
        "calibrate",
        "tune crease stiffness until the loaded fundamental hits a target");
    cmd_cal->add_option("--target-hz", target_hz, "target frequency");
    cmd_cal->add_option("--payload-mass", cal_mass, "calibration payload, g");
    cmd_cal->add_option("--station", cal_station, "payload station");
    cmd_cal->add_option("--tol", cal_tol, "frequency tolerance, Hz");

    // simulate
    double sim_mass = 0.0, sim_freq = 3.0, sim_duration = 15.0;
    std::optional<double> sim_amplitude;
    int sim_level = 2;
    std::string sim_station = "a", sim_prefix = "trajectory";
    CLI::App* cmd_sim =
        app.add_subcommand("simulate", "run one condition and export it");
    cmd_sim->add_option("--mass", sim_mass, "payload mass, g (0 = none)");
    cmd_sim->add_option("--station", sim_station, "payload station");
    cmd_sim->add_option("--frequency", sim_freq, "drive frequency, Hz");
    cmd_sim->add_option("--level", sim_level, "drive amplitude level");
    cmd_sim->add_option("--amplitude", sim_amplitude,
                        "drive amplitude, mm (overrides --level)");
    cmd_sim->add_option("--duration", sim_duration, "run length, s");
    cmd_sim->add_option("--out", sim_prefix,
                        "output prefix (writes <prefix>.csv, <prefix>.meta.json)");

    // campaign
    app.add_subcommand("campaign",
                       "simulate the full config grid into the output dir");

    // train
    std::string train_task = "weight";
    double train_mass = 0.0;
    std::string train_out = "readout.json";
    CLI::App* cmd_train =
        app.add_subcommand("train", "train a readout and save its weights");
    cmd_train->add_option("--task", train_task, "weight | position | pattern")
        ->check(CLI::IsMember({"weight", "position", "pattern"}));
    cmd_train->add_option("--mass", train_mass,
                          "payload mass selecting the position-task readout");
    cmd_train->add_option("--out", train_out, "weights JSON path");

    // predict
    std::string pred_weights, pred_csv, pred_meta, pred_series;
    double pred_washout = 5.0;
    CLI::App* cmd_pred = app.add_subcommand(
        "predict", "apply saved weights to a trajectory file");
    cmd_pred->add_option("--weights", pred_weights, "weights JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_pred->add_option("--csv", pred_csv, "trajectory CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_pred->add_option("--meta", pred_meta, "trajectory metadata JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_pred->add_option("--washout", pred_washout,
                         "seconds trimmed from each end");
    cmd_pred->add_option("--series", pred_series,
                         "also write the output series CSV here");

    // task
    CLI::App* cmd_task = app.add_subcommand("task", "run an evaluation task");
    cmd_task->require_subcommand(1);
    CLI::App* task_weight =
        cmd_task->add_subcommand("weight", "payload weight estimation");
    bool with_matrix = false;
    task_weight->add_flag("--matrix", with_matrix,
                          "also sweep the full training-pair matrix");
    cmd_task->add_subcommand("position", "payload position classification");
    CLI::App* task_pattern =
        cmd_task->add_subcommand("pattern", "input pattern recognition");
    std::string pattern_mode = "frequency";
    bool with_baseline = false;
    task_pattern->add_option("--mode", pattern_mode, "frequency | amplitude")
        ->check(CLI::IsMember({"frequency", "amplitude"}));
    task_pattern->add_flag("--baseline", with_baseline,
                           "also run the bottom-nodes control");
    CLI::App* task_multi =
        cmd_task->add_subcommand("multitask", "joint two-column readout");
    std::string pairing = "position";
    task_multi->add_option("--pairing", pairing, "position | frequency")
        ->check(CLI::IsMember({"position", "frequency"}));
    CLI::App* task_sweep =
        cmd_task->add_subcommand("sweep", "dimensionality ablation");
    std::string sweep_task = "weight";
    int sweep_trials = 5;
    task_sweep->add_option("--task", sweep_task, "weight | pattern")
        ->check(CLI::IsMember({"weight", "pattern"}));
    task_sweep->add_option("--trials", sweep_trials, "subsets per count");

    // ingest
    std::string ing_csv, ing_meta;
    std::optional<double> ing_rate;
    CLI::App* cmd_ing = app.add_subcommand(
        "ingest", "validate an external trajectory CSV + metadata pair");
    cmd_ing->add_option("--csv", ing_csv, "trajectory CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_ing->add_option("--meta", ing_meta, "metadata JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_ing->add_option("--expect-rate", ing_rate, "required sample rate, Hz");

    // report
    CLI::App* cmd_report = app.add_subcommand(
        "report", "run the standard task set and emit plot-ready files");
    std::vector<std::string> only;
    cmd_report->add_option(
        "--only", only,
        "subset of: weight matrix position pattern multitask sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // help text
        std::cerr << json{{"error", "Usage"}, {"message", e.what()}}.dump()
                  << "\n";
        return 1;
    }

    const ExperimentConfig cfg = resolve_config(g);

    if (cmd_config->parsed()) {
        const std::string text = config_json(cfg);
        if (!out_path.empty()) {
            write_file(out_path, text);
            print_json({{"config", out_path}});
        } else {
            std::cout << text;
        }
        return 0;
    }

    if (cmd_pattern->parsed()) {
        const ReservoirModel model = build_model(cfg.model);
        const std::string text = mesh_json(model.mesh, model.clamped);
        if (!out_path.empty()) {
            write_file(out_path, text);
            print_json({{"mesh", out_path},
                        {"nodes", model.mesh.node_count()},
                        {"bars", model.mesh.bars.size()},
                        {"hinges", model.mesh.hinges.size()}});
        } else {
            std::cout << text;
        }
        return 0;
    }

    if (cmd_cal->parsed()) {
        ReservoirModel model = build_model(cfg.model);
        model = attach_payload(model, PayloadSpec{cal_mass, cal_station});
        const CalibrationResult r =
            calibrate_crease_stiffness(model, target_hz, cal_tol);
        print_json({{"crease_hinge_stiffness", r.crease_hinge_stiffness},
                    {"facet_hinge_stiffness", r.facet_hinge_stiffness},
                    {"achieved_frequency_hz", r.achieved_frequency_hz},
                    {"evaluations", r.evaluations}});
        return 0;
    }

    if (cmd_sim->parsed()) {
        const double amplitude =
            sim_amplitude ? *sim_amplitude : cfg.levels.at(sim_level);
        RunCondition c =
            single_tone(sim_mass, sim_station, sim_freq, amplitude, sim_duration);
        c.sample_rate_hz = cfg.grid.sample_rate_hz;
        ReservoirModel model = build_model(cfg.model);
        if (c.payload) model = attach_payload(model, *c.payload);
        const Trajectory traj =
            simulate(model, c.excitation, c.duration_s, c.sample_rate_hz,
                     condition_seed(cfg.campaign_seed, c));
        const fs::path csv = sim_prefix + ".csv";
        const fs::path meta = sim_prefix + ".meta.json";
        if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
        write_trajectory(csv, meta, traj, model.mesh.cols);
        print_json({{"key", condition_key(c)},
                    {"trajectory_id", trajectory_id(traj.meta)},
                    {"samples", traj.sample_count()},
                    {"csv", csv.string()},
                    {"meta", meta.string()}});
        return 0;
    }

    if (app.get_subcommand("campaign")->parsed()) {
        const RunManifest m = run_campaign(cfg);
        print_json({{"conditions", m.entries.size()},
                    {"simulated", m.simulated_count},
                    {"failed", m.failed_count()},
                    {"output_dir", cfg.output_dir},
                    {"manifest", (fs::path(cfg.output_dir) / "manifest.json").string()}});
        return 0;
    }

    if (cmd_train->parsed()) {
        const std::unique_ptr<TrajectorySource> source = make_source(g, cfg);
        ReadoutWeights w;
        if (train_task == "weight") {
            w = run_weight_task(*source, cfg.weight).readout;
        } else if (train_task == "pattern") {
            w = run_pattern_task(*source, cfg.pattern).readout;
        } else {
            const PositionTaskResult r = run_position_task(*source, cfg.position);
            size_t idx = 0;
            if (train_mass > 0.0) {
                const auto& masses = cfg.position.payload_masses_g;
                const auto it = std::find(masses.begin(), masses.end(), train_mass);
                if (it == masses.end())
                    throw FormatError("mass " + format_double(train_mass) +
                                      " g is not in the position task's "
                                      "payload list");
                idx = static_cast<size_t>(it - masses.begin());
            }
            w = r.readouts.at(idx);
        }
        save_readout(train_out, w);
        print_json({{"task", train_task},
                    {"out", train_out},
                    {"tasks", w.labels},
                    {"channels", w.channel_map.size()},
                    {"lambda", w.lambda}});
        return 0;
    }

    if (cmd_pred->parsed()) {
        const ReadoutWeights w = load_readout(pred_weights);
        const Trajectory traj = ingest_external(pred_csv, pred_meta);
        const StateMatrix states =
            trim_washout(traj, pred_washout, pred_washout);
        const Eigen::MatrixXd series = reservoir_output(states, w);
        json means = json::array();
        for (long t = 0; t < series.cols(); ++t)
            means.push_back(series.col(t).mean());
        if (!pred_series.empty()) {
            std::string text = "t";
            for (const std::string& label : w.labels) text += "," + label;
            text += "\n";
            const int first = states.origin[0].first_frame;
            for (long i = 0; i < series.rows(); ++i) {
                text += format_double(traj.times(first + i));
                for (long t = 0; t < series.cols(); ++t)
                    text += "," + format_double(series(i, t));
                text += "\n";
            }
            write_file(pred_series, text);
        }
        print_json({{"tasks", w.labels},
                    {"means", means},
                    {"samples", series.rows()},
                    {"trajectory_id", trajectory_id(traj.meta)}});
        return 0;
    }

    if (cmd_task->parsed()) {
        const std::unique_ptr<TrajectorySource> source = make_source(g, cfg);
        const fs::path out_dir(cfg.output_dir);
        fs::create_directories(out_dir);
        ReportBundle bundle;
        json brief;

        if (task_weight->parsed()) {
            const WeightTaskResult r = run_weight_task(*source, cfg.weight);
            write_file(out_dir / "weight_task.json",
                       weight_task_json(r, {"weight_series_0.csv"}));
            bundle.weight.push_back(r);
            int successes = 0;
            for (const auto& e : r.estimates) successes += e.success ? 1 : 0;
            brief = {{"task", "weight"},
                     {"rmse_g", r.rmse_g},
                     {"success_count", successes},
                     {"test_count", r.estimates.size()}};
            if (with_matrix) {
                const WeightMatrixResult m =
                    weight_matrix_experiment(*source, cfg.weight);
                write_file(out_dir / "weight_matrix.json", weight_matrix_json(m));
                bundle.matrices.push_back(m);
                brief["interpolation_rate"] = m.interpolation_rate;
                brief["extrapolation_rate"] = m.extrapolation_rate;
            }
        } else if (cmd_task->get_subcommand("position")->parsed()) {
            const PositionTaskResult r = run_position_task(*source, cfg.position);
            write_file(out_dir / "position_task.json", position_task_json(r));
            bundle.position.push_back(r);
            brief = {{"task", "position"}, {"accuracy", r.accuracy}};
        } else if (task_pattern->parsed()) {
            PatternTaskSpec spec = cfg.pattern;
            spec.mode = pattern_mode == "frequency" ? PatternMode::Frequency
                                                    : PatternMode::Amplitude;
            const PatternTaskResult r = run_pattern_task(*source, spec);
            write_file(out_dir / "pattern_task.json",
                       pattern_task_json(r, "pattern_series_0.csv"));
            bundle.pattern.push_back(r);
            brief = {{"task", "pattern"},
                     {"mode", pattern_mode},
                     {"accuracy_excluding_boundary", r.accuracy_excluding_boundary},
                     {"window_rmse", r.window_rmse}};
            if (with_baseline) {
                const PatternTaskResult b = baseline_bottom_nodes(*source, spec);
                write_file(out_dir / "pattern_baseline.json",
                           pattern_task_json(b, "pattern_series_1.csv"));
                bundle.pattern.push_back(b);
                brief["baseline_window_rmse"] = b.window_rmse;
                brief["baseline_rmse_ratio"] = b.window_rmse / r.window_rmse;
            }
        } else if (task_multi->parsed()) {
            const MultitaskResult r =
                pairing == "position"
                    ? run_weight_position_multitask(*source)
                    : run_weight_frequency_multitask(*source);
            write_file(out_dir / ("multitask_" + pairing + ".json"),
                       multitask_json(r, pairing));
            bundle.multitask.emplace_back(pairing, r);
            json cases = json::array();
            for (const auto& c : r.cases)
                cases.push_back({{"mass_g", c.condition.mass_g},
                                 {"weight_estimate_g", c.weight_estimate_g},
                                 {"companion_mean", c.companion_mean}});
            brief = {{"task", "multitask"}, {"pairing", pairing}, {"cases", cases}};
        } else {
            SweepResult r;
            if (sweep_task == "weight") {
                r = dimensionality_sweep(*source, cfg.weight, {4, 8, 12, 16, 20, 24, 28},
                                         sweep_trials, cfg.campaign_seed);
            } else {
                r = dimensionality_sweep(*source, cfg.pattern, {4, 8, 12, 16, 20, 24, 28},
                                         sweep_trials, cfg.campaign_seed);
            }
            write_file(out_dir / ("sweep_" + sweep_task + ".json"),
                       sweep_json(r, sweep_task));
            bundle.sweeps.emplace_back(sweep_task, r);
            brief = {{"task", "sweep"},
                     {"swept", sweep_task},
                     {"full_rmse", r.full_rmse},
                     {"spearman_rho", r.spearman_rho}};
        }

        json files = json::array();
        for (const fs::path& f : report(bundle, out_dir))
            files.push_back(f.string());
        brief["files"] = std::move(files);
        print_json(brief);
        return 0;
    }

    if (cmd_ing->parsed()) {
        const Trajectory traj = ingest_external(ing_csv, ing_meta, ing_rate);
        json payload = nullptr;
        if (traj.meta.payload)
            payload = {{"mass_g", traj.meta.payload->mass_g},
                       {"position", traj.meta.payload->position}};
        print_json({{"samples", traj.sample_count()},
                    {"channels", traj.node_count()},
                    {"duration_s", traj.times(traj.sample_count() - 1) - traj.times(0)},
                    {"sample_rate_hz", traj.sample_rate},
                    {"trajectory_id", trajectory_id(traj.meta)},
                    {"payload", payload},
                    {"excitation_segments", traj.meta.excitation.segments.size()}});
        return 0;
    }

    if (cmd_report->parsed()) {
        auto wants = [&](const std::string& what) {
            return only.empty() ||
                   std::find(only.begin(), only.end(), what) != only.end();
        };
        const std::unique_ptr<TrajectorySource> source = make_source(g, cfg);
        ReportBundle bundle;
        if (wants("weight"))
            bundle.weight.push_back(run_weight_task(*source, cfg.weight));
        if (wants("matrix"))
            bundle.matrices.push_back(
                weight_matrix_experiment(*source, cfg.weight));
        if (wants("position"))
            bundle.position.push_back(run_position_task(*source, cfg.position));
        if (wants("pattern")) {
            bundle.pattern.push_back(run_pattern_task(*source, cfg.pattern));
            bundle.pattern.push_back(
                baseline_bottom_nodes(*source, cfg.pattern));
        }
        if (wants("multitask")) {
            bundle.multitask.emplace_back(
                "position", run_weight_position_multitask(*source));
            bundle.multitask.emplace_back(
                "frequency", run_weight_frequency_multitask(*source));
        }
        if (wants("sweep"))
            bundle.sweeps.emplace_back(
                "weight", dimensionality_sweep(*source, cfg.weight, {4, 8, 12, 16, 20, 24, 28},
                                               5, cfg.campaign_seed));
        const std::vector<fs::path> files = report(bundle, cfg.output_dir);
        json names = json::array();
        for (const fs::path& f : files) names.push_back(f.string());
        print_json({{"output_dir", cfg.output_dir}, {"files", names}});
        return 0;
    }

    throw FormatError("no subcommand handled");  // unreachable
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump()
                  << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump()
                  << "\n";
        return 1;
    }
}
