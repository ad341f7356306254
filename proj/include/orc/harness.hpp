#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "orc/dynamics.hpp"
#include "orc/io.hpp"
#include "orc/tasks.hpp"

// Experiment configuration, campaign engine, and plot-ready report emitters.

namespace orc {

inline constexpr const char* kToolVersion = "1.0.0";

// Mesh construction and physical parameters, mirroring ReservoirModel but in
// plain numbers so a config file fully determines the model.
struct ModelConfig {
    int rows = 4;
    int cols = 7;
    double panel_a_mm = 20.0;
    double panel_b_mm = 20.0;
    double sector_angle_deg = 60.0;
    double fold_angle_deg = 50.0;
    double sheet_mass_g = 6.0;
    double bar_stiffness = 2000.0;          // N/m
    double crease_hinge_stiffness = 2.1777321071761171;  // N*mm/rad
    double facet_hinge_stiffness = 2.1777321071761171 / 5.0;
    double rayleigh_alpha = 6.0;
    double rayleigh_beta = 2e-5;
    double gravity = 9.81;
    double time_step_s = 1e-4;
    double seed_jitter_mm = 0.01;
    double force_limit_n = 1e4;
    double sensor_noise_mm = 0.0;
};

// The campaign's condition grid: every mass x position x frequency
// combination at one amplitude level.
struct GridSpec {
    std::vector<double> masses_g = {3, 6, 9, 12, 15, 18};
    std::vector<std::string> positions = {"a", "c", "f", "h"};
    std::vector<double> frequencies_hz = {1, 3, 5};
    int amplitude_level = 2;
    double duration_s = 15.0;
    double sample_rate_hz = 25.0;
};

struct ExperimentConfig {
    int schema_version = 1;
    ModelConfig model;
    // Drive amplitude per shaker level; level numbers are conventions, the
    // mm values are what the simulator uses.
    std::map<int, double> levels = {{1, 2.0}, {2, 4.0}, {4, 8.0}};
    GridSpec grid;
    WeightTaskSpec weight;
    PositionTaskSpec position;
    PatternTaskSpec pattern;
    std::uint64_t campaign_seed = 1;
    std::string output_dir = "out";
    int parallelism = 0;  // 0 = all available cores
};

// Builds the folded-mesh model from the config; throws on invalid geometry
// or parameters.
ReservoirModel build_model(const ModelConfig& cfg);

// Full grid in deterministic order (mass-major, then position, frequency).
std::vector<RunCondition> grid_conditions(const ExperimentConfig& cfg);

// JSON round-trip is lossless: parse(emit(cfg)) emits byte-identical text.
std::string config_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path,
                 const ExperimentConfig& cfg);

// ---- campaign ----

struct ManifestEntry {
    RunCondition condition;
    std::string key;             // condition_key(condition)
    std::string trajectory_csv;  // file names relative to the output dir
    std::string meta_json;
    std::string content_hash;    // chained FNV over both files
    std::string status;          // "ok" or "failed"
    std::string error;           // failure message when status == "failed"
};

struct RunManifest {
    int schema_version = 1;
    std::string tool_version = kToolVersion;
    std::uint64_t campaign_seed = 0;
    std::uint64_t model_hash = 0;  // payload-free base model
    std::vector<ManifestEntry> entries;  // grid order

    // Bookkeeping for this invocation, not serialized: resumed runs report
    // how much work they actually did.
    int simulated_count = 0;

    int failed_count() const {
        int n = 0;
        for (const auto& e : entries) n += e.status == "failed" ? 1 : 0;
        return n;
    }
};

// Simulates every grid condition into cfg.output_dir, one CSV + metadata
// pair per condition, and writes manifest.json. Resumable: a condition
// whose files already exist with the expected model hash and seed is not
// re-simulated. Conditions run in parallel up to cfg.parallelism; results
// are byte-identical at any degree because each condition's seed comes from
// the campaign seed alone. Simulation failures are recorded per condition
// and the campaign continues; file I/O failures abort.
RunManifest run_campaign(const ExperimentConfig& cfg);

std::string manifest_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
RunManifest load_manifest(const std::filesystem::path& path);

// Recomputes every ok entry's content hash from the files in dir; throws
// FormatError naming the first entry whose files changed or vanished.
void verify_manifest(const RunManifest& manifest,
                     const std::filesystem::path& dir);

// Serves trajectories from a campaign output directory (or any directory of
// exported CSV + metadata pairs named by condition key). Ingested files go
// through the same validation as external data, so tasks cannot tell a
// stored campaign from a live simulation.
class StoreSource : public TrajectorySource {
public:
    explicit StoreSource(std::filesystem::path dir);
    Trajectory fetch(const RunCondition& condition) override;

private:
    std::filesystem::path dir_;
};

// ---- task result serialization ----

std::string weight_task_json(const WeightTaskResult& result,
                             const std::vector<std::string>& series_csvs = {});
std::string weight_matrix_json(const WeightMatrixResult& result);
std::string position_task_json(const PositionTaskResult& result);
std::string pattern_task_json(const PatternTaskResult& result,
                              const std::string& series_csv = "");
std::string multitask_json(const MultitaskResult& result,
                           const std::string& pairing);
std::string sweep_json(const SweepResult& result, const std::string& task);

// ---- plot-ready reports ----

struct ReportBundle {
    std::vector<WeightTaskResult> weight;
    std::vector<WeightMatrixResult> matrices;
    std::vector<PositionTaskResult> position;
    std::vector<PatternTaskResult> pattern;
    std::vector<std::pair<std::string, MultitaskResult>> multitask;  // pairing, result
    std::vector<std::pair<std::string, SweepResult>> sweeps;         // task, result

    bool empty() const {
        return weight.empty() && matrices.empty() && position.empty() &&
               pattern.empty() && multitask.empty() && sweeps.empty();
    }
};

// Emits per-result plot data plus summary.json into out_dir and returns the
// files written: success/prediction matrices (weight survey), station color
// maps (position), output series with target overlays (weight, pattern),
// RMSE-vs-channel-count tables with per-trial spread (sweeps). Throws on an
// empty bundle; no files are written then.
std::vector<std::filesystem::path> report(const ReportBundle& bundle,
                                          const std::filesystem::path& out_dir);

}  // namespace orc
