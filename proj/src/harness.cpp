#include "orc/harness.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "orc/calibration.hpp"
#include "orc/errors.hpp"
#include "orc/hash.hpp"

namespace orc {

using nlohmann::json;

namespace {

json spec_json(const WeightTaskSpec& s) {
    return json{{"train_mass_lo_g", s.train_mass_lo_g},
                {"train_mass_hi_g", s.train_mass_hi_g},
                {"train_position", s.train_position},
                {"frequency_hz", s.frequency_hz},
                {"amplitude_mm", s.amplitude_mm},
                {"test_masses_g", s.test_masses_g},
                {"success_threshold", s.success_threshold},
                {"washout_s", s.washout_s},
                {"ridge_lambda", s.ridge_lambda}};
}

WeightTaskSpec weight_spec_from_json(const json& j) {
    WeightTaskSpec s;
    s.train_mass_lo_g = j.at("train_mass_lo_g").get<double>();
    s.train_mass_hi_g = j.at("train_mass_hi_g").get<double>();
    s.train_position = j.at("train_position").get<std::string>();
    s.frequency_hz = j.at("frequency_hz").get<double>();
    s.amplitude_mm = j.at("amplitude_mm").get<double>();
    s.test_masses_g = j.at("test_masses_g").get<std::vector<double>>();
    s.success_threshold = j.at("success_threshold").get<double>();
    s.washout_s = j.at("washout_s").get<double>();
    s.ridge_lambda = j.at("ridge_lambda").get<double>();
    return s;
}

json spec_json(const PositionTaskSpec& s) {
    return json{{"payload_masses_g", s.payload_masses_g},
                {"frequency_hz", s.frequency_hz},
                {"amplitude_mm", s.amplitude_mm},
                {"test_positions", s.test_positions},
                {"washout_s", s.washout_s},
                {"ridge_lambda", s.ridge_lambda}};
}

PositionTaskSpec position_spec_from_json(const json& j) {
    PositionTaskSpec s;
    s.payload_masses_g = j.at("payload_masses_g").get<std::vector<double>>();
    s.frequency_hz = j.at("frequency_hz").get<double>();
    s.amplitude_mm = j.at("amplitude_mm").get<double>();
    s.test_positions = j.at("test_positions").get<std::vector<std::string>>();
    s.washout_s = j.at("washout_s").get<double>();
    s.ridge_lambda = j.at("ridge_lambda").get<double>();
    return s;
}

json level_map_json(const std::map<int, double>& levels) {
    json out = json::object();
    for (const auto& [level, mm] : levels)
        out[std::to_string(level)] = mm;
    return out;
}

std::map<int, double> level_map_from_json(const json& j) {
    std::map<int, double> out;
    for (const auto& [key, value] : j.items()) {
        size_t used = 0;
        int level = 0;
        try {
            level = std::stoi(key, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != key.size())
            throw FormatError("level keys must be integers, found '" + key +
                              "'");
        out[level] = value.get<double>();
    }
    return out;
}

json spec_json(const PatternTaskSpec& s) {
    return json{
        {"mode", s.mode == PatternMode::Frequency ? "frequency" : "amplitude"},
        {"payload", {{"mass_g", s.payload.mass_g},
                     {"position", s.payload.position}}},
        {"train_values", s.train_values},
        {"fixed_amplitude_mm", s.fixed_amplitude_mm},
        {"fixed_frequency_hz", s.fixed_frequency_hz},
        {"level_amplitude_mm", level_map_json(s.level_amplitude_mm)},
        {"train_segment_s", s.train_segment_s},
        {"averaging_window_s", s.averaging_window_s},
        {"test_symbol_count", s.test_symbol_count},
        {"test_min_duration_s", s.test_min_duration_s},
        {"test_max_duration_s", s.test_max_duration_s},
        {"sequence_seed", hex64(s.sequence_seed)},
        {"washout_s", s.washout_s},
        {"ridge_lambda", s.ridge_lambda}};
}

PatternTaskSpec pattern_spec_from_json(const json& j) {
    PatternTaskSpec s;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "frequency") {
        s.mode = PatternMode::Frequency;
    } else if (mode == "amplitude") {
        s.mode = PatternMode::Amplitude;
    } else {
        throw FormatError("pattern mode must be 'frequency' or 'amplitude', "
                          "found '" + mode + "'");
    }
    s.payload.mass_g = j.at("payload").at("mass_g").get<double>();
    s.payload.position = j.at("payload").at("position").get<std::string>();
    s.train_values = j.at("train_values").get<std::vector<double>>();
    s.fixed_amplitude_mm = j.at("fixed_amplitude_mm").get<double>();
    s.fixed_frequency_hz = j.at("fixed_frequency_hz").get<double>();
    s.level_amplitude_mm = level_map_from_json(j.at("level_amplitude_mm"));
    s.train_segment_s = j.at("train_segment_s").get<double>();
    s.averaging_window_s = j.at("averaging_window_s").get<double>();
    s.test_symbol_count = j.at("test_symbol_count").get<int>();
    s.test_min_duration_s = j.at("test_min_duration_s").get<double>();
    s.test_max_duration_s = j.at("test_max_duration_s").get<double>();
    s.sequence_seed = parse_hex64(j.at("sequence_seed").get<std::string>());
    s.washout_s = j.at("washout_s").get<double>();
    s.ridge_lambda = j.at("ridge_lambda").get<double>();
    return s;
}

json model_json(const ModelConfig& m) {
    return json{{"rows", m.rows},
                {"cols", m.cols},
                {"panel_a_mm", m.panel_a_mm},
                {"panel_b_mm", m.panel_b_mm},
                {"sector_angle_deg", m.sector_angle_deg},
                {"fold_angle_deg", m.fold_angle_deg},
                {"sheet_mass_g", m.sheet_mass_g},
                {"bar_stiffness", m.bar_stiffness},
                {"crease_hinge_stiffness", m.crease_hinge_stiffness},
                {"facet_hinge_stiffness", m.facet_hinge_stiffness},
                {"rayleigh_alpha", m.rayleigh_alpha},
                {"rayleigh_beta", m.rayleigh_beta},
                {"gravity", m.gravity},
                {"time_step_s", m.time_step_s},
                {"seed_jitter_mm", m.seed_jitter_mm},
                {"force_limit_n", m.force_limit_n},
                {"sensor_noise_mm", m.sensor_noise_mm}};
}

ModelConfig model_from_json(const json& j) {
    ModelConfig m;
    m.rows = j.at("rows").get<int>();
    m.cols = j.at("cols").get<int>();
    m.panel_a_mm = j.at("panel_a_mm").get<double>();
    m.panel_b_mm = j.at("panel_b_mm").get<double>();
    m.sector_angle_deg = j.at("sector_angle_deg").get<double>();
    m.fold_angle_deg = j.at("fold_angle_deg").get<double>();
    m.sheet_mass_g = j.at("sheet_mass_g").get<double>();
    m.bar_stiffness = j.at("bar_stiffness").get<double>();
    m.crease_hinge_stiffness = j.at("crease_hinge_stiffness").get<double>();
    m.facet_hinge_stiffness = j.at("facet_hinge_stiffness").get<double>();
    m.rayleigh_alpha = j.at("rayleigh_alpha").get<double>();
    m.rayleigh_beta = j.at("rayleigh_beta").get<double>();
    m.gravity = j.at("gravity").get<double>();
    m.time_step_s = j.at("time_step_s").get<double>();
    m.seed_jitter_mm = j.at("seed_jitter_mm").get<double>();
    m.force_limit_n = j.at("force_limit_n").get<double>();
    m.sensor_noise_mm = j.at("sensor_noise_mm").get<double>();
    return m;
}

json grid_json(const GridSpec& g) {
    return json{{"masses_g", g.masses_g},
                {"positions", g.positions},
                {"frequencies_hz", g.frequencies_hz},
                {"amplitude_level", g.amplitude_level},
                {"duration_s", g.duration_s},
                {"sample_rate_hz", g.sample_rate_hz}};
}

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    g.masses_g = j.at("masses_g").get<std::vector<double>>();
    g.positions = j.at("positions").get<std::vector<std::string>>();
    g.frequencies_hz = j.at("frequencies_hz").get<std::vector<double>>();
    g.amplitude_level = j.at("amplitude_level").get<int>();
    g.duration_s = j.at("duration_s").get<double>();
    g.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    return g;
}

// Grid sanity plus "every referenced label/frequency is usable": station
// labels are checked against the built model by actually attaching a probe
// payload, which is the same validation the simulator applies.
void validate_config(const ExperimentConfig& cfg) {
    if (cfg.schema_version != 1)
        throw FormatError("unsupported config schema_version " +
                          std::to_string(cfg.schema_version));
    if (cfg.grid.masses_g.empty() || cfg.grid.positions.empty() ||
        cfg.grid.frequencies_hz.empty())
        throw FormatError("grid must list at least one mass, position, and "
                          "frequency");
    if (!cfg.levels.count(cfg.grid.amplitude_level))
        throw FormatError("grid amplitude_level " +
                          std::to_string(cfg.grid.amplitude_level) +
                          " is not in the level map");
    for (const auto& [level, mm] : cfg.levels)
        if (!(mm > 0.0))
            throw FormatError("amplitude for level " + std::to_string(level) +
                              " must be positive");
    for (double f : cfg.grid.frequencies_hz)
        if (!(f > 0.0))
            throw FormatError("grid frequencies must be positive");
    for (double m : cfg.grid.masses_g)
        if (m < 0.0) throw FormatError("grid masses must be non-negative");
    if (!(cfg.grid.duration_s > 0.0) || !(cfg.grid.sample_rate_hz > 0.0))
        throw FormatError("grid duration and sample rate must be positive");
    if (cfg.parallelism < 0)
        throw FormatError("parallelism must be non-negative");

    const ReservoirModel model = build_model(cfg.model);
    for (const std::string& pos : cfg.grid.positions)
        attach_payload(model, PayloadSpec{1.0, pos});  // throws if unknown
}

}  // namespace

ReservoirModel build_model(const ModelConfig& cfg) {
    ReservoirModel m;
    m.mesh = fold_miura(build_miura_pattern(cfg.rows, cfg.cols, cfg.panel_a_mm,
                                            cfg.panel_b_mm,
                                            cfg.sector_angle_deg),
                        cfg.fold_angle_deg);
    if (!(cfg.sheet_mass_g > 0.0))
        throw FormatError("sheet mass must be positive");
    m.node_mass = cfg.sheet_mass_g * 1e-3 / m.mesh.node_count();
    m.bar_stiffness = cfg.bar_stiffness;
    m.crease_hinge_stiffness = cfg.crease_hinge_stiffness;
    m.facet_hinge_stiffness = cfg.facet_hinge_stiffness;
    m.rayleigh_alpha = cfg.rayleigh_alpha;
    m.rayleigh_beta = cfg.rayleigh_beta;
    m.gravity = cfg.gravity;
    m.time_step = cfg.time_step_s;
    m.seed_jitter_mm = cfg.seed_jitter_mm;
    m.force_limit = cfg.force_limit_n;
    m.sensor_noise_mm = cfg.sensor_noise_mm;
    m.clamped = clamped_nodes(m.mesh);
    validate_model(m);
    return m;
}

std::vector<RunCondition> grid_conditions(const ExperimentConfig& cfg) {
    const double amplitude = cfg.levels.at(cfg.grid.amplitude_level);
    std::vector<RunCondition> out;
    out.reserve(cfg.grid.masses_g.size() * cfg.grid.positions.size() *
                cfg.grid.frequencies_hz.size());
    for (double mass : cfg.grid.masses_g)
        for (const std::string& pos : cfg.grid.positions)
            for (double f : cfg.grid.frequencies_hz) {
                RunCondition c =
                    single_tone(mass, pos, f, amplitude, cfg.grid.duration_s);
                c.sample_rate_hz = cfg.grid.sample_rate_hz;
                out.push_back(std::move(c));
            }
    return out;
}

std::string config_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["model"] = model_json(cfg.model);
    j["levels"] = level_map_json(cfg.levels);
    j["grid"] = grid_json(cfg.grid);
    j["tasks"] = json{{"weight", spec_json(cfg.weight)},
                      {"position", spec_json(cfg.position)},
                      {"pattern", spec_json(cfg.pattern)}};
    j["campaign_seed"] = hex64(cfg.campaign_seed);
    j["output_dir"] = cfg.output_dir;
    j["parallelism"] = cfg.parallelism;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg.schema_version = j.at("schema_version").get<int>();
        cfg.model = model_from_json(j.at("model"));
        cfg.levels = level_map_from_json(j.at("levels"));
        cfg.grid = grid_from_json(j.at("grid"));
        cfg.weight = weight_spec_from_json(j.at("tasks").at("weight"));
        cfg.position = position_spec_from_json(j.at("tasks").at("position"));
        cfg.pattern = pattern_spec_from_json(j.at("tasks").at("pattern"));
        cfg.campaign_seed = parse_hex64(j.at("campaign_seed").get<std::string>());
        cfg.output_dir = j.at("output_dir").get<std::string>();
        cfg.parallelism = j.at("parallelism").get<int>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("config JSON: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return config_from_json(text);
}

void save_config(const std::filesystem::path& path,
                 const ExperimentConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write config: " + path.string());
    out << config_json(cfg);
    if (!out) throw FormatError("write failed: " + path.string());
}

// ---- campaign ----

namespace {

json condition_json(const RunCondition& c) {
    json payload = nullptr;
    if (c.payload)
        payload = json{{"mass_g", c.payload->mass_g},
                       {"position", c.payload->position}};
    json segments = json::array();
    for (const ExcitationSegment& s : c.excitation.segments)
        segments.push_back({{"amplitude_mm", s.amplitude_mm},
                            {"frequency_hz", s.frequency_hz},
                            {"duration_s", s.duration_s}});
    return json{{"payload", payload},
                {"excitation", segments},
                {"duration_s", c.duration_s},
                {"sample_rate_hz", c.sample_rate_hz}};
}

RunCondition condition_from_json(const json& j) {
    RunCondition c;
    if (!j.at("payload").is_null())
        c.payload = PayloadSpec{j.at("payload").at("mass_g").get<double>(),
                                j.at("payload").at("position").get<std::string>()};
    for (const json& s : j.at("excitation"))
        c.excitation.segments.push_back({s.at("amplitude_mm").get<double>(),
                                         s.at("frequency_hz").get<double>(),
                                         s.at("duration_s").get<double>()});
    c.duration_s = j.at("duration_s").get<double>();
    c.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    return c;
}

std::uint64_t entry_content_hash(const std::filesystem::path& csv,
                                 const std::filesystem::path& meta) {
    return fnv1a64(file_hash(meta), file_hash(csv));
}

}  // namespace

std::string manifest_json(const RunManifest& m) {
    json entries = json::array();
    for (const ManifestEntry& e : m.entries)
        entries.push_back({{"condition", condition_json(e.condition)},
                           {"key", e.key},
                           {"trajectory_csv", e.trajectory_csv},
                           {"meta_json", e.meta_json},
                           {"content_hash", e.content_hash},
                           {"status", e.status},
                           {"error", e.error}});
    json j;
    j["schema_version"] = m.schema_version;
    j["tool_version"] = m.tool_version;
    j["campaign_seed"] = hex64(m.campaign_seed);
    j["model_hash"] = hex64(m.model_hash);
    j["entries"] = std::move(entries);
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest JSON: ") + e.what());
    }
    RunManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.campaign_seed = parse_hex64(j.at("campaign_seed").get<std::string>());
        m.model_hash = parse_hex64(j.at("model_hash").get<std::string>());
        for (const json& e : j.at("entries")) {
            ManifestEntry entry;
            entry.condition = condition_from_json(e.at("condition"));
            entry.key = e.at("key").get<std::string>();
            entry.trajectory_csv = e.at("trajectory_csv").get<std::string>();
            entry.meta_json = e.at("meta_json").get<std::string>();
            entry.content_hash = e.at("content_hash").get<std::string>();
            entry.status = e.at("status").get<std::string>();
            entry.error = e.at("error").get<std::string>();
            m.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest JSON: ") + e.what());
    }
    return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open manifest: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return manifest_from_json(text);
}

void verify_manifest(const RunManifest& manifest,
                     const std::filesystem::path& dir) {
    for (const ManifestEntry& e : manifest.entries) {
        if (e.status != "ok") continue;
        std::uint64_t h = 0;
        try {
            h = entry_content_hash(dir / e.trajectory_csv, dir / e.meta_json);
        } catch (const Error& err) {
            throw FormatError("condition " + e.key + ": " +
                              std::string(err.what()));
        }
        if (hex64(h) != e.content_hash)
            throw FormatError("condition " + e.key +
                              ": files changed since the manifest was written");
    }
}

RunManifest run_campaign(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const ReservoirModel base = build_model(cfg.model);
    const std::vector<RunCondition> conditions = grid_conditions(cfg);
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    RunManifest manifest;
    manifest.campaign_seed = cfg.campaign_seed;
    manifest.model_hash = model_hash(base);
    manifest.entries.resize(conditions.size());

    std::atomic<size_t> next{0};
    std::atomic<int> simulated{0};
    std::mutex fatal_mutex;
    std::exception_ptr fatal;

    auto run_one = [&](size_t i) {
        const RunCondition& c = conditions[i];
        ManifestEntry& entry = manifest.entries[i];
        entry.condition = c;
        entry.key = condition_key(c);
        entry.trajectory_csv = entry.key + ".csv";
        entry.meta_json = entry.key + ".meta.json";
        const std::filesystem::path csv = dir / entry.trajectory_csv;
        const std::filesystem::path meta = dir / entry.meta_json;

        ReservoirModel m = base;
        if (c.payload) m = attach_payload(m, *c.payload);
        const std::uint64_t seed = condition_seed(cfg.campaign_seed, c);

        // Resume: accept existing files only when their metadata pins the
        // same physics and seed this campaign would use.
        if (std::filesystem::exists(csv) && std::filesystem::exists(meta)) {
            try {
                const Trajectory prior =
                    ingest_external(csv, meta, c.sample_rate_hz);
                if (prior.meta.model_hash == model_hash(m) &&
                    prior.meta.seed == seed) {
                    entry.status = "ok";
                    entry.content_hash = hex64(entry_content_hash(csv, meta));
                    return;
                }
            } catch (const Error&) {
                // Stale or corrupt files: fall through and re-simulate.
            }
        }

        Trajectory traj;
        try {
            traj = simulate(m, c.excitation, c.duration_s, c.sample_rate_hz,
                            seed);
        } catch (const Error& e) {
            entry.status = "failed";
            entry.error = std::string(e.what());
            return;
        }
        simulated.fetch_add(1);
        write_trajectory(csv, meta, traj, base.mesh.cols);
        entry.status = "ok";
        entry.content_hash = hex64(entry_content_hash(csv, meta));
    };

    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= conditions.size()) return;
            try {
                run_one(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                return;
            }
        }
    };

    int degree = cfg.parallelism > 0
                     ? cfg.parallelism
                     : static_cast<int>(std::thread::hardware_concurrency());
    if (degree < 1) degree = 1;
    if (degree == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(degree));
        for (int i = 0; i < degree; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    manifest.simulated_count = simulated.load();
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out)
        throw FormatError("cannot write manifest: " +
                          (dir / "manifest.json").string());
    out << manifest_json(manifest);
    if (!out)
        throw FormatError("write failed: " + (dir / "manifest.json").string());
    return manifest;
}

StoreSource::StoreSource(std::filesystem::path dir) : dir_(std::move(dir)) {}

Trajectory StoreSource::fetch(const RunCondition& condition) {
    const std::string key = condition_key(condition);
    const std::filesystem::path csv = dir_ / (key + ".csv");
    const std::filesystem::path meta = dir_ / (key + ".meta.json");
    if (!std::filesystem::exists(csv) || !std::filesystem::exists(meta))
        throw FormatError("no stored trajectory for condition " + key +
                          " under " + dir_.string());
    return ingest_external(csv, meta, condition.sample_rate_hz);
}

// ---- task result serialization ----

namespace {

json weight_summary(const WeightTaskResult& r) {
    json estimates = json::array();
    json predictions = json::object();
    int successes = 0;
    for (const WeightEstimate& e : r.estimates) {
        estimates.push_back({{"true_mass_g", e.true_mass_g},
                             {"predicted_g", e.predicted_g},
                             {"relative_error", e.relative_error},
                             {"success", e.success},
                             {"trajectory_id", e.trajectory_id}});
        predictions["m" + format_double(e.true_mass_g) + "g"] = e.predicted_g;
        successes += e.success ? 1 : 0;
    }
    return json{{"rmse_g", r.rmse_g},
                {"success_count", successes},
                {"test_count", static_cast<int>(r.estimates.size())},
                {"estimates", std::move(estimates)},
                {"predictions", std::move(predictions)},
                {"train_trajectory_ids", r.train_trajectory_ids}};
}

json matrix_summary(const WeightMatrixResult& r) {
    return json{{"second_masses_g", r.second_masses},
                {"test_masses_g", r.test_masses},
                {"interpolation_rate", r.interpolation_rate},
                {"extrapolation_rate", r.extrapolation_rate}};
}

json position_summary(const PositionTaskResult& r) {
    json estimates = json::array();
    json predictions = json::object();
    for (const PositionEstimate& e : r.estimates) {
        estimates.push_back({{"mass_g", e.mass_g},
                             {"position", e.position},
                             {"mean_output", e.mean_output},
                             {"left", e.left},
                             {"correct", e.correct},
                             {"trajectory_id", e.trajectory_id}});
        predictions["m" + format_double(e.mass_g) + "g_p" + e.position] =
            e.mean_output;
    }
    return json{{"accuracy", r.accuracy},
                {"estimates", std::move(estimates)},
                {"predictions", std::move(predictions)}};
}

json pattern_summary(const PatternTaskResult& r) {
    json windows = json::array();
    for (const PatternWindow& w : r.windows)
        windows.push_back({{"center_time_s", w.center_time_s},
                           {"estimate", w.estimate},
                           {"classified", w.classified},
                           {"truth", w.truth},
                           {"boundary", w.boundary}});
    return json{
        {"mode",
         r.spec.mode == PatternMode::Frequency ? "frequency" : "amplitude"},
        {"accuracy_excluding_boundary", r.accuracy_excluding_boundary},
        {"window_rmse", r.window_rmse},
        {"window_count", static_cast<int>(r.windows.size())},
        {"windows", std::move(windows)},
        {"train_trajectory_id", r.train_trajectory_id},
        {"test_trajectory_id", r.test_trajectory_id}};
}

json multitask_summary(const MultitaskResult& r, const std::string& pairing) {
    json cases = json::array();
    for (const MultitaskCaseResult& c : r.cases) {
        const double rel =
            c.condition.mass_g > 0.0
                ? std::abs(c.weight_estimate_g - c.condition.mass_g) /
                      c.condition.mass_g
                : 0.0;
        cases.push_back({{"mass_g", c.condition.mass_g},
                         {"position", c.condition.position},
                         {"frequency_hz", c.condition.frequency_hz},
                         {"weight_estimate_g", c.weight_estimate_g},
                         {"weight_relative_error", rel},
                         {"companion_mean", c.companion_mean},
                         {"trajectory_id", c.trajectory_id}});
    }
    return json{{"pairing", pairing},
                {"tasks", r.readout.labels},
                {"training_rows", r.training_rows},
                {"lambda", r.readout.lambda},
                {"cases", std::move(cases)}};
}

json sweep_summary(const SweepResult& r, const std::string& task) {
    json points = json::array();
    for (const SweepPoint& p : r.points)
        points.push_back({{"channel_count", p.channel_count},
                          {"mean_rmse", p.mean_rmse},
                          {"min_rmse", p.min_rmse},
                          {"max_rmse", p.max_rmse},
                          {"trial_rmse", p.trial_rmse}});
    return json{{"task", task},
                {"full_rmse", r.full_rmse},
                {"spearman_rho", r.spearman_rho},
                {"points", std::move(points)}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write file: " + path.string());
    out << text;
    if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace

std::string weight_task_json(const WeightTaskResult& result,
                             const std::vector<std::string>& series_csvs) {
    json j = weight_summary(result);
    j["spec"] = spec_json(result.spec);
    j["series_csvs"] = series_csvs;
    return j.dump(2) + "\n";
}

std::string weight_matrix_json(const WeightMatrixResult& result) {
    json j = matrix_summary(result);
    json predicted = json::array();
    json success = json::array();
    for (long r = 0; r < result.predicted.rows(); ++r) {
        json prow = json::array();
        json srow = json::array();
        for (long c = 0; c < result.predicted.cols(); ++c) {
            prow.push_back(result.predicted(r, c));
            srow.push_back(result.success(r, c) != 0.0);
        }
        predicted.push_back(std::move(prow));
        success.push_back(std::move(srow));
    }
    j["predicted"] = std::move(predicted);
    j["success"] = std::move(success);
    return j.dump(2) + "\n";
}

std::string position_task_json(const PositionTaskResult& result) {
    json j = position_summary(result);
    j["spec"] = spec_json(result.spec);
    return j.dump(2) + "\n";
}

std::string pattern_task_json(const PatternTaskResult& result,
                              const std::string& series_csv) {
    json j = pattern_summary(result);
    j["spec"] = spec_json(result.spec);
    j["series_csv"] = series_csv;
    return j.dump(2) + "\n";
}

std::string multitask_json(const MultitaskResult& result,
                           const std::string& pairing) {
    return multitask_summary(result, pairing).dump(2) + "\n";
}

std::string sweep_json(const SweepResult& result, const std::string& task) {
    return sweep_summary(result, task).dump(2) + "\n";
}

// ---- plot-ready reports ----

namespace {

std::string matrix_csv(const std::vector<double>& row_labels,
                       const std::vector<double>& col_labels,
                       const Eigen::MatrixXd& values,
                       const std::string& corner) {
    std::string text = corner;
    for (double c : col_labels) text += "," + format_double(c);
    text += "\n";
    for (size_t r = 0; r < row_labels.size(); ++r) {
        text += format_double(row_labels[r]);
        for (size_t c = 0; c < col_labels.size(); ++c)
            text += "," + format_double(values(static_cast<long>(r),
                                               static_cast<long>(c)));
        text += "\n";
    }
    return text;
}

std::string position_map_csv(const PositionTaskResult& r) {
    std::map<std::pair<double, std::string>, double> mean;
    for (const PositionEstimate& e : r.estimates)
        mean[{e.mass_g, e.position}] = e.mean_output;
    std::string text = "mass_g";
    for (const std::string& p : r.spec.test_positions) text += "," + p;
    text += "\n";
    for (double m : r.spec.payload_masses_g) {
        text += format_double(m);
        for (const std::string& p : r.spec.test_positions) {
            const auto it = mean.find({m, p});
            text += ",";
            text += it != mean.end() ? format_double(it->second) : "nan";
        }
        text += "\n";
    }
    return text;
}

std::string weight_series_csv(const WeightTaskResult& r) {
    long frames = 0;
    for (const WeightEstimate& e : r.estimates)
        frames = std::max(frames, e.output_series.size());
    std::string text = "frame";
    for (const WeightEstimate& e : r.estimates)
        text += ",m" + format_double(e.true_mass_g) + "g";
    text += "\n";
    for (long f = 0; f < frames; ++f) {
        text += std::to_string(f);
        for (const WeightEstimate& e : r.estimates) {
            text += ",";
            if (f < e.output_series.size())
                text += format_double(e.output_series(f));
        }
        text += "\n";
    }
    return text;
}

std::string pattern_series_csv(const PatternTaskResult& r) {
    std::string text = "t,output,target\n";
    for (long i = 0; i < r.series_times.size(); ++i)
        text += format_double(r.series_times(i)) + "," +
                format_double(r.output_series(i)) + "," +
                format_double(r.target_series(i)) + "\n";
    return text;
}

std::string pattern_windows_csv(const PatternTaskResult& r) {
    std::string text = "center_time_s,estimate,classified,truth,boundary\n";
    for (const PatternWindow& w : r.windows)
        text += format_double(w.center_time_s) + "," +
                format_double(w.estimate) + "," + format_double(w.classified) +
                "," + format_double(w.truth) + "," + (w.boundary ? "1" : "0") +
                "\n";
    return text;
}

std::string sweep_csv(const SweepResult& r) {
    size_t trials = 0;
    for (const SweepPoint& p : r.points)
        trials = std::max(trials, p.trial_rmse.size());
    std::string text = "channel_count,mean_rmse,min_rmse,max_rmse";
    for (size_t t = 0; t < trials; ++t)
        text += ",trial_" + std::to_string(t + 1);
    text += "\n";
    for (const SweepPoint& p : r.points) {
        text += std::to_string(p.channel_count) + "," +
                format_double(p.mean_rmse) + "," + format_double(p.min_rmse) +
                "," + format_double(p.max_rmse);
        for (size_t t = 0; t < trials; ++t) {
            text += ",";
            if (t < p.trial_rmse.size()) text += format_double(p.trial_rmse[t]);
        }
        text += "\n";
    }
    return text;
}

}  // namespace

std::vector<std::filesystem::path> report(const ReportBundle& bundle,
                                          const std::filesystem::path& out_dir) {
    if (bundle.empty())
        throw Error("EmptyReport", "no task results to report");
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> files;
    auto emit = [&](const std::string& name, const std::string& text) {
        const std::filesystem::path path = out_dir / name;
        write_file(path, text);
        files.push_back(path);
    };

    json summary;
    summary["tool_version"] = kToolVersion;

    for (size_t i = 0; i < bundle.weight.size(); ++i) {
        const std::string tag = std::to_string(i);
        emit("weight_series_" + tag + ".csv",
             weight_series_csv(bundle.weight[i]));
        summary["weight_tasks"].push_back(weight_summary(bundle.weight[i]));
    }
    for (size_t i = 0; i < bundle.matrices.size(); ++i) {
        const std::string tag = std::to_string(i);
        const WeightMatrixResult& m = bundle.matrices[i];
        emit("weight_matrix_success_" + tag + ".csv",
             matrix_csv(m.second_masses, m.test_masses, m.success,
                        "second_mass_g"));
        emit("weight_matrix_predicted_" + tag + ".csv",
             matrix_csv(m.second_masses, m.test_masses, m.predicted,
                        "second_mass_g"));
        summary["weight_matrices"].push_back(matrix_summary(m));
    }
    for (size_t i = 0; i < bundle.position.size(); ++i) {
        const std::string tag = std::to_string(i);
        emit("position_map_" + tag + ".csv",
             position_map_csv(bundle.position[i]));
        summary["position_tasks"].push_back(
            position_summary(bundle.position[i]));
    }
    for (size_t i = 0; i < bundle.pattern.size(); ++i) {
        const std::string tag = std::to_string(i);
        emit("pattern_series_" + tag + ".csv",
             pattern_series_csv(bundle.pattern[i]));
        emit("pattern_windows_" + tag + ".csv",
             pattern_windows_csv(bundle.pattern[i]));
        summary["pattern_tasks"].push_back(pattern_summary(bundle.pattern[i]));
    }
    for (const auto& [pairing, result] : bundle.multitask)
        summary["multitask"].push_back(multitask_summary(result, pairing));
    for (size_t i = 0; i < bundle.sweeps.size(); ++i) {
        const auto& [task, result] = bundle.sweeps[i];
        emit("sweep_" + task + "_" + std::to_string(i) + ".csv",
             sweep_csv(result));
        summary["sweeps"].push_back(sweep_summary(result, task));
    }

    emit("summary.json", summary.dump(2) + "\n");
    return files;
}

}  // namespace orc
