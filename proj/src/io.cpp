#include "orc/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "orc/errors.hpp"
#include "orc/hash.hpp"

namespace orc {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& text) {
    if (text.empty() || text.size() > 16)
        throw FormatError("not a 64-bit hex value: '" + text + "'");
    std::uint64_t v = 0;
    const auto* first = text.data();
    const auto* last = first + text.size();
    const auto res = std::from_chars(first, last, v, 16);
    if (res.ec != std::errc{} || res.ptr != last)
        throw FormatError("not a 64-bit hex value: '" + text + "'");
    return v;
}

std::string format_double(double v) {
    // 17 significant digits always round-trip; shorter forms are tried
    // first so common values stay readable (0.5, 25, 1e-4).
    char buf[40];
    for (int digits = 1; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path.string());
    std::uint64_t h = kFnvOffset;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
    return h;
}

namespace {

json payload_json(const std::optional<PayloadSpec>& payload) {
    if (!payload) return nullptr;
    return json{{"mass_g", payload->mass_g}, {"position", payload->position}};
}

std::optional<PayloadSpec> payload_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return PayloadSpec{j.at("mass_g").get<double>(),
                       j.at("position").get<std::string>()};
}

json excitation_json(const ExcitationSpec& exc) {
    json out = json::array();
    for (const ExcitationSegment& s : exc.segments)
        out.push_back({{"amplitude_mm", s.amplitude_mm},
                       {"frequency_hz", s.frequency_hz},
                       {"duration_s", s.duration_s}});
    return out;
}

ExcitationSpec excitation_from_json(const json& j) {
    ExcitationSpec exc;
    for (const json& s : j)
        exc.segments.push_back({s.at("amplitude_mm").get<double>(),
                                s.at("frequency_hz").get<double>(),
                                s.at("duration_s").get<double>()});
    return exc;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write file: " + path.string());
    out << text;
    if (!out) throw FormatError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_file(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// Splits one CSV line; no quoting, the formats never need it.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_cell(const std::string& cell, int line, int column) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE)
        throw FormatError("not a number: '" + cell + "'", line, column);
    if (!std::isfinite(v))
        throw FormatError(
            "non-finite value at row " + std::to_string(line - 1), line,
            column);
    return v;
}

}  // namespace

void write_trajectory(const std::filesystem::path& csv_path,
                      const std::filesystem::path& meta_path,
                      const Trajectory& traj, int grid_cols) {
    if (grid_cols < 1) throw FormatError("grid_cols must be positive");
    std::string text = "t";
    for (int c = 0; c < traj.node_count(); ++c)
        text += "," + node_name(c / grid_cols, c % grid_cols);
    text += "\n";
    for (int r = 0; r < traj.sample_count(); ++r) {
        text += format_double(traj.times(r));
        for (int c = 0; c < traj.node_count(); ++c)
            text += "," + format_double(traj.states(r, c));
        text += "\n";
    }
    write_text(csv_path, text);

    json meta;
    meta["schema_version"] = 1;
    meta["sample_rate_hz"] = traj.sample_rate;
    meta["grid_cols"] = grid_cols;
    meta["model_hash"] = hex64(traj.meta.model_hash);
    meta["seed"] = hex64(traj.meta.seed);
    meta["payload"] = payload_json(traj.meta.payload);
    meta["excitation"] = excitation_json(traj.meta.excitation);
    write_text(meta_path, meta.dump(2) + "\n");
}

Trajectory ingest_external(const std::filesystem::path& csv_path,
                           const std::filesystem::path& meta_path,
                           std::optional<double> expected_rate_hz) {
    const json meta = parse_json_file(meta_path);
    Trajectory traj;
    try {
        traj.sample_rate = meta.at("sample_rate_hz").get<double>();
        traj.meta.model_hash =
            parse_hex64(meta.at("model_hash").get<std::string>());
        traj.meta.seed = parse_hex64(meta.at("seed").get<std::string>());
        traj.meta.payload = payload_from_json(meta.at("payload"));
        traj.meta.excitation = excitation_from_json(meta.at("excitation"));
    } catch (const json::exception& e) {
        throw FormatError(meta_path.string() + ": " + e.what());
    }
    if (!(traj.sample_rate > 0.0))
        throw FormatError(meta_path.string() + ": sample rate must be positive");
    const int grid_cols = meta.value("grid_cols", 7);
    if (grid_cols < 1)
        throw FormatError(meta_path.string() + ": grid_cols must be positive");
    if (expected_rate_hz && *expected_rate_hz != traj.sample_rate)
        throw RateMismatch("trajectory sampled at " +
                           format_double(traj.sample_rate) +
                           " Hz, expected " + format_double(*expected_rate_hz));

    const std::string text = read_text(csv_path);

    // Header row fixes the column layout.
    size_t pos = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= text.size()) return false;
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = nl + 1;
        return true;
    };

    std::string line;
    if (!next_line(line) || line.empty())
        throw FormatError(csv_path.string() + ": missing header row", 1, 1);
    const std::vector<std::string> header = split_csv(line);
    if (header[0] != "t")
        throw FormatError("first column must be 't', found '" + header[0] + "'",
                          1, 1);
    const int nodes = static_cast<int>(header.size()) - 1;
    if (nodes < 1)
        throw FormatError("header declares no node columns", 1, 1);
    for (int c = 0; c < nodes; ++c) {
        const std::string want = node_name(c / grid_cols, c % grid_cols);
        if (header[static_cast<size_t>(c) + 1] != want)
            throw FormatError("missing column " + want + ", found '" +
                                  header[static_cast<size_t>(c) + 1] + "'",
                              1, c + 2);
    }

    std::vector<double> times;
    std::vector<double> values;
    int line_no = 1;
    while (next_line(line)) {
        ++line_no;
        if (line.empty() && pos >= text.size()) break;  // trailing newline
        const std::vector<std::string> cells = split_csv(line);
        if (static_cast<int>(cells.size()) != nodes + 1)
            throw FormatError("expected " + std::to_string(nodes + 1) +
                                  " cells, found " +
                                  std::to_string(cells.size()),
                              line_no, 1);
        const double t = parse_cell(cells[0], line_no, 1);
        if (!times.empty() && t <= times.back())
            throw FormatError("time values must be strictly increasing",
                              line_no, 1);
        times.push_back(t);
        for (int c = 0; c < nodes; ++c)
            values.push_back(
                parse_cell(cells[static_cast<size_t>(c) + 1], line_no, c + 2));
    }
    if (times.empty())
        throw FormatError(csv_path.string() + ": no samples", 2, 1);

    const int rows = static_cast<int>(times.size());
    traj.times = Eigen::Map<Eigen::VectorXd>(times.data(), rows);
    traj.states = Eigen::Map<
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, nodes);
    return traj;
}

StateMatrix state_matrix_slice(const Trajectory& traj, int first_frame,
                               int frame_count) {
    if (first_frame < 0 || frame_count < 1 ||
        first_frame + frame_count > traj.sample_count())
        throw DimensionMismatch(
            "frame range [" + std::to_string(first_frame) + ", " +
            std::to_string(first_frame + frame_count) + ") outside trajectory");
    StateMatrix out;
    out.values = traj.states.middleRows(first_frame, frame_count);
    out.channel_map.resize(static_cast<size_t>(traj.node_count()));
    for (int c = 0; c < traj.node_count(); ++c)
        out.channel_map[static_cast<size_t>(c)] = c;
    out.origin = {{trajectory_id(traj.meta), first_frame, frame_count}};
    return out;
}

std::string mesh_json(const FoldedMesh& mesh, const std::vector<int>& clamped) {
    json j;
    json nodes = json::array();
    for (int c = 0; c < mesh.node_count(); ++c)
        nodes.push_back({mesh.node_positions(0, c), mesh.node_positions(1, c),
                         mesh.node_positions(2, c)});
    json bars = json::array();
    for (const Bar& b : mesh.bars) bars.push_back({b.a, b.b});
    json hinges = json::array();
    constexpr double kRadToDeg = 180.0 / EIGEN_PI;
    for (const Hinge& h : mesh.hinges)
        hinges.push_back(
            {json(h.i), json(h.j), json(h.k), json(h.l),
             json(h.rest_angle * kRadToDeg)});
    j["nodes"] = std::move(nodes);
    j["bars"] = std::move(bars);
    j["hinges"] = std::move(hinges);
    j["clamped"] = clamped;
    return j.dump(2) + "\n";
}

std::string readout_json(const ReadoutWeights& readout) {
    json j;
    j["tasks"] = readout.labels;
    json bias = json::array();
    for (long t = 0; t < readout.bias.size(); ++t) bias.push_back(readout.bias(t));
    json weights = json::array();
    for (long t = 0; t < readout.weights.cols(); ++t) {
        json row = json::array();
        for (long c = 0; c < readout.weights.rows(); ++c)
            row.push_back(readout.weights(c, t));
        weights.push_back(std::move(row));
    }
    j["bias"] = std::move(bias);
    j["weights"] = std::move(weights);
    j["channel_map"] = readout.channel_map;
    j["lambda"] = readout.lambda;
    return j.dump(2) + "\n";
}

ReadoutWeights readout_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("readout JSON: ") + e.what());
    }
    ReadoutWeights w;
    try {
        w.labels = j.at("tasks").get<std::vector<std::string>>();
        w.channel_map = j.at("channel_map").get<std::vector<int>>();
        w.lambda = j.at("lambda").get<double>();
        const auto bias = j.at("bias").get<std::vector<double>>();
        const auto& weights = j.at("weights");
        if (bias.size() != w.labels.size() || weights.size() != w.labels.size())
            throw FormatError("readout JSON: bias/weights/tasks size mismatch");
        w.bias = Eigen::Map<const Eigen::VectorXd>(
            bias.data(), static_cast<long>(bias.size()));
        w.weights.resize(static_cast<long>(w.channel_map.size()),
                         static_cast<long>(w.labels.size()));
        for (size_t t = 0; t < weights.size(); ++t) {
            const auto row = weights[t].get<std::vector<double>>();
            if (row.size() != w.channel_map.size())
                throw FormatError("readout JSON: weight row " +
                                  std::to_string(t) + " has " +
                                  std::to_string(row.size()) + " entries, " +
                                  std::to_string(w.channel_map.size()) +
                                  " channels declared");
            for (size_t c = 0; c < row.size(); ++c)
                w.weights(static_cast<long>(c), static_cast<long>(t)) = row[c];
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("readout JSON: ") + e.what());
    }
    return w;
}

void save_readout(const std::filesystem::path& path,
                  const ReadoutWeights& readout) {
    write_text(path, readout_json(readout));
}

ReadoutWeights load_readout(const std::filesystem::path& path) {
    return readout_from_json(read_text(path));
}

}  // namespace orc
