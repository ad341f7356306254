#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "orc/dynamics.hpp"
#include "orc/errors.hpp"
#include "orc/io.hpp"

using namespace orc;
namespace fs = std::filesystem;

namespace {

// Synthetic trajectory exercising the full double range the formats must
// carry: tiny, negative, and non-representable-in-few-digits values.
Trajectory make_traj(int rows, int nodes, double rate) {
    Trajectory t;
    t.sample_rate = rate;
    t.times.resize(rows);
    t.states.resize(rows, nodes);
    for (int k = 0; k < rows; ++k) {
        t.times(k) = k / rate;
        for (int c = 0; c < nodes; ++c)
            t.states(k, c) = std::sin(0.05 * k + 1.7 * c) / 3.0 + 1e-13 * c;
    }
    t.meta.payload = PayloadSpec{12.0, "e"};
    t.meta.excitation.segments = {{4.0, 5.0, 15.0}, {2.0, 1.0, 5.0}};
    t.meta.seed = 0xdeadbeef12345678ULL;
    t.meta.model_hash = 0x0123456789abcdefULL;
    return t;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
    return s;
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.0, 1.0 / 3.0, 0.1, -2.5e-17, 25.0, 1e-4,
                     6.02214076e23, -0.0, 3.0000000000000004}) {
        const std::string text = format_double(v);
        CHECK(std::strtod(text.c_str(), nullptr) == v);
    }
    CHECK(format_double(25.0) == "25");
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("hex64 round-trips and rejects junk") {
    for (std::uint64_t v : {0ULL, 1ULL, 0xffffffffffffffffULL, 0x123ULL})
        CHECK(parse_hex64(hex64(v)) == v);
    CHECK(hex64(1) == "0000000000000001");
    CHECK_THROWS_AS(parse_hex64(""), FormatError);
    CHECK_THROWS_AS(parse_hex64("xyz"), FormatError);
    CHECK_THROWS_AS(parse_hex64("00000000000000001"), FormatError);
}

TEST_CASE("trajectory CSV round-trips bit-exactly") {
    const fs::path dir = fresh_dir("orc_io_roundtrip");
    const Trajectory a = make_traj(97, 28, 25.0);
    write_trajectory(dir / "a.csv", dir / "a.meta.json", a);
    const Trajectory b = ingest_external(dir / "a.csv", dir / "a.meta.json");

    CHECK(b.sample_count() == 97);
    CHECK(b.node_count() == 28);
    CHECK(b.sample_rate == a.sample_rate);
    CHECK((b.times.array() == a.times.array()).all());
    CHECK((b.states.array() == a.states.array()).all());
    CHECK(b.meta.seed == a.meta.seed);
    CHECK(b.meta.model_hash == a.meta.model_hash);
    REQUIRE(b.meta.payload.has_value());
    CHECK(b.meta.payload->mass_g == 12.0);
    CHECK(b.meta.payload->position == "e");
    REQUIRE(b.meta.excitation.segments.size() == 2);
    CHECK(b.meta.excitation.segments[1].frequency_hz == 1.0);
    CHECK(trajectory_id(b.meta) == trajectory_id(a.meta));

    // A second export of the ingested copy is byte-identical.
    write_trajectory(dir / "b.csv", dir / "b.meta.json", b);
    CHECK(slurp(dir / "b.csv") == slurp(dir / "a.csv"));
    CHECK(slurp(dir / "b.meta.json") == slurp(dir / "a.meta.json"));
}

TEST_CASE("a 375-sample 28-node file ingests to the matching trajectory") {
    const fs::path dir = fresh_dir("orc_io_375");
    Trajectory t = make_traj(375, 28, 25.0);
    t.meta.payload.reset();
    write_trajectory(dir / "t.csv", dir / "t.meta.json", t);

    // 1 header + 375 rows, 29 columns each.
    const std::string text = slurp(dir / "t.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 376);
    const size_t first_nl = text.find('\n');
    const std::string header = text.substr(0, first_nl);
    CHECK(std::count(header.begin(), header.end(), ',') == 28);
    CHECK(header.substr(0, 10) == "t,node_00,");

    const Trajectory back =
        ingest_external(dir / "t.csv", dir / "t.meta.json", 25.0);
    CHECK(back.sample_count() == 375);
    CHECK(back.node_count() == 28);
    CHECK(!back.meta.payload.has_value());
}

TEST_CASE("ingest rejects malformed files with located errors") {
    const fs::path dir = fresh_dir("orc_io_bad");
    const Trajectory t = make_traj(6, 4, 25.0);
    write_trajectory(dir / "t.csv", dir / "t.meta.json", t, 2);
    const std::string good = slurp(dir / "t.csv");
    const std::string meta = slurp(dir / "t.meta.json");

    SUBCASE("missing file") {
        CHECK_THROWS_AS(ingest_external(dir / "nope.csv", dir / "t.meta.json"),
                        FormatError);
        CHECK_THROWS_AS(ingest_external(dir / "t.csv", dir / "nope.json"),
                        FormatError);
    }
    SUBCASE("renamed column is reported by its expected name") {
        std::string bad = good;
        bad.replace(bad.find("node_01"), 7, "node_XX");
        spit(dir / "bad.csv", bad);
        try {
            ingest_external(dir / "bad.csv", dir / "t.meta.json");
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("node_01") != std::string::npos);
            CHECK(e.line == 1);
            CHECK(e.column == 3);
        }
    }
    SUBCASE("first header cell must be t") {
        spit(dir / "bad.csv", "x" + good.substr(1));
        CHECK_THROWS_AS(ingest_external(dir / "bad.csv", dir / "t.meta.json"),
                        FormatError);
    }
    SUBCASE("NaN cell is rejected with its row") {
        std::string bad = good;
        const size_t row3 = [&] {
            size_t p = 0;
            for (int i = 0; i < 3; ++i) p = bad.find('\n', p) + 1;
            return p;
        }();
        const size_t comma = bad.find(',', row3);
        const size_t next = bad.find(',', comma + 1);
        bad.replace(comma + 1, next - comma - 1, "nan");
        spit(dir / "bad.csv", bad);
        try {
            ingest_external(dir / "bad.csv", dir / "t.meta.json");
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
            CHECK(e.line == 4);
            CHECK(e.column == 2);
        }
    }
    SUBCASE("non-numeric cell") {
        std::string bad = good;
        const size_t row1 = bad.find('\n') + 1;
        const size_t comma = bad.find(',', row1);
        bad.insert(comma + 1, "abc");
        spit(dir / "bad.csv", bad);
        CHECK_THROWS_AS(ingest_external(dir / "bad.csv", dir / "t.meta.json"),
                        FormatError);
    }
    SUBCASE("short row") {
        std::string bad = good;
        const size_t row1 = bad.find('\n') + 1;
        const size_t end = bad.find('\n', row1);
        const size_t last_comma = bad.rfind(',', end);
        bad.erase(last_comma, end - last_comma);
        spit(dir / "bad.csv", bad);
        try {
            ingest_external(dir / "bad.csv", dir / "t.meta.json");
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("non-increasing time") {
        Trajectory warped = t;
        warped.times(3) = warped.times(2);
        write_trajectory(dir / "warp.csv", dir / "warp.meta.json", warped, 2);
        try {
            ingest_external(dir / "warp.csv", dir / "warp.meta.json");
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.line == 5);
        }
    }
    SUBCASE("empty data section") {
        spit(dir / "bad.csv", good.substr(0, good.find('\n') + 1));
        CHECK_THROWS_AS(ingest_external(dir / "bad.csv", dir / "t.meta.json"),
                        FormatError);
    }
    SUBCASE("metadata missing a key") {
        nlohmann::json j = nlohmann::json::parse(meta);
        j.erase("seed");
        spit(dir / "bad.json", j.dump(2));
        CHECK_THROWS_AS(ingest_external(dir / "t.csv", dir / "bad.json"),
                        FormatError);
    }
    SUBCASE("declared rate must match the caller's expectation") {
        CHECK_THROWS_AS(ingest_external(dir / "t.csv", dir / "t.meta.json", 50.0),
                        RateMismatch);
        CHECK_NOTHROW(ingest_external(dir / "t.csv", dir / "t.meta.json", 25.0));
    }
}

TEST_CASE("readout weights JSON round-trips exactly") {
    ReadoutWeights w;
    w.labels = {"weight", "position"};
    w.channel_map = {0, 3, 17};
    w.lambda = 12.5;
    w.bias.resize(2);
    w.bias << -1.625, 1.0 / 7.0;
    w.weights.resize(3, 2);
    w.weights << 1e-17, 2.0, -3.5, 4.0 / 3.0, 5.0, -6e44;

    const ReadoutWeights back = readout_from_json(readout_json(w));
    CHECK(back.labels == w.labels);
    CHECK(back.channel_map == w.channel_map);
    CHECK(back.lambda == w.lambda);
    CHECK((back.bias.array() == w.bias.array()).all());
    CHECK((back.weights.array() == w.weights.array()).all());

    const fs::path dir = fresh_dir("orc_io_readout");
    save_readout(dir / "w.json", w);
    CHECK(readout_json(load_readout(dir / "w.json")) == readout_json(w));

    CHECK_THROWS_AS(readout_from_json("{not json"), FormatError);
    CHECK_THROWS_AS(readout_from_json("{}"), FormatError);
    // Row length disagreeing with the channel map is structural corruption.
    nlohmann::json j = nlohmann::json::parse(readout_json(w));
    j["weights"][0].push_back(9.0);
    CHECK_THROWS_AS(readout_from_json(j.dump()), FormatError);
}

TEST_CASE("mesh JSON lists nodes, bars, hinges, and clamps") {
    const ReservoirModel m = default_reservoir_model();
    const nlohmann::json j =
        nlohmann::json::parse(mesh_json(m.mesh, m.clamped));
    CHECK(j.at("nodes").size() == 28);
    CHECK(j.at("nodes")[0].size() == 3);
    CHECK(j.at("bars").size() == m.mesh.bars.size());
    CHECK(j.at("hinges").size() == m.mesh.hinges.size());
    CHECK(j.at("clamped").get<std::vector<int>>() == m.clamped);
    // Hinge rows carry the four node ids plus the rest angle in degrees.
    const auto& h = j.at("hinges")[0];
    REQUIRE(h.size() == 5);
    CHECK(std::isfinite(h[4].get<double>()));
}

TEST_CASE("a state matrix rebuilds from the CSV plus a frame range") {
    const fs::path dir = fresh_dir("orc_io_slice");
    const Trajectory t = make_traj(50, 6, 25.0);
    write_trajectory(dir / "t.csv", dir / "t.meta.json", t, 3);
    const Trajectory back = ingest_external(dir / "t.csv", dir / "t.meta.json");

    const StateMatrix s = state_matrix_slice(back, 10, 20);
    CHECK(s.rows() == 20);
    CHECK(s.channels() == 6);
    CHECK((s.values.array() == t.states.middleRows(10, 20).array()).all());
    REQUIRE(s.origin.size() == 1);
    CHECK(s.origin[0].trajectory_id == trajectory_id(t.meta));
    CHECK(s.origin[0].first_frame == 10);
    CHECK(s.origin[0].frame_count == 20);

    CHECK_THROWS_AS(state_matrix_slice(back, 40, 20), DimensionMismatch);
    CHECK_THROWS_AS(state_matrix_slice(back, -1, 5), DimensionMismatch);
    CHECK_THROWS_AS(state_matrix_slice(back, 0, 0), DimensionMismatch);
}
