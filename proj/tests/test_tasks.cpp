#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "orc/tasks.hpp"

using namespace orc;

namespace {

// Deterministic stand-in whose channels encode the condition directly:
// channels 0..3 replay the drive signal (like clamped nodes), channels 4..27
// mix the drive with terms linear in station index, instantaneous frequency
// and amplitude, and mildly nonlinear in payload mass. Tasks become exactly
// solvable by a linear readout, so these tests exercise protocol plumbing,
// not physics.
struct FakeSource : TrajectorySource {
    double mass_curvature = 0.05;

    Trajectory fetch(const RunCondition& cond) override {
        const int rows = static_cast<int>(
            std::llround(cond.duration_s * cond.sample_rate_hz));
        const double mass = cond.payload ? cond.payload->mass_g : 0.0;
        const double station =
            cond.payload ? cond.payload->position[0] - 'a' : 0.0;
        const double g =
            mass + mass_curvature * (mass - 10.0) * (mass - 10.0);

        Trajectory t;
        t.sample_rate = cond.sample_rate_hz;
        t.times.resize(rows);
        t.states.resize(rows, 28);
        for (int k = 0; k < rows; ++k) {
            const double tk = k / cond.sample_rate_hz;
            t.times(k) = tk;
            const double u = excitation_displacement(cond.excitation, tk);
            double freq = 0.0, amp = 0.0, done = 0.0;
            for (const ExcitationSegment& seg : cond.excitation.segments) {
                if (tk < done + seg.duration_s) {
                    freq = seg.frequency_hz;
                    amp = seg.amplitude_mm;
                    break;
                }
                done += seg.duration_s;
            }
            for (int c = 0; c < 28; ++c) {
                if (c < 4) {
                    t.states(k, c) = u;
                    continue;
                }
                t.states(k, c) = 0.1 * (1.0 + 0.1 * c) * u +
                                 0.2 * std::sin(1.3 * c + 0.5) * freq +
                                 0.15 * std::cos(2.1 * c) * amp +
                                 0.5 * std::sin(0.7 * c) * g +
                                 0.3 * std::cos(c) * station + 0.05 * c;
            }
        }
        t.meta.payload = cond.payload;
        t.meta.excitation = cond.excitation;
        t.meta.seed = 0;
        t.meta.model_hash = 0xfade;
        return t;
    }
};

}  // namespace

TEST_CASE("condition keys are compact and exact") {
    const RunCondition c = single_tone(12.0, "e", 5.0, 4.0);
    CHECK(condition_key(c) == "m12g_pe_f5a4d15_d15_r25");

    RunCondition seq = c;
    seq.excitation.segments = {{4.0, 4.0, 5.0}, {2.0, 2.0, 5.0}};
    CHECK(condition_key(seq) == "m12g_pe_f4a4d5+f2a2d5_d15_r25");

    const RunCondition bare = single_tone(0.0, "a", 3.0, 4.0);
    CHECK(condition_key(bare) == "m0g_p-_f3a4d15_d15_r25");
    CHECK(!bare.payload.has_value());

    CHECK(condition_seed(1, c) == condition_seed(1, c));
    CHECK(condition_seed(1, c) != condition_seed(2, c));
    CHECK(condition_seed(1, c) != condition_seed(1, seq));
}

TEST_CASE("step targets carry the documented values") {
    const TargetSignal w = weight_target(3.0, 16.0, 5.0, 25.0);
    CHECK(w.values.rows() == 250);
    CHECK(w.values(0, 0) == 3.0);
    CHECK(w.values(124, 0) == 3.0);
    CHECK(w.values(125, 0) == 16.0);
    CHECK(w.values.mean() == doctest::Approx(9.5).epsilon(1e-15));
    CHECK_THROWS_AS(weight_target(5.0, 5.0, 5.0, 25.0), std::invalid_argument);

    const TargetSignal p = position_target(5.0, 25.0);
    CHECK(p.values.rows() == 250);
    CHECK(p.values(0, 0) == -1.0);
    CHECK(p.values(249, 0) == 1.0);
    CHECK(p.values.mean() == 0.0);

    const TargetSignal q = pattern_target({4.0, 2.0, 6.0}, 5.0, 25.0);
    CHECK(q.values.rows() == 375);
    CHECK(q.values(0, 0) == 4.0);
    CHECK(q.values(200, 0) == 2.0);
    CHECK(q.values(374, 0) == 6.0);
    const TargetSignal solo = pattern_target({7.5}, 2.0, 25.0);
    CHECK((solo.values.array() == 7.5).all());
}

TEST_CASE("station ground truth splits at the top-edge midline") {
    for (const char* left : {"a", "b", "c", "d"}) CHECK(station_is_left(left));
    for (const char* right : {"e", "f", "g", "h"})
        CHECK(!station_is_left(right));
    CHECK_THROWS_AS(station_is_left("z"), InvalidPosition);
    CHECK_THROWS_AS(station_is_left("ab"), InvalidPosition);
}

TEST_CASE("window estimators apply the documented rules") {
    StateMatrix s;
    s.values = Eigen::MatrixXd::Zero(10, 2);
    s.channel_map = {0, 1};
    ReadoutWeights w;
    w.bias = Eigen::VectorXd::Constant(1, 9.0);
    w.weights = Eigen::MatrixXd::Zero(2, 1);
    w.channel_map = {0, 1};
    CHECK(estimate_weight(s, w) == 9.0);

    w.bias(0) = -0.4;
    CHECK(classify_position(s, w).left);
    w.bias(0) = 0.0;  // exactly zero classifies Right by the tie-break
    CHECK(!classify_position(s, w).left);
}

TEST_CASE("weight task recovers masses and orders its estimates") {
    FakeSource source;
    const WeightTaskSpec spec;
    const WeightTaskResult r = run_weight_task(source, spec);

    REQUIRE(r.estimates.size() == 12);
    for (size_t i = 0; i < r.estimates.size(); ++i) {
        CHECK(!r.estimates[i].trajectory_id.empty());
        if (i) CHECK(r.estimates[i].predicted_g >
                     r.estimates[i - 1].predicted_g);
    }
    int successes = 0;
    for (const WeightEstimate& e : r.estimates) successes += e.success;
    CHECK(successes >= 9);
    CHECK(r.rmse_g < 3.0);
    CHECK(r.train_trajectory_ids.size() == 2);
}

TEST_CASE("feeding a training condition back reproduces its mass") {
    FakeSource source;
    WeightTaskSpec spec;
    spec.ridge_lambda = 0.0;  // exact-fit property of the pseudo-inverse
    const WeightTaskResult r = run_weight_task(source, spec);
    for (double m : {spec.train_mass_lo_g, spec.train_mass_hi_g}) {
        const StateMatrix window = trim_washout(
            source.fetch(single_tone(m, spec.train_position, spec.frequency_hz,
                                     spec.amplitude_mm)),
            spec.washout_s, spec.washout_s);
        CHECK(std::abs(estimate_weight(window, r.readout) - m) / m < 0.05);
    }
}

TEST_CASE("weight matrix survey shows the interpolation advantage") {
    FakeSource source;
    WeightTaskSpec base;
    base.ridge_lambda = 0.0;  // keep training masses exactly reproducible
    const WeightMatrixResult m = weight_matrix_experiment(source, base);

    CHECK(m.predicted.rows() == 15);
    CHECK(m.predicted.cols() == 16);
    // Training masses fed back through their own readout always succeed.
    for (long r = 0; r < m.success.rows(); ++r) {
        CHECK(m.success(r, 0) == 1.0);  // test mass 3 g, the fixed first mass
        const double second = m.second_masses[static_cast<size_t>(r)];
        for (long c = 0; c < m.success.cols(); ++c)
            if (m.test_masses[static_cast<size_t>(c)] == second)
                CHECK(m.success(r, c) == 1.0);
    }
    CHECK(m.interpolation_rate >= m.extrapolation_rate);
    // Wider training gap covers at least as many masses as the narrowest.
    CHECK(m.success.row(14).sum() > m.success.row(0).sum());
}

TEST_CASE("position task classifies all stations with a separable kernel") {
    FakeSource source;
    const PositionTaskSpec spec;
    const PositionTaskResult r = run_position_task(source, spec);

    CHECK(r.estimates.size() == 18);
    CHECK(r.readouts.size() == 3);
    CHECK(r.accuracy == 1.0);
    for (const PositionEstimate& e : r.estimates) {
        CHECK(e.correct);
        CHECK(e.left == station_is_left(e.position));
        CHECK(!e.trajectory_id.empty());
    }
    // Station means rise monotonically left to right for one payload.
    for (size_t i = 1; i < 6; ++i)
        CHECK(r.estimates[i].mean_output > r.estimates[i - 1].mean_output);
}

TEST_CASE("mirrored stations flip the position score under symmetric clamping") {
    ReservoirModel m = default_reservoir_model();
    const int cols = m.mesh.cols, rows = m.mesh.rows;

    // The folded sheet is left-right mirror symmetric about the vertical
    // plane through the top-edge midline; stations mirror a<->h, b<->g, ...
    const double mid =
        (m.mesh.node_positions(0, 0) + m.mesh.node_positions(0, cols - 1)) /
        2.0;
    double geometry_dev = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const int n = r * cols + c;
            const int nm = r * cols + (cols - 1 - c);
            geometry_dev = std::max(
                geometry_dev, std::abs(m.mesh.node_positions(0, nm) -
                                       (2.0 * mid - m.mesh.node_positions(0, n))));
            geometry_dev = std::max(
                geometry_dev, std::abs(m.mesh.node_positions(1, nm) -
                                       m.mesh.node_positions(1, n)));
            geometry_dev = std::max(
                geometry_dev, std::abs(m.mesh.node_positions(2, nm) -
                                       m.mesh.node_positions(2, n)));
        }
    CHECK(geometry_dev <= 1e-12);  // mm

    // The default clamp set (one bottom corner plus neighbours) breaks the
    // mirror on purpose; close it under the mirror so the dynamics inherit
    // the geometric symmetry, and drop the seed jitter, the one stochastic
    // symmetry breaker.
    m.clamped = {0, 1, 2, cols - 3, cols - 2, cols - 1};
    m.seed_jitter_mm = 0.0;
    validate_model(m);

    SimulatedSource source(m, 5);
    const double dur = 6.0;
    const Trajectory tb = source.fetch(single_tone(15.0, "b", 5.0, 4.0, dur));
    const Trajectory tg = source.fetch(single_tone(15.0, "g", 5.0, 4.0, dur));

    // Vertical displacement is mirror invariant, so station b's trajectory
    // read through the column mirror must reproduce station g's.
    double mirror_dev = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            mirror_dev = std::max(
                mirror_dev, (tb.states.col(r * cols + c) -
                             tg.states.col(r * cols + (cols - 1 - c)))
                                .cwiseAbs()
                                .maxCoeff());
    CHECK(mirror_dev <= 1e-9);  // mm, against mm-scale signals

    // A readout trained on the mirror pair (a, h) is antisymmetric: its bias
    // vanishes and mirrored test stations score exact opposite values.
    const Trajectory ta = source.fetch(single_tone(15.0, "a", 5.0, 4.0, dur));
    const Trajectory th = source.fetch(single_tone(15.0, "h", 5.0, 4.0, dur));
    const StateMatrix sa = trim_washout(ta, 2.0, 1.0);
    const StateMatrix sh = trim_washout(th, 2.0, 1.0);
    const StateMatrix train = stack_segments({sa, sh});
    TargetSignal target;
    target.labels = {"position"};
    target.values.resize(train.rows(), 1);
    target.values.topRows(sa.rows()).setConstant(-1.0);
    target.values.bottomRows(sh.rows()).setConstant(1.0);
    const ReadoutWeights w = train_readout(train, target, 1e3);
    CHECK(std::abs(w.bias(0)) <= 1e-12);

    const PositionCall cb = classify_position(trim_washout(tb, 2.0, 1.0), w);
    const PositionCall cg = classify_position(trim_washout(tg, 2.0, 1.0), w);
    CHECK(cb.left);
    CHECK_FALSE(cg.left);
    CHECK(std::abs(cb.mean_output + cg.mean_output) <= 1e-10);
    CHECK(std::abs(cb.mean_output) > 0.1);  // scores are decisive, not noise
}

TEST_CASE("window averaging and nearest-value snapping work standalone") {
    StateMatrix s;
    s.values.resize(10, 1);
    s.values << 1, 1, 1, 1, 1, 3, 3, 3, 3, 3;
    s.channel_map = {0};
    ReadoutWeights w;
    w.bias = Eigen::VectorXd::Zero(1);
    w.weights = Eigen::MatrixXd::Constant(1, 1, 1.0);
    w.channel_map = {0};

    const std::vector<PatternWindow> wins =
        recognize_pattern(s, 25.0, 0.0, w, 0.2, {1.0, 3.0});
    REQUIRE(wins.size() == 2);
    CHECK(wins[0].estimate == 1.0);
    CHECK(wins[0].classified == 1.0);
    CHECK(wins[0].center_time_s == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(wins[1].estimate == 3.0);
    CHECK(wins[1].classified == 3.0);
    CHECK(wins[1].center_time_s == doctest::Approx(0.28).epsilon(1e-12));

    CHECK_THROWS_AS(recognize_pattern(s, 25.0, 0.0, w, 0.3, {1.0}),
                    std::invalid_argument);
    StateMatrix tiny;
    tiny.values.resize(3, 1);
    tiny.values << 1, 1, 1;
    tiny.channel_map = {0};
    CHECK_THROWS_AS(recognize_pattern(tiny, 25.0, 0.0, w, 0.2, {1.0}),
                    InsufficientSamples);
}

TEST_CASE("frequency pattern task scores a recognizable sequence") {
    FakeSource source;
    PatternTaskSpec spec;
    const PatternTaskResult r = run_pattern_task(source, spec);

    CHECK(r.accuracy_excluding_boundary == 1.0);
    // Only boundary windows mix symbols, so the window RMSE stays well under
    // the symbol spacing while non-boundary estimates are exact.
    CHECK(r.window_rmse < 1.0);
    CHECK(!r.windows.empty());
    int boundary = 0;
    for (const PatternWindow& w : r.windows) {
        boundary += w.boundary;
        if (!w.boundary) CHECK(w.classified == w.truth);
    }
    CHECK(boundary >= 1);
    CHECK(boundary < static_cast<int>(r.windows.size()) / 2);
    CHECK(r.series_times(0) == 0.0);
    CHECK(r.output_series.size() == r.target_series.size());
    CHECK(!r.train_trajectory_id.empty());
    CHECK(!r.test_trajectory_id.empty());

    // Same spec, fresh source: byte-identical protocol.
    FakeSource source2;
    const PatternTaskResult r2 = run_pattern_task(source2, spec);
    CHECK(std::memcmp(r.output_series.data(), r2.output_series.data(),
                      sizeof(double) * r.output_series.size()) == 0);
}

TEST_CASE("amplitude pattern task maps levels through the amplitude table") {
    FakeSource source;
    PatternTaskSpec spec;
    spec.mode = PatternMode::Amplitude;
    spec.train_values = {2.0, 1.0, 4.0};
    const PatternTaskResult r = run_pattern_task(source, spec);
    CHECK(r.accuracy_excluding_boundary == 1.0);
    CHECK(r.window_rmse < 1.0);

    PatternTaskSpec bad = spec;
    bad.train_values = {3.0};  // no amplitude mapping for level 3
    CHECK_THROWS_AS(run_pattern_task(source, bad), std::invalid_argument);
}

TEST_CASE("bottom-node baseline runs the identical protocol on four channels") {
    FakeSource source;
    PatternTaskSpec spec;
    const PatternTaskResult full = run_pattern_task(source, spec);
    const PatternTaskResult base = baseline_bottom_nodes(source, spec);

    CHECK(baseline_channels() == std::vector<int>{0, 1, 2, 3});
    CHECK(base.readout.channel_map == baseline_channels());
    CHECK(base.windows.size() == full.windows.size());
    // The fake's bottom channels replay the drive only, so the baseline
    // cannot track the frequency steps the full set resolves exactly.
    CHECK(base.window_rmse > 2.0 * full.window_rmse);
}

TEST_CASE("weight-position multitask estimates held-out conditions") {
    FakeSource source;
    const MultitaskResult r = run_weight_position_multitask(source);

    CHECK(r.training_rows == 500);
    CHECK(r.readout.weights.cols() == 2);
    CHECK(r.readout.labels ==
          std::vector<std::string>{"weight", "position"});
    REQUIRE(r.cases.size() == 2);
    for (const MultitaskCaseResult& c : r.cases) {
        const double rel =
            std::abs(c.weight_estimate_g - c.condition.mass_g) /
            c.condition.mass_g;
        CHECK(rel < 0.10);
        const bool should_be_left = station_is_left(c.condition.position);
        CHECK((c.companion_mean < 0.0) == should_be_left);
        CHECK(!c.trajectory_id.empty());
    }
}

TEST_CASE("weight-frequency multitask stacks six groups") {
    FakeSource source;
    const MultitaskResult r = run_weight_frequency_multitask(source);

    CHECK(r.training_rows == 750);
    CHECK(r.readout.labels ==
          std::vector<std::string>{"weight", "frequency"});
    REQUIRE(r.cases.size() == 2);
    for (const MultitaskCaseResult& c : r.cases) {
        CHECK(std::abs(c.companion_mean - c.condition.frequency_hz) /
                  c.condition.frequency_hz <
              0.10);
        CHECK(std::abs(c.weight_estimate_g - c.condition.mass_g) /
                  c.condition.mass_g <
              0.35);
    }
}

TEST_CASE("dimensionality sweep is deterministic and well-formed") {
    FakeSource source;
    const WeightTaskSpec spec;
    const std::vector<int> counts = {4, 8, 28};
    const SweepResult a = dimensionality_sweep(source, spec, counts, 3, 42);
    FakeSource source2;
    const SweepResult b = dimensionality_sweep(source2, spec, counts, 3, 42);

    REQUIRE(a.points.size() == 3);
    CHECK(a.points[0].trial_rmse.size() == 3);
    CHECK(a.points[1].trial_rmse.size() == 3);
    CHECK(a.points[2].trial_rmse.size() == 1);  // full set: one subset only
    CHECK(a.points[2].mean_rmse == a.full_rmse);
    CHECK(a.points[2].min_rmse == a.points[2].max_rmse);
    for (size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].channel_count == counts[i]);
        CHECK(a.points[i].trial_rmse == b.points[i].trial_rmse);
        CHECK(a.points[i].min_rmse <= a.points[i].mean_rmse);
        CHECK(a.points[i].mean_rmse <= a.points[i].max_rmse);
    }
    CHECK(a.spearman_rho == b.spearman_rho);
}

TEST_CASE("rank correlation handles perfect order and ties") {
    CHECK(spearman_rank_correlation({1, 2, 3, 4, 5}, {10, 8, 6, 4, 2}) ==
          doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(spearman_rank_correlation({1, 2, 3, 4, 5}, {2, 4, 6, 8, 10}) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(spearman_rank_correlation({1, 2, 3}, {5, 5, 7}) ==
          doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(spearman_rank_correlation({1}, {2}), DimensionMismatch);
}

TEST_CASE("simulated source memoizes and matches across instances") {
    SimulatedSource a(default_reservoir_model(), 7);
    SimulatedSource b(default_reservoir_model(), 7);
    SimulatedSource c(default_reservoir_model(), 8);

    const RunCondition cond = single_tone(10.0, "a", 3.0, 4.0);
    const Trajectory t1 = a.fetch(cond);
    const Trajectory t2 = a.fetch(cond);  // memoized
    CHECK(t1.states == t2.states);

    const Trajectory t3 = b.fetch(cond);  // fresh simulation, same seed
    CHECK(t1.states == t3.states);
    CHECK(trajectory_id(t1.meta) == trajectory_id(t3.meta));

    const Trajectory t4 = c.fetch(cond);  // different campaign seed
    CHECK(t1.states != t4.states);
}
