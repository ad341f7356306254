#include "orc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include "orc/errors.hpp"
#include "orc/hash.hpp"

namespace orc {

namespace {

constexpr double kRate = 25.0;

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    if (std::strtod(buf, nullptr) == v) return buf;
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

int rows_for(double seconds, double rate_hz) {
    return static_cast<int>(std::llround(seconds * rate_hz));
}

StateMatrix fetch_window(TrajectorySource& source, const RunCondition& cond,
                         double head_s, double tail_s) {
    const Trajectory traj = source.fetch(cond);
    return trim_washout(traj, head_s, tail_s);
}

StateMatrix maybe_subset(const StateMatrix& states,
                         const std::vector<int>& channels) {
    return channels.empty() ? states : select_channels(states, channels);
}

// ---- shared weight-task assembly, reused by the dimensionality sweep ----

struct AssembledWeight {
    StateMatrix train;
    TargetSignal target;
    std::vector<double> test_masses;
    std::vector<StateMatrix> tests;
    std::vector<std::string> train_ids;
};

AssembledWeight assemble_weight(TrajectorySource& source,
                                const WeightTaskSpec& spec) {
    if (spec.train_mass_lo_g == spec.train_mass_hi_g)
        throw std::invalid_argument("training masses must differ");
    const double w = spec.washout_s;
    AssembledWeight out;
    const StateMatrix lo = fetch_window(
        source,
        single_tone(spec.train_mass_lo_g, spec.train_position,
                    spec.frequency_hz, spec.amplitude_mm),
        w, w);
    const StateMatrix hi = fetch_window(
        source,
        single_tone(spec.train_mass_hi_g, spec.train_position,
                    spec.frequency_hz, spec.amplitude_mm),
        w, w);
    if (lo.rows() != hi.rows())
        throw DimensionMismatch("training windows have different lengths");
    out.train = stack_segments({lo, hi});
    out.target = weight_target(spec.train_mass_lo_g, spec.train_mass_hi_g,
                               lo.rows() / kRate, kRate);
    out.train_ids = {lo.origin[0].trajectory_id, hi.origin[0].trajectory_id};
    out.test_masses = spec.test_masses_g;
    for (double m : spec.test_masses_g)
        out.tests.push_back(fetch_window(
            source,
            single_tone(m, spec.train_position, spec.frequency_hz,
                        spec.amplitude_mm),
            w, w));
    return out;
}

WeightTaskResult evaluate_weight(const AssembledWeight& asm_,
                                 const WeightTaskSpec& spec,
                                 const std::vector<int>& channels) {
    WeightTaskResult out;
    out.spec = spec;
    out.train_trajectory_ids = asm_.train_ids;
    const StateMatrix train = maybe_subset(asm_.train, channels);
    out.readout = train_readout(train, asm_.target, spec.ridge_lambda);

    Eigen::VectorXd truth(asm_.tests.size());
    Eigen::VectorXd pred(asm_.tests.size());
    for (size_t i = 0; i < asm_.tests.size(); ++i) {
        const StateMatrix window = maybe_subset(asm_.tests[i], channels);
        WeightEstimate e;
        e.true_mass_g = asm_.test_masses[i];
        const Eigen::MatrixXd series = reservoir_output(window, out.readout);
        e.output_series = series.col(0);
        e.predicted_g = e.output_series.mean();
        e.relative_error = std::abs(e.predicted_g - e.true_mass_g) /
                           std::abs(e.true_mass_g);
        e.success = e.relative_error < spec.success_threshold;
        e.trajectory_id = window.origin.empty()
                              ? std::string()
                              : window.origin[0].trajectory_id;
        truth(static_cast<long>(i)) = e.true_mass_g;
        pred(static_cast<long>(i)) = e.predicted_g;
        out.estimates.push_back(std::move(e));
    }
    out.rmse_g = rmse(truth, pred);
    return out;
}

// ---- pattern-task program construction ----

ExcitationSegment segment_for(const PatternTaskSpec& spec, double value,
                              double duration_s) {
    if (spec.mode == PatternMode::Frequency)
        return {spec.fixed_amplitude_mm, value, duration_s};
    const auto it = spec.level_amplitude_mm.find(static_cast<int>(value));
    if (it == spec.level_amplitude_mm.end() ||
        static_cast<double>(static_cast<int>(value)) != value)
        throw std::invalid_argument("amplitude level " + fmt(value) +
                                    " has no amplitude mapping");
    return {it->second, spec.fixed_frequency_hz, duration_s};
}

struct PatternProgram {
    ExcitationSpec excitation;          // lead-in plus content segments
    std::vector<double> symbol_values;  // per content segment
    std::vector<double> durations;      // per content segment, seconds
    double content_s = 0.0;
};

PatternProgram make_program(const PatternTaskSpec& spec,
                            const std::vector<double>& values,
                            const std::vector<double>& durations) {
    PatternProgram p;
    p.symbol_values = values;
    p.durations = durations;
    ExcitationSegment lead = segment_for(spec, values.front(), spec.washout_s);
    p.excitation.segments.push_back(lead);
    for (size_t i = 0; i < values.size(); ++i) {
        p.excitation.segments.push_back(
            segment_for(spec, values[i], durations[i]));
        p.content_s += durations[i];
    }
    return p;
}

PatternProgram training_program(const PatternTaskSpec& spec) {
    return make_program(
        spec, spec.train_values,
        std::vector<double>(spec.train_values.size(), spec.train_segment_s));
}

PatternProgram test_program(const PatternTaskSpec& spec) {
    if (spec.test_symbol_count < 1)
        throw std::invalid_argument("test sequence needs at least one symbol");
    if (!(spec.test_min_duration_s > 0.0) ||
        spec.test_max_duration_s < spec.test_min_duration_s)
        throw std::invalid_argument("bad test segment duration range");
    std::mt19937_64 gen(spec.sequence_seed);
    std::vector<double> values, durations;
    for (int k = 0; k < spec.test_symbol_count; ++k) {
        const size_t sym = static_cast<size_t>(
            gen() % static_cast<std::uint64_t>(spec.train_values.size()));
        values.push_back(spec.train_values[sym]);
        durations.push_back(spec.test_min_duration_s +
                            (spec.test_max_duration_s -
                             spec.test_min_duration_s) *
                                uniform01(gen));
    }
    return make_program(spec, values, durations);
}

// Symbol value occupying sequence time tau (content-local, 0 at the end of
// the lead-in); segments own their left edge.
double symbol_at(const PatternProgram& p, double tau) {
    double end = 0.0;
    for (size_t i = 0; i < p.durations.size(); ++i) {
        end += p.durations[i];
        if (tau < end) return p.symbol_values[i];
    }
    return p.symbol_values.back();
}

}  // namespace

// ---- conditions and sources ----

std::string condition_key(const RunCondition& condition) {
    std::string key;
    if (condition.payload) {
        key += "m" + fmt(condition.payload->mass_g) + "g_p" +
               condition.payload->position;
    } else {
        key += "m0g_p-";
    }
    key += "_";
    for (size_t i = 0; i < condition.excitation.segments.size(); ++i) {
        const ExcitationSegment& s = condition.excitation.segments[i];
        if (i) key += "+";
        key += "f" + fmt(s.frequency_hz) + "a" + fmt(s.amplitude_mm) + "d" +
               fmt(s.duration_s);
    }
    key += "_d" + fmt(condition.duration_s) + "_r" + fmt(condition.sample_rate_hz);
    return key;
}

std::uint64_t condition_seed(std::uint64_t campaign_seed,
                             const RunCondition& condition) {
    std::uint64_t h = fnv1a64("condition-seed-v1");
    h = fnv1a64(campaign_seed, h);
    h = fnv1a64(condition_key(condition), h);
    return h;
}

RunCondition single_tone(double mass_g, const std::string& position,
                         double frequency_hz, double amplitude_mm,
                         double duration_s) {
    RunCondition c;
    if (mass_g > 0.0) c.payload = PayloadSpec{mass_g, position};
    c.excitation.segments = {{amplitude_mm, frequency_hz, duration_s}};
    c.duration_s = duration_s;
    c.sample_rate_hz = kRate;
    return c;
}

SimulatedSource::SimulatedSource(ReservoirModel model,
                                 std::uint64_t campaign_seed)
    : model_(std::move(model)), campaign_seed_(campaign_seed) {}

Trajectory SimulatedSource::fetch(const RunCondition& condition) {
    const std::string key = condition_key(condition);
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    ReservoirModel m = model_;
    if (condition.payload) m = attach_payload(m, *condition.payload);
    Trajectory traj =
        simulate(m, condition.excitation, condition.duration_s,
                 condition.sample_rate_hz, condition_seed(campaign_seed_, condition));
    return cache_.emplace(key, std::move(traj)).first->second;
}

// ---- targets ----

TargetSignal weight_target(double mass_lo_g, double mass_hi_g,
                           double segment_s, double rate_hz) {
    if (mass_lo_g == mass_hi_g)
        throw std::invalid_argument("training masses must differ");
    if (!(segment_s > 0.0) || !(rate_hz > 0.0))
        throw std::invalid_argument("segment and rate must be positive");
    const int n = rows_for(segment_s, rate_hz);
    TargetSignal t;
    t.values.resize(2 * n, 1);
    t.values.topRows(n).setConstant(mass_lo_g);
    t.values.bottomRows(n).setConstant(mass_hi_g);
    t.labels = {"weight"};
    return t;
}

TargetSignal position_target(double segment_s, double rate_hz) {
    if (!(segment_s > 0.0) || !(rate_hz > 0.0))
        throw std::invalid_argument("segment and rate must be positive");
    const int n = rows_for(segment_s, rate_hz);
    TargetSignal t;
    t.values.resize(2 * n, 1);
    t.values.topRows(n).setConstant(-1.0);
    t.values.bottomRows(n).setConstant(1.0);
    t.labels = {"position"};
    return t;
}

TargetSignal pattern_target(const std::vector<double>& values,
                            double segment_s, double rate_hz) {
    if (values.empty()) throw std::invalid_argument("no pattern values");
    if (!(segment_s > 0.0) || !(rate_hz > 0.0))
        throw std::invalid_argument("segment and rate must be positive");
    const int n = rows_for(segment_s, rate_hz);
    TargetSignal t;
    t.values.resize(n * static_cast<long>(values.size()), 1);
    for (size_t i = 0; i < values.size(); ++i)
        t.values.middleRows(n * static_cast<long>(i), n).setConstant(values[i]);
    t.labels = {"pattern"};
    return t;
}

// ---- estimators ----

double estimate_weight(const StateMatrix& window,
                       const ReadoutWeights& readout) {
    return reservoir_output(window, readout).col(0).mean();
}

PositionCall classify_position(const StateMatrix& window,
                               const ReadoutWeights& readout) {
    PositionCall call;
    call.mean_output = reservoir_output(window, readout).col(0).mean();
    call.left = call.mean_output < 0.0;
    return call;
}

bool station_is_left(const std::string& label) {
    if (label.size() != 1 || label[0] < 'a' || label[0] > 'h')
        throw InvalidPosition("payload position must be a..h, got \"" + label +
                              "\"");
    return label[0] - 'a' <= 3;
}

// ---- weight task ----

WeightTaskResult run_weight_task(TrajectorySource& source,
                                 const WeightTaskSpec& spec) {
    return evaluate_weight(assemble_weight(source, spec), spec, {});
}

WeightMatrixResult weight_matrix_experiment(
    TrajectorySource& source, const WeightTaskSpec& base,
    const std::vector<double>& second_masses,
    const std::vector<double>& test_masses) {
    WeightMatrixResult out;
    out.second_masses = second_masses;
    out.test_masses = test_masses;
    const long nrow = static_cast<long>(second_masses.size());
    const long ncol = static_cast<long>(test_masses.size());
    out.predicted.resize(nrow, ncol);
    out.success.resize(nrow, ncol);

    const double w = base.washout_s;
    auto window_for = [&](double mass) {
        return fetch_window(source,
                            single_tone(mass, base.train_position,
                                        base.frequency_hz, base.amplitude_mm),
                            w, w);
    };
    // One trajectory per distinct mass, shared across all training pairs.
    std::map<double, StateMatrix> windows;
    for (double m : test_masses) windows.emplace(m, window_for(m));
    windows.emplace(base.train_mass_lo_g, window_for(base.train_mass_lo_g));
    for (double m : second_masses)
        if (!windows.count(m)) windows.emplace(m, window_for(m));

    long interp_hit = 0, interp_all = 0, extrap_hit = 0, extrap_all = 0;
    for (long r = 0; r < nrow; ++r) {
        const double lo = base.train_mass_lo_g;
        const double hi = second_masses[static_cast<size_t>(r)];
        const StateMatrix train =
            stack_segments({windows.at(lo), windows.at(hi)});
        const TargetSignal target =
            weight_target(lo, hi, windows.at(lo).rows() / kRate, kRate);
        const ReadoutWeights readout =
            train_readout(train, target, base.ridge_lambda);
        for (long c = 0; c < ncol; ++c) {
            const double mass = test_masses[static_cast<size_t>(c)];
            const double pred = estimate_weight(windows.at(mass), readout);
            const bool ok =
                std::abs(pred - mass) / std::abs(mass) < base.success_threshold;
            out.predicted(r, c) = pred;
            out.success(r, c) = ok ? 1.0 : 0.0;
            const double lo2 = std::min(lo, hi), hi2 = std::max(lo, hi);
            if (mass > lo2 && mass < hi2) {
                ++interp_all;
                interp_hit += ok;
            } else if (mass != lo2 && mass != hi2) {
                ++extrap_all;
                extrap_hit += ok;
            }
        }
    }
    out.interpolation_rate =
        interp_all ? static_cast<double>(interp_hit) / interp_all : 0.0;
    out.extrapolation_rate =
        extrap_all ? static_cast<double>(extrap_hit) / extrap_all : 0.0;
    return out;
}

// ---- position task ----

PositionTaskResult run_position_task(TrajectorySource& source,
                                     const PositionTaskSpec& spec) {
    PositionTaskResult out;
    out.spec = spec;
    const double w = spec.washout_s;
    long correct = 0;
    for (double mass : spec.payload_masses_g) {
        const StateMatrix left = fetch_window(
            source, single_tone(mass, "a", spec.frequency_hz, spec.amplitude_mm),
            w, w);
        const StateMatrix right = fetch_window(
            source, single_tone(mass, "h", spec.frequency_hz, spec.amplitude_mm),
            w, w);
        const StateMatrix train = stack_segments({left, right});
        const TargetSignal target = position_target(left.rows() / kRate, kRate);
        const ReadoutWeights readout =
            train_readout(train, target, spec.ridge_lambda);
        out.readouts.push_back(readout);

        for (const std::string& pos : spec.test_positions) {
            const StateMatrix window = fetch_window(
                source,
                single_tone(mass, pos, spec.frequency_hz, spec.amplitude_mm), w,
                w);
            const PositionCall call = classify_position(window, readout);
            PositionEstimate e;
            e.mass_g = mass;
            e.position = pos;
            e.mean_output = call.mean_output;
            e.left = call.left;
            e.correct = call.left == station_is_left(pos);
            e.trajectory_id = window.origin[0].trajectory_id;
            correct += e.correct;
            out.estimates.push_back(std::move(e));
        }
    }
    out.accuracy = out.estimates.empty()
                       ? 0.0
                       : static_cast<double>(correct) /
                             static_cast<double>(out.estimates.size());
    return out;
}

// ---- pattern task ----

std::vector<PatternWindow> recognize_pattern(
    const StateMatrix& states, double sample_rate_hz, double start_time_s,
    const ReadoutWeights& readout, double window_s,
    const std::vector<double>& trained_values) {
    if (trained_values.empty())
        throw std::invalid_argument("no trained values to classify against");
    const double frames = window_s * sample_rate_hz;
    const int per = static_cast<int>(std::llround(frames));
    if (per < 1 || std::abs(frames - per) > 1e-9)
        throw std::invalid_argument(
            "averaging window must be a whole number of sample intervals");
    if (states.rows() < per)
        throw InsufficientSamples("fewer samples than one averaging window");

    const Eigen::VectorXd output = reservoir_output(states, readout).col(0);
    const int nwin = states.rows() / per;
    std::vector<PatternWindow> out(static_cast<size_t>(nwin));
    for (int k = 0; k < nwin; ++k) {
        PatternWindow& win = out[static_cast<size_t>(k)];
        win.center_time_s =
            start_time_s + (k * per + (per - 1) * 0.5) / sample_rate_hz;
        win.estimate = output.segment(k * per, per).mean();
        double best = trained_values.front();
        for (double v : trained_values)
            if (std::abs(win.estimate - v) < std::abs(win.estimate - best))
                best = v;
        win.classified = best;
    }
    return out;
}

PatternTaskResult run_pattern_task(TrajectorySource& source,
                                   const PatternTaskSpec& spec,
                                   const std::vector<int>& channels) {
    if (spec.train_values.empty())
        throw std::invalid_argument("pattern task needs training values");
    PatternTaskResult out;
    out.spec = spec;

    // Training: lead-in (trimmed as washout) plus one segment per value.
    const PatternProgram train_prog = training_program(spec);
    RunCondition train_cond;
    train_cond.payload = spec.payload;
    train_cond.excitation = train_prog.excitation;
    train_cond.duration_s = spec.washout_s + train_prog.content_s;
    train_cond.sample_rate_hz = kRate;
    const Trajectory train_traj = source.fetch(train_cond);
    StateMatrix train = trim_washout(train_traj, spec.washout_s, 0.0);
    train = maybe_subset(train, channels);
    out.train_trajectory_id = trajectory_id(train_traj.meta);

    const TargetSignal target =
        pattern_target(spec.train_values, spec.train_segment_s, kRate);
    out.readout = train_readout(train, target, spec.ridge_lambda);

    // Test: seeded random symbol sequence, duration floored to the frame grid.
    const PatternProgram prog = test_program(spec);
    RunCondition test_cond;
    test_cond.payload = spec.payload;
    test_cond.excitation = prog.excitation;
    test_cond.duration_s =
        std::floor((spec.washout_s + prog.content_s) * kRate) / kRate;
    test_cond.sample_rate_hz = kRate;
    const Trajectory test_traj = source.fetch(test_cond);
    StateMatrix test = trim_washout(test_traj, spec.washout_s, 0.0);
    test = maybe_subset(test, channels);
    out.test_trajectory_id = trajectory_id(test_traj.meta);

    out.windows = recognize_pattern(test, kRate, 0.0, out.readout,
                                    spec.averaging_window_s, spec.train_values);

    // Fill ground truth per window from the driving program.
    long scored = 0, correct = 0;
    const double frames = spec.averaging_window_s * kRate;
    const int per = static_cast<int>(std::llround(frames));
    for (size_t k = 0; k < out.windows.size(); ++k) {
        PatternWindow& win = out.windows[k];
        const double w0 = static_cast<double>(k) * per / kRate;
        const double w1 = w0 + per / kRate;
        double end = 0.0;
        double occupancy_best = -1.0;
        for (size_t i = 0; i < prog.durations.size(); ++i) {
            const double begin = end;
            end += prog.durations[i];
            if (begin > w0 && begin < w1) win.boundary = true;
            const double overlap =
                std::min(end, w1) - std::max(begin, w0);
            if (overlap > occupancy_best) {
                occupancy_best = overlap;
                win.truth = prog.symbol_values[i];
            }
        }
        if (!win.boundary) {
            ++scored;
            correct += win.classified == win.truth;
        }
    }
    out.accuracy_excluding_boundary =
        scored ? static_cast<double>(correct) / static_cast<double>(scored)
               : 0.0;

    // The windowed series is the task's final output; its RMSE against the
    // per-window truth is the headline error (all windows, boundary included).
    Eigen::VectorXd west(static_cast<long>(out.windows.size()));
    Eigen::VectorXd wtruth(static_cast<long>(out.windows.size()));
    for (size_t k = 0; k < out.windows.size(); ++k) {
        west(static_cast<long>(k)) = out.windows[k].estimate;
        wtruth(static_cast<long>(k)) = out.windows[k].truth;
    }
    out.window_rmse = rmse(wtruth, west);

    // Frame-level series kept for plotting.
    out.output_series = reservoir_output(test, out.readout).col(0);
    out.series_times.resize(test.rows());
    out.target_series.resize(test.rows());
    for (int k = 0; k < test.rows(); ++k) {
        const double tau = k / kRate;
        out.series_times(k) = tau;
        out.target_series(k) = symbol_at(prog, tau);
    }
    return out;
}

PatternTaskResult baseline_bottom_nodes(TrajectorySource& source,
                                        const PatternTaskSpec& spec) {
    return run_pattern_task(source, spec, baseline_channels());
}

std::vector<int> baseline_channels() { return {0, 1, 2, 3}; }

// ---- multitask ----

MultitaskResult run_weight_position_multitask(
    TrajectorySource& source, double frequency_hz, double amplitude_mm,
    const std::vector<MultitaskCondition>& held_out, double ridge_lambda) {
    const double w = 5.0;
    const std::vector<double> masses = {8.0, 17.0};
    const std::vector<std::string> stations = {"a", "h"};

    std::vector<StateMatrix> groups;
    std::vector<double> weight_vals;
    std::vector<double> position_vals;
    for (const std::string& st : stations) {
        for (double m : masses) {
            groups.push_back(fetch_window(
                source, single_tone(m, st, frequency_hz, amplitude_mm), w, w));
            weight_vals.push_back(m);
            position_vals.push_back(st == "a" ? -1.0 : 1.0);
        }
    }
    const StateMatrix train = stack_segments(groups);
    const int seg = groups.front().rows();
    TargetSignal target;
    target.values.resize(train.rows(), 2);
    for (size_t g = 0; g < groups.size(); ++g) {
        target.values.block(static_cast<long>(g) * seg, 0, seg, 1)
            .setConstant(weight_vals[g]);
        target.values.block(static_cast<long>(g) * seg, 1, seg, 1)
            .setConstant(position_vals[g]);
    }
    target.labels = {"weight", "position"};

    MultitaskResult out;
    out.readout = train_readout(train, target, ridge_lambda);
    out.training_rows = train.rows();
    for (const MultitaskCondition& cond : held_out) {
        const StateMatrix window = fetch_window(
            source,
            single_tone(cond.mass_g, cond.position, cond.frequency_hz,
                        amplitude_mm),
            w, w);
        const Eigen::MatrixXd series = reservoir_output(window, out.readout);
        MultitaskCaseResult c;
        c.condition = cond;
        c.weight_estimate_g = series.col(0).mean();
        c.companion_mean = series.col(1).mean();
        c.trajectory_id = window.origin[0].trajectory_id;
        out.cases.push_back(std::move(c));
    }
    return out;
}

MultitaskResult run_weight_frequency_multitask(
    TrajectorySource& source, double amplitude_mm,
    const std::vector<MultitaskCondition>& held_out, double ridge_lambda) {
    const double w = 5.0;
    const std::vector<double> masses = {15.0, 3.0};
    const std::vector<double> freqs = {4.0, 2.0, 6.0};
    const double seg_s = 5.0;

    std::vector<StateMatrix> runs;
    for (double m : masses) {
        RunCondition cond;
        cond.payload = PayloadSpec{m, "a"};
        cond.excitation.segments.push_back({amplitude_mm, freqs[0], w});
        for (double f : freqs)
            cond.excitation.segments.push_back({amplitude_mm, f, seg_s});
        cond.duration_s = w + seg_s * static_cast<double>(freqs.size());
        cond.sample_rate_hz = kRate;
        runs.push_back(trim_washout(source.fetch(cond), w, 0.0));
    }
    const StateMatrix train = stack_segments(runs);
    const int seg = rows_for(seg_s, kRate);
    TargetSignal target;
    target.values.resize(train.rows(), 2);
    long at = 0;
    for (double m : masses) {
        for (double f : freqs) {
            target.values.block(at, 0, seg, 1).setConstant(m);
            target.values.block(at, 1, seg, 1).setConstant(f);
            at += seg;
        }
    }
    target.labels = {"weight", "frequency"};

    MultitaskResult out;
    out.readout = train_readout(train, target, ridge_lambda);
    out.training_rows = train.rows();
    for (const MultitaskCondition& cond : held_out) {
        const StateMatrix window = fetch_window(
            source,
            single_tone(cond.mass_g, cond.position, cond.frequency_hz,
                        amplitude_mm),
            w, w);
        const Eigen::MatrixXd series = reservoir_output(window, out.readout);
        MultitaskCaseResult c;
        c.condition = cond;
        c.weight_estimate_g = series.col(0).mean();
        c.companion_mean = series.col(1).mean();
        c.trajectory_id = window.origin[0].trajectory_id;
        out.cases.push_back(std::move(c));
    }
    return out;
}

// ---- dimensionality sweep ----

namespace {

SweepResult sweep_common(const std::vector<int>& counts, int trials,
                         std::uint64_t seed, int total_channels,
                         const std::function<double(const std::vector<int>&)>&
                             rmse_for_subset,
                         const StateMatrix& reference) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    SweepResult out;
    out.full_rmse = rmse_for_subset(reference.channel_map);

    std::vector<double> xs, ys;
    for (int count : counts) {
        SweepPoint point;
        point.channel_count = count;
        const int reps = count >= total_channels ? 1 : trials;
        for (int trial = 0; trial < reps; ++trial) {
            std::uint64_t h = fnv1a64("sweep-subset-v1");
            h = fnv1a64(seed, h);
            h = fnv1a64(count, h);
            h = fnv1a64(trial, h);
            const StateMatrix subset = select_channels(reference, count, h);
            point.trial_rmse.push_back(rmse_for_subset(subset.channel_map));
        }
        point.mean_rmse =
            std::accumulate(point.trial_rmse.begin(), point.trial_rmse.end(),
                            0.0) /
            static_cast<double>(point.trial_rmse.size());
        point.min_rmse =
            *std::min_element(point.trial_rmse.begin(), point.trial_rmse.end());
        point.max_rmse =
            *std::max_element(point.trial_rmse.begin(), point.trial_rmse.end());
        out.points.push_back(std::move(point));
        xs.push_back(count);
        ys.push_back(out.points.back().mean_rmse);
    }
    out.spearman_rho = spearman_rank_correlation(xs, ys);
    return out;
}

}  // namespace

SweepResult dimensionality_sweep(TrajectorySource& source,
                                 const WeightTaskSpec& spec,
                                 const std::vector<int>& counts, int trials,
                                 std::uint64_t seed) {
    const AssembledWeight asm_ = assemble_weight(source, spec);
    auto rmse_for = [&](const std::vector<int>& channels) {
        return evaluate_weight(asm_, spec, channels).rmse_g;
    };
    return sweep_common(counts, trials, seed, asm_.train.channels(), rmse_for,
                        asm_.train);
}

SweepResult dimensionality_sweep(TrajectorySource& source,
                                 const PatternTaskSpec& spec,
                                 const std::vector<int>& counts, int trials,
                                 std::uint64_t seed) {
    // The source memoizes the two pattern trajectories, so per-subset runs
    // only redo the linear algebra.
    StateMatrix reference;
    {
        const PatternProgram train_prog = training_program(spec);
        RunCondition cond;
        cond.payload = spec.payload;
        cond.excitation = train_prog.excitation;
        cond.duration_s = spec.washout_s + train_prog.content_s;
        cond.sample_rate_hz = kRate;
        reference = trim_washout(source.fetch(cond), spec.washout_s, 0.0);
    }
    auto rmse_for = [&](const std::vector<int>& channels) {
        return run_pattern_task(source, spec, channels).window_rmse;
    };
    return sweep_common(counts, trials, seed, reference.channels(), rmse_for,
                        reference);
}

double spearman_rank_correlation(const std::vector<double>& xs,
                                 const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw DimensionMismatch("rank correlation needs two equal series");
    auto ranks = [](const std::vector<double>& v) {
        const size_t n = v.size();
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(n);
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
            i = j + 1;
        }
        return rank;
    };
    const std::vector<double> rx = ranks(xs);
    const std::vector<double> ry = ranks(ys);
    const size_t n = xs.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0, dx = 0, dy = 0;
    for (size_t i = 0; i < n; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

}  // namespace orc
