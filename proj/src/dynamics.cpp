#include "orc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>

#include "orc/hash.hpp"

namespace orc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMmToM = 1e-3;

bool is_clamped(const ReservoirModel& model, int node) {
    return std::find(model.clamped.begin(), model.clamped.end(), node) !=
           model.clamped.end();
}

// Hinge deviation from rest with the 2*pi branch folded out, so a crease
// oscillating across the 0/2*pi cut never sees a spurious full-turn jump.
double hinge_deviation(double theta, double rest) {
    double d = theta - rest;
    if (d > kPi) d -= 2.0 * kPi;
    if (d < -kPi) d += 2.0 * kPi;
    return d;
}

// Uniform double in [0, 1) from the top 53 bits, identical on every platform
// (std::uniform_real_distribution is not portable across standard libraries).
double uniform01(std::mt19937_64& gen) {
    return double(gen() >> 11) * 0x1.0p-53;
}

struct SegmentPhase {
    double amplitude_mm = 0.0;
    double frequency_hz = 1.0;
    double local_t = 0.0;
    bool active = false;
};

SegmentPhase locate_segment(const ExcitationSpec& spec, double t) {
    double start = 0.0;
    for (const auto& seg : spec.segments) {
        if (t < start + seg.duration_s) {
            if (t >= start)
                return {seg.amplitude_mm, seg.frequency_hz, t - start, true};
            break;
        }
        start += seg.duration_s;
    }
    return {};
}

}  // namespace

double base_excitation(double t_s, double amplitude_mm, double frequency_hz) {
    return amplitude_mm * std::sin(2.0 * kPi * frequency_hz * t_s);
}

double excitation_displacement(const ExcitationSpec& spec, double t_s) {
    const SegmentPhase ph = locate_segment(spec, t_s);
    if (!ph.active) return 0.0;
    return base_excitation(ph.local_t, ph.amplitude_mm, ph.frequency_hz);
}

ReservoirModel default_reservoir_model() {
    ReservoirModel m;
    m.mesh = fold_miura(build_miura_pattern(4, 7, 20.0, 20.0, 60.0), 50.0);
    m.node_mass = 6e-3 / m.mesh.node_count();
    m.bar_stiffness = 2000.0;
    // Tuned so the 10 g loaded sheet's fundamental frequency is 3.0 Hz
    // (see calibrate_crease_stiffness), placing the 1-6 Hz drive band
    // around resonance.
    m.crease_hinge_stiffness = 2.1777321071761171;
    m.facet_hinge_stiffness = m.crease_hinge_stiffness / 5.0;
    m.clamped = clamped_nodes(m.mesh);
    return m;
}

void validate_model(const ReservoirModel& model) {
    auto fail = [](const std::string& why) { throw Error("invalid_model", why); };
    if (model.mesh.node_count() < 2) fail("mesh has fewer than two nodes");
    if (model.mesh.bars.empty()) fail("mesh has no bars");
    if (!(model.node_mass > 0.0)) fail("node mass must be positive");
    if (!(model.bar_stiffness > 0.0)) fail("bar stiffness must be positive");
    if (!(model.crease_hinge_stiffness > 0.0))
        fail("crease hinge stiffness must be positive");
    if (!(model.facet_hinge_stiffness > 0.0))
        fail("facet hinge stiffness must be positive");
    if (!(model.facet_hinge_stiffness < model.crease_hinge_stiffness))
        fail("facet hinges must be softer than crease hinges");
    if (model.rayleigh_alpha < 0.0 || model.rayleigh_beta < 0.0)
        fail("damping coefficients must be non-negative");
    if (model.gravity < 0.0) fail("gravity must be non-negative");
    if (!(model.time_step > 0.0)) fail("time step must be positive");
    if (model.seed_jitter_mm < 0.0) fail("seed jitter must be non-negative");
    if (model.sensor_noise_mm < 0.0)
        fail("sensor noise must be non-negative");
    if (!(model.force_limit > 0.0)) fail("force limit must be positive");
    for (int c : model.clamped)
        if (c < 0 || c >= model.mesh.node_count())
            fail("clamped node id out of range");
    if (model.payload && model.payload->mass_g < 0.0)
        fail("payload mass must be non-negative");
}

namespace {

// Station index 0..7 for labels a..h.
int station_index(const std::string& label) {
    if (label.size() != 1 || label[0] < 'a' || label[0] > 'h')
        throw InvalidPosition("payload position must be a letter a..h, got \"" +
                              label + "\"");
    return label[0] - 'a';
}

}  // namespace

Eigen::VectorXd node_masses(const ReservoirModel& model) {
    Eigen::VectorXd m =
        Eigen::VectorXd::Constant(model.mesh.node_count(), model.node_mass);
    if (!model.payload) return m;

    const int k = station_index(model.payload->position);
    const double mass_kg = model.payload->mass_g * 1e-3;
    const int top = model.mesh.rows - 1;
    // 8 equispaced stations along the top edge, measured in column units.
    const double u = k * (model.mesh.cols - 1) / 7.0;
    int j0 = static_cast<int>(std::floor(u));
    double frac = u - j0;
    if (j0 >= model.mesh.cols - 1) {
        j0 = model.mesh.cols - 1;
        frac = 0.0;
    }
    m(model.mesh.node_index(top, j0)) += (1.0 - frac) * mass_kg;
    if (frac > 0.0) m(model.mesh.node_index(top, j0 + 1)) += frac * mass_kg;
    return m;
}

ReservoirModel attach_payload(const ReservoirModel& model, const PayloadSpec& spec) {
    if (spec.mass_g < 0.0)
        throw Error("invalid_model", "payload mass must be non-negative");
    station_index(spec.position);  // label check
    if (spec.mass_g > 18.0)
        std::fprintf(stderr,
                     "warning: payload of %g g exceeds the 18 g rating; "
                     "responses may buckle\n",
                     spec.mass_g);
    ReservoirModel out = model;
    if (spec.mass_g == 0.0)
        out.payload.reset();
    else
        out.payload = spec;
    return out;
}

Eigen::Matrix3Xd internal_forces(const ReservoirModel& model,
                                 const Eigen::Matrix3Xd& positions,
                                 const Eigen::Matrix3Xd& velocities) {
    const int n = model.mesh.node_count();
    if (positions.cols() != n || velocities.cols() != n)
        throw DimensionMismatch("state arrays must have one column per node");

    Eigen::Matrix3Xd force = Eigen::Matrix3Xd::Zero(3, n);
    const Eigen::VectorXd mass = node_masses(model);

    if (model.gravity != 0.0)
        force.row(2) -= model.gravity * mass.transpose();

    const double kbar = model.bar_stiffness;
    const double cdash = model.rayleigh_beta * kbar;
    for (const Bar& bar : model.mesh.bars) {
        const Eigen::Vector3d d = positions.col(bar.b) - positions.col(bar.a);
        const double len = d.norm();
        if (!(len > 0.0))
            throw NumericalBlowup("bar collapsed to zero length", 0.0);
        const Eigen::Vector3d axis = d / len;
        double f = kbar * (len - bar.rest_length * kMmToM);
        if (cdash > 0.0) {
            const Eigen::Vector3d vrel =
                velocities.col(bar.b) - velocities.col(bar.a);
            f += cdash * vrel.dot(axis);
        }
        force.col(bar.a) += f * axis;
        force.col(bar.b) -= f * axis;
    }

    for (const Hinge& h : model.mesh.hinges) {
        const double k_si = kMmToM * (h.is_facet ? model.facet_hinge_stiffness
                                                 : model.crease_hinge_stiffness);
        const double theta = signed_dihedral(positions.col(h.i), positions.col(h.j),
                                             positions.col(h.k), positions.col(h.l));
        const double moment = -k_si * hinge_deviation(theta, h.rest_angle);
        const auto grad =
            dihedral_gradient(positions.col(h.i), positions.col(h.j),
                              positions.col(h.k), positions.col(h.l));
        force.col(h.i) += moment * grad[0];
        force.col(h.j) += moment * grad[1];
        force.col(h.k) += moment * grad[2];
        force.col(h.l) += moment * grad[3];
    }

    if (model.rayleigh_alpha > 0.0)
        for (int c = 0; c < n; ++c)
            force.col(c) -= model.rayleigh_alpha * mass(c) * velocities.col(c);

    if (!force.allFinite())
        throw NumericalBlowup("non-finite internal force", 0.0);
    const double peak = force.cwiseAbs().maxCoeff();
    if (peak > model.force_limit)
        throw NumericalBlowup("force " + std::to_string(peak) +
                                  " N exceeds the blowup threshold",
                              0.0);
    return force;
}

void step(const ReservoirModel& model, SimState& state, double t_s, double dt_s,
          const ExcitationSpec* excitation) {
    const Eigen::Matrix3Xd force =
        internal_forces(model, state.positions, state.velocities);
    const Eigen::VectorXd mass = node_masses(model);

    const int n = model.mesh.node_count();
    for (int c = 0; c < n; ++c) {
        if (is_clamped(model, c)) continue;
        state.velocities.col(c) += (dt_s / mass(c)) * force.col(c);
        state.positions.col(c) += dt_s * state.velocities.col(c);
    }

    const double t1 = t_s + dt_s;
    const double u0 = excitation ? excitation_displacement(*excitation, t_s) : 0.0;
    const double u1 = excitation ? excitation_displacement(*excitation, t1) : 0.0;
    for (int c : model.clamped) {
        const Eigen::Vector3d rest = model.mesh.node_positions.col(c) * kMmToM;
        state.positions(0, c) = rest.x();
        state.positions(1, c) = rest.y();
        state.positions(2, c) = rest.z() + u1 * kMmToM;
        state.velocities(0, c) = 0.0;
        state.velocities(1, c) = 0.0;
        state.velocities(2, c) = (u1 - u0) * kMmToM / dt_s;
    }
}

double total_energy(const ReservoirModel& model, const SimState& state) {
    const Eigen::VectorXd mass = node_masses(model);
    double e = 0.0;
    for (int c = 0; c < model.mesh.node_count(); ++c) {
        e += 0.5 * mass(c) * state.velocities.col(c).squaredNorm();
        e += model.gravity * mass(c) * state.positions(2, c);
    }
    for (const Bar& bar : model.mesh.bars) {
        const double len =
            (state.positions.col(bar.b) - state.positions.col(bar.a)).norm();
        const double stretch = len - bar.rest_length * kMmToM;
        e += 0.5 * model.bar_stiffness * stretch * stretch;
    }
    for (const Hinge& h : model.mesh.hinges) {
        const double k_si = kMmToM * (h.is_facet ? model.facet_hinge_stiffness
                                                 : model.crease_hinge_stiffness);
        const double theta =
            signed_dihedral(state.positions.col(h.i), state.positions.col(h.j),
                            state.positions.col(h.k), state.positions.col(h.l));
        const double dev = hinge_deviation(theta, h.rest_angle);
        e += 0.5 * k_si * dev * dev;
    }
    return e;
}

Trajectory simulate(const ReservoirModel& model, const ExcitationSpec& excitation,
                    double duration_s, double sample_rate_hz, uint64_t seed) {
    validate_model(model);
    if (!(duration_s > 0.0))
        throw Error("invalid_argument", "duration must be positive");
    if (!(sample_rate_hz > 0.0))
        throw Error("invalid_argument", "sample rate must be positive");
    const double dt = model.time_step;
    if (sample_rate_hz > 1.0 / dt + 1e-9)
        throw RateMismatch("sample rate exceeds the integration rate");
    const double sps_real = 1.0 / (sample_rate_hz * dt);
    const long long sps = std::llround(sps_real);
    if (sps < 1 || std::abs(sps_real - double(sps)) > 1e-6 * sps_real)
        throw RateMismatch(
            "sample interval must be an integer multiple of the time step");

    const int n_samples = int(std::llround(duration_s * sample_rate_hz));
    if (n_samples < 1)
        throw Error("invalid_argument", "duration shorter than one sample");
    const int n = model.mesh.node_count();

    SimState state;
    state.positions = model.mesh.node_positions * kMmToM;
    state.velocities = Eigen::Matrix3Xd::Zero(3, n);
    if (model.seed_jitter_mm > 0.0) {
        std::mt19937_64 gen(seed);
        for (int c = 0; c < n; ++c) {
            if (is_clamped(model, c)) {
                gen.discard(3);  // keep free-node draws independent of clamping
                continue;
            }
            for (int axis = 0; axis < 3; ++axis)
                state.positions(axis, c) += model.seed_jitter_mm * kMmToM *
                                            (2.0 * uniform01(gen) - 1.0);
        }
    }
    const Eigen::Matrix3Xd initial = state.positions;

    Trajectory traj;
    traj.sample_rate = sample_rate_hz;
    traj.times.resize(n_samples);
    traj.states.resize(n_samples, n);
    traj.meta.payload = model.payload;
    traj.meta.excitation = excitation;
    traj.meta.seed = seed;
    traj.meta.model_hash = model_hash(model);

    // Marker-extraction error stream, separate from the initial-jitter
    // stream so enabling it never shifts the integrated dynamics.
    std::mt19937_64 sensor_gen(fnv1a64(seed, fnv1a64("sensor-noise-v1")));
    auto record = [&](int row) {
        const double t = row / sample_rate_hz;
        traj.times(row) = t;
        for (int c = 0; c < n; ++c) {
            // Clamped nodes follow the drive by construction; recording u(t)
            // directly keeps their column bit-identical to the input signal.
            double mm;
            if (is_clamped(model, c)) {
                mm = excitation_displacement(excitation, t);
            } else {
                mm = (state.positions(2, c) - initial(2, c)) / kMmToM;
                if (model.sensor_noise_mm > 0.0)
                    mm += model.sensor_noise_mm *
                          (2.0 * uniform01(sensor_gen) - 1.0);
            }
            if (!std::isfinite(mm))
                throw NumericalBlowup("non-finite displacement", t);
            traj.states(row, c) = mm;
        }
    };

    record(0);
    long long istep = 0;
    for (int row = 1; row < n_samples; ++row) {
        for (long long s = 0; s < sps; ++s, ++istep) {
            const double t = double(istep) * dt;
            try {
                step(model, state, t, dt, &excitation);
            } catch (const NumericalBlowup& e) {
                throw NumericalBlowup(e.what(), t);
            }
        }
        record(row);
    }
    return traj;
}

double nonlinearity_index(const Trajectory& traj, double f_hz, double head_trim_s,
                          double tail_trim_s) {
    if (!(f_hz > 0.0))
        throw Error("invalid_argument", "fundamental frequency must be positive");
    const double rate = traj.sample_rate;
    if (f_hz > rate / 4.0)
        throw InsufficientSamples(
            "fewer than 4 samples per period at the drive frequency");

    const int n = traj.sample_count();
    const int i0 = int(std::lround(head_trim_s * rate));
    const int i1 = n - int(std::lround(tail_trim_s * rate));
    const int len = i1 - i0;
    if (i0 < 0 || len < 16)
        throw InsufficientSamples("washout trim leaves too few samples");

    double worst = 0.0;
    for (int c = 0; c < traj.node_count(); ++c) {
        Eigen::VectorXd x = traj.states.block(i0, c, len, 1);
        x.array() -= x.mean();
        double energy[4] = {0, 0, 0, 0};
        for (int harmonic = 1; harmonic <= 3; ++harmonic) {
            const double g = harmonic * f_hz;
            if (g > rate / 2.0) continue;  // above Nyquist
            std::complex<double> acc(0.0, 0.0);
            for (int k = 0; k < len; ++k) {
                const double phase = -2.0 * kPi * g * traj.times(i0 + k);
                acc += x(k) * std::complex<double>(std::cos(phase), std::sin(phase));
            }
            energy[harmonic] = std::norm(acc);
        }
        if (energy[1] < 1e-30) continue;  // silent channel
        worst = std::max(worst, (energy[2] + energy[3]) / energy[1]);
    }
    return worst;
}

uint64_t model_hash(const ReservoirModel& model) {
    uint64_t h = fnv1a64(std::string_view("orc-model-v1"));
    h = fnv1a64(model.mesh.rows, h);
    h = fnv1a64(model.mesh.cols, h);
    h = fnv1a64(model.mesh.panel_a, h);
    h = fnv1a64(model.mesh.panel_b, h);
    h = fnv1a64(model.mesh.gamma_deg, h);
    h = fnv1a64(model.mesh.fold_angle_deg, h);
    h = fnv1a64(model.node_mass, h);
    h = fnv1a64(model.bar_stiffness, h);
    h = fnv1a64(model.crease_hinge_stiffness, h);
    h = fnv1a64(model.facet_hinge_stiffness, h);
    h = fnv1a64(model.rayleigh_alpha, h);
    h = fnv1a64(model.rayleigh_beta, h);
    h = fnv1a64(model.gravity, h);
    h = fnv1a64(model.time_step, h);
    h = fnv1a64(model.seed_jitter_mm, h);
    h = fnv1a64(model.force_limit, h);
    h = fnv1a64(model.sensor_noise_mm, h);
    h = fnv1a64(int(model.clamped.size()), h);
    for (int c : model.clamped) h = fnv1a64(c, h);
    h = fnv1a64(int(model.payload.has_value()), h);
    if (model.payload) {
        h = fnv1a64(model.payload->mass_g, h);
        h = fnv1a64(std::string_view(model.payload->position), h);
    }
    return h;
}

}  // namespace orc
