#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orc/errors.hpp"
#include "orc/geometry.hpp"

// Bar-and-hinge dynamics of the folded sheet under sinusoidal base shaking.
// Interfaces keep the sheet's mm/gram units; integration runs in SI units
// internally. Trajectories record lab-frame vertical displacements in mm.

namespace orc {

// Point payload resting on the top edge. Position labels a..h name 8
// equispaced stations along the edge; stations between vertices split their
// mass onto the two flanking vertices proportionally.
struct PayloadSpec {
    double mass_g = 0.0;
    std::string position = "a";
};

struct ExcitationSegment {
    double amplitude_mm = 0.0;
    double frequency_hz = 1.0;
    double duration_s = 0.0;
};

// Piecewise-sinusoidal vertical base drive. The phase resets to zero at each
// segment boundary, like a signal generator reprogrammed per segment; u(t) is
// zero after the last segment ends.
struct ExcitationSpec {
    std::vector<ExcitationSegment> segments;

    double total_duration() const {
        double d = 0.0;
        for (const auto& s : segments) d += s.duration_s;
        return d;
    }
};

struct ReservoirModel {
    FoldedMesh mesh;
    double node_mass = 0.0;               // kg per sheet node
    double bar_stiffness = 2000.0;        // N/m
    double crease_hinge_stiffness = 0.0;  // N*mm/rad
    double facet_hinge_stiffness = 0.0;   // N*mm/rad
    double rayleigh_alpha = 6.0;  // 1/s, mass-proportional damping
    // Axial dashpots c = beta * bar_stiffness. Explicit integration needs
    // dt * beta * w_max^2 < 2; 2e-5 s leaves a 10x margin at dt = 0.1 ms.
    double rayleigh_beta = 2e-5;
    double gravity = 9.81;                // m/s^2, 0 disables
    std::vector<int> clamped;             // kinematically driven node ids
    std::optional<PayloadSpec> payload;

    double time_step = 1e-4;      // s, internal integration step
    double seed_jitter_mm = 0.01; // initial-position perturbation bound
    double force_limit = 1e4;     // N, blowup detector threshold
    // Uniform bound on marker-extraction error added to recorded free-node
    // displacements. Emulates camera tracking; the dynamics never see it,
    // and clamped columns stay exact because their drive is commanded.
    double sensor_noise_mm = 0.0;
};

// Calibrated 4x7 desk model: 20 mm panels, 60 deg sectors, 50 deg fold,
// 6 g sheet. Hinge stiffness ships from a stored calibration run that put
// the 10 g-loaded fundamental frequency at 3 Hz.
ReservoirModel default_reservoir_model();

// Positions and velocities in meters, one column per node.
struct SimState {
    Eigen::Matrix3Xd positions;
    Eigen::Matrix3Xd velocities;
};

struct TrajectoryMeta {
    std::optional<PayloadSpec> payload;
    ExcitationSpec excitation;
    uint64_t seed = 0;
    uint64_t model_hash = 0;
};

// Camera-rate record of vertical node displacements (mm), one column per
// node in id order, displacement relative to the node's initial position.
struct Trajectory {
    double sample_rate = 25.0;
    Eigen::VectorXd times;   // s
    Eigen::MatrixXd states;  // rows = samples, cols = nodes
    TrajectoryMeta meta;

    int node_count() const { return static_cast<int>(states.cols()); }
    int sample_count() const { return static_cast<int>(states.rows()); }
};

// u(t) of a single segment, mm.
double base_excitation(double t_s, double amplitude_mm, double frequency_hz);

// Piecewise drive with phase reset at segment boundaries, mm.
double excitation_displacement(const ExcitationSpec& spec, double t_s);

// Mass lumped at each node: sheet mass plus the payload split, kg.
Eigen::VectorXd node_masses(const ReservoirModel& model);

// Returns a copy with the payload attached. Zero mass detaches. Prints a
// warning to stderr above the 18 g rating instead of failing, since the real
// sheet merely risks buckling there.
ReservoirModel attach_payload(const ReservoirModel& model, const PayloadSpec& spec);

// Sum of axial bar forces, hinge moments mapped through the dihedral
// gradient, Rayleigh damping and gravity, N. Geometric nonlinearity enters
// through current bar directions and dihedral angles.
Eigen::Matrix3Xd internal_forces(const ReservoirModel& model,
                                 const Eigen::Matrix3Xd& positions,
                                 const Eigen::Matrix3Xd& velocities);

// One semi-implicit Euler step (velocity update, then position update).
// Clamped nodes are kinematically driven: vertical position follows the
// excitation (rest height when null), horizontal positions stay fixed.
void step(const ReservoirModel& model, SimState& state, double t_s, double dt_s,
          const ExcitationSpec* excitation = nullptr);

// Kinetic + elastic + gravitational energy, J. Gravity potential is zero at
// the lab z=0 plane.
double total_energy(const ReservoirModel& model, const SimState& state);

Trajectory simulate(const ReservoirModel& model, const ExcitationSpec& excitation,
                    double duration_s, double sample_rate_hz, uint64_t seed);

// Total harmonic distortion of the most-distorted channel after trimming the
// washout: energy at 2f and 3f over energy at f. Harmonics above Nyquist are
// skipped.
double nonlinearity_index(const Trajectory& traj, double f_hz,
                          double head_trim_s = 5.0, double tail_trim_s = 5.0);

// Content hash of every parameter that affects simulated trajectories.
uint64_t model_hash(const ReservoirModel& model);

// Throws Error("invalid_model") when an invariant is broken (non-positive
// stiffness or mass, negative damping, facet hinge not softer than crease).
void validate_model(const ReservoirModel& model);

}  // namespace orc
