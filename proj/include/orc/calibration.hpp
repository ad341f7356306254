#pragma once

#include <Eigen/Dense>

#include "orc/dynamics.hpp"

// Small-vibration analysis around the gravity equilibrium, used to pin the
// hinge stiffness scale that the sheet's drive frequencies should straddle.

namespace orc {

// Static equilibrium under gravity by Newton iteration on the free DOFs,
// so arbitrarily stiff probes stay solvable. Velocities come back zero.
// Throws Error("no_equilibrium") if the force residual will not drop below
// force_floor_n.
SimState settle(const ReservoirModel& model, double force_floor_n = 1e-8,
                int max_iterations = 60);

// Tangent stiffness on the free DOFs (3 per unclamped node, node-major
// x,y,z), by central differences of the internal forces at zero velocity.
// Includes geometric stiffness from bar tension at the linearization point.
Eigen::MatrixXd stiffness_matrix(const ReservoirModel& model,
                                 const SimState& at, double fd_step_m = 1e-7);

// Free-node ids in ascending order (the DOF ordering of stiffness_matrix).
std::vector<int> free_nodes(const ReservoirModel& model);

// All natural frequencies (Hz, ascending) of the linearized model about its
// gravity equilibrium; near-zero modes are dropped.
Eigen::VectorXd natural_frequencies(const ReservoirModel& model);

// Smallest natural frequency, Hz.
double fundamental_frequency(const ReservoirModel& model);

struct CalibrationResult {
    double crease_hinge_stiffness = 0.0;  // N*mm/rad
    double facet_hinge_stiffness = 0.0;   // preserves the input ratio
    double achieved_frequency_hz = 0.0;
    int evaluations = 0;
};

// Finds the crease stiffness whose loaded fundamental frequency hits the
// target, keeping the facet/crease ratio of the input model. Log-log secant
// iteration with bisection fallback on [lo, hi].
CalibrationResult calibrate_crease_stiffness(const ReservoirModel& model,
                                             double target_hz,
                                             double tol_hz = 0.01,
                                             double lo = 0.05, double hi = 5000.0);

}  // namespace orc
