#include "orc/calibration.hpp"

#include <algorithm>
#include <cmath>

namespace orc {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

SimState settle(const ReservoirModel& model, double force_floor_n,
                int max_iterations) {
    validate_model(model);
    SimState s;
    s.positions = model.mesh.node_positions * 1e-3;
    s.velocities = Eigen::Matrix3Xd::Zero(3, model.mesh.node_count());

    const std::vector<int> free = free_nodes(model);
    const int n_dof = 3 * int(free.size());
    if (n_dof == 0) return s;

    auto residual = [&](const SimState& st) {
        const Eigen::Matrix3Xd f =
            internal_forces(model, st.positions, st.velocities);
        Eigen::VectorXd r(n_dof);
        for (int d = 0; d < n_dof; ++d) r(d) = f(d % 3, free[d / 3]);
        return r;
    };

    auto potential = [&](const SimState& st) { return total_energy(model, st); };

    // Newton iteration on the free DOFs: unconditionally stable at any hinge
    // stiffness, unlike damped time integration. The tangent is regularized
    // because tension-free bars have exactly zero transverse stiffness. The
    // line search accepts on potential-energy descent (the Newton direction
    // always descends for a PSD tangent); near machine flatness a force-norm
    // drop counts as progress instead.
    Eigen::VectorXd r = residual(s);
    double energy = potential(s);
    for (int it = 0; it < max_iterations; ++it) {
        if (r.cwiseAbs().maxCoeff() < force_floor_n) return s;

        const Eigen::MatrixXd K = stiffness_matrix(model, s);
        double reg = 1e-10 * std::max(1.0, K.diagonal().cwiseAbs().maxCoeff());
        Eigen::VectorXd delta;
        for (int attempt = 0; attempt < 6; ++attempt, reg *= 1e3) {
            Eigen::MatrixXd Kr = K;
            Kr.diagonal().array() += reg;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(Kr);
            if (ldlt.info() != Eigen::Success) continue;
            delta = ldlt.solve(r);
            if (delta.allFinite()) break;
            delta.resize(0);
        }
        if (delta.size() == 0)
            throw Error("no_equilibrium", "singular tangent stiffness");

        bool advanced = false;
        double scale = 1.0;
        for (int bt = 0; bt < 30; ++bt, scale *= 0.5) {
            SimState trial = s;
            for (int d = 0; d < n_dof; ++d)
                trial.positions(d % 3, free[d / 3]) += scale * delta(d);
            Eigen::VectorXd rt;
            double et;
            try {
                rt = residual(trial);
                et = potential(trial);
            } catch (const Error&) {
                continue;  // overshoot collapsed an element; shrink
            }
            const bool energy_drop =
                et < energy - 1e-15 * std::max(std::abs(energy), 1.0);
            const bool force_drop = rt.norm() < r.norm();
            if (energy_drop || force_drop ||
                rt.cwiseAbs().maxCoeff() < force_floor_n) {
                s = trial;
                r = rt;
                energy = et;
                advanced = true;
                break;
            }
        }
        if (!advanced)
            throw Error("no_equilibrium",
                        "static solve stalled before reaching the force floor");
    }
    if (r.cwiseAbs().maxCoeff() < force_floor_n) return s;
    throw Error("no_equilibrium",
                "static solve did not converge in " +
                    std::to_string(max_iterations) + " iterations");
}

std::vector<int> free_nodes(const ReservoirModel& model) {
    std::vector<int> ids;
    for (int c = 0; c < model.mesh.node_count(); ++c)
        if (std::find(model.clamped.begin(), model.clamped.end(), c) ==
            model.clamped.end())
            ids.push_back(c);
    return ids;
}

Eigen::MatrixXd stiffness_matrix(const ReservoirModel& model,
                                 const SimState& at, double fd_step_m) {
    const std::vector<int> free = free_nodes(model);
    const int n_dof = 3 * int(free.size());
    Eigen::MatrixXd K(n_dof, n_dof);

    SimState probe = at;
    probe.velocities.setZero();
    const Eigen::Matrix3Xd zero_v = probe.velocities;

    for (int d = 0; d < n_dof; ++d) {
        const int node = free[d / 3];
        const int axis = d % 3;
        const double save = probe.positions(axis, node);

        probe.positions(axis, node) = save + fd_step_m;
        const Eigen::Matrix3Xd fp = internal_forces(model, probe.positions, zero_v);
        probe.positions(axis, node) = save - fd_step_m;
        const Eigen::Matrix3Xd fm = internal_forces(model, probe.positions, zero_v);
        probe.positions(axis, node) = save;

        for (int e = 0; e < n_dof; ++e) {
            const int enode = free[e / 3];
            const int eaxis = e % 3;
            K(e, d) = -(fp(eaxis, enode) - fm(eaxis, enode)) / (2.0 * fd_step_m);
        }
    }
    return 0.5 * (K + K.transpose());
}

Eigen::VectorXd natural_frequencies(const ReservoirModel& model) {
    const SimState eq = settle(model);
    const Eigen::MatrixXd K = stiffness_matrix(model, eq);

    const std::vector<int> free = free_nodes(model);
    const Eigen::VectorXd node_m = node_masses(model);
    Eigen::VectorXd m(K.rows());
    for (int d = 0; d < K.rows(); ++d) m(d) = node_m(free[d / 3]);

    const Eigen::MatrixXd mass_matrix = m.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, mass_matrix);
    if (solver.info() != Eigen::Success)
        throw Error("no_equilibrium", "modal eigensolve failed");

    const Eigen::VectorXd lam = solver.eigenvalues();
    const double cutoff = 1e-9 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    std::vector<double> freqs;
    for (int i = 0; i < lam.size(); ++i)
        if (lam(i) > cutoff) freqs.push_back(std::sqrt(lam(i)) / (2.0 * kPi));
    std::sort(freqs.begin(), freqs.end());
    if (freqs.empty()) return Eigen::VectorXd();
    return Eigen::Map<Eigen::VectorXd>(freqs.data(), long(freqs.size()));
}

double fundamental_frequency(const ReservoirModel& model) {
    const Eigen::VectorXd f = natural_frequencies(model);
    if (f.size() == 0)
        throw Error("no_equilibrium", "model has no positive-frequency modes");
    return f(0);
}

CalibrationResult calibrate_crease_stiffness(const ReservoirModel& model,
                                             double target_hz, double tol_hz,
                                             double lo, double hi) {
    if (!(target_hz > 0.0) || !(lo > 0.0) || !(hi > lo))
        throw Error("invalid_argument", "bad calibration bracket or target");
    const double ratio =
        model.facet_hinge_stiffness / model.crease_hinge_stiffness;

    CalibrationResult result;
    auto eval = [&](double crease) {
        ReservoirModel probe = model;
        probe.crease_hinge_stiffness = crease;
        probe.facet_hinge_stiffness = crease * ratio;
        ++result.evaluations;
        return fundamental_frequency(probe);
    };

    // Frequency grows monotonically with stiffness, close to f ~ sqrt(k),
    // so a secant in log-log coordinates converges in a handful of steps.
    double la = std::log(lo), lb = std::log(hi);
    double fa = eval(lo), fb = eval(hi);
    if (target_hz < fa || target_hz > fb)
        throw Error("invalid_argument",
                    "calibration target frequency outside the bracket");

    double lx = 0.5 * (la + lb), fx = 0.0;
    for (int it = 0; it < 40; ++it) {
        const double t = std::log(target_hz);
        lx = la + (lb - la) * (t - std::log(fa)) / (std::log(fb) - std::log(fa));
        if (!(lx > la && lx < lb)) lx = 0.5 * (la + lb);
        fx = eval(std::exp(lx));
        if (std::abs(fx - target_hz) <= tol_hz) break;
        if (fx < target_hz) {
            la = lx;
            fa = fx;
        } else {
            lb = lx;
            fb = fx;
        }
    }
    result.crease_hinge_stiffness = std::exp(lx);
    result.facet_hinge_stiffness = result.crease_hinge_stiffness * ratio;
    result.achieved_frequency_hz = fx;
    return result;
}

}  // namespace orc
