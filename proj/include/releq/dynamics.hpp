#pragma once

// Equations of motion
//
//   q_i'' = sum_{j != i} m_j (q_j - q_i) |q_j - q_i|^{2a}
//
// with an adaptive Dormand-Prince 5(4) integrator, first integrals, and a
// direct check that t -> T_k(At) Q_i solves the system.

#include <iosfwd>
#include <span>
#include <vector>

#include "releq/model.hpp"

namespace releq {

struct PhaseState {
    std::vector<Vector> positions;
    std::vector<Vector> velocities;
    double time = 0.0;

    PhaseState() = default;
    /// Validates matching sizes and a collision-free position set.
    PhaseState(std::vector<Vector> positions, std::vector<Vector> velocities, double time);
};

struct ConservedQuantities {
    double kinetic = 0.0;
    double potential = 0.0;
    double energy = 0.0;
    Vector linear_momentum;
    /// L_uv = sum_i m_i (q_i[u] v_i[v] - q_i[v] v_i[u]).
    Matrix angular_momentum;
};

/// Right-hand side of the equations of motion. Throws SingularityError when
/// two positions are closer than collision_threshold().
std::vector<Vector> acceleration(std::span<const Vector> positions, const Problem& problem);

/// sum_{i<j} m_i m_j r^{2a+2} / (2a+2), or sum m_i m_j ln r when a = -1.
/// -grad_{q_i} V = m_i * acceleration_i.
double potential_energy(std::span<const Vector> positions, const Problem& problem);

ConservedQuantities conserved_quantities(const PhaseState& state, const Problem& problem);

struct IntegratorOptions {
    /// Per-step local error bound; must lie in [1e-13, 1e-3].
    double tol = 1e-10;
    /// Output times in (t0, t_end]; t_end is always sampled. Sorted on entry.
    std::vector<double> sample_times;
    double initial_step = 0.0;
    long max_steps = 5'000'000;
};

struct Trajectory {
    /// The initial state followed by one state per sample time.
    std::vector<PhaseState> samples;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

/// Integrates from `initial` to `t_end`. Aborts with SingularityError (carrying
/// the time reached) when the minimum separation drops below 1e-9 times the
/// initial configuration scale, or when the step size underflows.
Trajectory integrate(const PhaseState& initial, const Problem& problem, double t_end,
                     const IntegratorOptions& options);
Trajectory integrate(const PhaseState& initial, const Problem& problem, double t_end,
                     double tol);

/// q_i(0) = Q_i, q_i'(0) = G Q_i with G = rotation_generator(A).
PhaseState rigid_rotation_state(const Configuration& config, const Problem& problem);

/// Integrates from rigid_rotation_state(config) and returns
/// max_{t, i} |q_i(t) - T_k(At) Q_i| over `samples` equally spaced times in
/// (0, t_end].
double relative_equilibrium_deviation(const Configuration& config, const Problem& problem,
                                      double t_end, int samples, double tol = 1e-10);

/// max_{samples, i} |q_i(t) - T_k(At) Q_i| over a trajectory started from
/// rigid_rotation_state(config).
double rigid_rotation_deviation(const Trajectory& trajectory, const Configuration& config,
                                const Problem& problem);

/// Columns: t, body, q[0..k), v[0..k); one row per (sample, body).
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace releq
