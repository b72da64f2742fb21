#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "releq/criterion.hpp"

namespace releq {

enum class Termination { converged, stalled, collision_guard, max_iterations };

std::string_view to_string(Termination t);

struct SolverOptions {
    /// Convergence: residual max_norm <= tol_res * ResidualReport::scale.
    double tol_res = 1e-12;
    int max_iterations = 200;
    double initial_damping = 1e-3;
    double damping_increase = 10.0;
    double damping_decrease = 0.5;
    /// Trial steps with min separation below guard_factor * length_scale()
    /// are rejected.
    double guard_factor = 1e-6;
};

struct SolveResult {
    Configuration config;
    double residual_max = 0.0;
    double residual_scale = 1.0;
    /// Absolute threshold the solve was judged against.
    double tolerance = 0.0;
    int iterations = 0;
    Termination termination = Termination::stalled;
    /// |F|_2 of the seed followed by one entry per accepted step.
    std::vector<double> trace;

    bool converged() const noexcept { return termination == Termination::converged; }
};

/// Separation of the two-body equilibrium with total mass M rotating at the
/// fastest frequency: (max A^2 / M)^{1/(2a)}.
double length_scale(const Problem& problem);

/// Radius of the ball seeds are drawn from: length_scale * n.
double seed_radius(const Problem& problem);

/// Levenberg-Marquardt on the stacked residual with the analytic Jacobian.
SolveResult solve_from_seed(const Configuration& seed, const Problem& problem,
                            const SolverOptions& options = {});

/// Fixes gauge freedom: for odd k the unconstrained trailing component of
/// the mass-weighted centroid is moved to 0; each 2-plane is rotated so the
/// first body with a nonzero projection onto it lies on the plane's first
/// axis. Idempotent.
Configuration canonicalize(const Configuration& config, const Problem& problem);

struct EquilibriumFingerprint {
    std::vector<double> sorted_distances;
    /// m_i |Q_i| ordered by (mass, value); ascending within each mass.
    std::vector<double> sorted_mass_weighted_norms;
    /// Mass tag for each entry of sorted_mass_weighted_norms.
    std::vector<double> norm_masses;
};

/// Rotation invariant. Also invariant under relabeling of equal-mass
/// bodies. Computed on the canonical form.
EquilibriumFingerprint fingerprint(const Configuration& config, const Problem& problem);

/// Entrywise agreement to `rel_tol` relative; mass tags must match exactly.
bool same_class(const EquilibriumFingerprint& x, const EquilibriumFingerprint& y,
                double rel_tol = 1e-6);

/// Seed for trial `trial` of a search: points uniform in the ball of radius
/// `radius`, redrawn until no pair is closer than the solver's guard. Depends
/// only on (rng_seed, trial).
Configuration draw_seed(const Problem& problem, std::uint64_t rng_seed, int trial, double radius,
                        const SolverOptions& options = {});

struct MultistartOptions {
    int trials = 100;
    std::uint64_t rng_seed = 0;
    /// Worker threads; 0 uses the hardware concurrency.
    int jobs = 1;
    SolverOptions solver;
    /// Defaults to seed_radius(problem).
    std::optional<double> radius;
    double dedup_tol = 1e-6;
};

struct EquilibriumClass {
    SolveResult result;  // canonicalized
    EquilibriumFingerprint fingerprint;
    int first_trial = 0;
    int multiplicity = 0;
};

struct MultistartResult {
    std::vector<EquilibriumClass> classes;  // ordered by first_trial
    int trials = 0;
    int converged = 0;
    int dropped = 0;
};

MultistartResult multistart_search(const Problem& problem, const MultistartOptions& options);

struct ContinuationStep {
    double exponent = 0.0;
    SolveResult result;
};

struct ContinuationResult {
    std::vector<ContinuationStep> steps;
    bool completed = false;
    double last_good_exponent = 0.0;
    std::string failure;
};

/// Moves the exponent from problem.exponent() to `a_target` through `steps`
/// geometrically spaced values, re-solving from the previous solution each
/// time. Stops at the first step that does not converge.
ContinuationResult continuation_in_exponent(const SolveResult& start, const Problem& problem,
                                            double a_target, int steps,
                                            const SolverOptions& options = {});

}  // namespace releq
