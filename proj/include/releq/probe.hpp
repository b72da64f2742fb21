#pragma once

// Empirical view of the distance bounds: over every equilibrium class a
// multistart search finds for fixed masses and rotation, the smallest
// separation (c_hat) stays positive and the largest point norm (C_hat) stays
// finite. Both are measured, never assumed.

#include <span>

#include "releq/solver.hpp"

namespace releq {

struct ClassStats {
    double min_pairwise_distance = 0.0;
    double max_point_norm = 0.0;
    double residual_max = 0.0;
    int multiplicity = 0;
    int first_trial = 0;
};

struct ProbeReport {
    int dimension = 0;
    int body_count = 0;
    double exponent = 0.0;
    std::vector<double> masses;
    std::vector<double> frequencies;
    /// Factor applied to the template's frequencies (1 for a plain probe).
    double omega_scale = 1.0;
    std::uint64_t rng_seed = 0;

    int classes_found = 0;
    /// NaN when classes_found == 0.
    double min_pairwise_distance = 0.0;
    double max_point_norm = 0.0;
    std::vector<ClassStats> per_class;
    int trials = 0;
    int converged = 0;
    int dropped = 0;
};

struct ProbeOptions {
    int jobs = 1;
    SolverOptions solver;
};

ProbeReport bound_probe(const Problem& problem, int trials, std::uint64_t rng_seed,
                        const ProbeOptions& options = {});

/// One bound_probe per entry of `omega_scales`, each on the template with
/// its frequencies multiplied by that entry. Reports keep input order.
std::vector<ProbeReport> frequency_sweep(const Problem& problem_template,
                                         std::span<const double> omega_scales, int trials,
                                         std::uint64_t rng_seed, const ProbeOptions& options = {});

}  // namespace releq
