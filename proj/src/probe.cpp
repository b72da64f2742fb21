#include "releq/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace releq {

ProbeReport bound_probe(const Problem& problem, int trials, std::uint64_t rng_seed,
                        const ProbeOptions& options) {
    if (trials < 1) throw DomainError("trials must be at least 1");
    MultistartOptions ms;
    ms.trials = trials;
    ms.rng_seed = rng_seed;
    ms.jobs = options.jobs;
    ms.solver = options.solver;
    const MultistartResult search = multistart_search(problem, ms);

    ProbeReport report;
    report.dimension = problem.dimension();
    report.body_count = problem.body_count();
    report.exponent = problem.exponent();
    report.masses = problem.masses();
    report.frequencies = problem.frequencies();
    report.rng_seed = rng_seed;
    report.trials = search.trials;
    report.converged = search.converged;
    report.dropped = search.dropped;
    report.classes_found = static_cast<int>(search.classes.size());

    report.min_pairwise_distance = std::numeric_limits<double>::infinity();
    report.max_point_norm = 0.0;
    for (const auto& c : search.classes) {
        ClassStats stats;
        stats.min_pairwise_distance = c.result.config.min_distance();
        stats.max_point_norm = c.result.config.max_norm();
        stats.residual_max = c.result.residual_max;
        stats.multiplicity = c.multiplicity;
        stats.first_trial = c.first_trial;
        report.min_pairwise_distance = std::min(report.min_pairwise_distance, stats.min_pairwise_distance);
        report.max_point_norm = std::max(report.max_point_norm, stats.max_point_norm);
        report.per_class.push_back(stats);
    }
    if (report.classes_found == 0) {
        report.min_pairwise_distance = std::numeric_limits<double>::quiet_NaN();
        report.max_point_norm = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

std::vector<ProbeReport> frequency_sweep(const Problem& problem_template,
                                         std::span<const double> omega_scales, int trials,
                                         std::uint64_t rng_seed, const ProbeOptions& options) {
    for (double w : omega_scales) {
        if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("omega values must be positive");
    }
    std::vector<ProbeReport> out;
    out.reserve(omega_scales.size());
    for (double w : omega_scales) {
        ProbeReport r = bound_probe(problem_template.with_frequencies_scaled(w), trials, rng_seed, options);
        r.omega_scale = w;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace releq
