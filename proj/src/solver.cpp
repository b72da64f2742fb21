#include "releq/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

namespace releq {

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::stalled: return "stalled";
        case Termination::collision_guard: return "collision_guard";
        case Termination::max_iterations: return "max_iterations";
    }
    return "unknown";
}

double length_scale(const Problem& problem) {
    const double w = problem.max_frequency();
    return std::pow(w * w / problem.total_mass(), 1.0 / (2.0 * problem.exponent()));
}

double seed_radius(const Problem& problem) {
    return length_scale(problem) * problem.body_count();
}

namespace {

double min_separation(const Vector& x, int n, int k) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            best = std::min(best, (x.segment(i * k, k) - x.segment(j * k, k)).norm());
        }
    }
    return best;
}

Vector stacked_residual(const ResidualReport& r) {
    const auto k = r.per_body.front().size();
    Vector out(static_cast<Eigen::Index>(r.per_body.size()) * k);
    for (std::size_t i = 0; i < r.per_body.size(); ++i) {
        out.segment(static_cast<Eigen::Index>(i) * k, k) = r.per_body[i];
    }
    return out;
}

}  // namespace

SolveResult solve_from_seed(const Configuration& seed, const Problem& problem,
                            const SolverOptions& options) {
    require_compatible(seed, problem);
    const int n = problem.body_count();
    const int k = problem.dimension();
    const double guard = options.guard_factor * length_scale(problem);

    SolveResult out{seed, 0.0, 1.0, 0.0, 0, Termination::stalled, {}};
    if (seed.min_distance() < guard) {
        out.termination = Termination::collision_guard;
        out.residual_max = std::numeric_limits<double>::infinity();
        return out;
    }

    Configuration current = seed;
    ResidualReport report = residual(current, problem);
    Vector f = stacked_residual(report);
    double f_norm = f.norm();
    out.trace.push_back(f_norm);

    auto finish = [&](Termination t) {
        out.config = current;
        out.residual_max = report.max_norm;
        out.residual_scale = report.scale;
        out.tolerance = options.tol_res * report.scale;
        out.termination = t;
        return out;
    };

    if (report.max_norm <= options.tol_res * report.scale) return finish(Termination::converged);

    double mu = options.initial_damping;
    constexpr double max_damping = 1e16;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        out.iterations = iter;
        const Matrix jac = jacobian(current, problem);
        const Matrix jtj = jac.transpose() * jac;
        const Vector grad = jac.transpose() * f;
        const double diag_scale = std::max(jtj.diagonal().maxCoeff(), 1e-300);
        const Vector x = current.stacked();

        bool accepted = false;
        bool last_rejection_was_guard = false;
        while (!accepted) {
            if (mu > max_damping) {
                return finish(last_rejection_was_guard ? Termination::collision_guard
                                                       : Termination::stalled);
            }
            Matrix lhs = jtj;
            lhs.diagonal().array() += mu * diag_scale;
            const Eigen::LDLT<Matrix> ldlt(lhs);
            if (ldlt.info() != Eigen::Success) {
                mu *= options.damping_increase;
                last_rejection_was_guard = false;
                continue;
            }
            const Vector delta = -ldlt.solve(grad);
            if (!delta.allFinite()) {
                mu *= options.damping_increase;
                last_rejection_was_guard = false;
                continue;
            }
            if (delta.norm() <= 1e-15 * (1.0 + x.norm())) {
                return finish(Termination::stalled);
            }
            const Vector trial = x + delta;
            if (!(min_separation(trial, n, k) >= guard)) {
                mu *= options.damping_increase;
                last_rejection_was_guard = true;
                continue;
            }
            Configuration trial_config = Configuration::from_stacked(trial, k);
            ResidualReport trial_report = residual(trial_config, problem);
            Vector trial_f = stacked_residual(trial_report);
            const double trial_norm = trial_f.norm();
            if (std::isfinite(trial_norm) && trial_norm < f_norm) {
                current = std::move(trial_config);
                report = std::move(trial_report);
                f = std::move(trial_f);
                f_norm = trial_norm;
                mu *= options.damping_decrease;
                accepted = true;
            } else {
                mu *= options.damping_increase;
                last_rejection_was_guard = false;
            }
        }
        out.trace.push_back(f_norm);
        if (report.max_norm <= options.tol_res * report.scale) {
            return finish(Termination::converged);
        }
    }
    return finish(Termination::max_iterations);
}

Configuration canonicalize(const Configuration& config, const Problem& problem) {
    require_compatible(config, problem);
    const int k = config.dimension();
    std::vector<Vector> pts = config.points();

    if (k % 2 == 1) {
        double moment = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) moment += problem.masses()[i] * pts[i](k - 1);
        const double shift = moment / problem.total_mass();
        for (auto& p : pts) p(k - 1) -= shift;
    }

    const double zero = 1e-12 * std::max(1.0, config.max_norm());
    for (int plane = 0; plane < k / 2; ++plane) {
        const int u = 2 * plane;
        const auto anchor = std::find_if(pts.begin(), pts.end(), [&](const Vector& p) {
            return std::hypot(p(u), p(u + 1)) > zero;
        });
        if (anchor == pts.end()) continue;
        const double r = std::hypot((*anchor)(u), (*anchor)(u + 1));
        const double c = (*anchor)(u) / r;
        const double s = (*anchor)(u + 1) / r;
        for (auto& p : pts) {
            const double x = p(u);
            const double y = p(u + 1);
            p(u) = c * x + s * y;
            p(u + 1) = -s * x + c * y;
        }
        (*anchor)(u) = r;
        (*anchor)(u + 1) = 0.0;
    }
    return Configuration(std::move(pts));
}

EquilibriumFingerprint fingerprint(const Configuration& config, const Problem& problem) {
    const Configuration canon = canonicalize(config, problem);
    const int n = canon.size();
    EquilibriumFingerprint fp;
    fp.sorted_distances.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) fp.sorted_distances.push_back((canon[i] - canon[j]).norm());
    }
    std::sort(fp.sorted_distances.begin(), fp.sorted_distances.end());

    std::vector<std::pair<double, double>> tagged;
    tagged.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double m = problem.masses()[static_cast<std::size_t>(i)];
        tagged.emplace_back(m, m * canon[i].norm());
    }
    std::sort(tagged.begin(), tagged.end());
    for (const auto& [m, w] : tagged) {
        fp.norm_masses.push_back(m);
        fp.sorted_mass_weighted_norms.push_back(w);
    }
    return fp;
}

bool same_class(const EquilibriumFingerprint& x, const EquilibriumFingerprint& y,
                double rel_tol) {
    if (x.sorted_distances.size() != y.sorted_distances.size() ||
        x.sorted_mass_weighted_norms.size() != y.sorted_mass_weighted_norms.size() ||
        x.norm_masses != y.norm_masses) {
        return false;
    }
    auto close = [rel_tol](double p, double q) {
        return std::abs(p - q) <= rel_tol * std::max({std::abs(p), std::abs(q), 1e-300});
    };
    for (std::size_t i = 0; i < x.sorted_distances.size(); ++i) {
        if (!close(x.sorted_distances[i], y.sorted_distances[i])) return false;
    }
    // Norms can be ~0 (a body at the centroid); compare those on the length scale
    // of the configuration instead.
    const double floor = rel_tol * x.sorted_distances.back();
    for (std::size_t i = 0; i < x.sorted_mass_weighted_norms.size(); ++i) {
        const double p = x.sorted_mass_weighted_norms[i];
        const double q = y.sorted_mass_weighted_norms[i];
        if (!(close(p, q) || std::abs(p - q) <= floor * x.norm_masses[i])) return false;
    }
    return true;
}

namespace {

double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

Configuration draw_seed(const Problem& problem, std::uint64_t rng_seed, int trial, double radius,
                        const SolverOptions& options) {
    if (!(radius > 0.0)) throw DomainError("seed radius must be positive");
    std::seed_seq seq{static_cast<std::uint32_t>(rng_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(rng_seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 gen(seq);
    const int n = problem.body_count();
    const int k = problem.dimension();
    const double guard = options.guard_factor * length_scale(problem);
    for (;;) {
        std::vector<Vector> pts;
        pts.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Vector p(k);
            do {
                for (int u = 0; u < k; ++u) p(u) = 2.0 * unit_uniform(gen) - 1.0;
            } while (p.squaredNorm() > 1.0);
            pts.push_back(radius * p);
        }
        if (min_pairwise_distance(pts) > std::max(guard, collision_threshold(pts))) {
            return Configuration(std::move(pts));
        }
    }
}

MultistartResult multistart_search(const Problem& problem, const MultistartOptions& options) {
    if (options.trials < 1) throw DomainError("trials must be at least 1");
    const double radius = options.radius.value_or(seed_radius(problem));
    const auto trials = static_cast<std::size_t>(options.trials);

    std::vector<std::optional<SolveResult>> results(trials);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < trials; t = next++) {
            const Configuration seed =
                draw_seed(problem, options.rng_seed, static_cast<int>(t), radius, options.solver);
            results[t] = solve_from_seed(seed, problem, options.solver);
        }
    };
    int jobs = options.jobs > 0 ? options.jobs
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min<int>(jobs, options.trials);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    // Merge in trial order so the output does not depend on scheduling.
    MultistartResult out;
    out.trials = options.trials;
    for (std::size_t t = 0; t < trials; ++t) {
        SolveResult& r = *results[t];
        if (!r.converged()) {
            ++out.dropped;
            continue;
        }
        ++out.converged;
        r.config = canonicalize(r.config, problem);
        EquilibriumFingerprint fp = fingerprint(r.config, problem);
        auto match = std::find_if(out.classes.begin(), out.classes.end(), [&](const auto& c) {
            return same_class(c.fingerprint, fp, options.dedup_tol);
        });
        if (match != out.classes.end()) {
            ++match->multiplicity;
        } else {
            out.classes.push_back(EquilibriumClass{std::move(r), std::move(fp), static_cast<int>(t), 1});
        }
    }
    return out;
}

ContinuationResult continuation_in_exponent(const SolveResult& start, const Problem& problem,
                                            double a_target, int steps,
                                            const SolverOptions& options) {
    const Exponent target(a_target);
    if (!start.converged()) throw DomainError("continuation must start from a converged solution");
    if (steps < 1) throw DomainError("steps must be at least 1");
    require_compatible(start.config, problem);

    const double a0 = problem.exponent();
    ContinuationResult out;
    out.last_good_exponent = a0;
    Configuration previous = start.config;
    for (int s = 1; s <= steps; ++s) {
        const double a = s == steps ? target.value()
                                    : a0 * std::pow(target.value() / a0,
                                                    static_cast<double>(s) / steps);
        SolveResult r = solve_from_seed(previous, problem.with_exponent(a), options);
        if (!r.converged()) {
            std::ostringstream msg;
            msg << "step " << s << " at a = " << a << " ended with " << to_string(r.termination);
            out.failure = msg.str();
            return out;
        }
        previous = r.config;
        out.last_good_exponent = a;
        out.steps.push_back(ContinuationStep{a, std::move(r)});
    }
    out.completed = true;
    return out;
}

}  // namespace releq
