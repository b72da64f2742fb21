#include "releq/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace releq {

namespace {

// Flat layout used by the integrator: y = (q_1..q_n, v_1..v_n).
struct FlatSystem {
    const Problem& problem;
    int n;
    int k;

    Eigen::Index half() const { return static_cast<Eigen::Index>(n) * k; }

    // dy/dt into `out`. Throws SingularityError on collision.
    void derivative(const Vector& y, Vector& out) const {
        const auto nk = half();
        out.head(nk) = y.tail(nk);
        auto acc = out.tail(nk);
        acc.setZero();
        const double a = problem.exponent();
        const auto& m = problem.masses();
        double max_norm_sq = 0.0;
        for (int i = 0; i < n; ++i) max_norm_sq = std::max(max_norm_sq, y.segment(i * k, k).squaredNorm());
        const double threshold = 1e-12 * (1.0 + std::sqrt(max_norm_sq));
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const Vector d = y.segment(j * k, k) - y.segment(i * k, k);
                const double r2 = d.squaredNorm();
                if (!(std::sqrt(r2) > threshold)) {
                    throw SingularityError("collision between bodies " + std::to_string(i) +
                                           " and " + std::to_string(j));
                }
                const double w = std::pow(r2, a);
                acc.segment(i * k, k) += (m[static_cast<std::size_t>(j)] * w) * d;
                acc.segment(j * k, k) -= (m[static_cast<std::size_t>(i)] * w) * d;
            }
        }
    }

    double min_distance(const Vector& y) const {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                best = std::min(best, (y.segment(i * k, k) - y.segment(j * k, k)).norm());
            }
        }
        return best;
    }

    // Error measure: per-body k-vector blocks, each relative to tol*(1 + |y_b|).
    // Using Euclidean block norms keeps step selection invariant under
    // orthogonal changes of coordinates.
    double scaled_norm(const Vector& v, const Vector& y0, const Vector& y1, double tol) const {
        double worst = 0.0;
        for (Eigen::Index b = 0; b < 2 * static_cast<Eigen::Index>(n); ++b) {
            const double ref =
                std::max(y0.segment(b * k, k).norm(), y1.segment(b * k, k).norm());
            worst = std::max(worst, v.segment(b * k, k).norm() / (tol * (1.0 + ref)));
        }
        return worst;
    }

    Vector pack(const PhaseState& s) const {
        Vector y(2 * half());
        for (int i = 0; i < n; ++i) {
            y.segment(i * k, k) = s.positions[static_cast<std::size_t>(i)];
            y.segment(half() + i * k, k) = s.velocities[static_cast<std::size_t>(i)];
        }
        return y;
    }

    PhaseState unpack(const Vector& y, double t) const {
        PhaseState s;
        s.time = t;
        s.positions.reserve(static_cast<std::size_t>(n));
        s.velocities.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            s.positions.emplace_back(y.segment(i * k, k));
            s.velocities.emplace_back(y.segment(half() + i * k, k));
        }
        return s;
    }
};

// Dormand-Prince 5(4) tableau. The system is autonomous, so the nodes c_i are
// not needed.
namespace dp {
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

void require_state_matches(const PhaseState& s, const Problem& problem) {
    const auto n = static_cast<std::size_t>(problem.body_count());
    if (s.positions.size() != n || s.velocities.size() != n) {
        throw DomainError("phase state body count does not match the problem");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (s.positions[i].size() != problem.dimension() ||
            s.velocities[i].size() != problem.dimension()) {
            throw DomainError("phase state dimension does not match the problem");
        }
    }
}

}  // namespace

PhaseState::PhaseState(std::vector<Vector> pos, std::vector<Vector> vel, double t)
    : positions(std::move(pos)), velocities(std::move(vel)), time(t) {
    if (positions.size() != velocities.size()) {
        throw DomainError("positions and velocities differ in length");
    }
    require_collision_free(positions);
    for (std::size_t i = 0; i < velocities.size(); ++i) {
        if (velocities[i].size() != positions[i].size() || !velocities[i].allFinite()) {
            throw DomainError("velocity " + std::to_string(i) + " is malformed");
        }
    }
}

std::vector<Vector> acceleration(std::span<const Vector> positions, const Problem& problem) {
    if (positions.size() != static_cast<std::size_t>(problem.body_count())) {
        throw DomainError("position count does not match the problem");
    }
    require_collision_free(positions);
    const double a = problem.exponent();
    const auto& m = problem.masses();
    std::vector<Vector> acc(positions.size(), Vector::Zero(problem.dimension()));
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = 0; j < positions.size(); ++j) {
            if (j == i) continue;
            const Vector d = positions[j] - positions[i];
            acc[i] += m[j] * std::pow(d.squaredNorm(), a) * d;
        }
    }
    return acc;
}

double potential_energy(std::span<const Vector> positions, const Problem& problem) {
    if (positions.size() != static_cast<std::size_t>(problem.body_count())) {
        throw DomainError("position count does not match the problem");
    }
    require_collision_free(positions);
    const double a = problem.exponent();
    const auto& m = problem.masses();
    const bool log_law = problem.exponent_type().is_logarithmic();
    const double p = 2.0 * a + 2.0;
    double v = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            const double r = (positions[i] - positions[j]).norm();
            v += m[i] * m[j] * (log_law ? std::log(r) : std::pow(r, p) / p);
        }
    }
    return v;
}

ConservedQuantities conserved_quantities(const PhaseState& state, const Problem& problem) {
    require_state_matches(state, problem);
    const int k = problem.dimension();
    ConservedQuantities out;
    out.linear_momentum = Vector::Zero(k);
    out.angular_momentum = Matrix::Zero(k, k);
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        const double mi = problem.masses()[i];
        const Vector& q = state.positions[i];
        const Vector& v = state.velocities[i];
        out.kinetic += 0.5 * mi * v.squaredNorm();
        out.linear_momentum += mi * v;
        const Matrix qv = q * v.transpose();
        out.angular_momentum += mi * (qv - qv.transpose());
    }
    out.potential = potential_energy(state.positions, problem);
    out.energy = out.kinetic + out.potential;
    return out;
}

Trajectory integrate(const PhaseState& initial, const Problem& problem, double t_end,
                     double tol) {
    IntegratorOptions options;
    options.tol = tol;
    return integrate(initial, problem, t_end, options);
}

Trajectory integrate(const PhaseState& initial, const Problem& problem, double t_end,
                     const IntegratorOptions& options) {
    const double tol = options.tol;
    if (!(tol >= 1e-13 && tol <= 1e-3)) {
        throw DomainError("integrator tolerance must lie in [1e-13, 1e-3]");
    }
    require_state_matches(initial, problem);
    require_collision_free(initial.positions);
    const double t0 = initial.time;
    if (!(t_end > t0) || !std::isfinite(t_end)) {
        throw DomainError("t_end must be finite and greater than the initial time");
    }

    std::vector<double> targets;
    for (double t : options.sample_times) {
        if (t > t0 && t < t_end) targets.push_back(t);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    targets.push_back(t_end);

    const FlatSystem sys{problem, problem.body_count(), problem.dimension()};
    const double guard = 1e-9 * max_pairwise_distance(initial.positions);

    Trajectory traj;
    traj.samples.push_back(initial);

    Vector y = sys.pack(initial);
    const auto dim = y.size();
    Vector k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Vector ytmp(dim), ynew(dim), err(dim);
    sys.derivative(y, k1);

    double t = t0;
    double h = options.initial_step;
    if (!(h > 0.0)) {
        // Starting step heuristic (Hairer, Norsett & Wanner, II.4).
        const double d0 = sys.scaled_norm(y, y, y, tol);
        const double d1 = sys.scaled_norm(k1, y, y, tol);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_end - t0);
        ytmp = y + h0 * k1;
        double d2 = 0.0;
        try {
            sys.derivative(ytmp, k2);
            d2 = sys.scaled_norm(k2 - k1, y, y, tol) / h0;
        } catch (const SingularityError&) {
            d2 = 1e6;
        }
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                    : std::pow(0.01 / std::max(d1, d2), 0.2);
        h = std::min(100.0 * h0, h1);
    }

    constexpr double safety = 0.9;
    constexpr double beta = 0.04;
    constexpr double expo = 0.2 - beta * 0.75;
    constexpr double fac_min = 0.2;
    constexpr double fac_max = 10.0;
    double err_old = 1e-4;

    std::size_t next = 0;
    long steps = 0;
    while (next < targets.size()) {
        const double target = targets[next];
        if (++steps > options.max_steps) {
            throw SingularityError("integrator exceeded the maximum step count", t);
        }
        const double min_step = 16.0 * std::numeric_limits<double>::epsilon() *
                                std::max(1.0, std::abs(t));
        if (h < min_step) {
            throw SingularityError("step size underflow near collision", t);
        }
        bool lands = false;
        double step = h;
        if (t + step >= target - 1e-14 * std::max(1.0, std::abs(target))) {
            step = target - t;
            lands = true;
        }

        double err_norm = 0.0;
        try {
            using namespace dp;
            ytmp = y + step * (a21 * k1);
            sys.derivative(ytmp, k2);
            ytmp = y + step * (a31 * k1 + a32 * k2);
            sys.derivative(ytmp, k3);
            ytmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
            sys.derivative(ytmp, k4);
            ytmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            sys.derivative(ytmp, k5);
            ytmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            sys.derivative(ytmp, k6);
            ynew = y + step * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            sys.derivative(ynew, k7);
            err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            err_norm = sys.scaled_norm(err, y, ynew, tol);
        } catch (const SingularityError&) {
            // A stage landed on a collision; shrink and retry.
            ++traj.rejected_steps;
            h = 0.25 * step;
            continue;
        }
        if (!std::isfinite(err_norm)) {
            ++traj.rejected_steps;
            h = 0.25 * step;
            continue;
        }

        const double fac11 = std::pow(std::max(err_norm, 1e-300), expo);
        if (err_norm <= 1.0) {
            double fac = fac11 / std::pow(err_old, beta);
            fac = std::clamp(fac / safety, 1.0 / fac_max, 1.0 / fac_min);
            const double h_new = step / fac;
            err_old = std::max(err_norm, 1e-4);
            t = lands ? target : t + step;
            y.swap(ynew);
            k1.swap(k7);
            ++traj.accepted_steps;
            if (sys.min_distance(y) < guard) {
                throw SingularityError("near-collision: separation fell below guard", t);
            }
            // Keep the unclipped proposal after landing on a sample time.
            h = lands ? std::max(h, h_new) : h_new;
            if (lands) {
                traj.samples.push_back(sys.unpack(y, t));
                ++next;
            }
        } else {
            ++traj.rejected_steps;
            h = step / std::min(1.0 / fac_min, fac11 / safety);
        }
    }
    return traj;
}

PhaseState rigid_rotation_state(const Configuration& config, const Problem& problem) {
    require_compatible(config, problem);
    const Matrix g = rotation_generator(problem.frequencies(), problem.dimension());
    std::vector<Vector> vel;
    vel.reserve(config.points().size());
    for (const auto& q : config.points()) vel.emplace_back(g * q);
    return PhaseState(config.points(), std::move(vel), 0.0);
}

double relative_equilibrium_deviation(const Configuration& config, const Problem& problem,
                                      double t_end, int samples, double tol) {
    if (samples < 1) throw DomainError("samples must be positive");
    IntegratorOptions options;
    options.tol = tol;
    for (int s = 1; s <= samples; ++s) options.sample_times.push_back(t_end * s / samples);
    const Trajectory traj = integrate(rigid_rotation_state(config, problem), problem, t_end, options);
    return rigid_rotation_deviation(traj, config, problem);
}

double rigid_rotation_deviation(const Trajectory& trajectory, const Configuration& config,
                                const Problem& problem) {
    require_compatible(config, problem);
    double worst = 0.0;
    for (const auto& state : trajectory.samples) {
        const Matrix rot = rotation_matrix(problem.frequencies(), state.time, problem.dimension());
        for (int i = 0; i < config.size(); ++i) {
            worst = std::max(worst,
                             (state.positions[static_cast<std::size_t>(i)] - rot * config[i]).norm());
        }
    }
    return worst;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    if (trajectory.samples.empty()) return;
    const auto k = trajectory.samples.front().positions.front().size();
    out << "t,body";
    for (Eigen::Index u = 0; u < k; ++u) out << ",q" << u;
    for (Eigen::Index u = 0; u < k; ++u) out << ",v" << u;
    out << '\n';
    const auto old_precision = out.precision(17);
    for (const auto& s : trajectory.samples) {
        for (std::size_t i = 0; i < s.positions.size(); ++i) {
            out << s.time << ',' << i;
            for (Eigen::Index u = 0; u < k; ++u) out << ',' << s.positions[i](u);
            for (Eigen::Index u = 0; u < k; ++u) out << ',' << s.velocities[i](u);
            out << '\n';
        }
    }
    out.precision(old_precision);
}

}  // namespace releq
