#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "releq/dynamics.hpp"

using namespace releq;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

Problem planar(int n, double a, double omega = 1.0) {
    return Problem(2, std::vector<double>(static_cast<std::size_t>(n), 1.0), {omega}, Exponent(a));
}

Configuration two_body() {
    return Configuration(oracle::two_body_points(1, 1, std::cbrt(2.0)));
}

double relative_drift(const ConservedQuantities& c0, const ConservedQuantities& c1,
                      const PhaseState& s0, const std::vector<double>& masses, int which) {
    switch (which) {
        case 0: return std::abs(c1.energy - c0.energy) / (c0.kinetic + std::abs(c0.potential));
        case 1: {
            double p_scale = 0;
            for (std::size_t i = 0; i < masses.size(); ++i) p_scale += masses[i] * s0.velocities[i].norm();
            return (c1.linear_momentum - c0.linear_momentum).norm() / p_scale;
        }
        default: return (c1.angular_momentum - c0.angular_momentum).norm() / c0.angular_momentum.norm();
    }
}

}  // namespace

TEST_CASE("acceleration examples") {
    const Problem p = planar(2, -1.5);
    const Configuration c = two_body();
    const auto acc = acceleration(c.points(), p);
    CHECK((acc[0] + c[0]).norm() < 1e-15);
    CHECK((acc[1] + c[1]).norm() < 1e-15);

    Vector a(2), b(2);
    a << 0, 0;
    b << 1, 0;
    const std::vector<Vector> pair{a, b};
    const auto unit = acceleration(pair, p);
    CHECK(unit[0](0) == doctest::Approx(1.0));
    CHECK(unit[0](1) == 0.0);

    CHECK_THROWS_AS(acceleration(std::vector<Vector>{a, a}, p), SingularityError);
}

TEST_CASE("acceleration momentum balance and translation invariance") {
    std::mt19937_64 gen(1);
    const std::vector<double> masses{1.0, 0.3, 2.2, 1.7, 0.9};
    for (int k : {2, 3, 4}) {
        const Problem p(k, masses, std::vector<double>(static_cast<std::size_t>(k / 2), 1.0), Exponent(-1.25));
        const auto pts = oracle::random_points(gen, 5, k);
        const auto acc = acceleration(pts, p);
        Vector total = Vector::Zero(k);
        double scale = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            total += masses[i] * acc[i];
            scale += masses[i] * acc[i].norm();
        }
        CHECK(total.norm() < 1e-14 * scale);

        auto shifted = pts;
        Vector e = Vector::Constant(k, 0.37);
        for (auto& q : shifted) q += e;
        const auto acc2 = acceleration(shifted, p);
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK((acc2[i] - acc[i]).norm() < 1e-13 * (1 + acc[i].norm()));
    }
}

TEST_CASE("potential energy examples and gradient") {
    Vector a(2), b(2);
    a << 0, 0;
    b << 1, 0;
    const std::vector<Vector> pair{a, b};
    CHECK(potential_energy(pair, planar(2, -1.5)) == doctest::Approx(-1.0));
    CHECK(potential_energy(pair, planar(2, -1.0)) == 0.0);

    std::mt19937_64 gen(6);
    const std::vector<double> masses{1.0, 2.0, 0.5, 1.2};
    for (double exponent : {-0.75, -1.0, -1.5, -2.5}) {
        const Problem p(3, masses, {1.0}, Exponent(exponent));
        auto pts = oracle::random_points(gen, 4, 3);
        const auto acc = acceleration(pts, p);
        const double h = 1e-5;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            Vector grad(3);
            for (int u = 0; u < 3; ++u) {
                auto plus = pts, minus = pts;
                plus[i](u) += h;
                minus[i](u) -= h;
                grad(u) = (potential_energy(plus, p) - potential_energy(minus, p)) / (2 * h);
            }
            const Vector force = masses[i] * acc[i];
            CHECK((-grad - force).norm() <= 1e-6 * force.norm());
        }
    }
}

TEST_CASE("conserved quantities examples") {
    const Problem p = planar(2, -1.5);
    std::vector<Vector> zero(2, Vector::Zero(2));
    const ConservedQuantities still = conserved_quantities(PhaseState(two_body().points(), zero, 0.0), p);
    CHECK(still.kinetic == 0.0);
    CHECK(still.linear_momentum.isZero(0.0));
    CHECK(still.angular_momentum.isZero(0.0));

    const ConservedQuantities c = conserved_quantities(rigid_rotation_state(two_body(), p), p);
    CHECK(c.linear_momentum.isZero(0.0));
    const double r = std::cbrt(2.0);
    CHECK(c.angular_momentum(0, 1) == doctest::Approx(r * r / 2).epsilon(1e-14));
    CHECK((c.angular_momentum + c.angular_momentum.transpose()).isZero(0.0));
}

TEST_CASE("two-body circular orbit returns after one period") {
    const Problem p = planar(2, -1.5);
    const Configuration c = two_body();
    const Trajectory t = integrate(rigid_rotation_state(c, p), p, kTwoPi, 1e-10);
    REQUIRE(t.samples.size() == 2);
    CHECK(t.samples.back().time == kTwoPi);
    for (int i = 0; i < 2; ++i) CHECK((t.samples.back().positions[static_cast<std::size_t>(i)] - c[i]).norm() < 1e-6);
}

TEST_CASE("head-on collapse aborts before the collision time") {
    const Problem p = planar(2, -1.5);
    Vector a(2), b(2);
    a << -0.5, 0;
    b << 0.5, 0;
    const PhaseState s({a, b}, std::vector<Vector>(2, Vector::Zero(2)), 0.0);
    // Free-fall time from separation 1 with M = 2: (pi/2) sqrt(1 / (2M)).
    const double t_collide = std::numbers::pi / 2 * std::sqrt(1.0 / 4.0);
    try {
        integrate(s, p, 2.0, 1e-10);
        FAIL("expected a singularity");
    } catch (const SingularityError& e) {
        CHECK(e.time() > 0.5 * t_collide);
        CHECK(e.time() <= t_collide);
    }
}

TEST_CASE("integrator rejects bad tolerances and horizons") {
    const Problem p = planar(2, -1.5);
    const PhaseState s = rigid_rotation_state(two_body(), p);
    CHECK_THROWS_AS(integrate(s, p, 1.0, 1e-14), DomainError);
    CHECK_THROWS_AS(integrate(s, p, 1.0, 1e-2), DomainError);
    CHECK_THROWS_AS(integrate(s, p, 0.0, 1e-8), DomainError);
}

TEST_CASE("sampling honours requested times") {
    const Problem p = planar(3, -1.5);
    const Configuration c(oracle::ngon_points(3, std::pow(3.0, -1.0 / 6.0)));
    IntegratorOptions opts;
    opts.tol = 1e-9;
    opts.sample_times = {2.0, 0.5, 1.0, 1.0, 7.0};
    const Trajectory t = integrate(rigid_rotation_state(c, p), p, 3.0, opts);
    std::vector<double> times;
    for (const auto& s : t.samples) times.push_back(s.time);
    CHECK(times == std::vector<double>{0.0, 0.5, 1.0, 2.0, 3.0});

    std::ostringstream csv;
    write_trajectory_csv(csv, t);
    const std::string text = csv.str();
    CHECK(text.rfind("t,body,q0,q1,v0,v1\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 5 * 3);
}

TEST_CASE("energy, momentum and angular momentum drift") {
    std::mt19937_64 gen(12);
    const std::vector<double> masses{1.0, 0.8, 1.3, 0.6};
    for (double exponent : {-1.0, -1.5}) {
        const Problem p(2, masses, {1.0}, Exponent(exponent));
        const auto pos = oracle::random_points(gen, 4, 2, 2.0, 0.8);
        std::vector<Vector> vel;
        std::normal_distribution<double> nv(0.0, 0.3);
        for (int i = 0; i < 4; ++i) {
            Vector v(2);
            v << nv(gen), nv(gen);
            vel.push_back(v);
        }
        const PhaseState s0(pos, vel, 0.0);
        const double tol = 1e-10;
        Trajectory t;
        try {
            t = integrate(s0, p, 10.0, tol);
        } catch (const SingularityError&) {
            continue;  // close encounter for this draw; nothing to measure
        }
        const auto c0 = conserved_quantities(s0, p);
        const auto c1 = conserved_quantities(t.samples.back(), p);
        CHECK(relative_drift(c0, c1, s0, masses, 0) < 1e-8);
        CHECK(relative_drift(c0, c1, s0, masses, 1) < 100 * tol);
        CHECK(relative_drift(c0, c1, s0, masses, 2) < 100 * tol);
    }
}

TEST_CASE("relative equilibrium deviation") {
    const Problem p2 = planar(2, -1.5);
    CHECK(relative_equilibrium_deviation(two_body(), p2, kTwoPi, 32) < 1e-6);
    CHECK(relative_equilibrium_deviation(two_body().scaled(1.5), p2, kTwoPi, 32) > 1e-2);

    const Problem p3 = planar(3, -1.5);
    const Configuration tri(oracle::ngon_points(3, std::pow(3.0, -1.0 / 6.0)));
    CHECK(relative_equilibrium_deviation(tri, p3, kTwoPi, 32) < 1e-6);
}

TEST_CASE("trajectories are equivariant under commuting rotations") {
    // Perturbed rotating triangles: bounded motion without close encounters, so the
    // integrator's global error stays well below the comparison tolerance.
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    std::normal_distribution<double> nv(0.0, 0.05);
    for (int k : {2, 4, 5}) {
        for (int draw = 0; draw < 4; ++draw) {
            const Problem p(k, {1.0, 1.0, 1.0}, std::vector<double>(static_cast<std::size_t>(k / 2), 1.0),
                            Exponent(-1.5));
            const Matrix g = rotation_generator(p.frequencies(), k);
            std::vector<Vector> pos = oracle::ngon_points(3, std::pow(3.0, -1.0 / 6.0), k);
            std::vector<Vector> vel;
            for (auto& q : pos) {
                for (int u = 0; u < k; ++u) q(u) += nv(gen);
                Vector v = g * q;
                for (int u = 0; u < k; ++u) v(u) += nv(gen);
                vel.push_back(v);
            }
            std::vector<double> angles(static_cast<std::size_t>(k / 2));
            for (double& x : angles) x = ang(gen);
            Matrix s = block_rotation(angles, k);
            if (k % 2 == 1) s(k - 1, k - 1) = -1.0;  // reflection of the fixed axis also commutes

            std::vector<Vector> rpos, rvel;
            for (int i = 0; i < 3; ++i) {
                rpos.push_back(s * pos[static_cast<std::size_t>(i)]);
                rvel.push_back(s * vel[static_cast<std::size_t>(i)]);
            }
            IntegratorOptions opts;
            opts.tol = 1e-10;
            opts.sample_times = {0.5, 1.0, 1.5};
            const Trajectory t0 = integrate(PhaseState(pos, vel, 0.0), p, 2.0, opts);
            const Trajectory t1 = integrate(PhaseState(rpos, rvel, 0.0), p, 2.0, opts);
            REQUIRE(t0.samples.size() == t1.samples.size());
            for (std::size_t j = 0; j < t0.samples.size(); ++j) {
                CHECK(t0.samples[j].time == t1.samples[j].time);
                for (int i = 0; i < 3; ++i) {
                    const auto b = static_cast<std::size_t>(i);
                    const Vector expected = s * t0.samples[j].positions[b];
                    CHECK((t1.samples[j].positions[b] - expected).norm() <= 1e-9 * (1 + expected.norm()));
                    const Vector expected_v = s * t0.samples[j].velocities[b];
                    CHECK((t1.samples[j].velocities[b] - expected_v).norm() <= 1e-9 * (1 + expected_v.norm()));
                }
            }
        }
    }
}
