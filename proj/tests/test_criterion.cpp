#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "releq/criterion.hpp"

using namespace releq;

namespace {

Problem planar(int n, double a, double omega = 1.0, double m = 1.0) {
    return Problem(2, std::vector<double>(static_cast<std::size_t>(n), m), {omega}, Exponent(a));
}

Configuration two_body_oracle() {
    return Configuration(oracle::two_body_points(1, 1, oracle::two_body_separation(2, 1, -1.5)));
}

Configuration triangle_oracle() {
    return Configuration(oracle::ngon_points(3, std::pow(3.0, -1.0 / 6.0)));
}

std::vector<double> random_positive(std::mt19937_64& gen, std::size_t count, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(count);
    for (double& x : v) x = u(gen);
    return v;
}

}  // namespace

TEST_CASE("residual vanishes on closed-form equilibria") {
    CHECK(residual(two_body_oracle(), planar(2, -1.5)).max_norm < 1e-14);
    CHECK(residual(triangle_oracle(), planar(3, -1.5)).max_norm < 1e-13);

    // Both n-gon oracle routes agree.
    for (int n : {3, 4, 7, 12}) {
        for (double a : {-0.75, -1.0, -1.5, -2.5}) {
            CHECK(oracle::ngon_radius_closed_form(n, 1, 1, a) ==
                  doctest::Approx(oracle::ngon_radius_bisection(n, 1, 1, a)).epsilon(1e-12));
        }
    }
}

TEST_CASE("residual report fields") {
    std::mt19937_64 gen(5);
    const Problem p = planar(5, -1.5);
    const Configuration c(oracle::random_points(gen, 5, 2));
    const ResidualReport r = residual(c, p);
    REQUIRE(r.per_body.size() == 5);
    double mx = 0, ss = 0;
    for (const auto& f : r.per_body) {
        mx = std::max(mx, f.norm());
        ss += f.squaredNorm();
    }
    CHECK(r.max_norm == mx);
    CHECK(r.rms == doctest::Approx(std::sqrt(ss / 5)));
    CHECK(r.scale >= 1.0);

    CHECK_THROWS_AS(residual(c, planar(4, -1.5)), DomainError);
}

TEST_CASE("doubling an equilibrium breaks the criterion") {
    const Problem p = planar(3, -1.5);
    const ResidualReport r = residual(triangle_oracle().scaled(2.0), p);
    CHECK(r.max_norm > 1e-2);
}

TEST_CASE("jacobian matches central differences") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 12; ++trial) {
        const int k = 2 + trial % 4;
        const int n = 3 + trial % 3;
        const double a = trial % 2 == 0 ? -0.75 : -1.5;
        const Problem p(k, random_positive(gen, static_cast<std::size_t>(n), 0.5, 2.0),
                        random_positive(gen, static_cast<std::size_t>(k / 2), 0.5, 2.0), Exponent(a));
        const Configuration c(oracle::random_points(gen, n, k, 1.5, 0.3));
        const Matrix jac = jacobian(c, p);
        auto f = [&](const Vector& x) {
            const ResidualReport r = residual(Configuration::from_stacked(x, k), p);
            Vector out(x.size());
            for (int i = 0; i < n; ++i) out.segment(i * k, k) = r.per_body[static_cast<std::size_t>(i)];
            return out;
        };
        const double scale = std::max(1.0, c.max_norm());
        const Matrix fd = oracle::central_difference(f, c.stacked(), 1e-6 * scale);
        const double err = (fd - jac).cwiseAbs().maxCoeff() / jac.cwiseAbs().maxCoeff();
        CHECK(err < 1e-6);
    }
}

TEST_CASE("jacobian structure") {
    std::mt19937_64 gen(8);
    for (int k : {2, 3, 4, 5}) {
        const int n = 4;
        const std::vector<double> masses{1.0, 2.0, 0.5, 1.5};
        const Problem p(k, masses, random_positive(gen, static_cast<std::size_t>(k / 2), 0.5, 2.0),
                        Exponent(-1.5));
        const Configuration c(oracle::random_points(gen, n, k));
        const Matrix jac = jacobian(c, p);
        const Vector a2 = frequency_matrix(p.frequencies(), k).squared_diag();

        // Uniform translation direction.
        Vector e(k);
        for (int u = 0; u < k; ++u) e(u) = 0.3 + u;
        const Vector image = jac * e.replicate(n, 1);
        for (int i = 0; i < n; ++i) {
            CHECK((image.segment(i * k, k) - a2.cwiseProduct(e)).norm() < 1e-12 * (1 + image.norm()));
        }

        // Rotation generator direction: J (G Q_i) = G F_i.
        const Matrix g = rotation_generator(p.frequencies(), k);
        Vector gq(n * k), gf(n * k);
        const ResidualReport r = residual(c, p);
        for (int i = 0; i < n; ++i) {
            gq.segment(i * k, k) = g * c[i];
            gf.segment(i * k, k) = g * r.per_body[static_cast<std::size_t>(i)];
        }
        CHECK((jac * gq - gf).norm() < 1e-11 * (1 + gf.norm() + (jac * gq).norm()));

        // Off-diagonal blocks: (i,j)/m_j == (j,i)/m_i.
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const Matrix bij = jac.block(i * k, j * k, k, k) / masses[static_cast<std::size_t>(j)];
                const Matrix bji = jac.block(j * k, i * k, k, k) / masses[static_cast<std::size_t>(i)];
                CHECK((bij - bji).cwiseAbs().maxCoeff() < 1e-13 * (1 + bij.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("cluster_sum") {
    std::mt19937_64 gen(21);
    const std::vector<double> masses{1.0, 2.0, 3.0};
    const Problem p(2, masses, {1.0}, Exponent(-1.5));
    const Configuration c(oracle::random_points(gen, 3, 2));

    CHECK(cluster_sum(c, p, 1, 3).isZero(0.0));

    const Vector d = c[0] - c[2];
    const Vector expected = 3.0 * d * std::pow(d.norm(), -3.0);
    CHECK((cluster_sum(c, p, 0, 2) - expected).norm() < 1e-14);

    CHECK_THROWS_AS(cluster_sum(c, p, 3, 2), DomainError);
    CHECK_THROWS_AS(cluster_sum(c, p, -1, 2), DomainError);
    CHECK_THROWS_AS(cluster_sum(c, p, 0, 1), DomainError);
    CHECK_THROWS_AS(cluster_sum(c, p, 0, 4), DomainError);
}

TEST_CASE("cluster split reproduces the residual") {
    std::mt19937_64 gen(22);
    const int n = 6, k = 3;
    const Problem p(k, random_positive(gen, n, 0.5, 2.0), {1.3}, Exponent(-1.25));
    const Configuration c(oracle::random_points(gen, n, k));
    const ResidualReport r = residual(c, p);
    const Vector a2 = frequency_matrix(p.frequencies(), k).squared_diag();
    for (int l = 2; l <= n; ++l) {
        for (int i = 0; i < l; ++i) {
            Vector inside = Vector::Zero(k);
            for (int j = 0; j < l; ++j) {
                if (j == i) continue;
                const Vector dij = c[i] - c[j];
                inside += p.masses()[static_cast<std::size_t>(j)] * dij * std::pow(dij.norm(), 2 * p.exponent());
            }
            const Vector split = a2.cwiseProduct(c[i]) - inside - cluster_sum(c, p, i, l);
            CHECK((split - r.per_body[static_cast<std::size_t>(i)]).norm() < 1e-12 * r.scale);
        }
    }
}

TEST_CASE("lemma identity gap") {
    const Problem p2 = planar(2, -1.5);
    CHECK(lemma_identity_gap(two_body_oracle(), p2, 2).gap < 1e-13);

    const Problem p3 = planar(3, -1.5);
    for (int l : {2, 3}) CHECK(lemma_identity_gap(triangle_oracle(), p3, l).gap < 1e-12);

    CHECK_THROWS_AS(lemma_identity_gap(triangle_oracle(), p3, 1), DomainError);
    CHECK_THROWS_AS(lemma_identity_gap(triangle_oracle(), p3, 4), DomainError);

    // Negative control and gap == |sum m_i (F_0 - F_i)|.
    std::mt19937_64 gen(99);
    const std::vector<double> masses{1.0, 0.7, 1.9, 1.1};
    const Problem p4(2, masses, {1.0}, Exponent(-1.5));
    const Configuration c(oracle::random_points(gen, 4, 2));
    const ResidualReport r = residual(c, p4);
    for (int l = 2; l <= 4; ++l) {
        const ClusterDiagnostics d = lemma_identity_gap(c, p4, l);
        CHECK(d.cluster_size == l);
        CHECK(d.gap == doctest::Approx((d.lhs - d.rhs).norm()));
        Vector combo = Vector::Zero(2);
        for (int i = 1; i < l; ++i) combo += masses[static_cast<std::size_t>(i)] * (r.per_body[0] - r.per_body[static_cast<std::size_t>(i)]);
        CHECK((d.lhs - d.rhs - combo).norm() < 1e-12 * r.scale * 10);
        CHECK(d.gap > 1e-3);
    }
}

TEST_CASE("lemma consistency bound near equilibria") {
    // Perturb an equilibrium slightly: gap(l) <= 10 * n (1 + sum m) * max |F_i|.
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nz(0.0, 1.0);
    const int n = 5;
    const Problem p = planar(n, -1.5);
    const auto base = oracle::ngon_points(n, oracle::ngon_radius_closed_form(n, 1, 1, -1.5));
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        auto pts = base;
        for (auto& q : pts)
            for (int u = 0; u < 2; ++u) q(u) += eps * nz(gen);
        const Configuration c(pts);
        const double res = residual(c, p).max_norm;
        const double bound = 10.0 * n * (1.0 + p.total_mass()) * res;
        for (int l = 2; l <= n; ++l) CHECK(lemma_identity_gap(c, p, l).gap <= bound);
    }
}

TEST_CASE("weighted centroid residual") {
    CHECK(weighted_centroid_residual(triangle_oracle(), planar(3, -1.5)).norm() < 1e-12);

    std::mt19937_64 gen(31);
    const std::vector<double> masses{1.0, 2.0, 0.5};
    const Problem p(4, masses, {1.0, 2.0}, Exponent(-1.5));
    const Configuration c(oracle::random_points(gen, 3, 4));
    Vector e(4);
    e << 0.1, -0.2, 0.3, 0.4;
    const Vector delta = weighted_centroid_residual(c.translated(e), p) - weighted_centroid_residual(c, p);
    const Vector expected = frequency_matrix(p.frequencies(), 4).squared_diag().cwiseProduct(e) * p.total_mass();
    CHECK((delta - expected).norm() < 1e-13);

    const Problem odd(3, masses, {1.5}, Exponent(-1.5));
    const Configuration c3(oracle::random_points(gen, 3, 3));
    CHECK(weighted_centroid_residual(c3, odd)(2) == 0.0);
}

TEST_CASE("rotation equivariance of the residual") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    for (int k : {2, 3, 4, 5, 6}) {
        const Problem p(k, random_positive(gen, 5, 0.5, 2.0), random_positive(gen, static_cast<std::size_t>(k / 2), 0.5, 2.0),
                        Exponent(-1.5));
        const Configuration c(oracle::random_points(gen, 5, k));
        std::vector<double> angles(static_cast<std::size_t>(k / 2));
        for (double& x : angles) x = ang(gen);
        const Matrix s = block_rotation(angles, k);
        const ResidualReport r0 = residual(c, p);
        const ResidualReport r1 = residual(c.transformed(s), p);
        for (int i = 0; i < 5; ++i) {
            const Vector expected = s * r0.per_body[static_cast<std::size_t>(i)];
            CHECK((r1.per_body[static_cast<std::size_t>(i)] - expected).cwiseAbs().maxCoeff() <=
                  1e-12 * r0.scale);
        }
    }
}

TEST_CASE("scaling covariance on oracle equilibria") {
    for (int n : {2, 3, 5, 8}) {
        for (double a : {-0.75, -1.0, -1.5, -2.0}) {
            const Problem p = planar(n, a);
            const Configuration q = n == 2 ? Configuration(oracle::two_body_points(1, 1, oracle::two_body_separation(2, 1, a)))
                                           : Configuration(oracle::ngon_points(n, oracle::ngon_radius_closed_form(n, 1, 1, a)));
            for (double lambda : {0.5, 2.0, 10.0}) {
                const ResidualReport r = residual(q.scaled(lambda), p.with_frequencies_scaled(std::pow(lambda, a)));
                CHECK(r.max_norm < 1e-11 * r.scale);
            }
        }
    }
}
