#pragma once

// Domain types for rigidly rotating configurations of the power-law n-body
// problem, plus the block rotation / frequency matrix constructions.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace releq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when inputs violate a documented domain (exponent range, sizes,
/// positivity of masses or frequencies, index ranges).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when two bodies come close enough that r^{2a} is no longer
/// meaningful. Carries the simulation time when one applies.
class SingularityError : public std::runtime_error {
public:
    explicit SingularityError(const std::string& what, double time = 0.0)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Force-law exponent a; the pairwise term is (q_j - q_i)|q_j - q_i|^{2a}.
/// Only a < -1/2 is admissible.
class Exponent {
public:
    explicit Exponent(double a);
    double value() const noexcept { return a_; }
    /// 2a + 2 == 0: the potential is logarithmic.
    bool is_logarithmic() const noexcept { return a_ == -1.0; }

private:
    double a_;
};

class Problem {
public:
    Problem(int dimension, std::vector<double> masses, std::vector<double> frequencies,
            Exponent exponent);

    int dimension() const noexcept { return k_; }
    int body_count() const noexcept { return static_cast<int>(masses_.size()); }
    int plane_count() const noexcept { return k_ / 2; }
    const std::vector<double>& masses() const noexcept { return masses_; }
    const std::vector<double>& frequencies() const noexcept { return frequencies_; }
    double exponent() const noexcept { return exponent_.value(); }
    const Exponent& exponent_type() const noexcept { return exponent_; }
    double total_mass() const noexcept;
    double max_frequency() const noexcept;

    Problem with_exponent(double a) const;
    /// All frequencies multiplied by `factor`.
    Problem with_frequencies_scaled(double factor) const;

private:
    int k_;
    std::vector<double> masses_;
    std::vector<double> frequencies_;
    Exponent exponent_;
};

/// Returns min_{i<j} |p_i - p_j|, or +inf for fewer than two points.
double min_pairwise_distance(std::span<const Vector> points);
double max_pairwise_distance(std::span<const Vector> points);
double max_point_norm(std::span<const Vector> points);

/// Collision threshold used by Configuration: 1e-12 * (1 + max point norm).
double collision_threshold(std::span<const Vector> points);

/// Throws SingularityError if the points violate collision_threshold, and
/// DomainError if they are empty or of mixed dimension.
void require_collision_free(std::span<const Vector> points);

/// n points Q_1..Q_n in R^k with pairwise distinct positions.
class Configuration {
public:
    explicit Configuration(std::vector<Vector> points);

    /// Unpacks a stacked vector (Q_1; ...; Q_n) of length n*k.
    static Configuration from_stacked(const Vector& stacked, int dimension);

    int size() const noexcept { return static_cast<int>(points_.size()); }
    int dimension() const noexcept { return static_cast<int>(points_.front().size()); }
    const std::vector<Vector>& points() const noexcept { return points_; }
    const Vector& operator[](int i) const { return points_[static_cast<std::size_t>(i)]; }

    Vector stacked() const;
    Configuration scaled(double factor) const;
    Configuration transformed(const Matrix& linear) const;
    Configuration translated(const Vector& offset) const;

    double min_distance() const { return min_pairwise_distance(points_); }
    double max_norm() const { return max_point_norm(points_); }

private:
    std::vector<Vector> points_;
};

/// Checks that `config` has the body count and dimension of `problem`.
void require_compatible(const Configuration& config, const Problem& problem);

/// Diagonal of the frequency matrix: (A_1, A_1, ..., A_p, A_p[, 0]).
struct FrequencyMatrix {
    Vector diag;

    Matrix dense() const { return diag.asDiagonal(); }
    Vector squared_diag() const { return diag.array().square().matrix(); }
};

Matrix rotation_matrix(std::span<const double> frequencies, double t, int dimension);
Matrix rotation_generator(std::span<const double> frequencies, int dimension);
FrequencyMatrix frequency_matrix(std::span<const double> frequencies, int dimension);

/// Block rotation with an independent angle per plane (trailing 1 for odd
/// k). rotation_matrix(A, t, k) == block_rotation(A*t, k).
Matrix block_rotation(std::span<const double> angles, int dimension);

/// Entry (i, j) = |Q_i - Q_j|.
Matrix pairwise_distances(const Configuration& config);

}  // namespace releq
