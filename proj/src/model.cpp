#include "releq/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace releq {

namespace {

void require_plane_count(std::size_t plane_count, int dimension) {
    if (dimension < 2) {
        throw DomainError("dimension must be at least 2, got " + std::to_string(dimension));
    }
    if (plane_count != static_cast<std::size_t>(dimension / 2)) {
        std::ostringstream msg;
        msg << "expected floor(k/2) = " << dimension / 2 << " frequencies for k = " << dimension
            << ", got " << plane_count;
        throw DomainError(msg.str());
    }
}

}  // namespace

Exponent::Exponent(double a) : a_(a) {
    if (!std::isfinite(a) || !(a < -0.5)) {
        std::ostringstream msg;
        msg << "exponent a must satisfy a < -1/2, got " << a;
        throw DomainError(msg.str());
    }
}

Problem::Problem(int dimension, std::vector<double> masses, std::vector<double> frequencies,
                 Exponent exponent)
    : k_(dimension),
      masses_(std::move(masses)),
      frequencies_(std::move(frequencies)),
      exponent_(exponent) {
    require_plane_count(frequencies_.size(), k_);
    if (masses_.size() < 2) {
        throw DomainError("at least two bodies are required");
    }
    for (std::size_t i = 0; i < masses_.size(); ++i) {
        if (!std::isfinite(masses_[i]) || !(masses_[i] > 0.0)) {
            throw DomainError("masses[" + std::to_string(i) + "] must be positive");
        }
    }
    for (std::size_t l = 0; l < frequencies_.size(); ++l) {
        if (!std::isfinite(frequencies_[l]) || !(frequencies_[l] > 0.0)) {
            throw DomainError("frequencies[" + std::to_string(l) + "] must be positive");
        }
    }
}

double Problem::total_mass() const noexcept {
    return std::accumulate(masses_.begin(), masses_.end(), 0.0);
}

double Problem::max_frequency() const noexcept {
    return *std::max_element(frequencies_.begin(), frequencies_.end());
}

Problem Problem::with_exponent(double a) const {
    return Problem(k_, masses_, frequencies_, Exponent(a));
}

Problem Problem::with_frequencies_scaled(double factor) const {
    std::vector<double> scaled = frequencies_;
    for (double& f : scaled) f *= factor;
    return Problem(k_, masses_, std::move(scaled), exponent_);
}

double min_pairwise_distance(std::span<const Vector> points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            best = std::min(best, (points[i] - points[j]).norm());
        }
    }
    return best;
}

double max_pairwise_distance(std::span<const Vector> points) {
    double best = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            best = std::max(best, (points[i] - points[j]).norm());
        }
    }
    return best;
}

double max_point_norm(std::span<const Vector> points) {
    double best = 0.0;
    for (const auto& p : points) best = std::max(best, p.norm());
    return best;
}

double collision_threshold(std::span<const Vector> points) {
    return 1e-12 * (1.0 + max_point_norm(points));
}

void require_collision_free(std::span<const Vector> points) {
    if (points.empty()) throw DomainError("configuration has no points");
    const auto k = points.front().size();
    if (k < 2) throw DomainError("points must have dimension at least 2");
    for (const auto& p : points) {
        if (p.size() != k) throw DomainError("points have inconsistent dimensions");
        if (!p.allFinite()) throw DomainError("point coordinates must be finite");
    }
    const double d = min_pairwise_distance(points);
    if (!(d > collision_threshold(points))) {
        std::ostringstream msg;
        msg << "collision: minimum pairwise distance " << d << " is below threshold "
            << collision_threshold(points);
        throw SingularityError(msg.str());
    }
}

Configuration::Configuration(std::vector<Vector> points) : points_(std::move(points)) {
    require_collision_free(points_);
}

Configuration Configuration::from_stacked(const Vector& stacked, int dimension) {
    if (dimension < 2 || stacked.size() % dimension != 0) {
        throw DomainError("stacked vector length is not a multiple of the dimension");
    }
    const auto n = stacked.size() / dimension;
    std::vector<Vector> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pts.emplace_back(stacked.segment(i * dimension, dimension));
    return Configuration(std::move(pts));
}

Vector Configuration::stacked() const {
    const int k = dimension();
    Vector out(static_cast<Eigen::Index>(points_.size()) * k);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        out.segment(static_cast<Eigen::Index>(i) * k, k) = points_[i];
    }
    return out;
}

Configuration Configuration::scaled(double factor) const {
    std::vector<Vector> pts = points_;
    for (auto& p : pts) p *= factor;
    return Configuration(std::move(pts));
}

Configuration Configuration::transformed(const Matrix& linear) const {
    std::vector<Vector> pts;
    pts.reserve(points_.size());
    for (const auto& p : points_) pts.emplace_back(linear * p);
    return Configuration(std::move(pts));
}

Configuration Configuration::translated(const Vector& offset) const {
    std::vector<Vector> pts = points_;
    for (auto& p : pts) p += offset;
    return Configuration(std::move(pts));
}

void require_compatible(const Configuration& config, const Problem& problem) {
    if (config.size() != problem.body_count() || config.dimension() != problem.dimension()) {
        std::ostringstream msg;
        msg << "configuration has " << config.size() << " points in R^" << config.dimension()
            << " but the problem has " << problem.body_count() << " bodies in R^"
            << problem.dimension();
        throw DomainError(msg.str());
    }
}

Matrix block_rotation(std::span<const double> angles, int dimension) {
    require_plane_count(angles.size(), dimension);
    Matrix out = Matrix::Identity(dimension, dimension);
    for (std::size_t l = 0; l < angles.size(); ++l) {
        const auto b = static_cast<Eigen::Index>(2 * l);
        const double c = std::cos(angles[l]);
        const double s = std::sin(angles[l]);
        out(b, b) = c;
        out(b, b + 1) = -s;
        out(b + 1, b) = s;
        out(b + 1, b + 1) = c;
    }
    return out;
}

Matrix rotation_matrix(std::span<const double> frequencies, double t, int dimension) {
    std::vector<double> angles(frequencies.begin(), frequencies.end());
    for (double& x : angles) x *= t;
    return block_rotation(angles, dimension);
}

Matrix rotation_generator(std::span<const double> frequencies, int dimension) {
    require_plane_count(frequencies.size(), dimension);
    Matrix out = Matrix::Zero(dimension, dimension);
    for (std::size_t l = 0; l < frequencies.size(); ++l) {
        const auto b = static_cast<Eigen::Index>(2 * l);
        out(b, b + 1) = -frequencies[l];
        out(b + 1, b) = frequencies[l];
    }
    return out;
}

FrequencyMatrix frequency_matrix(std::span<const double> frequencies, int dimension) {
    require_plane_count(frequencies.size(), dimension);
    FrequencyMatrix out{Vector::Zero(dimension)};
    for (std::size_t l = 0; l < frequencies.size(); ++l) {
        out.diag(static_cast<Eigen::Index>(2 * l)) = frequencies[l];
        out.diag(static_cast<Eigen::Index>(2 * l + 1)) = frequencies[l];
    }
    return out;
}

Matrix pairwise_distances(const Configuration& config) {
    const int n = config.size();
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = (config[i] - config[j]).norm();
        }
    }
    return d;
}

}  // namespace releq
