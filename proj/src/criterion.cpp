#include "releq/criterion.hpp"

#include <algorithm>
#include <cmath>

namespace releq {

namespace {

// m_j (Q_i - Q_j) |Q_i - Q_j|^{2a}
Vector pair_term(const Vector& qi, const Vector& qj, double mj, double a) {
    const Vector d = qi - qj;
    return mj * std::pow(d.squaredNorm(), a) * d;
}

void require_cluster_size(int cluster_size, int n) {
    if (cluster_size < 2 || cluster_size > n) {
        throw DomainError("cluster size must lie in [2, " + std::to_string(n) + "], got " +
                          std::to_string(cluster_size));
    }
}

}  // namespace

ResidualReport residual(const Configuration& config, const Problem& problem) {
    require_compatible(config, problem);
    const int n = config.size();
    const double a = problem.exponent();
    const auto& m = problem.masses();
    const Vector a2 = frequency_matrix(problem.frequencies(), problem.dimension()).squared_diag();

    ResidualReport report;
    report.per_body.reserve(static_cast<std::size_t>(n));
    double scale = std::max(1.0, config.max_norm());
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        Vector fi = a2.cwiseProduct(config[i]);
        scale = std::max(scale, fi.norm());
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Vector term = pair_term(config[i], config[j], m[static_cast<std::size_t>(j)], a);
            scale = std::max(scale, term.norm());
            fi -= term;
        }
        report.max_norm = std::max(report.max_norm, fi.norm());
        sum_sq += fi.squaredNorm();
        report.per_body.push_back(std::move(fi));
    }
    report.rms = std::sqrt(sum_sq / n);
    report.scale = scale;
    return report;
}

Matrix jacobian(const Configuration& config, const Problem& problem) {
    require_compatible(config, problem);
    const int n = config.size();
    const int k = config.dimension();
    const double a = problem.exponent();
    const auto& m = problem.masses();
    const Vector a2 = frequency_matrix(problem.frequencies(), k).squared_diag();

    Matrix jac = Matrix::Zero(n * k, n * k);
    for (int i = 0; i < n; ++i) {
        Matrix diag_block = a2.asDiagonal();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Vector d = config[i] - config[j];
            const double r2 = d.squaredNorm();
            const double r2a = std::pow(r2, a);
            // d/dd of d r^{2a} is r^{2a} I + 2a r^{2a-2} d d^T; Q_j enters with a minus sign
            // twice (through d and through the subtraction in F_i).
            Matrix block = Matrix::Identity(k, k) * r2a + (2.0 * a * r2a / r2) * d * d.transpose();
            block *= m[static_cast<std::size_t>(j)];
            jac.block(i * k, j * k, k, k) = block;
            diag_block -= block;
        }
        jac.block(i * k, i * k, k, k) = diag_block;
    }
    return jac;
}

Vector cluster_sum(const Configuration& config, const Problem& problem, int body,
                   int cluster_size) {
    require_compatible(config, problem);
    const int n = config.size();
    if (body < 0 || body >= n) {
        throw DomainError("body index " + std::to_string(body) + " out of range [0, " +
                          std::to_string(n) + ")");
    }
    require_cluster_size(cluster_size, n);
    Vector out = Vector::Zero(config.dimension());
    for (int j = cluster_size; j < n; ++j) {
        if (j == body) continue;
        out += pair_term(config[body], config[j], problem.masses()[static_cast<std::size_t>(j)],
                         problem.exponent());
    }
    return out;
}

ClusterDiagnostics lemma_identity_gap(const Configuration& config, const Problem& problem,
                                      int cluster_size) {
    require_compatible(config, problem);
    require_cluster_size(cluster_size, config.size());
    const int k = config.dimension();
    const double a = problem.exponent();
    const auto& m = problem.masses();
    const Vector a2 = frequency_matrix(problem.frequencies(), k).squared_diag();

    Vector weighted_offsets = Vector::Zero(k);
    Vector anchor_forces = Vector::Zero(k);
    Vector outside = Vector::Zero(k);
    double cluster_mass = m[0];
    const Vector r_anchor = cluster_sum(config, problem, 0, cluster_size);
    for (int i = 1; i < cluster_size; ++i) {
        const double mi = m[static_cast<std::size_t>(i)];
        cluster_mass += mi;
        weighted_offsets += mi * (config[0] - config[i]);
        anchor_forces += pair_term(config[0], config[i], mi, a);
        outside += mi * (r_anchor - cluster_sum(config, problem, i, cluster_size));
    }

    ClusterDiagnostics out;
    out.cluster_size = cluster_size;
    out.lhs = a2.cwiseProduct(weighted_offsets);
    out.rhs = cluster_mass * anchor_forces + outside;
    out.gap = (out.lhs - out.rhs).norm();
    return out;
}

Vector weighted_centroid_residual(const Configuration& config, const Problem& problem) {
    require_compatible(config, problem);
    Vector moment = Vector::Zero(config.dimension());
    for (int i = 0; i < config.size(); ++i) {
        moment += problem.masses()[static_cast<std::size_t>(i)] * config[i];
    }
    return frequency_matrix(problem.frequencies(), problem.dimension())
        .squared_diag()
        .cwiseProduct(moment);
}

}  // namespace releq
