#pragma once

// Algebraic test for relative equilibria:
//
//   F_i = A^2 Q_i - sum_{j != i} m_j (Q_i - Q_j) |Q_i - Q_j|^{2a}
//
// F vanishes for every body iff Q_1..Q_n, rotated by T_k(At), solve the
// equations of motion. Also provides the analytic Jacobian of F and the
// cluster identity obtained by m-weighted summation of F_1 - F_i.

#include "releq/model.hpp"

namespace releq {

struct ResidualReport {
    std::vector<Vector> per_body;
    double max_norm = 0.0;
    double rms = 0.0;
    /// max(1, max |Q_i|, max |A^2 Q_i|, max individual pair-term norm).
    /// All "is zero" decisions are made relative to this.
    double scale = 1.0;
};

struct ClusterDiagnostics {
    int cluster_size = 0;
    Vector lhs;
    Vector rhs;
    double gap = 0.0;
};

ResidualReport residual(const Configuration& config, const Problem& problem);

/// d(F_1..F_n)/d(Q_1..Q_n), (n*k) x (n*k), blocks laid out body-major.
Matrix jacobian(const Configuration& config, const Problem& problem);

/// R_{i,l}: the part of body i's force sum coming from bodies with index
/// >= l (0-based), i.e. outside the cluster made of the first l bodies.
/// `body` is 0-based; `cluster_size` is in [2, n]. Returns zero when
/// cluster_size == n.
Vector cluster_sum(const Configuration& config, const Problem& problem, int body,
                   int cluster_size);

/// Both sides of the cluster identity for the cluster formed by the first
/// `cluster_size` bodies, anchored at body 0:
///   lhs = A^2 sum_{i=1}^{l-1} m_i (Q_0 - Q_i)
///   rhs = (sum_{i<l} m_i) sum_{j=1}^{l-1} m_j (Q_0 - Q_j)|Q_0 - Q_j|^{2a}
///         + sum_{i=1}^{l-1} m_i (R_{0,l} - R_{i,l})
/// lhs - rhs == sum_{i=1}^{l-1} m_i (F_0 - F_i), so the gap vanishes at any
/// equilibrium.
ClusterDiagnostics lemma_identity_gap(const Configuration& config, const Problem& problem,
                                      int cluster_size);

/// A^2 sum_i m_i Q_i. Zero at every equilibrium.
Vector weighted_centroid_residual(const Configuration& config, const Problem& problem);

}  // namespace releq
