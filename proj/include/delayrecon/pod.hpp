#pragma once

#include "delayrecon/core.hpp"

#include <cstddef>

namespace delayrecon::pod {

/// Proper orthogonal decomposition of a snapshot matrix.
struct PodBasis {
    /// Temporal mean snapshot, length D.
    Vector mean;
    /// D x n_pod, orthonormal columns, each signed so its largest-magnitude entry is positive.
    Matrix modes;
    /// Correlation spectrum, descending, clipped at zero; length min(T, D).
    Vector eigenvalues;

    Index n_modes() const noexcept { return modes.cols(); }
};

struct SymmetricEigen {
    Vector values;   ///< descending
    Matrix vectors;  ///< columns match values
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, std::size_t max_sweeps = 100);

Vector temporal_mean(const Matrix& snapshots);

/// Method of snapshots: eigendecomposition of the T x T matrix (1/T) X X^T of the
/// mean-removed snapshots X, with modes X^T u_k / |X^T u_k|.
PodBasis pod_basis(const Matrix& snapshots, std::size_t n_pod);

/// Coefficients alpha_k(t_i) = <z(t_i) - mean, m_k>, shape T x n_pod.
Matrix pod_project(const PodBasis& basis, const Matrix& snapshots);

/// z(t_i) = mean + sum_k alpha_k(t_i) m_k, shape T x D.
Matrix pod_reconstruct(const PodBasis& basis, const Matrix& coeffs);

}  // namespace delayrecon::pod
