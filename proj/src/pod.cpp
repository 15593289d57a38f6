#include "delayrecon/pod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace delayrecon::pod {

SymmetricEigen jacobi_eigen(const Matrix& symmetric, std::size_t max_sweeps) {
    const Index n = symmetric.rows();
    if (symmetric.cols() != n) throw std::invalid_argument("jacobi_eigen needs a square matrix");
    Matrix a = 0.5 * (symmetric + symmetric.transpose());
    Matrix v = Matrix::Identity(n, n);
    const double scale = a.norm();

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Index p = 0; p < n; ++p) {
            for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (std::sqrt(2.0 * off) <= 1e-15 * scale || off == 0.0) break;

        for (Index p = 0; p < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });
    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index k = 0; k < n; ++k) {
        out.values[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

Vector temporal_mean(const Matrix& snapshots) {
    if (snapshots.rows() == 0 || snapshots.cols() == 0) throw std::invalid_argument("temporal_mean of an empty matrix");
    return snapshots.colwise().mean().transpose();
}

PodBasis pod_basis(const Matrix& snapshots, std::size_t n_pod) {
    const Index t_count = snapshots.rows();
    const Index d = snapshots.cols();
    if (n_pod < 1 || static_cast<Index>(n_pod) > std::min(t_count, d)) {
        throw std::invalid_argument("n_pod must lie in [1, min(T, D)] = [1, " + std::to_string(std::min(t_count, d)) + "]");
    }
    PodBasis basis;
    basis.mean = temporal_mean(snapshots);
    const Matrix centered = snapshots.rowwise() - basis.mean.transpose();

    // Decompose whichever of the temporal (T x T) and spatial (D x D) correlations is smaller;
    // both share the same nonzero spectrum.
    const bool spatial = d < t_count;
    Matrix corr = spatial ? Matrix(centered.transpose() * centered) : Matrix(centered * centered.transpose());
    corr /= static_cast<double>(t_count);
    const SymmetricEigen eig = jacobi_eigen(corr);

    const double lambda_max = std::max(eig.values[0], 0.0);
    const auto k_max = static_cast<Index>(n_pod);
    if (!(lambda_max > 0.0) || eig.values[k_max - 1] < 1e-12 * lambda_max) {
        throw NumericError("rank deficient for requested n_pod=" + std::to_string(n_pod));
    }
    basis.eigenvalues = eig.values.cwiseMax(0.0);

    if (spatial) {
        basis.modes = eig.vectors.leftCols(k_max);
    } else {
        basis.modes.resize(d, k_max);
        basis.modes.noalias() = centered.transpose() * eig.vectors.leftCols(k_max);
    }
    for (Index k = 0; k < k_max; ++k) {
        auto mode = basis.modes.col(k);
        mode /= mode.norm();
        Index pivot = 0;
        for (Index i = 1; i < d; ++i) {
            if (std::abs(mode[i]) > std::abs(mode[pivot])) pivot = i;
        }
        if (mode[pivot] < 0.0) mode = -mode;
    }
    return basis;
}

Matrix pod_project(const PodBasis& basis, const Matrix& snapshots) {
    if (snapshots.cols() != basis.mean.size()) {
        throw std::invalid_argument("pod_project: snapshots have " + std::to_string(snapshots.cols()) +
                                    " columns, basis expects " + std::to_string(basis.mean.size()));
    }
    Matrix coeffs(snapshots.rows(), basis.n_modes());
    coeffs.noalias() = (snapshots.rowwise() - basis.mean.transpose()) * basis.modes;
    return coeffs;
}

Matrix pod_reconstruct(const PodBasis& basis, const Matrix& coeffs) {
    if (coeffs.cols() != basis.n_modes()) {
        throw std::invalid_argument("pod_reconstruct: " + std::to_string(coeffs.cols()) + " coefficients per row, basis has " +
                                    std::to_string(basis.n_modes()) + " modes");
    }
    Matrix out(coeffs.rows(), basis.mean.size());
    out.noalias() = coeffs * basis.modes.transpose();
    out.rowwise() += basis.mean.transpose();
    return out;
}

}  // namespace delayrecon::pod
