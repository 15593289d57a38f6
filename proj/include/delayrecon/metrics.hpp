#pragma once

#include "delayrecon/core.hpp"
#include "delayrecon/partition.hpp"

#include <string_view>

namespace delayrecon::metrics {

enum class KernelKind { Energy, Gaussian };

/// k(x,y) = -|x-y| (energy distance) or exp(-|x-y|^2 / 2 sigma^2).
struct KernelSpec {
    KernelKind kind = KernelKind::Energy;
    double sigma = 1.0;

    static KernelSpec energy() { return {KernelKind::Energy, 1.0}; }
    static KernelSpec gaussian(double sigma);
};

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y);

/// Biased (V-statistic) squared MMD between two uniform empirical measures.
///
/// Symmetric bit-for-bit in its arguments: the operands are put in a canonical order before
/// any summation. Values in [-1e-10, 0) are clamped to zero.
double mmd_squared(const KernelSpec& spec, const partition::EmpiricalMeasure& mu,
                   const partition::EmpiricalMeasure& nu);

/// Gradient of mmd_squared(spec, mu, nu) with respect to every sample of nu (same shape as
/// nu.samples). The energy kernel contributes a zero subgradient for coincident points.
Matrix mmd_grad_second(const KernelSpec& spec, const partition::EmpiricalMeasure& mu,
                       const partition::EmpiricalMeasure& nu);

/// Mean over rows of the squared Euclidean row error, (1/N) sum_i |pred_i - target_i|^2.
double mse(const Matrix& pred, const Matrix& target);

}  // namespace delayrecon::metrics
