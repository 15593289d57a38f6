#include "delayrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace delayrecon::metrics {

using partition::EmpiricalMeasure;

namespace {

void check_spec(const KernelSpec& spec) {
    if (spec.kind == KernelKind::Gaussian && !(spec.sigma > 0.0 && std::isfinite(spec.sigma))) {
        throw std::invalid_argument("Gaussian kernel bandwidth must be finite and positive");
    }
}

void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() == 0 || nu.size() == 0) throw std::invalid_argument("MMD of an empty measure is undefined");
    if (mu.dimension() != nu.dimension()) {
        throw std::invalid_argument("MMD operands live in different dimensions (" + std::to_string(mu.dimension()) +
                                    " vs " + std::to_string(nu.dimension()) + ")");
    }
}

double squared_distance(const double* a, const double* b, Index dim) noexcept {
    double s = 0.0;
    for (Index k = 0; k < dim; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

double kernel_from_sq(const KernelSpec& spec, double sq) noexcept {
    if (spec.kind == KernelKind::Energy) return -std::sqrt(sq);
    return std::exp(-sq / (2.0 * spec.sigma * spec.sigma));
}

// Sum over all (i, j) of k(a_i, a_j), using symmetry; fixed order.
double self_kernel_sum(const KernelSpec& spec, const Matrix& a) {
    const Index n = a.rows();
    const Index dim = a.cols();
    double diag = 0.0;
    double off = 0.0;
    for (Index i = 0; i < n; ++i) {
        diag += kernel_from_sq(spec, 0.0);
        for (Index j = i + 1; j < n; ++j) off += kernel_from_sq(spec, squared_distance(a.row(i).data(), a.row(j).data(), dim));
    }
    return diag + 2.0 * off;
}

double cross_kernel_sum(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
    const Index dim = a.cols();
    double s = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.rows(); ++j) s += kernel_from_sq(spec, squared_distance(a.row(i).data(), b.row(j).data(), dim));
    }
    return s;
}

// Total order on sample matrices used to make mmd_squared exactly symmetric.
bool canonical_less(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) return a.rows() < b.rows();
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// d/du k(u, v) evaluated at u - v = diff, accumulated into out with the given weight.
void accumulate_kernel_grad(const KernelSpec& spec, const double* u, const double* v, Index dim, double weight,
                            double* out) {
    const double sq = squared_distance(u, v, dim);
    double coeff = 0.0;
    if (spec.kind == KernelKind::Energy) {
        if (sq == 0.0) return;
        coeff = -1.0 / std::sqrt(sq);
    } else {
        const double s2 = spec.sigma * spec.sigma;
        coeff = -std::exp(-sq / (2.0 * s2)) / s2;
    }
    coeff *= weight;
    for (Index k = 0; k < dim; ++k) out[k] += coeff * (u[k] - v[k]);
}

}  // namespace

KernelSpec KernelSpec::gaussian(double sigma) {
    KernelSpec spec{KernelKind::Gaussian, sigma};
    check_spec(spec);
    return spec;
}

std::string_view to_string(KernelKind kind) { return kind == KernelKind::Energy ? "energy" : "gaussian"; }

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "energy") return KernelKind::Energy;
    if (name == "gaussian") return KernelKind::Gaussian;
    throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& y) {
    check_spec(spec);
    if (x.size() != y.size()) {
        throw std::invalid_argument("kernel arguments differ in dimension (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
    }
    return kernel_from_sq(spec, (x - y).squaredNorm());
}

double mmd_squared(const KernelSpec& spec, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    check_spec(spec);
    check_pair(mu, nu);
    const bool swap = canonical_less(nu.samples, mu.samples);
    const Matrix& x = swap ? nu.samples : mu.samples;
    const Matrix& y = swap ? mu.samples : nu.samples;
    const auto a = static_cast<double>(x.rows());
    const auto b = static_cast<double>(y.rows());

    const double sxx = self_kernel_sum(spec, x) / (a * a);
    const double syy = self_kernel_sum(spec, y) / (b * b);
    const double sxy = cross_kernel_sum(spec, x, y) * (2.0 / (a * b));
    const double value = (sxx + syy) - sxy;
    if (value < 0.0 && value >= -1e-10) return 0.0;
    return value;
}

Matrix mmd_grad_second(const KernelSpec& spec, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    check_spec(spec);
    check_pair(mu, nu);
    const Matrix& x = mu.samples;
    const Matrix& y = nu.samples;
    const Index dim = y.cols();
    const auto a = static_cast<double>(x.rows());
    const auto b = static_cast<double>(y.rows());
    const double w_self = 2.0 / (b * b);
    const double w_cross = -2.0 / (a * b);

    Matrix grad = Matrix::Zero(y.rows(), dim);
    for (Index j = 0; j < y.rows(); ++j) {
        double* g = grad.row(j).data();
        for (Index l = 0; l < y.rows(); ++l) {
            if (l != j) accumulate_kernel_grad(spec, y.row(j).data(), y.row(l).data(), dim, w_self, g);
        }
        for (Index i = 0; i < x.rows(); ++i) accumulate_kernel_grad(spec, y.row(j).data(), x.row(i).data(), dim, w_cross, g);
    }
    return grad;
}

double mse(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw std::invalid_argument("mse shape mismatch: " + std::to_string(pred.rows()) + "x" +
                                    std::to_string(pred.cols()) + " vs " + std::to_string(target.rows()) + "x" +
                                    std::to_string(target.cols()));
    }
    if (pred.rows() == 0) throw std::invalid_argument("mse of an empty batch is undefined");
    return (pred - target).rowwise().squaredNorm().sum() / static_cast<double>(pred.rows());
}

}  // namespace delayrecon::metrics
