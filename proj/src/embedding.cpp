#include "delayrecon/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace delayrecon::embedding {

namespace {

void check_config(const DelayConfig& cfg) {
    if (cfg.tau_steps < 1) throw std::invalid_argument("tau_steps must be >= 1");
    if (cfg.m < 1) throw std::invalid_argument("embedding dimension m must be >= 1");
}

void check_length(std::size_t n, const DelayConfig& cfg) {
    if (n <= cfg.window()) {
        throw std::invalid_argument("series of length " + std::to_string(n) + " is too short: need at least " +
                                    std::to_string(cfg.window() + 1) + " samples for m=" + std::to_string(cfg.m) +
                                    ", tau=" + std::to_string(cfg.tau_steps));
    }
}

}  // namespace

std::string_view to_string(LagDirection d) {
    return d == LagDirection::Forward ? "forward" : "backward";
}

LagDirection parse_direction(std::string_view name) {
    if (name == "forward") return LagDirection::Forward;
    if (name == "backward") return LagDirection::Backward;
    throw std::invalid_argument("unknown lag direction '" + std::string(name) + "'");
}

std::size_t tau_to_steps(double tau_seconds, double dt) {
    if (!(dt > 0.0) || !(tau_seconds > 0.0)) throw std::invalid_argument("tau and dt must be positive");
    const auto steps = static_cast<long long>(std::llround(tau_seconds / dt));
    if (steps < 1) throw std::invalid_argument("tau rounds to zero sample steps");
    return static_cast<std::size_t>(steps);
}

DelayState delay_embed(const Vector& series, const DelayConfig& cfg) {
    return vector_delay_embed(Matrix(series), cfg);
}

DelayState vector_delay_embed(const Matrix& series, const DelayConfig& cfg) {
    check_config(cfg);
    const auto n = static_cast<std::size_t>(series.rows());
    check_length(n, cfg);
    const Index channels = series.cols();
    const auto n_valid = static_cast<Index>(n - cfg.window());
    const auto m = static_cast<Index>(cfg.m);
    const auto tau = static_cast<Index>(cfg.tau_steps);
    const bool backward = cfg.direction == LagDirection::Backward;

    DelayState out;
    out.index_offset = backward ? cfg.window() : 0;
    out.rows.resize(n_valid, m * channels);
    for (Index j = 0; j < n_valid; ++j) {
        const Index t = j + static_cast<Index>(out.index_offset);
        for (Index k = 0; k < m; ++k) {
            const Index src = backward ? t - k * tau : t + k * tau;
            out.rows.block(j, k * channels, 1, channels) = series.row(src);
        }
    }
    return out;
}

Vector average_mutual_information(const Vector& series, std::size_t max_lag, std::size_t n_bins) {
    if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
    const auto n = static_cast<std::size_t>(series.size());
    if (n <= max_lag + 1) {
        throw std::invalid_argument("series length must exceed max_lag + 1");
    }
    if (!series.allFinite()) throw std::invalid_argument("series contains non-finite values");
    const double lo = series.minCoeff();
    const double hi = series.maxCoeff();
    if (!(hi > lo)) throw std::invalid_argument("degenerate series: zero range");

    const double width = (hi - lo) / static_cast<double>(n_bins);
    std::vector<std::size_t> bin(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto b = static_cast<std::size_t>((series[static_cast<Index>(t)] - lo) / width);
        bin[t] = std::min(b, n_bins - 1);
    }

    Vector ami(static_cast<Index>(max_lag));
    std::vector<double> joint(n_bins * n_bins);
    std::vector<double> px(n_bins);
    std::vector<double> py(n_bins);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        std::fill(joint.begin(), joint.end(), 0.0);
        const std::size_t pairs = n - lag;
        for (std::size_t t = 0; t < pairs; ++t) joint[bin[t] * n_bins + bin[t + lag]] += 1.0;
        std::fill(px.begin(), px.end(), 0.0);
        std::fill(py.begin(), py.end(), 0.0);
        const double inv = 1.0 / static_cast<double>(pairs);
        for (std::size_t i = 0; i < n_bins; ++i) {
            for (std::size_t j = 0; j < n_bins; ++j) {
                const double p = joint[i * n_bins + j] * inv;
                joint[i * n_bins + j] = p;
                px[i] += p;
                py[j] += p;
            }
        }
        double mi = 0.0;
        for (std::size_t i = 0; i < n_bins; ++i) {
            for (std::size_t j = 0; j < n_bins; ++j) {
                const double p = joint[i * n_bins + j];
                if (p > 0.0) mi += p * std::log(p / (px[i] * py[j]));
            }
        }
        ami[static_cast<Index>(lag - 1)] = mi;
    }
    return ami;
}

Selection select_tau(const Vector& ami_curve) {
    const Index n = ami_curve.size();
    if (n < 3) throw std::invalid_argument("select_tau needs a curve of length >= 3");
    for (Index k = 1; k + 1 < n; ++k) {
        if (ami_curve[k] < ami_curve[k - 1] && ami_curve[k] <= ami_curve[k + 1]) {
            return {static_cast<std::size_t>(k + 1), false};
        }
    }
    Index best = 0;
    for (Index k = 1; k < n; ++k) {
        if (ami_curve[k] < ami_curve[best]) best = k;
    }
    warn("AMI curve has no interior local minimum; using global argmin lag " + std::to_string(best + 1));
    return {static_cast<std::size_t>(best + 1), true};
}

CaoCurves cao_curves(const Vector& series, std::size_t tau_steps, std::size_t max_dim,
                     const CaoOptions& options) {
    if (tau_steps < 1) throw std::invalid_argument("tau_steps must be >= 1");
    if (max_dim < 1) throw std::invalid_argument("max_dim must be >= 1");
    const auto n = static_cast<std::size_t>(series.size());
    // E(d) is needed for d = 1..max_dim+1, which reads coordinates up to offset (max_dim+1)*tau.
    const std::size_t reach = (max_dim + 1) * tau_steps;
    if (n < reach + 3) {
        throw std::invalid_argument("series of length " + std::to_string(n) + " is too short for Cao's method: need " +
                                    std::to_string(reach + 3) + " samples");
    }
    const std::size_t available = n - reach;
    const std::size_t stride =
        options.max_points == 0 ? 1 : std::max<std::size_t>(1, (available + options.max_points - 1) / options.max_points);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < available; i += stride) idx.push_back(i);
    const std::size_t p = idx.size();

    const double range = series.maxCoeff() - series.minCoeff();
    const double dup_tol = 1e-10 * std::max(range, std::numeric_limits<double>::min());
    auto x = [&](std::size_t t) { return series[static_cast<Index>(t)]; };

    // Pairwise max-norm distances in dimension d, grown one coordinate at a time.
    std::vector<double> dist(p * p, 0.0);
    const std::size_t n_levels = max_dim + 1;
    std::vector<double> e(n_levels), e_star(n_levels);
    for (std::size_t d = 1; d <= n_levels; ++d) {
        const std::size_t offset = (d - 1) * tau_steps;
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a + 1; b < p; ++b) {
                const double v = std::max(dist[a * p + b], std::abs(x(idx[a] + offset) - x(idx[b] + offset)));
                dist[a * p + b] = v;
                dist[b * p + a] = v;
            }
        }
        double sum_a = 0.0, sum_star = 0.0;
        std::size_t used = 0;
        const std::size_t next = d * tau_steps;
        for (std::size_t a = 0; a < p; ++a) {
            std::size_t nn = p;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < p; ++b) {
                if (b == a) continue;
                const double v = dist[a * p + b];
                if (v > dup_tol && v < best) {
                    best = v;
                    nn = b;
                }
            }
            if (nn == p) continue;
            const double step = std::abs(x(idx[a] + next) - x(idx[nn] + next));
            sum_a += std::max(best, step) / best;
            sum_star += step;
            ++used;
        }
        if (used == 0) {
            throw NumericError("Cao statistics undefined: every point has only duplicate neighbors at d=" +
                               std::to_string(d));
        }
        e[d - 1] = sum_a / static_cast<double>(used);
        e_star[d - 1] = sum_star / static_cast<double>(used);
    }

    CaoCurves out;
    out.e1.resize(static_cast<Index>(max_dim));
    out.e2.resize(static_cast<Index>(max_dim));
    for (std::size_t d = 0; d < max_dim; ++d) {
        out.e1[static_cast<Index>(d)] = e[d + 1] / e[d];
        out.e2[static_cast<Index>(d)] = e_star[d] > 0.0 ? e_star[d + 1] / e_star[d] : 1.0;
    }
    return out;
}

Selection select_dim(const Vector& e1, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
    const Index n = e1.size();
    if (n == 0) throw std::invalid_argument("select_dim needs a non-empty E1 curve");
    // Scan from the top: the answer is the start of the trailing run of values >= threshold.
    Index start = n;
    while (start > 0 && e1[start - 1] >= threshold) --start;
    if (start < n) return {static_cast<std::size_t>(start + 1), false};
    Index best = 0;
    for (Index k = 1; k < n; ++k) {
        if (e1[k] > e1[best]) best = k;
    }
    warn("E1 never saturates above threshold; using argmax dimension " + std::to_string(best + 1));
    return {static_cast<std::size_t>(best + 1), true};
}

}  // namespace delayrecon::embedding
