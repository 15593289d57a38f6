#pragma once

#include "delayrecon/core.hpp"

#include <cstddef>
#include <string_view>

namespace delayrecon::embedding {

enum class LagDirection { Forward, Backward };

std::string_view to_string(LagDirection d);
LagDirection parse_direction(std::string_view name);

struct DelayConfig {
    std::size_t tau_steps = 1;
    std::size_t m = 1;
    LagDirection direction = LagDirection::Backward;

    /// Number of source samples spanned by one delay vector minus one.
    std::size_t window() const noexcept { return (m - 1) * tau_steps; }
};

/// Converts a delay in seconds to sample steps, round(tau / dt).
std::size_t tau_to_steps(double tau_seconds, double dt);

/// Delay vectors aligned with source rows: row j corresponds to source index j + index_offset.
struct DelayState {
    Matrix rows;
    std::size_t index_offset = 0;

    Index size() const noexcept { return rows.rows(); }
};

/// Scalar delay map. Backward rows are (s[t], s[t-tau], ..., s[t-(m-1)tau]) starting at
/// t = (m-1)tau; forward rows are (s[t], s[t+tau], ...) starting at t = 0.
DelayState delay_embed(const Vector& series, const DelayConfig& cfg);

/// Vector delay map over an n x c multichannel series: each row is the concatenation of
/// whole c-blocks x(t), x(t -/+ tau), ..., ordered as for the scalar case.
DelayState vector_delay_embed(const Matrix& series, const DelayConfig& cfg);

/// Average mutual information (natural log) of (s_t, s_{t+lag}) for lag = 1..max_lag,
/// from an n_bins x n_bins equal-width histogram over the series range.
Vector average_mutual_information(const Vector& series, std::size_t max_lag, std::size_t n_bins = 32);

struct Selection {
    std::size_t value = 0;
    /// Set when the heuristic found no qualifying point and fell back.
    bool fallback = false;
};

/// First local minimum of an AMI curve indexed from lag 1; argmin with fallback flag otherwise.
Selection select_tau(const Vector& ami_curve);

struct CaoCurves {
    Vector e1;  ///< E1(d), d = 1..max_dim
    Vector e2;  ///< E2(d), d = 1..max_dim
};

struct CaoOptions {
    /// Points kept for the O(n^2) neighbor search (evenly strided); 0 keeps everything.
    std::size_t max_points = 2000;
};

/// Cao's E1/E2 statistics with max-norm nearest neighbors.
CaoCurves cao_curves(const Vector& series, std::size_t tau_steps, std::size_t max_dim,
                     const CaoOptions& options = {});

/// Smallest d whose E1 stays >= threshold for every d' >= d; last index with fallback otherwise.
Selection select_dim(const Vector& e1, double threshold = 0.95);

}  // namespace delayrecon::embedding
