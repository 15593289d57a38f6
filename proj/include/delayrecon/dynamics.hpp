#pragma once

#include "delayrecon/core.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

namespace delayrecon::dynamics {

enum class SystemKind { Lorenz63, Rossler, LotkaVolterra4 };

std::string_view to_string(SystemKind kind);
SystemKind parse_system_kind(std::string_view name);

/// One of the three benchmark flows together with its parameters.
///
/// Lorenz-63 uses `params = (a1, a2, a3)`, Rossler `params = (b1, b2, b3)`,
/// and the competitive Lotka-Volterra model uses growth rates `params = r`
/// with the 4x4 `interaction` matrix.
struct OdeSystem {
    SystemKind kind = SystemKind::Lorenz63;
    Vector params;
    Matrix interaction;

    static OdeSystem lorenz63(double a1 = 10.0, double a2 = 28.0, double a3 = 8.0 / 3.0);
    static OdeSystem rossler(double b1 = 0.1, double b2 = 0.1, double b3 = 14.0);
    static OdeSystem lotka_volterra(Vector growth, Matrix interaction);
    /// The chaotic parameter set used throughout the experiments.
    static OdeSystem preset(SystemKind kind);

    Index dimension() const noexcept;
};

/// Default initial condition inside the basin of the chaotic set.
Vector default_initial_state(SystemKind kind);
/// Default integration step (0.01 for Lorenz and LV, 0.05 for Rossler).
double default_dt(SystemKind kind);

using VectorField = std::function<Vector(const Vector&)>;

Vector vector_field(const OdeSystem& system, const Vector& x);

/// Classical four-stage Runge-Kutta step for an arbitrary autonomous field.
Vector rk4_step(const VectorField& field, const Vector& x, double dt);
Vector rk4_step(const OdeSystem& system, const Vector& x, double dt);

struct Trajectory {
    double dt = 0.0;
    /// Global step index of row 0 (transient steps included).
    std::size_t step_offset = 0;
    Vector times;
    Matrix states;

    Index size() const noexcept { return states.rows(); }
    Index dimension() const noexcept { return states.cols(); }
};

/// Rows [begin, begin + count) with times and step offset carried over.
Trajectory slice_rows(const Trajectory& traj, Index begin, Index count);

/// Integrates n_transient + n_keep steps and returns the last n_keep states.
/// Row 0 is the state after n_transient steps (x0 itself when n_transient = 0).
Trajectory simulate(const OdeSystem& system, const Vector& x0, double dt, std::size_t n_transient,
                    std::size_t n_keep);

/// Adds independent N(0, variances[j]) noise to column j. Each entry depends only on
/// (seed, global step index, column), so noising commutes with row slicing.
Trajectory add_gaussian_noise(const Trajectory& traj, const Vector& variances, std::uint64_t seed);

}  // namespace delayrecon::dynamics
