#include "delayrecon/dynamics.hpp"
#include "delayrecon/random.hpp"

#include <cmath>
#include <string>

namespace delayrecon::dynamics {

namespace {

constexpr double kDivergenceBound = 1e8;

void require_dimension(const OdeSystem& system, const Vector& x) {
    if (x.size() != system.dimension()) {
        throw std::invalid_argument("state has dimension " + std::to_string(x.size()) + ", system " +
                                    std::string(to_string(system.kind)) + " expects " +
                                    std::to_string(system.dimension()));
    }
}

}  // namespace

std::string_view to_string(SystemKind kind) {
    switch (kind) {
        case SystemKind::Lorenz63: return "lorenz63";
        case SystemKind::Rossler: return "rossler";
        case SystemKind::LotkaVolterra4: return "lotka_volterra";
    }
    return "unknown";
}

SystemKind parse_system_kind(std::string_view name) {
    if (name == "lorenz63" || name == "lorenz") return SystemKind::Lorenz63;
    if (name == "rossler") return SystemKind::Rossler;
    if (name == "lotka_volterra" || name == "lv") return SystemKind::LotkaVolterra4;
    throw std::invalid_argument("unknown system '" + std::string(name) + "'");
}

OdeSystem OdeSystem::lorenz63(double a1, double a2, double a3) {
    OdeSystem s;
    s.kind = SystemKind::Lorenz63;
    s.params = Vector{{a1, a2, a3}};
    return s;
}

OdeSystem OdeSystem::rossler(double b1, double b2, double b3) {
    OdeSystem s;
    s.kind = SystemKind::Rossler;
    s.params = Vector{{b1, b2, b3}};
    return s;
}

OdeSystem OdeSystem::lotka_volterra(Vector growth, Matrix interaction) {
    if (growth.size() != 4 || interaction.rows() != 4 || interaction.cols() != 4) {
        throw std::invalid_argument("Lotka-Volterra system needs r in R^4 and a 4x4 interaction matrix");
    }
    OdeSystem s;
    s.kind = SystemKind::LotkaVolterra4;
    s.params = std::move(growth);
    s.interaction = std::move(interaction);
    return s;
}

OdeSystem OdeSystem::preset(SystemKind kind) {
    switch (kind) {
        case SystemKind::Lorenz63: return lorenz63();
        case SystemKind::Rossler: return rossler();
        case SystemKind::LotkaVolterra4: {
            Matrix alpha(4, 4);
            alpha << 1.0, 1.09, 1.52, 0.0,
                     0.0, 1.0, 0.44, 1.36,
                     2.33, 0.0, 1.0, 0.47,
                     1.21, 0.51, 0.35, 1.0;
            return lotka_volterra(Vector{{1.0, 0.72, 1.53, 1.27}}, alpha);
        }
    }
    throw std::invalid_argument("unknown system kind");
}

Index OdeSystem::dimension() const noexcept {
    return kind == SystemKind::LotkaVolterra4 ? 4 : 3;
}

Vector default_initial_state(SystemKind kind) {
    if (kind == SystemKind::LotkaVolterra4) return Vector::Constant(4, 0.3);
    return Vector::Ones(3);
}

double default_dt(SystemKind kind) { return kind == SystemKind::Rossler ? 0.05 : 0.01; }

Vector vector_field(const OdeSystem& system, const Vector& x) {
    require_dimension(system, x);
    const Vector& p = system.params;
    switch (system.kind) {
        case SystemKind::Lorenz63:
            return Vector{{p[0] * (x[1] - x[0]),
                           x[0] * (p[1] - x[2]) - x[1],
                           x[0] * x[1] - p[2] * x[2]}};
        case SystemKind::Rossler:
            return Vector{{-x[1] - x[2],
                           x[0] + p[0] * x[1],
                           p[1] + x[2] * (x[0] - p[2])}};
        case SystemKind::LotkaVolterra4: {
            const Vector crowding = system.interaction * x;
            return (p.array() * x.array() * (1.0 - crowding.array())).matrix();
        }
    }
    throw std::invalid_argument("unknown system kind");
}

Vector rk4_step(const VectorField& field, const Vector& x, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("rk4_step requires dt > 0");
    }
    const Vector k1 = field(x);
    const Vector k2 = field(x + 0.5 * dt * k1);
    const Vector k3 = field(x + 0.5 * dt * k2);
    const Vector k4 = field(x + dt * k3);
    Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!k1.allFinite() || !k2.allFinite() || !k3.allFinite() || !k4.allFinite() || !next.allFinite()) {
        throw NumericError("rk4_step produced a non-finite stage");
    }
    return next;
}

Vector rk4_step(const OdeSystem& system, const Vector& x, double dt) {
    require_dimension(system, x);
    return rk4_step([&system](const Vector& s) { return vector_field(system, s); }, x, dt);
}

Trajectory slice_rows(const Trajectory& traj, Index begin, Index count) {
    if (begin < 0 || count < 0 || begin + count > traj.size()) {
        throw std::out_of_range("slice_rows range exceeds trajectory");
    }
    Trajectory out;
    out.dt = traj.dt;
    out.step_offset = traj.step_offset + static_cast<std::size_t>(begin);
    out.times = traj.times.segment(begin, count);
    out.states = traj.states.middleRows(begin, count);
    return out;
}

Trajectory simulate(const OdeSystem& system, const Vector& x0, double dt, std::size_t n_transient,
                    std::size_t n_keep) {
    require_dimension(system, x0);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("simulate requires dt > 0");
    if (n_keep < 1) throw std::invalid_argument("simulate requires n_keep >= 1");
    if (!x0.allFinite()) throw std::invalid_argument("initial state is not finite");

    Trajectory traj;
    traj.dt = dt;
    traj.step_offset = n_transient;
    traj.times.resize(static_cast<Index>(n_keep));
    traj.states.resize(static_cast<Index>(n_keep), system.dimension());

    Vector x = x0;
    const std::size_t total = n_transient + n_keep;
    for (std::size_t step = 0; step < total; ++step) {
        if (step >= n_transient) {
            const auto row = static_cast<Index>(step - n_transient);
            traj.states.row(row) = x.transpose();
            traj.times[row] = static_cast<double>(step) * dt;
        }
        if (step + 1 == total) break;
        try {
            x = rk4_step(system, x, dt);
        } catch (const NumericError&) {
            throw NumericError("simulation produced non-finite state at step " + std::to_string(step + 1));
        }
        if (x.cwiseAbs().maxCoeff() > kDivergenceBound) {
            throw NumericError("simulation diverged at step " + std::to_string(step + 1) +
                               " (|x| > 1e8)");
        }
    }
    return traj;
}

Trajectory add_gaussian_noise(const Trajectory& traj, const Vector& variances, std::uint64_t seed) {
    if (variances.size() != traj.dimension()) {
        throw std::invalid_argument("noise variance vector has dimension " + std::to_string(variances.size()) +
                                    ", trajectory has " + std::to_string(traj.dimension()));
    }
    for (Index j = 0; j < variances.size(); ++j) {
        if (!(variances[j] >= 0.0) || !std::isfinite(variances[j])) {
            throw std::invalid_argument("noise variance must be finite and non-negative (column " +
                                        std::to_string(j) + ")");
        }
    }
    Trajectory out = traj;
    for (Index j = 0; j < traj.dimension(); ++j) {
        if (variances[j] == 0.0) continue;
        const double sd = std::sqrt(variances[j]);
        for (Index i = 0; i < traj.size(); ++i) {
            const auto global_row = traj.step_offset + static_cast<std::uint64_t>(i);
            out.states(i, j) += sd * counter_normal(seed, global_row, static_cast<std::uint64_t>(j));
        }
    }
    return out;
}

}  // namespace delayrecon::dynamics
