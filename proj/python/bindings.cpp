#include "delayrecon/config.hpp"
#include "delayrecon/dynamics.hpp"
#include "delayrecon/embedding.hpp"
#include "delayrecon/experiment.hpp"
#include "delayrecon/io.hpp"
#include "delayrecon/metrics.hpp"
#include "delayrecon/model.hpp"
#include "delayrecon/normalize.hpp"
#include "delayrecon/partition.hpp"
#include "delayrecon/pod.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>

namespace py = pybind11;
using namespace delayrecon;

namespace {

metrics::KernelSpec kernel_from(const std::string& kind, double sigma) {
    return metrics::parse_kernel_kind(kind) == metrics::KernelKind::Energy ? metrics::KernelSpec::energy()
                                                                           : metrics::KernelSpec::gaussian(sigma);
}

harness::ExperimentConfig config_from(const std::map<std::string, std::string>& items) {
    harness::KeyValueConfig kv;
    for (const auto& [k, v] : items) kv.set(k, v);
    return harness::experiment_from_config(kv);
}

}  // namespace

PYBIND11_MODULE(_delayrecon, m) {
    m.doc() = "Delay-coordinate state reconstruction core";

    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def(
        "simulate",
        [](const std::string& system, std::size_t n_keep, std::optional<double> dt, std::size_t n_transient,
           std::optional<Vector> x0) {
            const auto kind = dynamics::parse_system_kind(system);
            const auto sys = dynamics::OdeSystem::preset(kind);
            const auto traj = dynamics::simulate(sys, x0.value_or(dynamics::default_initial_state(kind)),
                                                 dt.value_or(dynamics::default_dt(kind)), n_transient, n_keep);
            return py::make_tuple(traj.times, traj.states);
        },
        py::arg("system"), py::arg("n_keep"), py::arg("dt") = py::none(), py::arg("n_transient") = 10000,
        py::arg("x0") = py::none(), "Returns (times, states) after discarding the transient.");

    m.def(
        "add_gaussian_noise",
        [](const Matrix& states, const Vector& variances, std::uint64_t seed, std::size_t step_offset) {
            dynamics::Trajectory t;
            t.states = states;
            t.times = Vector::Zero(states.rows());
            t.step_offset = step_offset;
            return dynamics::add_gaussian_noise(t, variances, seed).states;
        },
        py::arg("states"), py::arg("variances"), py::arg("seed"), py::arg("step_offset") = 0);

    m.def(
        "delay_embed",
        [](const Vector& series, std::size_t tau_steps, std::size_t dim, const std::string& direction) {
            const auto s = embedding::delay_embed(series, {tau_steps, dim, embedding::parse_direction(direction)});
            return py::make_tuple(s.rows, s.index_offset);
        },
        py::arg("series"), py::arg("tau_steps"), py::arg("m"), py::arg("direction") = "backward",
        "Returns (delay vectors, index of the first row's reference time).");

    m.def("average_mutual_information", &embedding::average_mutual_information, py::arg("series"),
          py::arg("max_lag"), py::arg("n_bins") = 32);
    m.def("select_tau", [](const Vector& ami) { return embedding::select_tau(ami).value; });
    m.def(
        "cao_curves",
        [](const Vector& series, std::size_t tau_steps, std::size_t max_dim, std::size_t max_points) {
            const auto c = embedding::cao_curves(series, tau_steps, max_dim, {max_points});
            return py::make_tuple(c.e1, c.e2);
        },
        py::arg("series"), py::arg("tau_steps"), py::arg("max_dim"), py::arg("max_points") = 2000);
    m.def("select_dim", [](const Vector& e1, double threshold) { return embedding::select_dim(e1, threshold).value; },
          py::arg("e1"), py::arg("threshold") = 0.95);

    m.def(
        "constrained_kmeans",
        [](const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
            auto r = partition::constrained_kmeans(points, k, seed, max_iters);
            return py::make_tuple(r.labels, r.centers, r.sse_history);
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iters") = 100,
        "Returns (labels, centers, sse_history).");

    m.def(
        "mmd_squared",
        [](const Matrix& x, const Matrix& y, const std::string& kernel, double sigma) {
            return metrics::mmd_squared(kernel_from(kernel, sigma), {x}, {y});
        },
        py::arg("x"), py::arg("y"), py::arg("kernel") = "energy", py::arg("sigma") = 1.0);
    m.def(
        "mmd_grad_second",
        [](const Matrix& x, const Matrix& y, const std::string& kernel, double sigma) {
            return metrics::mmd_grad_second(kernel_from(kernel, sigma), {x}, {y});
        },
        py::arg("x"), py::arg("y"), py::arg("kernel") = "energy", py::arg("sigma") = 1.0);
    m.def("mse", &metrics::mse, py::arg("pred"), py::arg("target"));

    m.def(
        "pod_basis",
        [](const Matrix& snapshots, std::size_t n_pod) {
            auto b = pod::pod_basis(snapshots, n_pod);
            return py::make_tuple(b.mean, b.modes, b.eigenvalues);
        },
        py::arg("snapshots"), py::arg("n_pod"), "Returns (mean, modes, eigenvalues).");

    m.def(
        "normalize",
        [](const Matrix& data, const std::string& mode) {
            auto [out, tf] = normalize::normalize(data, normalize::parse_mode(mode));
            return py::make_tuple(out, tf.center, tf.scale);
        },
        py::arg("data"), py::arg("mode"), "Returns (normalized, center, scale).");

    m.def(
        "save_dmat",
        [](const std::filesystem::path& path, const std::vector<std::pair<std::string, Matrix>>& sections) {
            io::Sections s;
            for (const auto& [name, data] : sections) s.push_back({name, data});
            io::save_dmat(path, s);
        },
        py::arg("path"), py::arg("sections"));
    m.def(
        "load_dmat",
        [](const std::filesystem::path& path) {
            std::vector<std::pair<std::string, Matrix>> out;
            for (auto& s : io::load_dmat(path)) out.emplace_back(s.name, std::move(s.data));
            return out;
        },
        py::arg("path"));
    m.def("load_csv_series", &io::load_csv_series, py::arg("path"), py::arg("columns") = std::vector<std::string>{});

    m.def(
        "run_experiment",
        [](const std::map<std::string, std::string>& config) {
            const auto cfg = config_from(config);
            harness::Report report;
            {
                py::gil_scoped_release release;
                report = harness::run_experiment(cfg);
            }
            py::dict metrics;
            for (const auto& [k, v] : report.metrics) metrics[py::str(k)] = v;
            py::dict losses;
            for (const auto& [k, v] : report.loss_histories) losses[py::str(k)] = v;
            return py::make_tuple(metrics, losses);
        },
        py::arg("config"), "Runs a full experiment from key/value settings; returns (metrics, loss histories).");
    m.def("preset_names", &harness::preset_names);
}
