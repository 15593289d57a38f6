// delayrecon command-line tool.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime or numeric failure.

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
#include "delayrecon/random.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace delayrecon;
using harness::ExperimentConfig;
using harness::KeyValueConfig;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string deterministic;
    std::vector<std::string> sets;
};

// Subcommand flags that map onto configuration keys; empty strings are left unset.
using Overrides = std::map<std::string, std::string>;

KeyValueConfig build_kv(const Globals& g, const Overrides& overrides) {
    KeyValueConfig kv = g.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(g.config_path);
    for (const auto& item : g.sets) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + item + "'");
        kv.set(item.substr(0, eq), item.substr(eq + 1));
    }
    for (const auto& [key, value] : overrides) {
        if (!value.empty()) kv.set(key, value);
    }
    if (g.seed) kv.set("seed", std::to_string(*g.seed));
    if (!g.out.empty()) kv.set("out", g.out);
    if (!g.deterministic.empty()) kv.set("deterministic", g.deterministic);
    return kv;
}

// Standalone steps skip the experiment-level cross checks; run validates in full.
ExperimentConfig build_config(const Globals& g, const Overrides& overrides, bool check = false) {
    return harness::experiment_from_config(build_kv(g, overrides), check);
}

fs::path output_path(const ExperimentConfig& cfg, const std::string& explicit_path, const char* default_name) {
    if (!explicit_path.empty()) return explicit_path;
    const fs::path dir = cfg.out_dir.empty() ? fs::path(".") : cfg.out_dir;
    return dir / default_name;
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

bool is_dmat(const fs::path& path) { return path.extension() == ".dmat"; }

Matrix read_columns(const fs::path& path, const std::vector<std::string>& columns) {
    if (!fs::exists(path)) throw UsageError("input file '" + path.string() + "' does not exist");
    if (!is_dmat(path)) return io::load_csv_series(path, columns);
    Matrix all = io::load_matrix(path);
    if (columns.empty()) return all;
    Matrix out(all.rows(), static_cast<Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        std::size_t c = 0;
        try {
            c = std::stoul(columns[j]);
        } catch (const std::exception&) {
            throw UsageError("DMAT columns must be numeric indices, got '" + columns[j] + "'");
        }
        if (c >= static_cast<std::size_t>(all.cols())) throw UsageError("column " + columns[j] + " out of range");
        out.col(static_cast<Index>(j)) = all.col(static_cast<Index>(c));
    }
    return out;
}

Vector read_series(const fs::path& path, const std::string& column) {
    return read_columns(path, {column}).col(0);
}

std::vector<std::string> numbered_header(const char* prefix, Index n) {
    std::vector<std::string> h;
    for (Index i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i));
    return h;
}

void write_matrix(const fs::path& path, const Matrix& data, const std::vector<std::string>& header, const char* name) {
    ensure_parent(path);
    if (is_dmat(path)) {
        io::save_matrix(path, data, name);
    } else {
        io::save_csv(path, data, header);
    }
}

std::vector<std::size_t> read_labels(const fs::path& path, Index expected) {
    const Matrix m = read_columns(path, {});
    if (m.cols() != 1 || m.rows() != expected) {
        throw UsageError("labels file must be one column with " + std::to_string(expected) + " rows");
    }
    std::vector<std::size_t> labels(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) {
        if (m(i, 0) < 0 || m(i, 0) != std::floor(m(i, 0))) throw UsageError("labels must be nonnegative integers");
        labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(m(i, 0));
    }
    return labels;
}

dynamics::SystemKind system_of(const ExperimentConfig& cfg) {
    switch (cfg.source) {
        case harness::DataSource::Lorenz63: return dynamics::SystemKind::Lorenz63;
        case harness::DataSource::Rossler: return dynamics::SystemKind::Rossler;
        case harness::DataSource::LotkaVolterra4: return dynamics::SystemKind::LotkaVolterra4;
        case harness::DataSource::Csv: break;
    }
    throw ConfigError("simulate needs a synthetic system, not csv");
}

void print_report(const harness::Report& report) {
    std::cout << harness::format_report(report, harness::ReportFormat::Text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delay-coordinate state reconstruction: simulation, embedding, clustering, training and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file");
    app.add_option("--seed", g.seed, "Root random seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--deterministic", g.deterministic, "Single-threaded bit-reproducible execution")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--set", g.sets, "Override a configuration key (key=value), repeatable");

    Overrides ov;
    std::string output;
    std::string input;
    std::string column = "0";

    // simulate
    auto* sim = app.add_subcommand("simulate", "Integrate a synthetic system and write its trajectory");
    sim->add_option("--system", ov["system"], "lorenz63, rossler or lotka_volterra");
    sim->add_option("--steps", ov["sim.pool"], "Number of retained steps");
    sim->add_option("--dt", ov["sim.dt"], "Integration step");
    sim->add_option("--transient", ov["sim.transient"], "Discarded steps");
    sim->add_option("--noise", ov["noise.variance"], "Observation noise variance (scalar or per coordinate)");
    sim->add_option("-o,--output", output, "Output file (.csv or .dmat)");

    // embed
    auto* emb = app.add_subcommand("embed", "Delay-embed one column of a series");
    emb->add_option("-i,--input", input, "Series file (.csv or .dmat)")->required();
    emb->add_option("--column", column, "Column index or header name");
    emb->add_option("--tau-steps", ov["delay.tau_steps"], "Delay in samples");
    emb->add_option("-m,--dim", ov["delay.m"], "Embedding dimension");
    emb->add_option("--direction", ov["delay.direction"], "backward or forward");
    emb->add_option("-o,--output", output, "Output file");

    // select-params
    std::size_t max_lag = 100, max_dim = 10;
    double threshold = 0.95;
    auto* sel = app.add_subcommand("select-params", "Choose delay (mutual information) and dimension (Cao)");
    sel->add_option("-i,--input", input, "Series file")->required();
    sel->add_option("--column", column, "Column index or header name");
    sel->add_option("--max-lag", max_lag, "Largest lag for the mutual information curve");
    sel->add_option("--max-dim", max_dim, "Largest dimension for the Cao curves");
    sel->add_option("--threshold", threshold, "E1 plateau threshold");

    // cluster
    auto* clu = app.add_subcommand("cluster", "Balanced k-means on delay vectors");
    clu->add_option("-i,--input", input, "Delay vectors")->required();
    clu->add_option("-k,--cells", ov["cells"], "Number of cells");
    clu->add_option("--max-iters", ov["kmeans.max_iters"], "Iteration cap");
    clu->add_option("-o,--output", output, "Labels file");

    // train
    std::string inputs, targets, labels, loss = "pointwise";
    auto* trn = app.add_subcommand("train", "Train a reconstruction network on delay/state pairs");
    trn->add_option("--inputs", inputs, "Delay vectors")->required();
    trn->add_option("--targets", targets, "Full states")->required();
    trn->add_option("--loss", loss, "pointwise or measure")->check(CLI::IsMember({"pointwise", "measure"}));
    trn->add_option("--labels", labels, "Cell labels for measure training (default: cluster the inputs)");
    trn->add_option("-k,--cells", ov["cells"], "Cells when clustering");
    trn->add_option("--steps", ov["train.steps"], "Adam steps");
    trn->add_option("--lr", ov["train.lr"], "Learning rate");
    trn->add_option("--hidden", ov["network.hidden"], "Hidden widths, comma separated");
    trn->add_option("--kernel", ov["train.kernel"], "energy or gaussian");
    trn->add_option("--sigma", ov["train.sigma"], "Gaussian bandwidth");
    trn->add_option("--minibatch", ov["train.minibatch"], "Samples per measure per step (0 = all)");
    trn->add_option("--normalize", ov["normalize"], "none, affine_linf or zscore");
    trn->add_option("-o,--output", output, "Checkpoint (.dmat)");

    // evaluate
    std::string model_path;
    auto* evl = app.add_subcommand("evaluate", "Test MSE of a checkpoint on clean data");
    evl->add_option("--model", model_path, "Checkpoint written by train or run")->required();
    evl->add_option("--inputs", inputs, "Delay vectors")->required();
    evl->add_option("--targets", targets, "Full states")->required();
    evl->add_option("--predictions", output, "Optional file for the predicted states");

    // pod
    std::size_t n_modes = 0;
    std::string coeffs;
    auto* podc = app.add_subcommand("pod", "POD basis of a snapshot matrix (rows are time)");
    podc->add_option("-i,--input", input, "Snapshots")->required();
    podc->add_option("-n,--modes", n_modes, "Retained modes")->required();
    podc->add_option("-o,--output", output, "Basis file (.dmat)");
    podc->add_option("--coefficients", coeffs, "Optional file for the projected coefficients");

    // run
    std::string format = "text";
    auto* run = app.add_subcommand("run", "Full experiment: both training methods from one initialization");
    run->add_option("--preset", ov["preset"], "Preset name (" + [] {
        std::string s;
        for (const auto& n : harness::preset_names()) s += (s.empty() ? "" : ", ") + n;
        return s;
    }() + ")");
    run->add_option("--steps", ov["train.steps"], "Adam steps per method");

    // report
    auto* rep = app.add_subcommand("report", "Re-emit a report.csv as text or csv");
    rep->add_option("-i,--input", input, "report.csv")->required();
    rep->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*sim) {
            const KeyValueConfig kv = build_kv(g, ov);
            // Presets carry noise for the experiments; the raw trajectory is clean unless asked.
            const bool noisy = kv.has("noise.variance");
            const ExperimentConfig cfg = harness::experiment_from_config(kv, false);
            const auto kind = system_of(cfg);
            const auto system = dynamics::OdeSystem::preset(kind);
            auto traj = dynamics::simulate(system, cfg.x0, cfg.dt, cfg.n_transient, cfg.pool_steps);
            if (noisy) {
                traj = dynamics::add_gaussian_noise(traj, cfg.noise_variance, derive_seed(cfg.seed, "noise"));
            }
            const fs::path path = output_path(cfg, output, "trajectory.csv");
            write_matrix(path, traj.states, numbered_header("x", traj.dimension()), "states");
            std::cout << "wrote " << traj.size() << " x " << traj.dimension() << " states to " << path.string() << '\n';
        } else if (*emb) {
            const ExperimentConfig cfg = build_config(g, ov);
            embedding::DelayConfig delay = cfg.delay;
            const Vector series = read_series(input, column);
            const auto state = embedding::delay_embed(series, delay);
            const fs::path path = output_path(cfg, output, "delay.csv");
            write_matrix(path, state.rows, numbered_header("lag", state.rows.cols()), "delay");
            std::cout << "wrote " << state.size() << " delay vectors (first index " << state.index_offset << ") to "
                      << path.string() << '\n';
        } else if (*sel) {
            const ExperimentConfig cfg = build_config(g, ov);
            const Vector series = read_series(input, column);
            const Vector ami = embedding::average_mutual_information(series, max_lag);
            const auto tau = embedding::select_tau(ami);
            const auto cao = embedding::cao_curves(series, std::max<std::size_t>(tau.value, 1), max_dim);
            const auto m = embedding::select_dim(cao.e1, threshold);
            if (!cfg.out_dir.empty()) {
                fs::create_directories(cfg.out_dir);
                Matrix ami_tab(ami.size(), 2);
                for (Index i = 0; i < ami.size(); ++i) ami_tab.row(i) << static_cast<double>(i), ami(i);
                io::save_csv(cfg.out_dir / "ami.csv", ami_tab, {"lag", "ami"});
                Matrix cao_tab(cao.e1.size(), 3);
                for (Index i = 0; i < cao.e1.size(); ++i) cao_tab.row(i) << static_cast<double>(i + 1), cao.e1(i), cao.e2(i);
                io::save_csv(cfg.out_dir / "cao.csv", cao_tab, {"d", "e1", "e2"});
            }
            std::cout << "tau_steps = " << tau.value << (tau.fallback ? "  # no local minimum, argmin used" : "") << '\n';
            std::cout << "m = " << m.value << (m.fallback ? "  # no plateau, argmax used" : "") << '\n';
        } else if (*clu) {
            const ExperimentConfig cfg = build_config(g, ov);
            const Matrix points = read_columns(input, {});
            const auto km = partition::constrained_kmeans(points, cfg.cells, derive_seed(cfg.seed, "kmeans"), cfg.kmeans_iters);
            Matrix lab(points.rows(), 1);
            for (Index i = 0; i < points.rows(); ++i) lab(i, 0) = static_cast<double>(km.labels[static_cast<std::size_t>(i)]);
            const fs::path path = output_path(cfg, output, "labels.csv");
            write_matrix(path, lab, {"cell"}, "labels");
            std::cout << "iterations = " << km.iterations << "\nsse = " << io::format_double(km.sse_history.back()) << '\n';
        } else if (*trn) {
            const ExperimentConfig cfg = build_config(g, ov);
            const Matrix x = read_columns(inputs, {});
            const Matrix y = read_columns(targets, {});
            if (x.rows() != y.rows()) throw UsageError("inputs and targets have different row counts");
            const auto [xn, in_tf] = normalize::normalize(x, cfg.normalization);
            const auto [yn, out_tf] = normalize::normalize(y, cfg.normalization);
            std::vector<std::size_t> dims{static_cast<std::size_t>(x.cols())};
            dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
            dims.push_back(static_cast<std::size_t>(y.cols()));
            model::TrainConfig tc;
            tc.n_steps = cfg.steps;
            tc.lr = cfg.lr;
            tc.seed = derive_seed(cfg.seed, "train");
            tc.loss = model::parse_loss_kind(loss);
            tc.kernel = cfg.kernel;
            tc.minibatch_per_measure = cfg.minibatch;
            tc.deterministic = cfg.deterministic;
            model::TrainingData data;
            if (tc.loss == model::LossKind::Pointwise) {
                data = model::PointwiseData{xn, yn};
            } else {
                const auto lab = labels.empty()
                                     ? partition::constrained_kmeans(x, cfg.cells, derive_seed(cfg.seed, "kmeans"), cfg.kmeans_iters).labels
                                     : read_labels(labels, x.rows());
                data = partition::build_measure_pairs(yn, xn, lab);
            }
            auto result = model::train(model::init_mlp(dims, derive_seed(cfg.seed, "init")), data, tc);
            const harness::Reconstructor rec{std::move(result.params), in_tf, out_tf};
            const fs::path path = output_path(cfg, output, "model.dmat");
            ensure_parent(path);
            io::save_dmat(path, rec.to_sections());
            const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
            std::ofstream hist(dir / ("loss_" + loss + ".csv"));
            hist << "step,loss\n";
            for (std::size_t i = 0; i < result.loss_history.size(); ++i) hist << i << ',' << io::format_double(result.loss_history[i]) << '\n';
            if (!hist) throw std::runtime_error("failed writing loss history");
            std::cout << "wrote " << path.string();
            if (!result.loss_history.empty()) std::cout << " (final loss " << io::format_double(result.loss_history.back()) << ")";
            std::cout << '\n';
        } else if (*evl) {
            const ExperimentConfig cfg = build_config(g, ov);
            if (!fs::exists(model_path)) throw UsageError("model file '" + model_path + "' does not exist");
            const auto rec = harness::Reconstructor::from_sections(io::load_dmat(model_path));
            const Matrix x = read_columns(inputs, {});
            const Matrix y = read_columns(targets, {});
            if (x.rows() != y.rows()) throw UsageError("inputs and targets have different row counts");
            const Matrix pred = rec.predict(x);
            harness::Report report;
            report.seed = cfg.seed;
            const double err = metrics::mse(pred, y);
            const double var = harness::variance_trace(y);
            report.metrics = {{"n_test", static_cast<double>(y.rows())}, {"test_mse", err},
                              {"test_target_variance", var}, {"test_relative_mse", err / var}};
            if (!output.empty()) write_matrix(output, pred, numbered_header("x", pred.cols()), "predictions");
            if (!cfg.out_dir.empty()) harness::emit_report(report, harness::ReportFormat::Csv, cfg.out_dir);
            std::cout << harness::format_report(report, harness::ReportFormat::Csv);
        } else if (*podc) {
            const ExperimentConfig cfg = build_config(g, ov);
            const Matrix snaps = read_columns(input, {});
            const auto basis = pod::pod_basis(snaps, n_modes);
            const fs::path path = output_path(cfg, output, "pod_basis.dmat");
            ensure_parent(path);
            io::save_dmat(path, io::basis_sections(basis));
            if (!coeffs.empty()) {
                const Matrix a = pod::pod_project(basis, snaps);
                write_matrix(coeffs, a, numbered_header("a", a.cols()), "coefficients");
            }
            const double total = basis.eigenvalues.sum();
            const double kept = basis.eigenvalues.head(static_cast<Index>(n_modes)).sum();
            std::cout << "modes = " << n_modes << "\ncaptured_energy = " << io::format_double(total > 0 ? kept / total : 1.0)
                      << '\n';
        } else if (*run) {
            const ExperimentConfig cfg = build_config(g, ov, true);
            print_report(harness::run_experiment(cfg));
        } else if (*rep) {
            if (!fs::exists(input)) throw UsageError("report '" + input + "' does not exist");
            const auto report = harness::read_report_csv(input);
            const auto fmt = harness::parse_report_format(format);
            if (!g.out.empty()) harness::emit_report(report, fmt, g.out);
            std::cout << harness::format_report(report, fmt);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
