#include "delayrecon/experiment.hpp"
#include "delayrecon/dynamics.hpp"
#include "delayrecon/embedding.hpp"
#include "delayrecon/metrics.hpp"
#include "delayrecon/partition.hpp"
#include "delayrecon/random.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace delayrecon::harness {

namespace fs = std::filesystem;

namespace {

dynamics::SystemKind system_kind(DataSource source) {
    switch (source) {
        case DataSource::Lorenz63: return dynamics::SystemKind::Lorenz63;
        case DataSource::Rossler: return dynamics::SystemKind::Rossler;
        case DataSource::LotkaVolterra4: return dynamics::SystemKind::LotkaVolterra4;
        case DataSource::Csv: break;
    }
    throw std::invalid_argument("tabular data has no ODE system");
}

// Draws `count` of [0, n) without replacement, returned in ascending (time) order.
std::vector<std::size_t> sample_rows(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (count == 0 || count >= n) return idx;
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t span = n - i;
        const std::size_t j = i + std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)), span - 1);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Index>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = src.row(static_cast<Index>(rows[i]));
    return out;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string params_digest(const model::MlpParams& params) {
    return hex64(io::digest(io::encode_dmat(io::checkpoint_sections(params))));
}

std::string format6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void append_transform(io::Sections& out, const std::string& prefix, const normalize::Transform& t) {
    out.push_back({prefix + "_center", Matrix(t.center.transpose())});
    out.push_back({prefix + "_scale", Matrix(t.scale.transpose())});
}

normalize::Transform read_transform(const io::Sections& sections, const std::string& prefix, Index columns) {
    const Matrix* center = io::try_find_section(sections, prefix + "_center");
    const Matrix* scale = io::try_find_section(sections, prefix + "_scale");
    if (!center || !scale) return normalize::Transform::identity(columns);
    if (center->size() != columns || scale->size() != columns) {
        throw FormatError("checkpoint " + prefix + " normalization does not match the network width");
    }
    normalize::Transform t;
    t.mode = normalize::Mode::ZScore;
    t.center = Eigen::Map<const Vector>(center->data(), center->size());
    t.scale = Eigen::Map<const Vector>(scale->data(), scale->size());
    return t;
}

// Writes into a staging directory and publishes into the target only on success.
class ArtifactStage {
public:
    explicit ArtifactStage(fs::path target) : target_(std::move(target)) {
        if (target_.empty()) return;
        created_target_ = !fs::exists(target_);
        fs::create_directories(target_);
        staging_ = target_ / ".staging";
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    ArtifactStage(const ArtifactStage&) = delete;
    ArtifactStage& operator=(const ArtifactStage&) = delete;

    ~ArtifactStage() {
        if (target_.empty() || committed_) return;
        std::error_code ec;
        fs::remove_all(staging_, ec);
        if (created_target_ && fs::is_empty(target_, ec)) fs::remove(target_, ec);
    }

    bool enabled() const noexcept { return !target_.empty(); }
    const fs::path& dir() const noexcept { return staging_; }

    void commit() {
        if (target_.empty()) return;
        for (const auto& entry : fs::directory_iterator(staging_)) {
            const fs::path dest = target_ / entry.path().filename();
            fs::remove_all(dest);
            fs::rename(entry.path(), dest);
        }
        fs::remove_all(staging_);
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path staging_;
    bool created_target_ = false;
    bool committed_ = false;
};

}  // namespace

double variance_trace(const Matrix& data) {
    if (data.rows() == 0) throw std::invalid_argument("variance_trace of an empty matrix");
    const Matrix centered = data.rowwise() - data.colwise().mean();
    return centered.squaredNorm() / static_cast<double>(data.rows());
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    validate(cfg);
    PreparedData out;
    const std::size_t window = cfg.delay.window();

    if (cfg.source != DataSource::Csv) {
        const auto system = dynamics::OdeSystem::preset(system_kind(cfg.source));
        const std::size_t total = cfg.pool_steps + window + cfg.n_test;
        const auto clean = dynamics::simulate(system, cfg.x0, cfg.dt, cfg.n_transient, total);
        const auto noisy = dynamics::add_gaussian_noise(clean, cfg.noise_variance, derive_seed(cfg.seed, "noise"));

        const auto pool = static_cast<Index>(cfg.pool_steps);
        const auto train_emb = embedding::delay_embed(noisy.states.topRows(pool).col(0), cfg.delay);
        const auto picked = sample_rows(static_cast<std::size_t>(train_emb.size()), cfg.n_train, derive_seed(cfg.seed, "sample"));
        out.train_inputs = gather_rows(train_emb.rows, picked);
        for (std::size_t j : picked) out.train_time_indices.push_back(j + train_emb.index_offset);
        out.train_targets = gather_rows(noisy.states, out.train_time_indices);

        const auto test_len = static_cast<Index>(window + cfg.n_test);
        const auto test_emb = embedding::delay_embed(clean.states.middleRows(pool, test_len).col(0), cfg.delay);
        for (Index j = 0; j < test_emb.size(); ++j) {
            out.test_time_indices.push_back(cfg.pool_steps + static_cast<std::size_t>(j) + test_emb.index_offset);
        }
        out.test_inputs = test_emb.rows;
        out.test_targets = gather_rows(clean.states, out.test_time_indices);
        return out;
    }

    const Matrix observed = io::load_csv_series(cfg.data_path, cfg.observable_columns);
    const Matrix fields = io::load_csv_series(cfg.data_path, cfg.full_columns);
    const auto n = static_cast<std::size_t>(observed.rows());
    const std::size_t train_rows = cfg.train_rows == 0 ? (n * 4) / 5 : cfg.train_rows;
    if (train_rows <= window || train_rows + window >= n) {
        throw ConfigError("data.train_rows=" + std::to_string(train_rows) + " leaves no room for delay windows in " +
                          std::to_string(n) + " rows");
    }
    const auto r = static_cast<Index>(train_rows);
    const auto train_emb = embedding::vector_delay_embed(observed.topRows(r), cfg.delay);
    const auto picked = sample_rows(static_cast<std::size_t>(train_emb.size()), cfg.n_train, derive_seed(cfg.seed, "sample"));
    out.train_inputs = gather_rows(train_emb.rows, picked);
    for (std::size_t j : picked) out.train_time_indices.push_back(j + train_emb.index_offset);

    const auto test_emb = embedding::vector_delay_embed(observed.bottomRows(static_cast<Index>(n) - r), cfg.delay);
    for (Index j = 0; j < test_emb.size(); ++j) {
        out.test_time_indices.push_back(train_rows + static_cast<std::size_t>(j) + test_emb.index_offset);
    }
    out.test_inputs = test_emb.rows;

    const Matrix train_fields = gather_rows(fields, out.train_time_indices);
    const Matrix test_fields = gather_rows(fields, out.test_time_indices);
    if (cfg.pod_modes > 0) {
        out.basis = pod::pod_basis(fields.topRows(r), cfg.pod_modes);
        out.train_targets = pod::pod_project(*out.basis, train_fields);
        out.test_targets = pod::pod_project(*out.basis, test_fields);
        out.test_fields = test_fields;
    } else {
        out.train_targets = train_fields;
        out.test_targets = test_fields;
    }
    return out;
}

Matrix Reconstructor::predict(const Matrix& delay_inputs) const {
    return output.invert(model::forward(params, input.apply(delay_inputs)));
}

io::Sections Reconstructor::to_sections() const {
    io::Sections out = io::checkpoint_sections(params);
    append_transform(out, "input", input);
    append_transform(out, "output", output);
    return out;
}

Reconstructor Reconstructor::from_sections(const io::Sections& sections) {
    Reconstructor rec;
    rec.params = io::params_from_sections(sections);
    rec.input = read_transform(sections, "input", static_cast<Index>(rec.params.input_dim()));
    rec.output = read_transform(sections, "output", static_cast<Index>(rec.params.output_dim()));
    return rec;
}

std::optional<double> Report::metric(std::string_view name) const {
    for (const auto& [key, value] : metrics) {
        if (key == name) return value;
    }
    return std::nullopt;
}

Report run_experiment(const ExperimentConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    validate(cfg);
    ArtifactStage stage(cfg.out_dir);

    Report report;
    report.seed = cfg.seed;
    report.config = echo(cfg);

    const PreparedData data = prepare_data(cfg);
    const auto [train_in, in_tf] = normalize::normalize(data.train_inputs, cfg.normalization);
    const auto [train_out, out_tf] = normalize::normalize(data.train_targets, cfg.normalization);

    // Cells are formed on the (noisy) delay coordinates themselves.
    const auto km = partition::constrained_kmeans(data.train_inputs, cfg.cells, derive_seed(cfg.seed, "kmeans"),
                                                  cfg.kmeans_iters);
    const auto pairs = partition::build_measure_pairs(train_out, train_in, km.labels);

    std::vector<std::size_t> dims{static_cast<std::size_t>(train_in.cols())};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(static_cast<std::size_t>(train_out.cols()));
    const model::MlpParams init = model::init_mlp(dims, derive_seed(cfg.seed, "init"));
    report.init_digest = params_digest(init);

    std::size_t steps = cfg.steps;
    if (cfg.epochs > 0) {
        std::size_t largest = 0;
        for (const auto& p : pairs) largest = std::max(largest, static_cast<std::size_t>(p.full.size()));
        const std::size_t per_epoch = cfg.minibatch == 0 ? 1 : (largest + cfg.minibatch - 1) / cfg.minibatch;
        steps = cfg.epochs * per_epoch;
    }

    const double target_variance = variance_trace(data.test_targets);
    report.metrics.emplace_back("n_train_pairs", static_cast<double>(data.train_inputs.rows()));
    report.metrics.emplace_back("n_cells", static_cast<double>(pairs.size()));
    report.metrics.emplace_back("n_test", static_cast<double>(data.test_inputs.rows()));
    report.metrics.emplace_back("train_steps", static_cast<double>(steps));
    report.metrics.emplace_back("test_target_variance", target_variance);

    if (stage.enabled()) io::save_dmat(stage.dir() / "init.dmat", io::checkpoint_sections(init));

    for (const model::LossKind method : cfg.methods) {
        const std::string name(model::to_string(method));
        if (params_digest(init) != report.init_digest) {
            throw std::logic_error("initial parameters changed between training runs");
        }
        model::TrainConfig tc;
        tc.n_steps = steps;
        tc.lr = cfg.lr;
        tc.seed = derive_seed(cfg.seed, "train");
        tc.loss = method;
        tc.kernel = cfg.kernel;
        tc.minibatch_per_measure = cfg.minibatch;
        tc.deterministic = cfg.deterministic;
        model::TrainingData training;
        if (method == model::LossKind::Pointwise) {
            training = model::PointwiseData{train_in, train_out};
        } else {
            training = pairs;
        }
        model::TrainResult result = model::train(init, training, tc);

        const Reconstructor rec{std::move(result.params), in_tf, out_tf};
        const Matrix pred = rec.predict(data.test_inputs);
        const double test_mse = metrics::mse(pred, data.test_targets);
        report.metrics.emplace_back("test_mse_" + name, test_mse);
        report.metrics.emplace_back("test_relative_mse_" + name, test_mse / target_variance);
        if (!result.loss_history.empty()) {
            report.metrics.emplace_back("final_train_loss_" + name, result.loss_history.back());
        }
        if (data.basis) {
            const Matrix fields = pod::pod_reconstruct(*data.basis, pred);
            report.metrics.emplace_back("test_field_mse_" + name, metrics::mse(fields, data.test_fields));
        }
        report.loss_histories.emplace_back(name, std::move(result.loss_history));
        if (stage.enabled()) io::save_dmat(stage.dir() / ("model_" + name + ".dmat"), rec.to_sections());
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (stage.enabled()) {
        if (data.basis) io::save_dmat(stage.dir() / "pod_basis.dmat", io::basis_sections(*data.basis));
        emit_report(report, ReportFormat::Csv, stage.dir());
        emit_report(report, ReportFormat::Text, stage.dir());
        stage.commit();
    }
    return report;
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "text") return ReportFormat::Text;
    throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

std::string format_report(const Report& report, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "metric,value\n";
        for (const auto& [key, value] : report.metrics) out << key << ',' << io::format_double(value) << '\n';
        return out.str();
    }
    std::size_t width = 6;
    for (const auto& [key, value] : report.metrics) width = std::max(width, key.size());
    out << "delay reconstruction experiment\n";
    out << "seed         " << report.seed << '\n';
    if (!report.init_digest.empty()) out << "init digest  " << report.init_digest << '\n';
    out << "wall clock   " << format6(report.wall_clock_seconds) << " s\n\n";
    out << std::string("metric") << std::string(width - 6 + 2, ' ') << "value\n";
    for (const auto& [key, value] : report.metrics) {
        out << key << std::string(width - key.size() + 2, ' ') << format6(value) << '\n';
    }
    if (!report.config.empty()) {
        out << "\nconfig\n";
        for (const auto& [key, value] : report.config) out << "  " << key << " = " << value << '\n';
    }
    return out.str();
}

fs::path emit_report(const Report& report, ReportFormat format, const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path path = dir / (format == ReportFormat::Csv ? "report.csv" : "report.txt");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write report to '" + path.string() + "'");
    out << format_report(report, format);
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");

    for (const auto& [method, history] : report.loss_histories) {
        std::ofstream loss(dir / ("loss_" + method + ".csv"), std::ios::trunc);
        if (!loss) throw std::runtime_error("cannot write loss history for " + method);
        loss << "step,loss\n";
        for (std::size_t i = 0; i < history.size(); ++i) loss << i << ',' << io::format_double(history[i]) << '\n';
    }
    return path;
}

Report read_report_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report '" + path.string() + "'");
    Report report;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != "metric,value") throw FormatError("'" + path.string() + "' is not a metric,value report");
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("report line " + std::to_string(lineno) + " has no value");
        double value = 0.0;
        const char* first = line.data() + comma + 1;
        const char* last = line.data() + line.size();
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) throw FormatError("report line " + std::to_string(lineno) + " is not numeric");
        report.metrics.emplace_back(line.substr(0, comma), value);
    }
    return report;
}

}  // namespace delayrecon::harness
