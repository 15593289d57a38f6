#include "delayrecon/config.hpp"
#include "delayrecon/dynamics.hpp"
#include "delayrecon/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

namespace delayrecon::harness {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_integral(const std::string& key, const std::string& text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& key, const std::string& text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
    }
    return value;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

std::string join_vector(const Vector& v) {
    std::string out;
    for (Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + io::format_double(v[i]);
    return out;
}

Vector vector_from(const KeyValueConfig& kv, const std::string& key, const Vector& fallback) {
    if (!kv.has(key)) return fallback;
    const auto items = kv.get_list(key, {});
    Vector v(static_cast<Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) v[static_cast<Index>(i)] = parse_real(key, items[i]);
    return v;
}

ExperimentConfig synthetic(DataSource source, dynamics::SystemKind kind, double tau, std::size_t m, double noise) {
    ExperimentConfig cfg;
    cfg.source = source;
    cfg.dt = dynamics::default_dt(kind);
    cfg.x0 = dynamics::default_initial_state(kind);
    const auto dim = dynamics::OdeSystem::preset(kind).dimension();
    cfg.noise_variance = Vector::Constant(dim, noise);
    cfg.tau_seconds = tau;
    cfg.delay.tau_steps = embedding::tau_to_steps(tau, cfg.dt);
    cfg.delay.m = m;
    // On raw attractor coordinates the measure loss stalls far from the data.
    cfg.normalization = normalize::Mode::ZScore;
    return cfg;
}

ExperimentConfig clean_variant(ExperimentConfig cfg) {
    cfg.noise_variance.setZero();
    cfg.normalization = normalize::Mode::None;
    // 5000 samples per cell, so 100 epochs at minibatch 50 is 10^4 steps.
    cfg.pool_steps = 500000;
    cfg.n_train = 0;
    cfg.cells = 100;
    cfg.hidden = {100, 100};
    cfg.minibatch = 50;
    cfg.epochs = 100;
    cfg.methods = {model::LossKind::Measure};
    return cfg;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
    KeyValueConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const std::string value = trim(std::string_view(content).substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.values_.count(key)) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse(text, path.string());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::optional<std::string> KeyValueConfig::raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return raw(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = raw(key);
    return v ? parse_real(key, *v) : fallback;
}

std::size_t KeyValueConfig::get_count(const std::string& key, std::size_t fallback) const {
    const auto v = raw(key);
    return v ? parse_integral<std::size_t>(key, *v) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = raw(key);
    return v ? parse_integral<std::uint64_t>(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "on" || *v == "true" || *v == "1") return true;
    if (*v == "off" || *v == "false" || *v == "0") return false;
    throw ConfigError("config key '" + key + "': expected on/off, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<std::string> items;
    std::string_view rest(*v);
    while (true) {
        const auto comma = rest.find(',');
        std::string item = trim(rest.substr(0, comma));
        if (!item.empty()) items.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return items;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) {
        if (!used_.count(key)) out.push_back(key);
    }
    return out;
}

std::string_view to_string(DataSource source) {
    switch (source) {
        case DataSource::Lorenz63: return "lorenz63";
        case DataSource::Rossler: return "rossler";
        case DataSource::LotkaVolterra4: return "lotka_volterra";
        case DataSource::Csv: return "csv";
    }
    return "unknown";
}

std::vector<std::string> preset_names() {
    return {"lorenz63", "rossler", "lotka_volterra", "lorenz63_clean", "rossler_clean", "lotka_volterra_clean", "sst", "era5"};
}

ExperimentConfig experiment_preset(std::string_view name) {
    using dynamics::SystemKind;
    ExperimentConfig cfg;
    if (name == "lorenz63" || name == "lorenz63_clean") {
        cfg = synthetic(DataSource::Lorenz63, SystemKind::Lorenz63, 0.18, 4, 0.1);
    } else if (name == "rossler" || name == "rossler_clean") {
        cfg = synthetic(DataSource::Rossler, SystemKind::Rossler, 1.44, 4, 0.1);
    } else if (name == "lotka_volterra" || name == "lotka_volterra_clean") {
        cfg = synthetic(DataSource::LotkaVolterra4, SystemKind::LotkaVolterra4, 6.90, 5, 5e-5);
    } else if (name == "sst") {
        cfg.source = DataSource::Csv;
        cfg.dt = 1.0;
        cfg.delay = {12, 7, embedding::LagDirection::Backward};
        cfg.train_rows = 355;
        cfg.n_train = 0;
        cfg.cells = 5;
        cfg.normalization = normalize::Mode::AffineLinf;
        cfg.pod_modes = 200;
        cfg.kernel = metrics::KernelSpec::gaussian(3.0);
        cfg.steps = 20000;
    } else if (name == "era5") {
        cfg.source = DataSource::Csv;
        cfg.dt = 1.0;
        cfg.delay = {1, 4, embedding::LagDirection::Backward};
        cfg.n_train = 2000;
        cfg.cells = 20;
        cfg.hidden = {500, 500, 500};
        cfg.normalization = normalize::Mode::ZScore;
        cfg.kernel = metrics::KernelSpec::gaussian(25.0);
        cfg.steps = 20000;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    if (name.ends_with("_clean")) cfg = clean_variant(std::move(cfg));
    cfg.preset = std::string(name);
    return cfg;
}

ExperimentConfig experiment_from_config(const KeyValueConfig& kv, bool check) {
    ExperimentConfig cfg = experiment_preset(kv.get_string("preset", "lorenz63"));
    try {
        if (const auto sys = kv.raw("system")) {
            if (*sys == "csv") {
                cfg.source = DataSource::Csv;
            } else {
                const auto kind = dynamics::parse_system_kind(*sys);
                const DataSource mapped = kind == dynamics::SystemKind::Lorenz63 ? DataSource::Lorenz63
                                          : kind == dynamics::SystemKind::Rossler ? DataSource::Rossler
                                                                                 : DataSource::LotkaVolterra4;
                if (mapped != cfg.source) {
                    // Switching systems resets the system-specific defaults.
                    const auto dim = dynamics::OdeSystem::preset(kind).dimension();
                    cfg.source = mapped;
                    cfg.dt = dynamics::default_dt(kind);
                    cfg.x0 = dynamics::default_initial_state(kind);
                    if (cfg.noise_variance.size() != dim) cfg.noise_variance = Vector::Zero(dim);
                }
            }
        }
        cfg.data_path = kv.get_string("data.path", cfg.data_path.string());
        cfg.observable_columns = kv.get_list("data.observable", cfg.observable_columns);
        cfg.full_columns = kv.get_list("data.full", cfg.full_columns);
        cfg.train_rows = kv.get_count("data.train_rows", cfg.train_rows);

        cfg.dt = kv.get_double("sim.dt", cfg.dt);
        cfg.x0 = vector_from(kv, "sim.x0", cfg.x0);
        cfg.n_transient = kv.get_count("sim.transient", cfg.n_transient);
        cfg.pool_steps = kv.get_count("sim.pool", cfg.pool_steps);
        cfg.n_test = kv.get_count("sim.test", cfg.n_test);
        if (kv.has("noise.variance")) {
            Vector v = vector_from(kv, "noise.variance", {});
            if (v.size() == 1 && cfg.noise_variance.size() > 1) v = Vector::Constant(cfg.noise_variance.size(), v[0]);
            cfg.noise_variance = v;
        }

        cfg.n_train = kv.get_count("sample.n_train", cfg.n_train);
        cfg.cells = kv.get_count("cells", cfg.cells);
        cfg.kmeans_iters = kv.get_count("kmeans.max_iters", cfg.kmeans_iters);

        if (kv.has("delay.tau")) {
            cfg.tau_seconds = kv.get_double("delay.tau", 0.0);
        }
        if (kv.has("delay.tau_steps")) {
            cfg.delay.tau_steps = kv.get_count("delay.tau_steps", cfg.delay.tau_steps);
            if (!kv.has("delay.tau")) cfg.tau_seconds = 0.0;
        }
        if (cfg.tau_seconds > 0.0) cfg.delay.tau_steps = embedding::tau_to_steps(cfg.tau_seconds, cfg.dt);
        cfg.delay.m = kv.get_count("delay.m", cfg.delay.m);
        if (const auto dir = kv.raw("delay.direction")) cfg.delay.direction = embedding::parse_direction(*dir);

        if (kv.has("network.hidden")) {
            cfg.hidden.clear();
            for (const auto& h : kv.get_list("network.hidden", {})) cfg.hidden.push_back(parse_integral<std::size_t>("network.hidden", h));
        }
        if (const auto n = kv.raw("normalize")) cfg.normalization = normalize::parse_mode(*n);
        cfg.pod_modes = kv.get_count("pod.modes", cfg.pod_modes);

        cfg.steps = kv.get_count("train.steps", cfg.steps);
        cfg.epochs = kv.get_count("train.epochs", kv.has("train.steps") ? 0 : cfg.epochs);
        cfg.lr = kv.get_double("train.lr", cfg.lr);
        if (const auto k = kv.raw("train.kernel")) cfg.kernel.kind = metrics::parse_kernel_kind(*k);
        cfg.kernel.sigma = kv.get_double("train.sigma", cfg.kernel.sigma);
        cfg.minibatch = kv.get_count("train.minibatch", cfg.minibatch);
        if (kv.has("train.methods")) {
            cfg.methods.clear();
            for (const auto& m : kv.get_list("train.methods", {})) cfg.methods.push_back(model::parse_loss_kind(m));
        }

        cfg.seed = kv.get_u64("seed", cfg.seed);
        cfg.deterministic = kv.get_bool("deterministic", cfg.deterministic);
        cfg.out_dir = kv.get_string("out", cfg.out_dir.string());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (const auto unused = kv.unused_keys(); !unused.empty()) {
        throw ConfigError("unknown config key '" + unused.front() + "'");
    }
    if (check) validate(cfg);
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (cfg.delay.tau_steps < 1) fail("delay.tau_steps must be >= 1");
    if (cfg.delay.m < 1) fail("delay.m must be >= 1");
    if (cfg.cells < 1) fail("cells must be >= 1");
    if (!(cfg.lr > 0.0)) fail("train.lr must be positive");
    if (cfg.methods.empty()) fail("train.methods must name at least one method");
    if (cfg.kernel.kind == metrics::KernelKind::Gaussian && !(cfg.kernel.sigma > 0.0)) fail("train.sigma must be positive");
    for (std::size_t h : cfg.hidden) {
        if (h == 0) fail("network.hidden entries must be positive");
    }
    if (cfg.source == DataSource::Csv) {
        if (cfg.data_path.empty()) fail("data.path is required when system = csv");
        if (cfg.observable_columns.empty()) fail("data.observable must name at least one column");
    } else {
        if (!(cfg.dt > 0.0)) fail("sim.dt must be positive");
        if (cfg.pool_steps <= cfg.delay.window()) fail("sim.pool is shorter than one delay window");
        if (cfg.n_test < 1) fail("sim.test must be >= 1");
        if (cfg.pod_modes != 0) fail("pod.modes applies only to tabular data");
        const auto dim = cfg.source == DataSource::LotkaVolterra4 ? 4 : 3;
        if (cfg.x0.size() != dim) fail("sim.x0 must have " + std::to_string(dim) + " entries");
        if (cfg.noise_variance.size() != dim) fail("noise.variance must have 1 or " + std::to_string(dim) + " entries");
        for (Index i = 0; i < cfg.noise_variance.size(); ++i) {
            if (!(cfg.noise_variance[i] >= 0.0)) fail("noise.variance entries must be non-negative");
        }
    }
}

std::vector<std::pair<std::string, std::string>> echo(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    auto add = [&](std::string k, std::string v) { out.emplace_back(std::move(k), std::move(v)); };
    add("preset", cfg.preset);
    add("system", std::string(to_string(cfg.source)));
    if (cfg.source == DataSource::Csv) {
        add("data.path", cfg.data_path.string());
        add("data.observable", join(cfg.observable_columns));
        add("data.full", join(cfg.full_columns));
        add("data.train_rows", std::to_string(cfg.train_rows));
        add("pod.modes", std::to_string(cfg.pod_modes));
    } else {
        add("sim.dt", io::format_double(cfg.dt));
        add("sim.x0", join_vector(cfg.x0));
        add("sim.transient", std::to_string(cfg.n_transient));
        add("sim.pool", std::to_string(cfg.pool_steps));
        add("sim.test", std::to_string(cfg.n_test));
        add("noise.variance", join_vector(cfg.noise_variance));
    }
    add("sample.n_train", std::to_string(cfg.n_train));
    add("cells", std::to_string(cfg.cells));
    add("kmeans.max_iters", std::to_string(cfg.kmeans_iters));
    add("delay.tau_steps", std::to_string(cfg.delay.tau_steps));
    add("delay.m", std::to_string(cfg.delay.m));
    add("delay.direction", std::string(embedding::to_string(cfg.delay.direction)));
    std::vector<std::string> hidden;
    for (std::size_t h : cfg.hidden) hidden.push_back(std::to_string(h));
    add("network.hidden", join(hidden));
    add("normalize", std::string(normalize::to_string(cfg.normalization)));
    add("train.steps", std::to_string(cfg.steps));
    add("train.epochs", std::to_string(cfg.epochs));
    add("train.lr", io::format_double(cfg.lr));
    add("train.kernel", std::string(metrics::to_string(cfg.kernel.kind)));
    add("train.sigma", io::format_double(cfg.kernel.sigma));
    add("train.minibatch", std::to_string(cfg.minibatch));
    std::vector<std::string> methods;
    for (auto m : cfg.methods) methods.emplace_back(model::to_string(m));
    add("train.methods", join(methods));
    add("seed", std::to_string(cfg.seed));
    add("deterministic", cfg.deterministic ? "on" : "off");
    return out;
}

}  // namespace delayrecon::harness
