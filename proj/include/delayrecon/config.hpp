#pragma once

#include "delayrecon/core.hpp"
#include "delayrecon/embedding.hpp"
#include "delayrecon/metrics.hpp"
#include "delayrecon/model.hpp"
#include "delayrecon/normalize.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace delayrecon::harness {

/// Flat `key = value` configuration. `#` starts a comment; nested keys use dots
/// (`train.lr = 1e-3`). Every lookup marks the key as used so typos can be reported.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::optional<std::string> raw(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_count(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

    std::vector<std::string> unused_keys() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

enum class DataSource { Lorenz63, Rossler, LotkaVolterra4, Csv };

std::string_view to_string(DataSource source);

struct ExperimentConfig {
    std::string preset = "lorenz63";
    DataSource source = DataSource::Lorenz63;

    // Tabular input (source = csv). The first train_rows rows form the training region.
    std::filesystem::path data_path;
    std::vector<std::string> observable_columns{"0"};
    std::vector<std::string> full_columns;
    std::size_t train_rows = 0;

    // Simulation (synthetic sources).
    double dt = 0.01;
    Vector x0;
    std::size_t n_transient = 10000;
    std::size_t pool_steps = 100000;
    std::size_t n_test = 10000;
    Vector noise_variance;

    std::size_t n_train = 2000;  ///< 0 keeps every training-region pair
    std::size_t cells = 20;
    std::size_t kmeans_iters = 100;

    double tau_seconds = 0.0;  ///< takes precedence over delay.tau_steps when positive
    embedding::DelayConfig delay{18, 4, embedding::LagDirection::Backward};

    std::vector<std::size_t> hidden{100, 100, 100, 100};
    normalize::Mode normalization = normalize::Mode::None;
    std::size_t pod_modes = 0;

    std::size_t steps = 10000;
    std::size_t epochs = 0;  ///< when positive, steps = epochs * ceil(cell size / minibatch)
    double lr = 1e-3;
    metrics::KernelSpec kernel = metrics::KernelSpec::energy();
    std::size_t minibatch = 0;
    std::vector<model::LossKind> methods{model::LossKind::Pointwise, model::LossKind::Measure};

    std::uint64_t seed = 0;
    bool deterministic = true;
    std::filesystem::path out_dir;
};

/// Built-in settings: lorenz63, rossler, lotka_volterra (noisy comparison),
/// lorenz63_clean, rossler_clean, lotka_volterra_clean (noise-free, 100 cells),
/// sst and era5 (tabular ingestion templates).
ExperimentConfig experiment_preset(std::string_view name);
std::vector<std::string> preset_names();

/// Starts from `preset` (default lorenz63) and applies every other key. Unknown keys and
/// invalid values raise ConfigError. `check` runs validate() on the result.
ExperimentConfig experiment_from_config(const KeyValueConfig& kv, bool check = true);

/// Checks counts and cross-field consistency; throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Ordered key/value echo of the effective configuration.
std::vector<std::pair<std::string, std::string>> echo(const ExperimentConfig& cfg);

}  // namespace delayrecon::harness
