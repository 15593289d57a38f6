#pragma once

#include "delayrecon/config.hpp"
#include "delayrecon/io.hpp"
#include "delayrecon/model.hpp"
#include "delayrecon/normalize.hpp"
#include "delayrecon/pod.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace delayrecon::harness {

/// Training and evaluation sets in physical units.
struct PreparedData {
    Matrix train_inputs;   ///< delay vectors built from the (noisy) observable
    Matrix train_targets;  ///< (noisy) full states, or POD coefficients for tabular data
    std::vector<std::size_t> train_time_indices;
    Matrix test_inputs;    ///< delay vectors from the clean held-out segment
    Matrix test_targets;   ///< clean full states (or POD coefficients) at the same times
    std::vector<std::size_t> test_time_indices;
    std::optional<pod::PodBasis> basis;
    Matrix test_fields;  ///< clean full fields when a POD basis is in use
};

/// Simulates (or loads) the data, adds observation noise, delay-embeds the observable and
/// draws the training pairs. Training and test time indices never overlap.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// A trained network plus the normalizations wrapped around it.
struct Reconstructor {
    model::MlpParams params;
    normalize::Transform input;
    normalize::Transform output;

    Matrix predict(const Matrix& delay_inputs) const;

    io::Sections to_sections() const;
    static Reconstructor from_sections(const io::Sections& sections);
};

struct Report {
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::pair<std::string, std::vector<double>>> loss_histories;
    std::vector<std::pair<std::string, std::string>> config;
    std::uint64_t seed = 0;
    std::string init_digest;
    double wall_clock_seconds = 0.0;

    std::optional<double> metric(std::string_view name) const;
};

/// Full pipeline: prepare data, cluster, train every configured method from one shared
/// initialization, evaluate on clean held-out data. When cfg.out_dir is set, writes the report,
/// loss curves and checkpoints there; nothing is left behind if the run fails.
Report run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { Csv, Text };

ReportFormat parse_report_format(std::string_view name);

/// CSV is one `metric,value` row per metric; text is an aligned table with seed, digest and config.
std::string format_report(const Report& report, ReportFormat format);

/// Writes report.csv (`metric,value`) or report.txt into dir, plus loss_<method>.csv
/// (`step,loss`) for each history. Returns the report file path.
std::filesystem::path emit_report(const Report& report, ReportFormat format, const std::filesystem::path& dir);

/// Parses a report.csv back into a metrics-only report.
Report read_report_csv(const std::filesystem::path& path);

/// Trace of the covariance of the rows of data (population normalization).
double variance_trace(const Matrix& data);

}  // namespace delayrecon::harness
