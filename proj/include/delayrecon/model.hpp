#pragma once

#include "delayrecon/core.hpp"
#include "delayrecon/metrics.hpp"
#include "delayrecon/partition.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace delayrecon::model {

/// Dense feed-forward network: tanh on every hidden layer, affine output layer.
/// weights[l] has shape layer_dims[l+1] x layer_dims[l].
struct MlpParams {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    std::size_t n_layers() const noexcept { return weights.size(); }
    std::size_t input_dim() const noexcept { return layer_dims.front(); }
    std::size_t output_dim() const noexcept { return layer_dims.back(); }
    std::size_t parameter_count() const noexcept;
};

/// Same shapes as params, all zero.
MlpParams zeros_like(const MlpParams& params);

/// Weights then bias of each layer, row-major, concatenated.
Vector flatten(const MlpParams& params);
void unflatten(MlpParams& params, const Vector& flat);

/// Glorot-uniform weights, zero biases.
MlpParams init_mlp(std::span<const std::size_t> layer_dims, std::uint64_t seed);

Matrix forward(const MlpParams& params, const Matrix& batch);

struct LossAndGrad {
    double loss = 0.0;
    MlpParams grad;
};

/// Pointwise loss (1/N) sum_i |R(y_i) - x_i|^2 and its exact gradient.
LossAndGrad grad_pointwise(const MlpParams& params, const Matrix& inputs, const Matrix& targets);

struct MeasureOptions {
    /// Samples drawn per measure (without replacement, same rows on both sides); 0 uses all.
    std::size_t minibatch = 0;
    std::uint64_t seed = 0;
    /// When false, per-measure kernel terms are evaluated on worker threads. Reductions stay
    /// in measure-index order either way.
    bool deterministic = true;
};

/// Measure loss (1/K) sum_i MMD^2(mu_i, R # (Phi # mu_i)) and its gradient.
LossAndGrad grad_measure(const MlpParams& params, std::span<const partition::MeasurePair> pairs,
                         const metrics::KernelSpec& kernel, const MeasureOptions& options = {});

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    MlpParams first_moment;
    MlpParams second_moment;

    static AdamState for_params(const MlpParams& params, double lr = 1e-3);
};

/// One bias-corrected Adam update, in place.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state);

enum class LossKind { Pointwise, Measure };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct TrainConfig {
    std::size_t n_steps = 1;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Pointwise;
    metrics::KernelSpec kernel = metrics::KernelSpec::energy();
    std::size_t minibatch_per_measure = 0;
    bool deterministic = true;
};

struct PointwiseData {
    Matrix inputs;
    Matrix targets;
};

using TrainingData = std::variant<PointwiseData, std::vector<partition::MeasurePair>>;

struct TrainResult {
    MlpParams params;
    /// Loss evaluated before each update; one entry per step.
    std::vector<double> loss_history;
};

TrainResult train(MlpParams params, const TrainingData& data, const TrainConfig& cfg);

/// mse(forward(params, clean_delay), clean_full).
double evaluate_mse(const MlpParams& params, const Matrix& clean_delay, const Matrix& clean_full);

}  // namespace delayrecon::model
