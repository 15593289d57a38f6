#include "delayrecon/model.hpp"
#include "delayrecon/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace delayrecon::model {

namespace {

void check_params(const MlpParams& params) {
    if (params.layer_dims.size() < 2 || params.weights.size() + 1 != params.layer_dims.size() ||
        params.biases.size() != params.weights.size()) {
        throw std::invalid_argument("malformed network parameters");
    }
}

// tanh through the vectorized exp; absolute error stays below 1e-13.
void tanh_inplace(Matrix& z) {
    auto a = z.array();
    a = 1.0 - 2.0 / ((2.0 * a.max(-20.0).min(20.0)).exp() + 1.0);
}

// Post-activation outputs of every layer; acts[0] is the input batch.
struct Tape {
    std::vector<Matrix> acts;
};

Tape forward_tape(const MlpParams& params, const Matrix& batch) {
    check_params(params);
    if (static_cast<std::size_t>(batch.cols()) != params.input_dim()) {
        throw std::invalid_argument("input width " + std::to_string(batch.cols()) + " does not match network input " +
                                    std::to_string(params.input_dim()));
    }
    Tape tape;
    tape.acts.reserve(params.n_layers() + 1);
    tape.acts.push_back(batch);
    for (std::size_t l = 0; l < params.n_layers(); ++l) {
        Matrix z(batch.rows(), params.weights[l].rows());
        z.noalias() = tape.acts.back() * params.weights[l].transpose();
        z.rowwise() += params.biases[l].transpose();
        if (l + 1 < params.n_layers()) tanh_inplace(z);
        tape.acts.push_back(std::move(z));
    }
    return tape;
}

// Backpropagates dLoss/dOutput through the recorded tape.
MlpParams backward(const MlpParams& params, const Tape& tape, Matrix delta) {
    MlpParams grad = zeros_like(params);
    for (std::size_t l = params.n_layers(); l-- > 0;) {
        const Matrix& input = tape.acts[l];
        grad.weights[l].noalias() = delta.transpose() * input;
        grad.biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Matrix prev(delta.rows(), input.cols());
            prev.noalias() = delta * params.weights[l];
            prev.array() *= 1.0 - input.array().square();
            delta = std::move(prev);
        }
    }
    return grad;
}

std::vector<Index> choose_rows(Index n, std::size_t minibatch, std::uint64_t seed) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    if (minibatch == 0 || minibatch >= rows.size()) return rows;
    Rng rng(seed);
    // Partial Fisher-Yates, then restore time order.
    for (std::size_t i = 0; i < minibatch; ++i) {
        const auto span = rows.size() - i;
        auto j = i + std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)), span - 1);
        std::swap(rows[i], rows[j]);
    }
    rows.resize(minibatch);
    std::sort(rows.begin(), rows.end());
    return rows;
}

template <typename Fn>
void for_each_index(std::size_t n, bool parallel, Fn&& fn) {
    const std::size_t workers = parallel ? std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency())) : 1;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
}

}  // namespace

std::size_t MlpParams::parameter_count() const noexcept {
    std::size_t count = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) count += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    return count;
}

MlpParams zeros_like(const MlpParams& params) {
    MlpParams out;
    out.layer_dims = params.layer_dims;
    for (std::size_t l = 0; l < params.n_layers(); ++l) {
        out.weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
        out.biases.push_back(Vector::Zero(params.biases[l].size()));
    }
    return out;
}

Vector flatten(const MlpParams& params) {
    Vector flat(static_cast<Index>(params.parameter_count()));
    Index pos = 0;
    for (std::size_t l = 0; l < params.n_layers(); ++l) {
        const Matrix& w = params.weights[l];
        flat.segment(pos, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
        pos += w.size();
        flat.segment(pos, params.biases[l].size()) = params.biases[l];
        pos += params.biases[l].size();
    }
    return flat;
}

void unflatten(MlpParams& params, const Vector& flat) {
    if (static_cast<std::size_t>(flat.size()) != params.parameter_count()) {
        throw std::invalid_argument("flat parameter vector has the wrong length");
    }
    Index pos = 0;
    for (std::size_t l = 0; l < params.n_layers(); ++l) {
        Matrix& w = params.weights[l];
        Eigen::Map<Vector>(w.data(), w.size()) = flat.segment(pos, w.size());
        pos += w.size();
        params.biases[l] = flat.segment(pos, params.biases[l].size());
        pos += params.biases[l].size();
    }
}

MlpParams init_mlp(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw std::invalid_argument("a network needs at least an input and an output layer");
    for (std::size_t d : layer_dims) {
        if (d == 0) throw std::invalid_argument("layer dimensions must be positive");
    }
    Rng rng(seed);
    MlpParams params;
    params.layer_dims.assign(layer_dims.begin(), layer_dims.end());
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const auto fan_in = static_cast<Index>(layer_dims[l]);
        const auto fan_out = static_cast<Index>(layer_dims[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (Index i = 0; i < w.size(); ++i) w.data()[i] = limit * (2.0 * uniform01(rng) - 1.0);
        params.weights.push_back(std::move(w));
        params.biases.push_back(Vector::Zero(fan_out));
    }
    return params;
}

Matrix forward(const MlpParams& params, const Matrix& batch) {
    return std::move(forward_tape(params, batch).acts.back());
}

LossAndGrad grad_pointwise(const MlpParams& params, const Matrix& inputs, const Matrix& targets) {
    if (inputs.rows() != targets.rows()) {
        throw std::invalid_argument("grad_pointwise: " + std::to_string(inputs.rows()) + " inputs vs " +
                                    std::to_string(targets.rows()) + " targets");
    }
    if (static_cast<std::size_t>(targets.cols()) != params.output_dim()) {
        throw std::invalid_argument("grad_pointwise: target width does not match network output");
    }
    if (inputs.rows() == 0) throw std::invalid_argument("grad_pointwise: empty batch");
    const Tape tape = forward_tape(params, inputs);
    const Matrix residual = tape.acts.back() - targets;
    const double n = static_cast<double>(inputs.rows());
    LossAndGrad out;
    out.loss = residual.rowwise().squaredNorm().sum() / n;
    out.grad = backward(params, tape, (2.0 / n) * residual);
    return out;
}

LossAndGrad grad_measure(const MlpParams& params, std::span<const partition::MeasurePair> pairs,
                         const metrics::KernelSpec& kernel, const MeasureOptions& options) {
    if (pairs.empty()) throw std::invalid_argument("grad_measure needs at least one measure pair");
    check_params(params);

    // Stack the (sub)sampled delay atoms of every measure into one batch.
    std::vector<std::vector<Index>> rows(pairs.size());
    std::vector<Index> offsets(pairs.size() + 1, 0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& pair = pairs[i];
        if (pair.full.size() == 0 || pair.delayed.size() == 0 || pair.full.size() != pair.delayed.size()) {
            throw std::invalid_argument("measure pair " + std::to_string(i) + " is empty or unbalanced");
        }
        rows[i] = choose_rows(pair.delayed.size(), options.minibatch, derive_seed(options.seed, i));
        offsets[i + 1] = offsets[i] + static_cast<Index>(rows[i].size());
    }
    Matrix batch(offsets.back(), static_cast<Index>(params.input_dim()));
    std::vector<partition::EmpiricalMeasure> targets(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        targets[i].samples.resize(static_cast<Index>(rows[i].size()), pairs[i].full.dimension());
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            batch.row(offsets[i] + static_cast<Index>(j)) = pairs[i].delayed.samples.row(rows[i][j]);
            targets[i].samples.row(static_cast<Index>(j)) = pairs[i].full.samples.row(rows[i][j]);
        }
    }

    const Tape tape = forward_tape(params, batch);
    const Matrix& out = tape.acts.back();
    if (out.cols() != pairs.front().full.dimension()) {
        throw std::invalid_argument("network output width does not match full-state dimension");
    }
    const double inv_k = 1.0 / static_cast<double>(pairs.size());
    std::vector<double> losses(pairs.size());
    Matrix d_out(out.rows(), out.cols());
    for_each_index(pairs.size(), !options.deterministic, [&](std::size_t i) {
        partition::EmpiricalMeasure pushed;
        pushed.samples = out.middleRows(offsets[i], offsets[i + 1] - offsets[i]);
        losses[i] = metrics::mmd_squared(kernel, targets[i], pushed);
        d_out.middleRows(offsets[i], pushed.size()) = inv_k * metrics::mmd_grad_second(kernel, targets[i], pushed);
    });

    LossAndGrad result;
    for (double l : losses) result.loss += l;
    result.loss *= inv_k;
    result.grad = backward(params, tape, std::move(d_out));
    return result;
}

AdamState AdamState::for_params(const MlpParams& params, double lr) {
    AdamState state;
    state.lr = lr;
    state.first_moment = zeros_like(params);
    state.second_moment = zeros_like(params);
    return state;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
    if (grads.layer_dims != params.layer_dims || state.first_moment.layer_dims != params.layer_dims) {
        throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");
    }
    for (std::size_t l = 0; l < grads.n_layers(); ++l) {
        if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
            throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(l));
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    const double b1 = state.beta1, b2 = state.beta2, lr = state.lr, eps = state.eps;

    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m.array() = b1 * m.array() + (1.0 - b1) * g.array();
        v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < params.n_layers(); ++l) {
        update(params.weights[l], grads.weights[l], state.first_moment.weights[l], state.second_moment.weights[l]);
        update(params.biases[l], grads.biases[l], state.first_moment.biases[l], state.second_moment.biases[l]);
    }
}

std::string_view to_string(LossKind kind) { return kind == LossKind::Pointwise ? "pointwise" : "measure"; }

LossKind parse_loss_kind(std::string_view name) {
    if (name == "pointwise") return LossKind::Pointwise;
    if (name == "measure") return LossKind::Measure;
    throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

TrainResult train(MlpParams params, const TrainingData& data, const TrainConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    const bool pointwise = std::holds_alternative<PointwiseData>(data);
    if (pointwise != (cfg.loss == LossKind::Pointwise)) {
        throw std::invalid_argument("training data does not match the configured loss");
    }
    TrainResult result;
    result.loss_history.reserve(cfg.n_steps);
    AdamState adam = AdamState::for_params(params, cfg.lr);
    for (std::size_t step = 0; step < cfg.n_steps; ++step) {
        LossAndGrad lg;
        if (pointwise) {
            const auto& pd = std::get<PointwiseData>(data);
            lg = grad_pointwise(params, pd.inputs, pd.targets);
        } else {
            MeasureOptions opts;
            opts.minibatch = cfg.minibatch_per_measure;
            opts.seed = derive_seed(cfg.seed, step);
            opts.deterministic = cfg.deterministic;
            lg = grad_measure(params, std::get<std::vector<partition::MeasurePair>>(data), cfg.kernel, opts);
        }
        if (!std::isfinite(lg.loss)) throw NumericError("training loss became non-finite at step " + std::to_string(step));
        result.loss_history.push_back(lg.loss);
        adam_step(params, lg.grad, adam);
    }
    result.params = std::move(params);
    return result;
}

double evaluate_mse(const MlpParams& params, const Matrix& clean_delay, const Matrix& clean_full) {
    if (clean_delay.rows() != clean_full.rows()) {
        throw std::invalid_argument("evaluate_mse: " + std::to_string(clean_delay.rows()) + " delay rows vs " +
                                    std::to_string(clean_full.rows()) + " full-state rows");
    }
    return metrics::mse(forward(params, clean_delay), clean_full);
}

}  // namespace delayrecon::model
