#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rbridge/core/coupling.hpp"
#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/core/rng.hpp"
#include "rbridge/filter.hpp"
#include "rbridge/gaussian_bridge.hpp"
#include "rbridge/levy_bridge.hpp"

namespace rbridge::nn {

using Matrix = Eigen::MatrixXd;

enum class Activation : std::uint8_t { silu = 0, tanh = 1 };

inline std::string to_string(Activation a) { return a == Activation::silu ? "silu" : "tanh"; }

inline Activation parse_activation(const std::string& name) {
    if (name == "silu") {
        return Activation::silu;
    }
    if (name == "tanh") {
        return Activation::tanh;
    }
    throw ConfigError("unknown activation '" + name + "' (expected silu or tanh)");
}

/// Architecture of f(xi, t; theta): dim + 2k inputs, hidden widths, dim outputs.
struct ModelSpec {
    std::size_t dim = 2;
    std::vector<std::size_t> hidden{128, 128, 128};
    std::size_t time_frequencies = 8;
    Activation activation = Activation::silu;
};

/**
 * Parameters of the fully connected approximator, plus the metadata a
 * simulation must respect: the horizon T and the driver scale sigma the
 * model was trained with. Layer l maps widths[l] -> widths[l + 1].
 */
struct ModelParams {
    std::size_t dim = 0;
    std::size_t time_frequencies = 0;
    Activation activation = Activation::silu;
    double horizon = 0.0;
    Vector sigma; ///< all zeros for models trained on a Levy driver
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    [[nodiscard]] std::size_t input_dim() const noexcept { return dim + 2 * time_frequencies; }
    [[nodiscard]] std::size_t layers() const noexcept { return weights.size(); }

    [[nodiscard]] std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w{input_dim()};
        for (const auto& m : weights) {
            w.push_back(static_cast<std::size_t>(m.rows()));
        }
        return w;
    }

    [[nodiscard]] std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
        }
        return n;
    }

    /// Checks layer compatibility and finiteness; throws ConfigError.
    void validate() const {
        if (dim == 0 || weights.empty() || weights.size() != biases.size()) {
            throw ConfigError("model: empty or inconsistent layer list");
        }
        if (static_cast<std::size_t>(sigma.size()) != dim) {
            throw ConfigError("model: sigma metadata has the wrong length");
        }
        Eigen::Index width = static_cast<Eigen::Index>(input_dim());
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].cols() != width || biases[l].size() != weights[l].rows()) {
                throw ConfigError("model: layer " + std::to_string(l) + " has incompatible dimensions");
            }
            if (!weights[l].allFinite() || !biases[l].allFinite()) {
                throw ConfigError("model: layer " + std::to_string(l) + " has non-finite parameters");
            }
            width = weights[l].rows();
        }
        if (static_cast<std::size_t>(width) != dim) {
            throw ConfigError("model: output width differs from dim");
        }
    }

    /// Parameters in layer order, each weight matrix column-major, then its bias.
    [[nodiscard]] Vector flatten() const {
        Vector out(static_cast<Eigen::Index>(parameter_count()));
        Eigen::Index k = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            out.segment(k, weights[l].size()) = Eigen::Map<const Vector>(weights[l].data(), weights[l].size());
            k += weights[l].size();
            out.segment(k, biases[l].size()) = biases[l];
            k += biases[l].size();
        }
        return out;
    }

    void assign_flat(const Vector& flat) {
        if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
            throw UsageError("model: flat parameter vector has the wrong length");
        }
        Eigen::Index k = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            Eigen::Map<Vector>(weights[l].data(), weights[l].size()) = flat.segment(k, weights[l].size());
            k += weights[l].size();
            biases[l] = flat.segment(k, biases[l].size());
            k += biases[l].size();
        }
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        if (a.dim != b.dim || a.time_frequencies != b.time_frequencies || a.activation != b.activation ||
            a.horizon != b.horizon || a.sigma.size() != b.sigma.size() || a.sigma != b.sigma ||
            a.weights.size() != b.weights.size()) {
            return false;
        }
        for (std::size_t l = 0; l < a.weights.size(); ++l) {
            if (a.weights[l].rows() != b.weights[l].rows() || a.weights[l].cols() != b.weights[l].cols() ||
                a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) {
                return false;
            }
        }
        return true;
    }
};

/// Glorot-uniform weights, zero biases.
inline ModelParams init_params(const ModelSpec& spec, double horizon, Vector sigma, RngStream& rng) {
    if (spec.dim == 0) {
        throw ConfigError("model: zero dimension");
    }
    if (!(horizon > 0.0)) {
        throw ConfigError("model: horizon must be positive");
    }
    for (std::size_t w : spec.hidden) {
        if (w == 0) {
            throw ConfigError("model: hidden widths must be positive");
        }
    }
    ModelParams p;
    p.dim = spec.dim;
    p.time_frequencies = spec.time_frequencies;
    p.activation = spec.activation;
    p.horizon = horizon;
    p.sigma = std::move(sigma);
    std::vector<std::size_t> widths{p.input_dim()};
    widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
    widths.push_back(spec.dim);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(widths[l]);
        const auto fan_out = static_cast<Eigen::Index>(widths[l + 1]);
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (Eigen::Index j = 0; j < fan_in; ++j) {
            for (Eigen::Index i = 0; i < fan_out; ++i) {
                w(i, j) = a * (2.0 * rng.uniform() - 1.0);
            }
        }
        p.weights.push_back(std::move(w));
        p.biases.push_back(Vector::Zero(fan_out));
    }
    p.validate();
    return p;
}

namespace detail {

inline double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

inline void activate(Activation a, const Matrix& pre, Matrix& out) {
    out.resizeLike(pre);
    if (a == Activation::tanh) {
        out = pre.array().tanh();
        return;
    }
    for (Eigen::Index k = 0; k < pre.size(); ++k) {
        out.data()[k] = pre.data()[k] * sigmoid(pre.data()[k]);
    }
}

/// Elementwise derivative of the activation at `pre`, multiplied into `grad`.
inline void activation_backward(Activation a, const Matrix& pre, const Matrix& post, Matrix& grad) {
    if (a == Activation::tanh) {
        grad.array() *= 1.0 - post.array().square();
        return;
    }
    for (Eigen::Index k = 0; k < pre.size(); ++k) {
        const double x = pre.data()[k];
        const double s = sigmoid(x);
        grad.data()[k] *= s * (1.0 + x * (1.0 - s));
    }
}

/// Column-stacked network inputs [xi; sin(pi j t/T), cos(pi j t/T), j = 1..k].
inline Matrix inputs(const ModelParams& p, const Matrix& xi, const std::vector<double>& times) {
    const auto d = static_cast<Eigen::Index>(p.dim);
    const auto k = static_cast<Eigen::Index>(p.time_frequencies);
    Matrix in(d + 2 * k, xi.cols());
    in.topRows(d) = xi;
    for (Eigen::Index c = 0; c < xi.cols(); ++c) {
        const double tau = times[static_cast<std::size_t>(c)] / p.horizon;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double arg = std::numbers::pi * static_cast<double>(j + 1) * tau;
            in(d + 2 * j, c) = std::sin(arg);
            in(d + 2 * j + 1, c) = std::cos(arg);
        }
    }
    return in;
}

struct Activations {
    std::vector<Matrix> pre;  ///< pre-activation of each hidden layer
    std::vector<Matrix> post; ///< post[0] is the input, post[l + 1] the output of hidden layer l
    Matrix output;
};

inline Activations forward_pass(const ModelParams& p, Matrix input) {
    Activations acts;
    acts.post.push_back(std::move(input));
    const std::size_t hidden = p.layers() - 1;
    for (std::size_t l = 0; l < hidden; ++l) {
        Matrix pre = p.weights[l] * acts.post.back();
        pre.colwise() += p.biases[l];
        Matrix post;
        activate(p.activation, pre, post);
        acts.pre.push_back(std::move(pre));
        acts.post.push_back(std::move(post));
    }
    acts.output = p.weights.back() * acts.post.back();
    acts.output.colwise() += p.biases.back();
    return acts;
}

inline void check_time(const ModelParams& p, double t) {
    if (!(t >= 0.0) || !(t < p.horizon)) {
        throw DomainError("model evaluated at t = " + std::to_string(t) + " outside [0, T)");
    }
}

} // namespace detail

/// f(xi, t; theta) for a batch: column c of `xi` is evaluated at times[c].
inline Matrix forward_batch(const ModelParams& params, const Matrix& xi, const std::vector<double>& times) {
    if (static_cast<std::size_t>(xi.rows()) != params.dim || static_cast<std::size_t>(xi.cols()) != times.size()) {
        throw ConfigError("forward: input dimension does not match the model");
    }
    for (double t : times) {
        detail::check_time(params, t);
    }
    return detail::forward_pass(params, detail::inputs(params, xi, times)).output;
}

/// Batch evaluation at a common time t.
inline Matrix forward_batch(const ModelParams& params, const Matrix& xi, double t) {
    return forward_batch(params, xi, std::vector<double>(static_cast<std::size_t>(xi.cols()), t));
}

inline Vector forward(const ModelParams& params, const Vector& xi, double t) {
    if (static_cast<std::size_t>(xi.size()) != params.dim) {
        throw ConfigError("forward: input dimension " + std::to_string(xi.size()) + " does not match model dim " +
                          std::to_string(params.dim));
    }
    return forward_batch(params, Matrix(xi), std::vector<double>{t}).col(0);
}

/// One training example: target y, bridge state xi at time t.
struct Example {
    Vector y;
    Vector xi;
    double t = 0.0;
};

/// Columns of a batch: targets, states and times.
struct Batch {
    Matrix y;
    Matrix xi;
    std::vector<double> t;

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }

    static Batch from_examples(const std::vector<Example>& items) {
        if (items.empty()) {
            throw UsageError("empty batch");
        }
        const Eigen::Index d = items.front().y.size();
        Batch b{Matrix(d, static_cast<Eigen::Index>(items.size())), Matrix(d, static_cast<Eigen::Index>(items.size())),
                {}};
        b.t.reserve(items.size());
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].y.size() != d || items[i].xi.size() != d) {
                throw UsageError("batch: inconsistent example dimensions");
            }
            b.y.col(static_cast<Eigen::Index>(i)) = items[i].y;
            b.xi.col(static_cast<Eigen::Index>(i)) = items[i].xi;
            b.t.push_back(items[i].t);
        }
        return b;
    }
};

namespace detail {

/// Mean of per-item losses, summed in ascending order so the result does not depend on batch order.
inline double ordered_mean(std::vector<double> items) {
    std::sort(items.begin(), items.end());
    double acc = 0.0;
    for (double v : items) {
        acc += v;
    }
    return acc / static_cast<double>(items.size());
}

inline std::vector<double> column_squared_norms(const Matrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        out[static_cast<std::size_t>(c)] = m.col(c).squaredNorm();
    }
    return out;
}

} // namespace detail

/// Mean over the batch of |y - f(xi, t)|^2.
inline double loss(const ModelParams& params, const Batch& batch) {
    if (batch.size() == 0) {
        throw UsageError("loss of an empty batch");
    }
    const Matrix residual = batch.y - forward_batch(params, batch.xi, batch.t);
    return detail::ordered_mean(detail::column_squared_norms(residual));
}

/// Gradient with the same layout as the parameters.
struct Gradient {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    [[nodiscard]] Vector flatten() const {
        Eigen::Index n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            n += weights[l].size() + biases[l].size();
        }
        Vector out(n);
        Eigen::Index k = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            out.segment(k, weights[l].size()) = Eigen::Map<const Vector>(weights[l].data(), weights[l].size());
            k += weights[l].size();
            out.segment(k, biases[l].size()) = biases[l];
            k += biases[l].size();
        }
        return out;
    }

    [[nodiscard]] bool all_finite() const {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (!weights[l].allFinite() || !biases[l].allFinite()) {
                return false;
            }
        }
        return true;
    }
};

/// Loss and its gradient by reverse-mode differentiation.
inline std::pair<double, Gradient> loss_and_gradient(const ModelParams& params, const Batch& batch) {
    if (batch.size() == 0) {
        throw UsageError("loss of an empty batch");
    }
    if (static_cast<std::size_t>(batch.xi.rows()) != params.dim || batch.y.rows() != batch.xi.rows() ||
        static_cast<std::size_t>(batch.xi.cols()) != batch.size()) {
        throw ConfigError("batch dimensions do not match the model");
    }
    for (double t : batch.t) {
        detail::check_time(params, t);
    }
    const detail::Activations acts = detail::forward_pass(params, detail::inputs(params, batch.xi, batch.t));
    const Matrix residual = acts.output - batch.y;
    const double value = detail::ordered_mean(detail::column_squared_norms(residual));

    const std::size_t layers = params.layers();
    Gradient g;
    g.weights.resize(layers);
    g.biases.resize(layers);
    Matrix delta = (2.0 / static_cast<double>(batch.size())) * residual;
    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l] = delta * acts.post[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l == 0) {
            break;
        }
        Matrix upstream = params.weights[l].transpose() * delta;
        detail::activation_backward(params.activation, acts.pre[l - 1], acts.post[l], upstream);
        delta = std::move(upstream);
    }
    return {value, std::move(g)};
}

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state.
class Adam {
  public:
    using Options = AdamOptions;

    explicit Adam(const ModelParams& params, Options options = {}) : options_(options) {
        for (std::size_t l = 0; l < params.layers(); ++l) {
            m_w_.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
            v_w_.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
            m_b_.push_back(Vector::Zero(params.biases[l].size()));
            v_b_.push_back(Vector::Zero(params.biases[l].size()));
        }
    }

    void step(ModelParams& params, const Gradient& g) {
        ++t_;
        if (options_.learning_rate == 0.0) {
            return;
        }
        const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
        const double lr = options_.learning_rate;
        const double b1 = options_.beta1;
        const double b2 = options_.beta2;
        const double eps = options_.epsilon;
        for (std::size_t l = 0; l < params.layers(); ++l) {
            m_w_[l] = b1 * m_w_[l] + (1.0 - b1) * g.weights[l];
            v_w_[l] = b2 * v_w_[l] + (1.0 - b2) * g.weights[l].cwiseAbs2();
            params.weights[l].array() -=
                lr * (m_w_[l].array() / c1) / ((v_w_[l].array() / c2).sqrt() + eps);
            m_b_[l] = b1 * m_b_[l] + (1.0 - b1) * g.biases[l];
            v_b_[l] = b2 * v_b_[l] + (1.0 - b2) * g.biases[l].cwiseAbs2();
            params.biases[l].array() -= lr * (m_b_[l].array() / c1) / ((v_b_[l].array() / c2).sqrt() + eps);
        }
    }

    [[nodiscard]] std::uint64_t steps_taken() const noexcept { return t_; }

  private:
    Options options_;
    std::uint64_t t_ = 0;
    std::vector<Matrix> m_w_, v_w_;
    std::vector<Vector> m_b_, v_b_;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    std::size_t steps = 40000;
    double horizon = 0.1;
    std::size_t checkpoint_interval = 1000; ///< 0 keeps only the initial parameters as fallback
    std::size_t max_support_retries = 100;  ///< Levy training: redraws of an unreachable pair before failing
    ModelSpec model;

    void validate() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ConfigError("train: learning rate must be finite and nonnegative");
        }
        if (batch_size == 0) {
            throw ConfigError("train: batch size must be at least 1");
        }
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw ConfigError("train: horizon T must be positive");
        }
    }
};

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_curve;
    std::size_t skipped_pairs = 0; ///< Levy training only
};

/// Non-finite loss or gradient; carries the most recent checkpoint.
class TrainingDivergence : public DivergenceError {
  public:
    TrainingDivergence(std::size_t step, ModelParams checkpoint, std::vector<double> loss_curve)
        : DivergenceError("training diverged at step " + std::to_string(step) + " (non-finite loss or gradient)"),
          step_(step), checkpoint_(std::move(checkpoint)), loss_curve_(std::move(loss_curve)) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }
    [[nodiscard]] const ModelParams& checkpoint() const noexcept { return checkpoint_; }
    [[nodiscard]] const std::vector<double>& loss_curve() const noexcept { return loss_curve_; }

  private:
    std::size_t step_;
    ModelParams checkpoint_;
    std::vector<double> loss_curve_;
};

/// Called with (step, params) at each checkpoint interval.
using CheckpointHook = std::function<void(std::size_t, const ModelParams&)>;

namespace detail {

template <typename DrawExample>
TrainResult train_loop(const TrainConfig& config, ModelParams params, DrawExample&& draw,
                       const CheckpointHook& on_checkpoint) {
    Adam opt(params, Adam::Options{config.learning_rate});
    TrainResult result;
    result.loss_curve.reserve(config.steps);
    ModelParams checkpoint = params;
    std::vector<Example> items(config.batch_size);
    for (std::size_t step = 1; step <= config.steps; ++step) {
        for (auto& item : items) {
            item = draw();
        }
        const Batch batch = Batch::from_examples(items);
        auto [value, grad] = loss_and_gradient(params, batch);
        if (!std::isfinite(value) || !grad.all_finite()) {
            throw TrainingDivergence(step, std::move(checkpoint), std::move(result.loss_curve));
        }
        opt.step(params, grad);
        result.loss_curve.push_back(value);
        if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0) {
            checkpoint = params;
            if (on_checkpoint) {
                on_checkpoint(step, params);
            }
        }
    }
    result.params = std::move(params);
    return result;
}

} // namespace detail

/**
 * Regression of Y on (xi_t, t) with pairs from the coupling, t uniform on
 * [0, T) and xi_t drawn from the Gaussian bridge law (xi_0 = x).
 * Parameters are initialized from `rng` before the first batch.
 */
inline TrainResult train(const TrainConfig& config, const Coupling& coupling, const gaussian::GaussianKernel& driver,
                         RngStream& rng, const CheckpointHook& on_checkpoint = {}) {
    config.validate();
    if (!driver.is_brownian()) {
        throw ConfigError("train: the Gaussian training path requires a scaled Brownian driver");
    }
    if (static_cast<Eigen::Index>(coupling.dim()) != driver.dim() || config.model.dim != coupling.dim()) {
        throw ConfigError("train: coupling, driver and model dimensions differ");
    }
    ModelParams params = init_params(config.model, config.horizon, driver.sigma(), rng);
    const double horizon = config.horizon;
    return detail::train_loop(
        config, std::move(params),
        [&] {
            auto [x, y] = sample_coupling(coupling, rng);
            const double t = uniform_time(horizon, rng);
            Vector xi = gaussian::sample_conditioned_state(driver, x, y, t, horizon, rng);
            return Example{std::move(y), std::move(xi), t};
        },
        on_checkpoint);
}

/// The same loop with xi_t drawn exactly from the gamma or Poisson bridge started at x.
inline TrainResult train_levy(const TrainConfig& config, const Coupling& coupling, const levy::LevyFamily& family,
                              RngStream& rng, const CheckpointHook& on_checkpoint = {}) {
    config.validate();
    if (std::holds_alternative<levy::StableHalf>(family.variant())) {
        throw ConfigError("train_levy: only gamma and Poisson families have exact conditioned-state samplers");
    }
    if (family.dim() != coupling.dim() || config.model.dim != coupling.dim()) {
        throw ConfigError("train_levy: coupling, family and model dimensions differ");
    }
    ModelParams params = init_params(config.model, config.horizon, Vector::Zero(static_cast<Eigen::Index>(family.dim())),
                                     rng);
    const double horizon = config.horizon;
    std::size_t skipped = 0;
    auto result = detail::train_loop(
        config, std::move(params),
        [&] {
            for (std::size_t attempt = 0;; ++attempt) {
                auto [x, y] = sample_coupling(coupling, rng);
                const double t = uniform_time(horizon, rng);
                try {
                    Vector xi = t == 0.0 ? x : levy::sample_bridge_increment(family, x, y, 0.0, t, horizon, rng);
                    return Example{std::move(y), std::move(xi), t};
                } catch (const UnsupportedEndpointError& e) {
                    ++skipped;
                    if (attempt + 1 >= config.max_support_retries) {
                        throw UnsupportedEndpointError(std::string("train_levy: retry budget exhausted; last: ") +
                                                       e.what());
                    }
                }
            }
        },
        on_checkpoint);
    result.skipped_pairs = skipped;
    return result;
}

/// Held-out examples with their initial points, for comparing the model with the exact filter.
struct ValidationItem {
    Vector x;
    Vector y;
    Vector xi;
    double t = 0.0;
};

inline std::vector<ValidationItem> make_validation_set(const Coupling& coupling, const gaussian::GaussianKernel& driver,
                                                       double horizon, std::size_t n, RngStream& rng) {
    std::vector<ValidationItem> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [x, y] = sample_coupling(coupling, rng);
        const double t = uniform_time(horizon, rng);
        Vector xi = gaussian::sample_conditioned_state(driver, x, y, t, horizon, rng);
        out.push_back({std::move(x), std::move(y), std::move(xi), t});
    }
    return out;
}

inline std::vector<ValidationItem> make_validation_set(const Coupling& coupling, const levy::LevyFamily& family,
                                                       double horizon, std::size_t n, RngStream& rng) {
    std::vector<ValidationItem> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [x, y] = sample_coupling(coupling, rng);
        const double t = uniform_time(horizon, rng);
        Vector xi = t == 0.0 ? x : levy::sample_bridge_increment(family, x, y, 0.0, t, horizon, rng);
        out.push_back({std::move(x), std::move(y), std::move(xi), t});
    }
    return out;
}

/// Per-item |y - f(xi, t)|^2.
inline std::vector<double> squared_errors(const ModelParams& params, const std::vector<ValidationItem>& set) {
    std::vector<double> out;
    out.reserve(set.size());
    constexpr std::size_t kChunk = 1024;
    for (std::size_t begin = 0; begin < set.size(); begin += kChunk) {
        const std::size_t end = std::min(set.size(), begin + kChunk);
        Matrix xi(static_cast<Eigen::Index>(params.dim), static_cast<Eigen::Index>(end - begin));
        std::vector<double> times;
        for (std::size_t i = begin; i < end; ++i) {
            xi.col(static_cast<Eigen::Index>(i - begin)) = set[i].xi;
            times.push_back(set[i].t);
        }
        const Matrix pred = forward_batch(params, xi, times);
        for (std::size_t i = begin; i < end; ++i) {
            out.push_back((set[i].y - pred.col(static_cast<Eigen::Index>(i - begin))).squaredNorm());
        }
    }
    return out;
}

/// Per-item |y - E[Y | xi_t]|^2 with the exact filter over `atoms`.
template <typename Driver>
std::vector<double> filter_squared_errors(const Driver& driver, const AtomsPtr& atoms, double horizon,
                                          const std::vector<ValidationItem>& set) {
    std::vector<double> out;
    out.reserve(set.size());
    for (const auto& item : set) {
        const auto post = filter::posterior_update(driver, item.x, item.xi, item.t, horizon, atoms);
        out.push_back((item.y - filter::conditional_mean(post)).squaredNorm());
    }
    return out;
}

/// Mean and standard error of a list of per-item errors.
struct ErrorSummary {
    double mean = 0.0;
    double standard_error = 0.0;
};

inline ErrorSummary summarize(const std::vector<double>& errors) {
    if (errors.empty()) {
        throw UsageError("summary of an empty error list");
    }
    const auto n = static_cast<double>(errors.size());
    const double mean = detail::ordered_mean(errors);
    double ss = 0.0;
    for (double e : errors) {
        ss += (e - mean) * (e - mean);
    }
    const double se = errors.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return {mean, se};
}

} // namespace rbridge::nn
