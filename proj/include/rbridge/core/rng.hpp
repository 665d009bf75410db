#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

#include "rbridge/core/error.hpp"

namespace rbridge {

using Vector = Eigen::VectorXd;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

/**
 * Reproducible random stream identified by (root seed, stream index).
 *
 * The engine state is derived by hashing both identifiers through SplitMix64,
 * so every stream index of one root seed gets an unrelated engine. The same
 * pair always replays the same draws. Streams are not copyable; open a new
 * stream with the same identifiers to replay.
 */
class RngStream {
  public:
    using Engine = std::mt19937_64;

    RngStream(std::uint64_t root_seed, std::uint64_t stream_index)
        : root_seed_(root_seed), stream_index_(stream_index), engine_(make_engine(root_seed, stream_index)) {}

    RngStream(const RngStream&) = delete;
    RngStream& operator=(const RngStream&) = delete;
    RngStream(RngStream&&) noexcept = default;
    RngStream& operator=(RngStream&&) noexcept = default;

    [[nodiscard]] std::uint64_t root_seed() const noexcept { return root_seed_; }
    [[nodiscard]] std::uint64_t stream_index() const noexcept { return stream_index_; }

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1), safe as a log argument.
    double uniform_open() {
        double u = 0.0;
        while (u == 0.0) {
            u = uniform();
        }
        return u;
    }

    /// Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) {
            throw UsageError("uniform_index over an empty range");
        }
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double normal() { return normal_(engine_); }

    Vector normal_vector(Eigen::Index dim) {
        Vector v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            v[i] = normal();
        }
        return v;
    }

    /// Index drawn with probability proportional to `weights` (nonnegative).
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) {
            total += w;
        }
        if (!(total > 0.0)) {
            throw ConfigError("categorical draw over weights with zero total mass");
        }
        const double u = uniform() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] > 0.0) {
                last_positive = i;
                acc += weights[i];
                if (u < acc) {
                    return i;
                }
            }
        }
        return last_positive;
    }

    /// Logarithm of a Gamma(shape, 1) variate; stays finite for tiny shapes.
    double log_gamma_variate(double shape) {
        if (!(shape > 0.0)) {
            throw ConfigError("gamma shape must be positive");
        }
        if (shape >= 1.0) {
            std::gamma_distribution<double> g(shape, 1.0);
            return std::log(g(engine_));
        }
        // G(a) = G(a + 1) * U^(1/a)
        std::gamma_distribution<double> g(shape + 1.0, 1.0);
        return std::log(g(engine_)) + std::log(uniform_open()) / shape;
    }

    double gamma(double shape, double rate) { return std::exp(log_gamma_variate(shape)) / rate; }

    double beta(double a, double b) { return beta_pair(a, b).first; }

    /// (B, 1 - B) for B ~ Beta(a, b), each computed without cancellation.
    std::pair<double, double> beta_pair(double a, double b) {
        const double la = log_gamma_variate(a);
        const double lb = log_gamma_variate(b);
        return {1.0 / (1.0 + std::exp(lb - la)), 1.0 / (1.0 + std::exp(la - lb))};
    }

    std::int64_t binomial(std::int64_t trials, double p) {
        if (trials < 0 || !(p >= 0.0 && p <= 1.0)) {
            throw ConfigError("binomial parameters out of range");
        }
        std::binomial_distribution<std::int64_t> d(trials, p);
        return d(engine_);
    }

    std::int64_t poisson(double mean) {
        if (mean <= 0.0) {
            return 0;
        }
        std::poisson_distribution<std::int64_t> d(mean);
        return d(engine_);
    }

    Engine& engine() noexcept { return engine_; }

  private:
    static Engine make_engine(std::uint64_t root_seed, std::uint64_t stream_index) {
        std::uint64_t state = root_seed ^ (0xD1B54A32D192ED03ULL * (stream_index + 1));
        std::uint32_t words[8];
        for (int i = 0; i < 4; ++i) {
            const std::uint64_t z = detail::splitmix64(state) ^ detail::splitmix64(stream_index);
            words[2 * i] = static_cast<std::uint32_t>(z);
            words[2 * i + 1] = static_cast<std::uint32_t>(z >> 32);
        }
        std::seed_seq seq(std::begin(words), std::end(words));
        return Engine(seq);
    }

    std::uint64_t root_seed_;
    std::uint64_t stream_index_;
    Engine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace rbridge
