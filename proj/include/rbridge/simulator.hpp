#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rbridge/approximator.hpp"
#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/core/parallel.hpp"
#include "rbridge/core/rng.hpp"
#include "rbridge/core/time_grid.hpp"
#include "rbridge/filter.hpp"
#include "rbridge/gaussian_bridge.hpp"
#include "rbridge/levy_bridge.hpp"

namespace rbridge::sim {

using gaussian::BridgePath;
using Matrix = Eigen::MatrixXd;

enum class Mode { learned_drift, exact_filter_drift, levy_exact, deterministic_map };

inline std::string to_string(Mode m) {
    switch (m) {
    case Mode::learned_drift:
        return "learned";
    case Mode::exact_filter_drift:
        return "exact-filter";
    case Mode::levy_exact:
        return "levy-exact";
    case Mode::deterministic_map:
        return "deterministic";
    }
    return "unknown";
}

/**
 * Grid and noise settings shared by the simulation routes. With
 * noise_refinement R > 1, each step's Brownian increment is the sum of R
 * finer draws, so a uniform grid of m steps with refinement R consumes the
 * same random numbers as m * R steps with refinement 1.
 */
struct SimConfig {
    TimeGrid grid;
    Mode mode = Mode::learned_drift;
    Vector sigma;
    std::uint64_t seed = 0;
    std::size_t paths = 1;
    std::size_t noise_refinement = 1;
};

/// Stream index reserved for drawing initial states; path i uses stream i.
inline constexpr std::uint64_t kInitialStateStream = 0xFFFF'FFFF'0000'0001ULL;

/// xi + drift(xi, y_hat, t, T) * delta + dz.
inline Vector euler_step(const Vector& xi, const Vector& y_hat, double t, double horizon, double delta, const Vector& dz,
                         double floor) {
    if (!(delta > 0.0)) {
        throw DomainError("euler_step requires delta > 0");
    }
    return xi + gaussian::drift(xi, y_hat, t, horizon, floor) * delta + dz;
}

namespace detail {

inline void check_sigma(const SimConfig& config, Eigen::Index dim) {
    if (config.sigma.size() != dim) {
        throw ConfigError("simulation sigma has " + std::to_string(config.sigma.size()) + " coordinates, expected " +
                          std::to_string(dim));
    }
    if (!(config.sigma.array() >= 0.0).all() || !config.sigma.allFinite()) {
        throw ConfigError("simulation sigma must be finite and nonnegative");
    }
    if (config.noise_refinement == 0) {
        throw ConfigError("noise refinement must be at least 1");
    }
}

/// sigma * sqrt(delta / R) * (sum of R standard normal vectors).
inline Vector brownian_increment(const Vector& sigma, double delta, std::size_t refinement, RngStream& rng) {
    Vector sum = Vector::Zero(sigma.size());
    for (std::size_t j = 0; j < refinement; ++j) {
        sum += rng.normal_vector(sigma.size());
    }
    return sigma.cwiseProduct(sum) * std::sqrt(delta / static_cast<double>(refinement));
}

inline void check_learned(const nn::ModelParams& params, const SimConfig& config) {
    params.validate();
    if (params.horizon != config.grid.horizon()) {
        throw ConfigError("checkpoint was trained with T = " + std::to_string(params.horizon) +
                          " but the simulation uses T = " + std::to_string(config.grid.horizon()));
    }
    if (params.sigma.size() != config.sigma.size() || params.sigma != config.sigma) {
        throw ConfigError("checkpoint sigma differs from the simulation sigma; the driver must match training");
    }
}

inline gaussian::GaussianKernel brownian_from(const gaussian::GaussianKernel& driver) {
    if (!driver.is_brownian()) {
        throw ConfigError("Euler simulation requires a scaled Brownian driver");
    }
    return driver;
}

template <typename Estimate>
BridgePath euler_path(const SimConfig& config, const Vector& x, Estimate&& estimate, RngStream* rng) {
    const TimeGrid& grid = config.grid;
    const double horizon = grid.horizon();
    const double floor = grid.singularity_floor();
    BridgePath path;
    path.times = grid.nodes();
    path.states.reserve(grid.steps() + 1);
    path.states.push_back(x);
    Vector xi = x;
    for (std::size_t r = 0; r < grid.steps(); ++r) {
        const double t = grid.node(r);
        const double delta = grid.spacing(r);
        const Vector y_hat = estimate(xi, t);
        const Vector dz = rng ? brownian_increment(config.sigma, delta, config.noise_refinement, *rng)
                              : Vector::Zero(x.size()).eval();
        xi = euler_step(xi, y_hat, t, horizon, delta, dz, floor);
        path.states.push_back(xi);
    }
    return path;
}

} // namespace detail

/// Euler path of the learned bridge SDE; y_hat = f(xi_t, t; theta).
inline BridgePath simulate_learned(const nn::ModelParams& params, const SimConfig& config, const Vector& x,
                                   RngStream& rng) {
    detail::check_sigma(config, x.size());
    detail::check_learned(params, config);
    return detail::euler_path(
        config, x, [&](const Vector& xi, double t) { return nn::forward(params, xi, t); }, &rng);
}

/**
 * Terminal states of many learned paths at once; column i starts at x0.col(i)
 * and draws its noise from RngStream(config.seed, stream_offset + i), in the
 * same order as simulate_learned. Paths are advanced together so each drift
 * evaluation is one matrix product.
 */
inline Matrix simulate_learned_terminal(const nn::ModelParams& params, const SimConfig& config, const Matrix& x0,
                                        std::uint64_t stream_offset = 0) {
    detail::check_sigma(config, x0.rows());
    detail::check_learned(params, config);
    const TimeGrid& grid = config.grid;
    const double horizon = grid.horizon();
    const double floor = grid.singularity_floor();
    const Eigen::Index n = x0.cols();
    const Eigen::Index d = x0.rows();
    Matrix out(d, n);
    constexpr Eigen::Index kChunk = 2048;
    for (Eigen::Index begin = 0; begin < n; begin += kChunk) {
        const Eigen::Index cols = std::min(kChunk, n - begin);
        std::vector<RngStream> streams;
        streams.reserve(static_cast<std::size_t>(cols));
        for (Eigen::Index i = 0; i < cols; ++i) {
            streams.emplace_back(config.seed, stream_offset + static_cast<std::uint64_t>(begin + i));
        }
        Matrix xi = x0.middleCols(begin, cols);
        for (std::size_t r = 0; r < grid.steps(); ++r) {
            const double t = grid.node(r);
            const double delta = grid.spacing(r);
            if (!(horizon - t > floor)) {
                throw SingularityError("learned simulation reached the singularity floor");
            }
            const Matrix y_hat = nn::forward_batch(params, xi, t);
            Matrix next = xi + ((y_hat - xi) / (horizon - t)) * delta;
            for (Eigen::Index i = 0; i < cols; ++i) {
                next.col(i) += detail::brownian_increment(config.sigma, delta, config.noise_refinement,
                                                          streams[static_cast<std::size_t>(i)]);
            }
            xi = std::move(next);
        }
        out.middleCols(begin, cols) = xi;
    }
    return out;
}

/// Euler path with the exact filter's E[Y | xi_t] in place of the network.
inline BridgePath simulate_exact_filter(const gaussian::GaussianKernel& driver, const AtomsPtr& prior,
                                        const SimConfig& config, const Vector& x, RngStream& rng) {
    const auto kernel = detail::brownian_from(driver);
    SimConfig cfg = config;
    cfg.sigma = kernel.sigma();
    detail::check_sigma(cfg, x.size());
    const double horizon = cfg.grid.horizon();
    return detail::euler_path(
        cfg, x,
        [&](const Vector& xi, double t) {
            return filter::conditional_mean(filter::posterior_update(kernel, x, xi, t, horizon, prior));
        },
        &rng);
}

/// The learned recursion with dz = 0.
inline BridgePath deterministic_map(const nn::ModelParams& params, const SimConfig& config, const Vector& x) {
    SimConfig cfg = config;
    if (cfg.sigma.size() == 0) {
        cfg.sigma = params.sigma;
    }
    detail::check_sigma(cfg, x.size());
    detail::check_learned(params, cfg);
    return detail::euler_path(
        cfg, x, [&](const Vector& xi, double t) { return nn::forward(params, xi, t); }, nullptr);
}

/// The exact-filter recursion with dz = 0.
inline BridgePath deterministic_map(const gaussian::GaussianKernel& driver, const AtomsPtr& prior,
                                    const SimConfig& config, const Vector& x) {
    const auto kernel = detail::brownian_from(driver);
    SimConfig cfg = config;
    cfg.sigma = kernel.sigma();
    detail::check_sigma(cfg, x.size());
    const double horizon = cfg.grid.horizon();
    return detail::euler_path(
        cfg, x,
        [&](const Vector& xi, double t) {
            return filter::conditional_mean(filter::posterior_update(kernel, x, xi, t, horizon, prior));
        },
        nullptr);
}

/**
 * Levy random bridge toward a finite-support target, stepped with the exact
 * posterior-mixture kernel. The path covers the grid nodes plus a final node
 * at T, where the state is one of the atoms.
 */
inline BridgePath simulate_levy_exact(const levy::LevyFamily& family, const AtomsPtr& prior, const SimConfig& config,
                                      const Vector& x, RngStream& rng) {
    if (static_cast<std::size_t>(x.size()) != family.dim()) {
        throw UsageError("simulate_levy_exact: start dimension differs from the family");
    }
    const TimeGrid& grid = config.grid;
    const double horizon = grid.horizon();
    BridgePath path;
    path.times = grid.nodes();
    path.times.push_back(horizon);
    path.states.reserve(path.times.size());
    path.states.push_back(x);
    Vector xi = x;
    for (std::size_t r = 0; r + 1 < path.times.size(); ++r) {
        const double s = path.times[r];
        const double t = path.times[r + 1];
        const auto post = filter::posterior_update(family, x, xi, s, horizon, prior);
        xi = levy::sample_generative_step(family, xi, post, s, t, horizon, rng);
        path.states.push_back(xi);
    }
    return path;
}

/// Draws n initial states from `reference` with the reserved initial-state stream.
inline std::vector<Vector> draw_initial_states(const Distribution& reference, std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, kInitialStateStream);
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(sample(reference, rng));
    }
    return out;
}

/**
 * Runs fn(i, rng_i) for every path i with rng_i = RngStream(seed, i), in
 * parallel, and returns the results in path order.
 */
template <typename Fn>
auto run_paths(std::size_t n, std::uint64_t seed, Fn&& fn) {
    using Result = decltype(fn(std::size_t{0}, std::declval<RngStream&>()));
    std::vector<Result> out(n);
    parallel_for(n, [&](std::size_t i) {
        RngStream rng(seed, i);
        out[i] = fn(i, rng);
    });
    return out;
}

} // namespace rbridge::sim
