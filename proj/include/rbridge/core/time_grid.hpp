#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rbridge/core/error.hpp"

namespace rbridge {

/// Discretization 0 = t_0 < ... < t_m = T - epsilon of the transport horizon.
class TimeGrid {
  public:
    /// Uniform grid with spacing (T - epsilon) / m.
    static TimeGrid uniform(double horizon, std::size_t steps, double epsilon) {
        validate_horizon(horizon, epsilon);
        if (steps == 0) {
            throw ConfigError("time grid needs at least one step");
        }
        const double end = horizon - epsilon;
        const double delta = end / static_cast<double>(steps);
        std::vector<double> nodes(steps + 1);
        for (std::size_t i = 0; i < steps; ++i) {
            nodes[i] = static_cast<double>(i) * delta;
        }
        nodes[steps] = end;
        return TimeGrid(horizon, epsilon, std::move(nodes), true);
    }

    /// Uniform grid with the default cutoff epsilon = 1e-3 * T.
    static TimeGrid uniform(double horizon, std::size_t steps) {
        return uniform(horizon, steps, default_epsilon(horizon));
    }

    /// Arbitrary strictly increasing nodes from 0 to T - epsilon.
    static TimeGrid from_nodes(double horizon, std::vector<double> nodes) {
        if (nodes.size() < 2) {
            throw ConfigError("time grid needs at least two nodes");
        }
        if (nodes.front() != 0.0) {
            throw ConfigError("time grid must start at 0");
        }
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (!(nodes[i] > nodes[i - 1])) {
                throw ConfigError("time grid nodes must be strictly increasing");
            }
        }
        const double epsilon = horizon - nodes.back();
        validate_horizon(horizon, epsilon);
        return TimeGrid(horizon, epsilon, std::move(nodes), false);
    }

    static constexpr double default_epsilon(double horizon) noexcept { return 1e-3 * horizon; }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
    [[nodiscard]] std::size_t steps() const noexcept { return nodes_.size() - 1; }
    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] double node(std::size_t i) const { return nodes_.at(i); }
    [[nodiscard]] double spacing(std::size_t r) const { return nodes_.at(r + 1) - nodes_.at(r); }
    [[nodiscard]] bool is_uniform() const noexcept { return uniform_; }

    /// Smallest admissible distance to the horizon for drift evaluation.
    [[nodiscard]] double singularity_floor() const noexcept { return 0.5 * epsilon_; }

  private:
    TimeGrid(double horizon, double epsilon, std::vector<double> nodes, bool uniform)
        : horizon_(horizon), epsilon_(epsilon), nodes_(std::move(nodes)), uniform_(uniform) {}

    static void validate_horizon(double horizon, double epsilon) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw ConfigError("horizon T must be positive and finite");
        }
        if (!(epsilon > 0.0) || !(epsilon < horizon)) {
            throw ConfigError("cutoff epsilon must satisfy 0 < epsilon < T");
        }
    }

    double horizon_;
    double epsilon_;
    std::vector<double> nodes_;
    bool uniform_;
};

} // namespace rbridge
