#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/core/rng.hpp"
#include "rbridge/core/time_grid.hpp"

namespace rbridge::gaussian {

/// Z_t = x + sigma * W_t with independent coordinates.
struct ScaledBrownian {
    Vector sigma;
};

/// dZ = -theta Z dt + sigma dW, started at x.
struct OrnsteinUhlenbeck {
    double theta = 1.0;
    Vector sigma;
};

/**
 * Coordinatewise Gaussian driving process. The process is pinned at its
 * origin (Z_0 = x), which is passed to each operation rather than stored, so
 * one kernel serves every initial point drawn from the reference law.
 */
class GaussianKernel {
  public:
    using Variant = std::variant<ScaledBrownian, OrnsteinUhlenbeck>;

    static GaussianKernel scaled_brownian(Vector sigma) {
        check_sigma(sigma);
        return GaussianKernel(ScaledBrownian{std::move(sigma)});
    }

    static GaussianKernel ornstein_uhlenbeck(double theta, Vector sigma) {
        if (!(theta > 0.0) || !std::isfinite(theta)) {
            throw ConfigError("Ornstein-Uhlenbeck rate theta must be positive");
        }
        check_sigma(sigma);
        return GaussianKernel(OrnsteinUhlenbeck{theta, std::move(sigma)});
    }

    [[nodiscard]] const Variant& variant() const noexcept { return variant_; }
    [[nodiscard]] bool is_brownian() const noexcept { return std::holds_alternative<ScaledBrownian>(variant_); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return sigma().size(); }

    [[nodiscard]] const Vector& sigma() const noexcept {
        return std::visit([](const auto& k) -> const Vector& { return k.sigma; }, variant_);
    }

    /// mu_t for Z_0 = x.
    [[nodiscard]] Vector mean(const Vector& x, double t) const {
        if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&variant_)) {
            return x * std::exp(-ou->theta * t);
        }
        return x;
    }

    /// Cov[Z_s, Z_t] per coordinate, any order of s and t.
    [[nodiscard]] Vector covariance(double s, double t) const {
        const double lo = std::min(s, t);
        const double hi = std::max(s, t);
        const Vector var = sigma().array().square();
        if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&variant_)) {
            const double th = ou->theta;
            return var * (std::exp(-th * (hi - lo)) * (-std::expm1(-2.0 * th * lo)) / (2.0 * th));
        }
        return var * lo;
    }

    /// Z_{s+dt} | Z_s = z  ~  N(decay * z, variance), per coordinate.
    struct Transition {
        double decay;
        Vector variance;
    };

    [[nodiscard]] Transition transition(double dt) const {
        const Vector var = sigma().array().square();
        if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&variant_)) {
            const double th = ou->theta;
            return {std::exp(-th * dt), var * (-std::expm1(-2.0 * th * dt) / (2.0 * th))};
        }
        return {1.0, var * dt};
    }

    /// Log density of Z_{s+dt} = to given Z_s = from, summed over coordinates.
    [[nodiscard]] double log_transition_density(const Vector& from, const Vector& to, double dt) const {
        const Transition tr = transition(dt);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < from.size(); ++i) {
            const double v = tr.variance[i];
            const double d = to[i] - tr.decay * from[i];
            acc += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
        }
        return acc;
    }

  private:
    explicit GaussianKernel(Variant v) : variant_(std::move(v)) {}

    static void check_sigma(const Vector& sigma) {
        if (sigma.size() == 0) {
            throw ConfigError("kernel sigma must have at least one coordinate");
        }
        if (!(sigma.array() > 0.0).all() || !sigma.allFinite()) {
            throw ConfigError("kernel sigma must be positive in every coordinate");
        }
    }

    Variant variant_;
};

struct KernelMoments {
    Vector mean;       ///< mu_t
    Vector covariance; ///< Sigma_{s,t}, diagonal
};

/// Per-coordinate conditional Gaussian law N(mean, diag(variance)).
struct ConditionalLaw {
    Vector mean;
    Vector variance;
};

/// Path on a time grid; states[0] is the initial point.
struct BridgePath {
    std::vector<double> times;
    std::vector<Vector> states;
};

namespace detail {

inline void check_dims(const GaussianKernel& kernel, const Vector& a, const Vector& b) {
    if (a.size() != kernel.dim() || b.size() != kernel.dim()) {
        throw UsageError("vector dimension does not match kernel dimension " + std::to_string(kernel.dim()));
    }
}

} // namespace detail

/// mu_t and Sigma_{s,t} for 0 <= s <= t <= T.
inline KernelMoments kernel_moments(const GaussianKernel& kernel, const Vector& x, double s, double t, double horizon) {
    if (!(s >= 0.0) || !(t >= s) || !(t <= horizon)) {
        throw DomainError("kernel_moments requires 0 <= s <= t <= T");
    }
    if (x.size() != kernel.dim()) {
        throw UsageError("origin dimension does not match kernel");
    }
    return {kernel.mean(x, t), kernel.covariance(s, t)};
}

/**
 * Law of the bridge at time t given start x and terminal value y:
 * E_t = mu_t + S*(y - mu_T), V_t = Sigma_{t,t} - S* Sigma_{T,t}, with
 * S* = Sigma_{t,T} / Sigma_{T,T}.
 */
inline ConditionalLaw conditional_law(const GaussianKernel& kernel, const Vector& x, const Vector& y, double t,
                                      double horizon) {
    detail::check_dims(kernel, x, y);
    if (!(t >= 0.0) || !(t < horizon)) {
        throw DomainError("conditional_law requires 0 <= t < T");
    }
    if (kernel.is_brownian()) {
        const double w = t / horizon;
        const Vector var = kernel.sigma().array().square();
        return {x + w * (y - x), var * (t * (horizon - t) / horizon)};
    }
    const Vector cov_tT = kernel.covariance(t, horizon);
    const Vector cov_TT = kernel.covariance(horizon, horizon);
    const Vector cov_tt = kernel.covariance(t, t);
    const Vector gain = cov_tT.cwiseQuotient(cov_TT);
    ConditionalLaw law;
    law.mean = kernel.mean(x, t) + gain.cwiseProduct(y - kernel.mean(x, horizon));
    law.variance = (cov_tt - gain.cwiseProduct(cov_tT)).cwiseMax(0.0);
    return law;
}

/// Law of the bridge at time t given its value z at an earlier time s and terminal value y.
inline ConditionalLaw bridge_transition(const GaussianKernel& kernel, const Vector& z, const Vector& y, double s,
                                        double t, double horizon) {
    if (!(s >= 0.0) || !(t >= s) || !(t < horizon)) {
        throw DomainError("bridge_transition requires 0 <= s <= t < T");
    }
    // time-homogeneous Markov driver: restart the bridge at (s, z)
    return conditional_law(kernel, z, y, t - s, horizon - s);
}

/// Draw xi_t ~ N(E_t, V_t); returns x itself at t = 0.
inline Vector sample_conditioned_state(const GaussianKernel& kernel, const Vector& x, const Vector& y, double t,
                                       double horizon, RngStream& rng) {
    const ConditionalLaw law = conditional_law(kernel, x, y, t, horizon);
    if (t == 0.0) {
        return x;
    }
    const Vector z = rng.normal_vector(x.size());
    return law.mean + (law.variance.array().sqrt() * z.array()).matrix();
}

/**
 * Samples a full bridge path through the anticipative representation
 *   xi_t = S*_t Y + (Z_t - S*_t Z_T),   Y ~ target,
 * with Z simulated exactly on the grid nodes and at T. With
 * `include_terminal`, the path gains a final node at T holding Y.
 */
inline BridgePath sample_bridge_anticipative(const GaussianKernel& kernel, const Vector& x, const Distribution& target,
                                             const TimeGrid& grid, RngStream& rng, bool include_terminal = false) {
    if (x.size() != kernel.dim() || static_cast<Eigen::Index>(target.dim()) != kernel.dim()) {
        throw UsageError("anticipative sampler: dimension mismatch");
    }
    const double horizon = grid.horizon();
    const Vector y = sample(target, rng);

    const auto& nodes = grid.nodes();
    std::vector<double> times(nodes.begin(), nodes.end());
    std::vector<Vector> driver;
    driver.reserve(times.size() + 1);
    driver.push_back(x);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const auto tr = kernel.transition(times[i] - times[i - 1]);
        const Vector z = rng.normal_vector(x.size());
        driver.push_back(tr.decay * driver.back() + (tr.variance.array().sqrt() * z.array()).matrix());
    }
    const auto tail = kernel.transition(horizon - times.back());
    const Vector z_end = rng.normal_vector(x.size());
    const Vector z_horizon = tail.decay * driver.back() + (tail.variance.array().sqrt() * z_end.array()).matrix();

    const Vector cov_TT = kernel.covariance(horizon, horizon);
    BridgePath path;
    path.times = times;
    path.states.reserve(times.size() + 1);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i == 0) {
            path.states.push_back(x);
            continue;
        }
        const Vector gain = kernel.covariance(times[i], horizon).cwiseQuotient(cov_TT);
        path.states.push_back(gain.cwiseProduct(y) + (driver[i] - gain.cwiseProduct(z_horizon)));
    }
    if (include_terminal) {
        path.times.push_back(horizon);
        path.states.push_back(y + (z_horizon - z_horizon));
    }
    return path;
}

/// Drift (y_hat - xi) / (T - t); raises when T - t is at or below `floor`.
inline Vector drift(const Vector& xi, const Vector& y_hat, double t, double horizon, double floor) {
    const double gap = horizon - t;
    if (!(gap > floor)) {
        throw SingularityError("drift evaluated within " + std::to_string(floor) + " of the horizon (T - t = " +
                               std::to_string(gap) + ")");
    }
    return (y_hat - xi) / gap;
}

} // namespace rbridge::gaussian
