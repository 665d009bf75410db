#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"

namespace rbridge::filter {

/// Unnormalized log-weights whose best entry is below this collapse the filter.
inline constexpr double kCollapseLogWeight = -700.0;

/**
 * Posterior law of the terminal value over a finite atom set, stored as
 * normalized log-weights.
 */
class Posterior {
  public:
    /// Normalizes by max-subtraction; throws FilteringCollapseError if nothing survives.
    static Posterior from_log_weights(AtomsPtr atoms, std::vector<double> log_weights, double time) {
        if (!atoms || atoms->points.empty()) {
            throw FilteringCollapseError("posterior over an empty atom set");
        }
        if (log_weights.size() != atoms->size()) {
            throw UsageError("posterior: log-weight count does not match atom count");
        }
        const double best = *std::max_element(log_weights.begin(), log_weights.end());
        if (!(best > kCollapseLogWeight) || !std::isfinite(best)) {
            throw FilteringCollapseError("posterior collapsed at t = " + std::to_string(time) +
                                         " (best unnormalized log-weight " + std::to_string(best) + ")");
        }
        double mass = 0.0;
        for (double lw : log_weights) {
            mass += std::exp(lw - best);
        }
        const double log_norm = best + std::log(mass);
        for (double& lw : log_weights) {
            lw -= log_norm;
        }
        return Posterior(std::move(atoms), std::move(log_weights), time);
    }

    /// The prior itself, as the posterior at t = 0.
    static Posterior prior(AtomsPtr atoms) {
        if (!atoms || atoms->points.empty()) {
            throw FilteringCollapseError("posterior over an empty atom set");
        }
        std::vector<double> lw(atoms->size());
        for (std::size_t i = 0; i < lw.size(); ++i) {
            lw[i] = std::log(atoms->weights[i]);
        }
        return Posterior(std::move(atoms), std::move(lw), 0.0);
    }

    [[nodiscard]] const FiniteAtoms& atoms() const noexcept { return *atoms_; }
    [[nodiscard]] const AtomsPtr& atoms_ptr() const noexcept { return atoms_; }
    [[nodiscard]] const std::vector<double>& log_weights() const noexcept { return log_weights_; }
    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] std::size_t size() const noexcept { return log_weights_.size(); }

    [[nodiscard]] std::vector<double> weights() const {
        std::vector<double> w(log_weights_.size());
        std::transform(log_weights_.begin(), log_weights_.end(), w.begin(), [](double lw) { return std::exp(lw); });
        return w;
    }

  private:
    Posterior(AtomsPtr atoms, std::vector<double> log_weights, double time)
        : atoms_(std::move(atoms)), log_weights_(std::move(log_weights)), time_(time) {}

    AtomsPtr atoms_;
    std::vector<double> log_weights_;
    double time_;
};

/// E[Y | xi_t] = sum_i w_i y_i.
inline Vector conditional_mean(const Posterior& p) {
    const auto& pts = p.atoms().points;
    Vector mean = Vector::Zero(pts.front().size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        mean += std::exp(p.log_weights()[i]) * pts[i];
    }
    return mean;
}

/// Var[Y | xi_t] per coordinate.
inline Vector conditional_variance(const Posterior& p) {
    const auto& pts = p.atoms().points;
    const Vector mean = conditional_mean(p);
    Vector var = Vector::Zero(mean.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        var += std::exp(p.log_weights()[i]) * (pts[i] - mean).array().square().matrix();
    }
    return var;
}

/// Shannon entropy in nats; zero-weight atoms contribute nothing.
inline double entropy(const Posterior& p) {
    double s = 0.0;
    for (double lw : p.log_weights()) {
        const double w = std::exp(lw);
        if (w > 0.0) {
            s -= w * lw;
        }
    }
    return std::max(s, 0.0);
}

} // namespace rbridge::filter
