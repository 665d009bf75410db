#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/core/rng.hpp"
#include "rbridge/gaussian_bridge.hpp"
#include "rbridge/levy_bridge.hpp"
#include "rbridge/posterior.hpp"

namespace rbridge::filter {

namespace detail {

inline void check_update_args(const FiniteAtoms& prior, const Vector& x, const Vector& xi, double t, double horizon) {
    if (!(t >= 0.0) || !(t < horizon)) {
        throw DomainError("posterior_update requires 0 <= t < T");
    }
    if (prior.points.empty()) {
        throw FilteringCollapseError("posterior over an empty atom set");
    }
    if (x.size() != xi.size() || static_cast<std::size_t>(x.size()) != prior.dim()) {
        throw UsageError("posterior_update: dimension mismatch between state and atoms");
    }
}

template <typename LogLikelihoodRatio>
Posterior update(const AtomsPtr& prior, const Vector& x, const Vector& xi, double t, double horizon,
                 LogLikelihoodRatio&& ratio) {
    detail::check_update_args(*prior, x, xi, t, horizon);
    if (t == 0.0 && xi == x) {
        return Posterior::prior(prior);
    }
    std::vector<double> lw(prior->size());
    for (std::size_t i = 0; i < lw.size(); ++i) {
        const double w = prior->weights[i];
        lw[i] = w > 0.0 ? std::log(w) + ratio(i, prior->points[i]) : -std::numeric_limits<double>::infinity();
    }
    return Posterior::from_log_weights(prior, std::move(lw), t);
}

} // namespace detail

/**
 * Posterior of Y given xi_t = xi for a Gaussian driver started at x:
 * log w_i = log p_i + log f_{T-t}(y_i | xi) - log f_T(y_i | x), where f_s is
 * the driver's transition density over a span s.
 */
inline Posterior posterior_update(const gaussian::GaussianKernel& kernel, const Vector& x, const Vector& xi, double t,
                                  double horizon, const AtomsPtr& prior) {
    if (x.size() != kernel.dim()) {
        throw UsageError("posterior_update: kernel dimension mismatch");
    }
    return detail::update(prior, x, xi, t, horizon, [&](std::size_t, const Vector& y) {
        return kernel.log_transition_density(xi, y, horizon - t) - kernel.log_transition_density(x, y, horizon);
    });
}

/// As above for a Levy driver; every atom must be reachable from x.
inline Posterior posterior_update(const levy::LevyFamily& family, const Vector& x, const Vector& xi, double t,
                                  double horizon, const AtomsPtr& prior) {
    if (static_cast<std::size_t>(x.size()) != family.dim()) {
        throw UsageError("posterior_update: Levy family dimension mismatch");
    }
    std::vector<double> log_norm(prior ? prior->size() : 0);
    for (std::size_t i = 0; i < log_norm.size(); ++i) {
        const Vector gap = prior->points[i] - x;
        log_norm[i] = levy::log_increment_density(family, horizon, gap);
        if (!std::isfinite(log_norm[i])) {
            throw UnsupportedEndpointError("atom " + std::to_string(i) + " " + levy::detail::format_vector(prior->points[i]) +
                                           " is unreachable from " + levy::detail::format_vector(x));
        }
    }
    return detail::update(prior, x, xi, t, horizon, [&](std::size_t i, const Vector& y) {
        return levy::detail::log_increment(family, horizon - t, xi, y) - log_norm[i];
    });
}

template <typename Driver>
Posterior posterior_update(const Driver& driver, const Vector& x, const Vector& xi, double t, double horizon,
                           const FiniteAtoms& prior) {
    return posterior_update(driver, x, xi, t, horizon, std::make_shared<const FiniteAtoms>(prior));
}

/// Monte Carlo estimate of E[S_t | xi_u] against the anchor S_u, and likewise per coordinate of the variance.
struct SupermartingaleVerdict {
    double u = 0.0;
    double t = 0.0;
    double entropy_anchor = 0.0;
    double entropy_mean = 0.0;
    double entropy_se = 0.0;
    Vector variance_anchor;
    Vector variance_mean;
    Vector variance_se;
    bool entropy_pass = false;
    bool variance_pass = false;

    [[nodiscard]] bool pass() const noexcept { return entropy_pass && variance_pass; }
};

/**
 * Supermartingale test for the posterior entropy and conditional variance of
 * a Gaussian bridge started at x. For the pair u < t, a state xi_u is drawn
 * from the bridge law, then `paths` continuations to time t are simulated
 * exactly (endpoint from pi_u, state from the bridge transition). The test
 * passes when each Monte Carlo mean is at most its anchor plus `bands`
 * standard errors.
 */
inline SupermartingaleVerdict supermartingale_check(const gaussian::GaussianKernel& kernel, const Vector& x,
                                                    const AtomsPtr& prior, double u, double t, double horizon,
                                                    std::size_t paths, RngStream& rng, double bands = 4.0) {
    if (!(u >= 0.0) || !(t > u) || !(t < horizon)) {
        throw DomainError("supermartingale_check requires 0 <= u < t < T");
    }
    if (paths < 2) {
        throw UsageError("supermartingale_check needs at least two continuation paths");
    }
    const Vector y0 = prior->points[rng.categorical(prior->weights)];
    const Vector xi_u = gaussian::sample_conditioned_state(kernel, x, y0, u, horizon, rng);
    const Posterior anchor = posterior_update(kernel, x, xi_u, u, horizon, prior);
    const std::vector<double> anchor_w = anchor.weights();

    SupermartingaleVerdict v;
    v.u = u;
    v.t = t;
    v.entropy_anchor = entropy(anchor);
    v.variance_anchor = conditional_variance(anchor);

    const Eigen::Index d = x.size();
    double s_sum = 0.0;
    double s_sq = 0.0;
    Vector v_sum = Vector::Zero(d);
    Vector v_sq = Vector::Zero(d);
    for (std::size_t k = 0; k < paths; ++k) {
        const Vector& y = prior->points[rng.categorical(anchor_w)];
        const auto law = gaussian::bridge_transition(kernel, xi_u, y, u, t, horizon);
        const Vector z = rng.normal_vector(d);
        const Vector xi_t = law.mean + (law.variance.array().sqrt() * z.array()).matrix();
        const Posterior p = posterior_update(kernel, x, xi_t, t, horizon, prior);
        const double s = entropy(p);
        const Vector var = conditional_variance(p);
        s_sum += s;
        s_sq += s * s;
        v_sum += var;
        v_sq += var.array().square().matrix();
    }
    const auto n = static_cast<double>(paths);
    v.entropy_mean = s_sum / n;
    v.entropy_se = std::sqrt(std::max(s_sq / n - v.entropy_mean * v.entropy_mean, 0.0) / (n - 1.0));
    v.variance_mean = v_sum / n;
    v.variance_se = ((v_sq / n - v.variance_mean.array().square().matrix()).cwiseMax(0.0) / (n - 1.0)).cwiseSqrt();
    v.entropy_pass = v.entropy_mean <= v.entropy_anchor + bands * v.entropy_se;
    v.variance_pass =
        (v.variance_mean.array() <= v.variance_anchor.array() + bands * v.variance_se.array()).all();
    return v;
}

} // namespace rbridge::filter
