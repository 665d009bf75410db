#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/core/rng.hpp"
#include "rbridge/posterior.hpp"

namespace rbridge::levy {

/// Gamma subordinator with E[Z_t] = t and Var[Z_t] = t / kappa.
struct GammaSubordinator {
    double kappa = 1.0;
};

/// Stable-1/2 subordinator (first passage of Brownian motion over activity * t).
struct StableHalf {
    double activity = std::numbers::sqrt2;
};

/// Counting process with unit jumps at the given rate.
struct PoissonCounting {
    double rate = 1.0;
};

/// Descriptive Levy-Khintchine triplet; not used in any computation.
struct LevyTriplet {
    Vector alpha;
    Eigen::MatrixXd beta;
    std::string eta;
};

/**
 * Levy driver with mutually independent, identically distributed coordinates.
 * All densities are evaluated in log space.
 */
class LevyFamily {
  public:
    using Variant = std::variant<GammaSubordinator, StableHalf, PoissonCounting>;

    static LevyFamily gamma(double kappa, std::size_t dim) {
        if (!(kappa > 0.0) || !std::isfinite(kappa)) {
            throw ConfigError("gamma subordinator: kappa must be positive");
        }
        return LevyFamily(GammaSubordinator{kappa}, dim);
    }

    static LevyFamily stable_half(double activity, std::size_t dim) {
        if (!(activity > 0.0) || !std::isfinite(activity)) {
            throw ConfigError("stable-1/2 subordinator: activity must be positive");
        }
        return LevyFamily(StableHalf{activity}, dim);
    }

    static LevyFamily poisson(double rate, std::size_t dim) {
        if (!(rate > 0.0) || !std::isfinite(rate)) {
            throw ConfigError("Poisson counting process: rate must be positive");
        }
        return LevyFamily(PoissonCounting{rate}, dim);
    }

    [[nodiscard]] const Variant& variant() const noexcept { return variant_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool is_discrete() const noexcept { return std::holds_alternative<PoissonCounting>(variant_); }
    [[nodiscard]] const std::optional<LevyTriplet>& triplet() const noexcept { return triplet_; }

    LevyFamily& with_triplet(LevyTriplet triplet) {
        triplet_ = std::move(triplet);
        return *this;
    }

    /// log f_t(w) for one coordinate; -inf outside the support.
    [[nodiscard]] double log_density_1d(double t, double w) const {
        constexpr double kNegInf = -std::numeric_limits<double>::infinity();
        return std::visit(
            [t, w](const auto& fam) -> double {
                using F = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<F, GammaSubordinator>) {
                    if (!(w > 0.0)) {
                        return kNegInf;
                    }
                    const double shape = fam.kappa * t;
                    return shape * std::log(fam.kappa) - std::lgamma(shape) + (shape - 1.0) * std::log(w) -
                           fam.kappa * w;
                } else if constexpr (std::is_same_v<F, StableHalf>) {
                    if (!(w > 0.0)) {
                        return kNegInf;
                    }
                    const double c = fam.activity;
                    return std::log(c / std::sqrt(2.0 * std::numbers::pi)) + std::log(t) - 1.5 * std::log(w) -
                           c * c * t * t / (2.0 * w);
                } else {
                    const double k = std::round(w);
                    if (!(k >= 0.0) || std::abs(w - k) > 1e-9) {
                        return kNegInf;
                    }
                    const double mean = fam.rate * t;
                    return k == 0.0 ? -mean : -mean + k * std::log(mean) - std::lgamma(k + 1.0);
                }
            },
            variant_);
    }

  private:
    LevyFamily(Variant v, std::size_t dim) : variant_(std::move(v)), dim_(dim) {
        if (dim == 0) {
            throw ConfigError("Levy family: zero dimension");
        }
    }

    Variant variant_;
    std::size_t dim_;
    std::optional<LevyTriplet> triplet_;
};

namespace detail {

inline void check_dim(const LevyFamily& family, const Vector& v, const char* what) {
    if (static_cast<std::size_t>(v.size()) != family.dim()) {
        throw UsageError(std::string(what) + ": dimension does not match the Levy family");
    }
}

inline std::string format_vector(const Vector& v) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) {
            s += ", ";
        }
        s += std::to_string(v[i]);
    }
    return s + ")";
}

/// log f_t(to - from) summed over coordinates.
inline double log_increment(const LevyFamily& family, double t, const Vector& from, const Vector& to) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < from.size(); ++j) {
        acc += family.log_density_1d(t, to[j] - from[j]);
        if (acc == -std::numeric_limits<double>::infinity()) {
            return acc;
        }
    }
    return acc;
}

/**
 * Tabulated inverse CDF of a density on (0, 1) given through its log. The
 * grid is clustered geometrically at both ends and bisected wherever Simpson
 * and trapezoid cell masses disagree by more than the tolerance.
 */
class InverseCdfTable {
  public:
    template <typename LogDensity>
    static InverseCdfTable build(LogDensity&& log_density, double tolerance = 1e-6) {
        std::vector<double> nodes{0.0, 1.0};
        for (int j = 1; j < 64; ++j) {
            nodes.push_back(j / 64.0);
        }
        for (int k = 1; k <= 64; ++k) {
            const double d = 0.5 * std::pow(10.0, -k / 4.0);
            nodes.push_back(d);
            nodes.push_back(1.0 - d);
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

        auto eval = [&](double u) {
            if (u <= 0.0 || u >= 1.0) {
                return -std::numeric_limits<double>::infinity();
            }
            return static_cast<double>(log_density(u));
        };
        std::vector<double> logs(nodes.size());
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            logs[i] = eval(nodes[i]);
            peak = std::max(peak, logs[i]);
        }
        if (!std::isfinite(peak)) {
            throw DomainError("inverse CDF: density vanishes on the whole grid");
        }
        double coarse_mass = 0.0;
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            coarse_mass += 0.5 * (nodes[i] - nodes[i - 1]) * (std::exp(logs[i] - peak) + std::exp(logs[i - 1] - peak));
        }
        const double cell_tolerance = tolerance * 1e-3 * coarse_mass;

        InverseCdfTable table;
        table.u_.push_back(nodes.front());
        table.f_.push_back(std::exp(logs.front() - peak));
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            table.refine(eval, peak, nodes[i - 1], std::exp(logs[i - 1] - peak), nodes[i],
                         std::exp(logs[i] - peak), cell_tolerance, 0);
        }
        table.cdf_.assign(table.u_.size(), 0.0);
        for (std::size_t i = 1; i < table.u_.size(); ++i) {
            table.cdf_[i] = table.cdf_[i - 1] + 0.5 * (table.u_[i] - table.u_[i - 1]) * (table.f_[i] + table.f_[i - 1]);
        }
        const double total = table.cdf_.back();
        if (!(total > 0.0) || !std::isfinite(total)) {
            throw DomainError("inverse CDF: density has no mass");
        }
        for (double& c : table.cdf_) {
            c /= total;
        }
        for (double& f : table.f_) {
            f /= total;
        }
        return table;
    }

    /// u with CDF(u) = p, exact for the piecewise-linear density.
    [[nodiscard]] double quantile(double p) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), p);
        if (it == cdf_.begin()) {
            return u_.front();
        }
        if (it == cdf_.end()) {
            return u_.back();
        }
        const auto i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
        const double h = u_[i + 1] - u_[i];
        const double mass = p - cdf_[i];
        const double f0 = f_[i];
        const double f1 = f_[i + 1];
        // solve f0 x + (f1 - f0) x^2 / (2h) = mass on [0, h]
        const double disc = f0 * f0 + 2.0 * (f1 - f0) * mass / h;
        const double denom = f0 + std::sqrt(std::max(disc, 0.0));
        const double x = denom > 0.0 ? 2.0 * mass / denom : 0.0;
        return u_[i] + std::clamp(x, 0.0, h);
    }

    [[nodiscard]] std::size_t size() const noexcept { return u_.size(); }

  private:
    template <typename Eval>
    void refine(Eval& eval, double peak, double a, double fa, double b, double fb, double tol, int depth) {
        const double m = 0.5 * (a + b);
        const double fm = std::exp(eval(m) - peak);
        const double trapezoid = 0.5 * (b - a) * (fa + fb);
        const double simpson = (b - a) * (fa + 4.0 * fm + fb) / 6.0;
        if (depth < 48 && std::abs(simpson - trapezoid) > tol && u_.size() < kMaxNodes) {
            refine(eval, peak, a, fa, m, fm, tol, depth + 1);
            refine(eval, peak, m, fm, b, fb, tol, depth + 1);
            return;
        }
        u_.push_back(m);
        f_.push_back(fm);
        u_.push_back(b);
        f_.push_back(fb);
    }

    static constexpr std::size_t kMaxNodes = 1u << 18;

    std::vector<double> u_;
    std::vector<double> f_;
    std::vector<double> cdf_;
};

/// Keeps a subordinator state strictly below an unreached endpoint.
inline double clamp_below(double z, double r, double y) {
    if (z >= y) {
        return std::max(r, std::nextafter(y, r));
    }
    return std::max(z, r);
}

} // namespace detail

/// Coordinatewise sum of log f_t(w_j).
inline double log_increment_density(const LevyFamily& family, double t, const Vector& w) {
    if (!(t > 0.0)) {
        throw DomainError("log_increment_density requires t > 0");
    }
    detail::check_dim(family, w, "log_increment_density");
    double acc = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        acc += family.log_density_1d(t, w[j]);
    }
    return acc;
}

/// log of f_t(z - x) f_{T-t}(y - z) / f_T(y - x), the bridge density at time t.
inline double log_bridge_density(const LevyFamily& family, const Vector& x, const Vector& y, double t, double horizon,
                                 const Vector& z) {
    detail::check_dim(family, x, "log_bridge_density");
    detail::check_dim(family, y, "log_bridge_density");
    detail::check_dim(family, z, "log_bridge_density");
    if (!(t > 0.0) || !(t < horizon)) {
        throw DomainError("log_bridge_density requires 0 < t < T");
    }
    const double log_norm = detail::log_increment(family, horizon, x, y);
    if (!std::isfinite(log_norm)) {
        throw UnsupportedEndpointError("endpoint " + detail::format_vector(y) + " is unreachable from " +
                                       detail::format_vector(x));
    }
    const double head = detail::log_increment(family, t, x, z);
    const double tail = detail::log_increment(family, horizon - t, z, y);
    if (!std::isfinite(head) || !std::isfinite(tail)) {
        return -std::numeric_limits<double>::infinity();
    }
    return head + tail - log_norm;
}

/// log of the time-t marginal density when the endpoint is drawn from `target`.
inline double log_marginal_mixture_density(const LevyFamily& family, const Vector& x, const FiniteAtoms& target,
                                           double t, double horizon, const Vector& z) {
    validate(target);
    std::vector<double> terms(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (!std::isfinite(detail::log_increment(family, horizon, x, target.points[i]))) {
            throw UnsupportedEndpointError("atom " + std::to_string(i) + " " +
                                           detail::format_vector(target.points[i]) + " is unreachable from " +
                                           detail::format_vector(x));
        }
        terms[i] = target.weights[i] > 0.0
                       ? std::log(target.weights[i]) + log_bridge_density(family, x, target.points[i], t, horizon, z)
                       : -std::numeric_limits<double>::infinity();
    }
    const double best = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(best)) {
        return best;
    }
    double acc = 0.0;
    for (double v : terms) {
        acc += std::exp(v - best);
    }
    return best + std::log(acc);
}

/// Doob h-transform kernel log[h_t(z; y) / h_s(r; y) f_{t-s}(z - r)], h_t(z; y) = f_{T-t}(y - z).
inline double h_transition_logdensity(const LevyFamily& family, const Vector& r, const Vector& z, const Vector& y,
                                      double s, double t, double horizon) {
    detail::check_dim(family, r, "h_transition_logdensity");
    detail::check_dim(family, z, "h_transition_logdensity");
    detail::check_dim(family, y, "h_transition_logdensity");
    if (!(s >= 0.0) || !(t > s) || !(t < horizon)) {
        throw DomainError("h_transition_logdensity requires 0 <= s < t < T");
    }
    const double h_s = detail::log_increment(family, horizon - s, r, y);
    if (!std::isfinite(h_s)) {
        throw UnsupportedEndpointError("state " + detail::format_vector(r) + " cannot reach " +
                                       detail::format_vector(y));
    }
    const double h_t = detail::log_increment(family, horizon - t, z, y);
    const double step = detail::log_increment(family, t - s, r, z);
    if (!std::isfinite(h_t) || !std::isfinite(step)) {
        return -std::numeric_limits<double>::infinity();
    }
    return h_t - h_s + step;
}

/**
 * Exact draw of the bridge state at time t given state r at time s and
 * endpoint y. Gamma: r + (y - r) Beta(kappa (t - s), kappa (T - t)).
 * Poisson: r + Binomial(y - r, (t - s) / (T - s)). Stable-1/2: tabulated
 * inverse CDF of the h-transform kernel. At t = T the endpoint is returned.
 */
inline Vector sample_bridge_increment(const LevyFamily& family, const Vector& r, const Vector& y, double s, double t,
                                      double horizon, RngStream& rng) {
    detail::check_dim(family, r, "sample_bridge_increment");
    detail::check_dim(family, y, "sample_bridge_increment");
    if (!(s >= 0.0) || !(t > s) || !(t <= horizon) || !(s < horizon)) {
        throw DomainError("sample_bridge_increment requires 0 <= s < t <= T");
    }
    for (Eigen::Index j = 0; j < r.size(); ++j) {
        if (!std::isfinite(family.log_density_1d(horizon - s, y[j] - r[j]))) {
            throw UnsupportedEndpointError("state " + detail::format_vector(r) + " cannot reach " +
                                           detail::format_vector(y));
        }
    }
    if (t == horizon) {
        return y;
    }
    Vector z(r.size());
    std::visit(
        [&](const auto& fam) {
            using F = std::decay_t<decltype(fam)>;
            for (Eigen::Index j = 0; j < r.size(); ++j) {
                const double gap = y[j] - r[j];
                if constexpr (std::is_same_v<F, GammaSubordinator>) {
                    const auto [b, one_minus_b] = rng.beta_pair(fam.kappa * (t - s), fam.kappa * (horizon - t));
                    const double raw = b <= 0.5 ? r[j] + gap * b : y[j] - gap * one_minus_b;
                    z[j] = detail::clamp_below(raw, r[j], y[j]);
                } else if constexpr (std::is_same_v<F, PoissonCounting>) {
                    const auto jumps = static_cast<std::int64_t>(std::llround(gap));
                    z[j] = r[j] + static_cast<double>(rng.binomial(jumps, (t - s) / (horizon - s)));
                } else {
                    const auto table = detail::InverseCdfTable::build([&](double u) {
                        return family.log_density_1d(t - s, gap * u) + family.log_density_1d(horizon - t, gap * (1.0 - u));
                    });
                    const double u = table.quantile(rng.uniform());
                    z[j] = detail::clamp_below(r[j] + gap * u, r[j], y[j]);
                }
            }
        },
        family.variant());
    return z;
}

/**
 * One step of the Levy random bridge toward a finite-support target: draw an
 * endpoint from the posterior at (s, r), then move by the h-transform kernel.
 */
inline Vector sample_generative_step(const LevyFamily& family, const Vector& r, const filter::Posterior& posterior,
                                     double s, double t, double horizon, RngStream& rng) {
    if (posterior.size() == 0) {
        throw FilteringCollapseError("generative step from an empty posterior");
    }
    const std::vector<double> w = posterior.weights();
    const std::size_t k = rng.categorical(w);
    return sample_bridge_increment(family, r, posterior.atoms().points[k], s, t, horizon, rng);
}

} // namespace rbridge::levy
