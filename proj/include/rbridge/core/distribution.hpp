#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rbridge/core/error.hpp"
#include "rbridge/core/rng.hpp"

namespace rbridge {

struct StandardGaussian {
    std::size_t dim = 1;
};

/// Mixture of axis-aligned Gaussians.
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<Vector> means;
    std::vector<Vector> variances;
};

/// Distribution supported on finitely many points.
struct FiniteAtoms {
    std::vector<Vector> points;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
    [[nodiscard]] std::size_t dim() const noexcept {
        return points.empty() ? 0 : static_cast<std::size_t>(points.front().size());
    }
};

/// Shared immutable atom set; posteriors and simulators hold it by pointer.
using AtomsPtr = std::shared_ptr<const FiniteAtoms>;

namespace detail {

inline constexpr double kWeightSumTolerance = 1e-12;

inline void check_weights(const std::vector<double>& weights, const char* what) {
    if (weights.empty()) {
        throw ConfigError(std::string(what) + ": empty weight list");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ConfigError(std::string(what) + ": weights must be finite and nonnegative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance) {
        throw ConfigError(std::string(what) + ": weights must sum to 1");
    }
}

inline void check_points(const std::vector<Vector>& points, std::size_t dim, const char* what) {
    for (const auto& p : points) {
        if (static_cast<std::size_t>(p.size()) != dim) {
            throw ConfigError(std::string(what) + ": inconsistent point dimension");
        }
        if (!p.allFinite()) {
            throw ConfigError(std::string(what) + ": non-finite coordinate");
        }
    }
}

} // namespace detail

inline void validate(const FiniteAtoms& atoms) {
    if (atoms.points.empty()) {
        throw ConfigError("atoms: empty support");
    }
    if (atoms.points.size() != atoms.weights.size()) {
        throw ConfigError("atoms: point and weight counts differ");
    }
    if (atoms.dim() == 0) {
        throw ConfigError("atoms: zero dimension");
    }
    detail::check_points(atoms.points, atoms.dim(), "atoms");
    detail::check_weights(atoms.weights, "atoms");
}

inline void validate(const GaussianMixture& mix) {
    if (mix.means.empty() || mix.means.size() != mix.weights.size() || mix.variances.size() != mix.weights.size()) {
        throw ConfigError("mixture: weights, means and variances must have equal nonzero length");
    }
    const auto dim = static_cast<std::size_t>(mix.means.front().size());
    if (dim == 0) {
        throw ConfigError("mixture: zero dimension");
    }
    detail::check_points(mix.means, dim, "mixture means");
    detail::check_points(mix.variances, dim, "mixture variances");
    for (const auto& v : mix.variances) {
        if (!(v.array() > 0.0).all()) {
            throw ConfigError("mixture: variances must be strictly positive");
        }
    }
    detail::check_weights(mix.weights, "mixture");
}

/// Reference or target law: standard Gaussian, Gaussian mixture, or finite atoms.
class Distribution {
  public:
    using Variant = std::variant<StandardGaussian, GaussianMixture, FiniteAtoms>;

    static Distribution standard_gaussian(std::size_t dim) {
        if (dim == 0) {
            throw ConfigError("standard Gaussian: zero dimension");
        }
        return Distribution(StandardGaussian{dim});
    }

    static Distribution mixture(GaussianMixture mix) {
        validate(mix);
        return Distribution(std::move(mix));
    }

    static Distribution atoms(FiniteAtoms atoms) {
        validate(atoms);
        return Distribution(std::move(atoms));
    }

    static Distribution dirac(Vector point) { return atoms(FiniteAtoms{{std::move(point)}, {1.0}}); }

    /// Single Gaussian N(mean, diag(variance)).
    static Distribution gaussian(Vector mean, Vector variance) {
        return mixture(GaussianMixture{{1.0}, {std::move(mean)}, {std::move(variance)}});
    }

    [[nodiscard]] std::size_t dim() const {
        return std::visit(
            [](const auto& d) -> std::size_t {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, StandardGaussian>) {
                    return d.dim;
                } else if constexpr (std::is_same_v<T, GaussianMixture>) {
                    return static_cast<std::size_t>(d.means.front().size());
                } else {
                    return d.dim();
                }
            },
            variant_);
    }

    [[nodiscard]] const Variant& variant() const noexcept { return variant_; }
    [[nodiscard]] bool is_atoms() const noexcept { return std::holds_alternative<FiniteAtoms>(variant_); }
    [[nodiscard]] const FiniteAtoms& as_atoms() const {
        if (!is_atoms()) {
            throw ConfigError("distribution is not a finite atom set");
        }
        return std::get<FiniteAtoms>(variant_);
    }

    /// Mean vector of the law.
    [[nodiscard]] Vector mean() const {
        return std::visit(
            [this](const auto& d) -> Vector {
                using T = std::decay_t<decltype(d)>;
                Vector m = Vector::Zero(static_cast<Eigen::Index>(dim()));
                if constexpr (std::is_same_v<T, GaussianMixture>) {
                    for (std::size_t k = 0; k < d.weights.size(); ++k) {
                        m += d.weights[k] * d.means[k];
                    }
                } else if constexpr (std::is_same_v<T, FiniteAtoms>) {
                    for (std::size_t k = 0; k < d.weights.size(); ++k) {
                        m += d.weights[k] * d.points[k];
                    }
                }
                return m;
            },
            variant_);
    }

    /// Per-coordinate variance of the law.
    [[nodiscard]] Vector variance() const {
        return std::visit(
            [this](const auto& d) -> Vector {
                using T = std::decay_t<decltype(d)>;
                const auto n = static_cast<Eigen::Index>(dim());
                if constexpr (std::is_same_v<T, StandardGaussian>) {
                    return Vector::Ones(n);
                } else {
                    const Vector mu = mean();
                    Vector v = Vector::Zero(n);
                    for (std::size_t k = 0; k < d.weights.size(); ++k) {
                        if constexpr (std::is_same_v<T, GaussianMixture>) {
                            v += d.weights[k] * (d.variances[k].array() + (d.means[k] - mu).array().square()).matrix();
                        } else {
                            v += d.weights[k] * (d.points[k] - mu).array().square().matrix();
                        }
                    }
                    return v;
                }
            },
            variant_);
    }

  private:
    explicit Distribution(Variant v) : variant_(std::move(v)) {}

    Variant variant_;
};

/// Draw one point from `dist`.
inline Vector sample(const Distribution& dist, RngStream& rng) {
    return std::visit(
        [&rng](const auto& d) -> Vector {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, StandardGaussian>) {
                return rng.normal_vector(static_cast<Eigen::Index>(d.dim));
            } else if constexpr (std::is_same_v<T, GaussianMixture>) {
                const std::size_t k = rng.categorical(d.weights);
                const Eigen::Index n = d.means[k].size();
                Vector z = rng.normal_vector(n);
                return d.means[k] + (d.variances[k].array().sqrt() * z.array()).matrix();
            } else {
                return d.points[rng.categorical(d.weights)];
            }
        },
        dist.variant());
}

} // namespace rbridge
