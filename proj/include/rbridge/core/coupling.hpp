#pragma once

#include <cmath>
#include <utility>
#include <variant>

#include "rbridge/core/distribution.hpp"

namespace rbridge {

struct IndependentProduct {
    Distribution reference;
    Distribution target;
};

/// Index-aligned atom pairs: draw i, return (reference_i, target_i).
struct PairedAtoms {
    FiniteAtoms reference;
    FiniteAtoms target;
};

/// Joint law on (x, y) with marginals reference and target.
class Coupling {
  public:
    using Variant = std::variant<IndependentProduct, PairedAtoms>;

    static Coupling independent(Distribution reference, Distribution target) {
        if (reference.dim() != target.dim()) {
            throw ConfigError("coupling: reference and target dimensions differ");
        }
        return Coupling(IndependentProduct{std::move(reference), std::move(target)});
    }

    static Coupling paired(FiniteAtoms reference, FiniteAtoms target) {
        validate(reference);
        validate(target);
        if (reference.size() != target.size()) {
            throw ConfigError("paired coupling: atom counts differ");
        }
        if (reference.dim() != target.dim()) {
            throw ConfigError("paired coupling: dimensions differ");
        }
        for (std::size_t i = 0; i < reference.size(); ++i) {
            if (std::abs(reference.weights[i] - target.weights[i]) > detail::kWeightSumTolerance) {
                throw ConfigError("paired coupling: weights differ at index " + std::to_string(i));
            }
        }
        return Coupling(PairedAtoms{std::move(reference), std::move(target)});
    }

    [[nodiscard]] const Variant& variant() const noexcept { return variant_; }

    [[nodiscard]] std::size_t dim() const {
        if (const auto* p = std::get_if<IndependentProduct>(&variant_)) {
            return p->reference.dim();
        }
        return std::get<PairedAtoms>(variant_).reference.dim();
    }

    /// Marginal law of the second coordinate.
    [[nodiscard]] Distribution target() const {
        if (const auto* p = std::get_if<IndependentProduct>(&variant_)) {
            return p->target;
        }
        return Distribution::atoms(std::get<PairedAtoms>(variant_).target);
    }

    [[nodiscard]] Distribution reference() const {
        if (const auto* p = std::get_if<IndependentProduct>(&variant_)) {
            return p->reference;
        }
        return Distribution::atoms(std::get<PairedAtoms>(variant_).reference);
    }

  private:
    explicit Coupling(Variant v) : variant_(std::move(v)) {}

    Variant variant_;
};

inline std::pair<Vector, Vector> sample_coupling(const Coupling& coupling, RngStream& rng) {
    if (const auto* p = std::get_if<IndependentProduct>(&coupling.variant())) {
        Vector x = sample(p->reference, rng);
        Vector y = sample(p->target, rng);
        return {std::move(x), std::move(y)};
    }
    const auto& paired = std::get<PairedAtoms>(coupling.variant());
    const std::size_t i = rng.categorical(paired.reference.weights);
    return {paired.reference.points[i], paired.target.points[i]};
}

/// Uniform time on [0, T).
inline double uniform_time(double horizon, RngStream& rng) {
    if (!(horizon > 0.0)) {
        throw ConfigError("uniform_time: T must be positive");
    }
    double t = rng.uniform() * horizon;
    // u * T can round up to T when u is within one ulp of 1
    return t < horizon ? t : std::nextafter(horizon, 0.0);
}

} // namespace rbridge
