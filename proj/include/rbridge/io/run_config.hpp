#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rbridge/approximator.hpp"
#include "rbridge/core/coupling.hpp"
#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/core/time_grid.hpp"
#include "rbridge/gaussian_bridge.hpp"
#include "rbridge/io/config.hpp"
#include "rbridge/levy_bridge.hpp"

namespace rbridge::io {

using Driver = std::variant<gaussian::GaussianKernel, levy::LevyFamily>;

/// Typed view of a run configuration; see `known_config_keys` for the schema.
struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t dim = 2;
    Distribution reference = Distribution::standard_gaussian(2);
    Distribution target = Distribution::standard_gaussian(2);
    std::string coupling_kind = "independent";
    std::optional<Coupling> coupling;
    std::string driver_kind = "brownian";
    std::optional<Driver> driver;
    double horizon = 0.1;
    double epsilon = 1e-4;
    std::size_t grid_steps = 100;
    nn::TrainConfig train;
    std::size_t validation_size = 10000;
    std::size_t sim_paths = 10000;
    std::string sim_mode = "exact-filter";
    std::size_t trajectory_paths = 10;
    std::size_t noise_refinement = 1;
    std::size_t permutations = 0;
    std::size_t diagnose_paths = 1000;
    std::size_t check_paths = 10000;
    std::vector<Vector> diagnose_pairs; ///< (u/T, t/T) fractions

    [[nodiscard]] TimeGrid grid() const { return TimeGrid::uniform(horizon, grid_steps, epsilon); }
    [[nodiscard]] TimeGrid grid(std::size_t steps) const { return TimeGrid::uniform(horizon, steps, epsilon); }

    [[nodiscard]] bool gaussian_driver() const {
        return driver && std::holds_alternative<gaussian::GaussianKernel>(*driver);
    }
    [[nodiscard]] const gaussian::GaussianKernel& kernel() const {
        if (!gaussian_driver()) {
            throw ConfigError("driver.kind '" + driver_kind + "' is not a Gaussian driver");
        }
        return std::get<gaussian::GaussianKernel>(*driver);
    }
    [[nodiscard]] const levy::LevyFamily& family() const {
        if (!driver || !std::holds_alternative<levy::LevyFamily>(*driver)) {
            throw ConfigError("driver.kind '" + driver_kind + "' is not a Levy family");
        }
        return std::get<levy::LevyFamily>(*driver);
    }
    /// Driver scale for Euler simulation; zeros for Levy drivers.
    [[nodiscard]] Vector sigma() const {
        return gaussian_driver() ? kernel().sigma() : Vector::Zero(static_cast<Eigen::Index>(dim));
    }
};

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k{"seed", "dim", "coupling.kind", "driver.kind", "driver.sigma", "driver.theta",
                                "driver.kappa", "driver.c", "driver.rate", "bridge.T", "grid.steps", "grid.epsilon",
                                "train.steps", "train.batch", "train.lr", "train.checkpoint_interval",
                                "train.max_support_retries", "model.width", "model.layers", "model.time_features",
                                "model.activation", "validation.size", "sim.paths", "sim.mode", "sim.trajectory_paths",
                                "sim.noise_refinement", "eval.permutations", "diagnose.paths", "diagnose.check_paths",
                                "diagnose.pairs"};
        for (const std::string prefix : {"reference.", "target."}) {
            for (const char* field : {"kind", "points", "point", "weights", "means", "variances", "mean", "variance",
                                      "modes", "radius", "std"}) {
                k.insert(prefix + field);
            }
        }
        return k;
    }();
    return keys;
}

namespace detail {

inline std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

inline Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Eight-mode style ring: `modes` Gaussians of std `std` evenly spaced on a circle.
inline GaussianMixture ring_mixture(std::size_t modes, double radius, double std_dev) {
    if (modes == 0 || !(radius >= 0.0) || !(std_dev > 0.0)) {
        throw ConfigError("ring target needs modes >= 1, radius >= 0 and std > 0");
    }
    GaussianMixture mix;
    for (std::size_t k = 0; k < modes; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(modes);
        Vector m(2);
        m << radius * std::cos(a), radius * std::sin(a);
        mix.means.push_back(m);
        mix.variances.push_back(Vector::Constant(2, std_dev * std_dev));
    }
    mix.weights = uniform_weights(modes);
    return mix;
}

inline Distribution read_distribution(KeyValueConfig& kv, const std::string& prefix, const std::string& default_kind,
                                      std::size_t dim) {
    const std::string kind = kv.get_string(prefix + "kind", default_kind);
    if (kind == "gaussian") {
        return Distribution::standard_gaussian(dim);
    }
    if (kind == "normal") {
        const auto mean = kv.get_list(prefix + "mean", std::vector<double>(dim, 0.0));
        const auto var = kv.get_list(prefix + "variance", std::vector<double>(mean.size(), 1.0));
        if (mean.size() != var.size()) {
            throw ConfigError(prefix + "mean and " + prefix + "variance have different lengths");
        }
        return Distribution::gaussian(to_vector(mean), to_vector(var));
    }
    if (kind == "dirac") {
        return Distribution::dirac(to_vector(kv.get_list(prefix + "point", std::vector<double>(dim, 0.0))));
    }
    if (kind == "atoms") {
        FiniteAtoms atoms;
        atoms.points = kv.get_points(prefix + "points", {});
        if (atoms.points.empty()) {
            throw ConfigError(prefix + "points is required for kind = atoms");
        }
        atoms.weights = kv.get_list(prefix + "weights", uniform_weights(atoms.points.size()));
        return Distribution::atoms(std::move(atoms));
    }
    if (kind == "mixture") {
        GaussianMixture mix;
        mix.means = kv.get_points(prefix + "means", {});
        if (mix.means.empty()) {
            throw ConfigError(prefix + "means is required for kind = mixture");
        }
        std::vector<Vector> ones(mix.means.size(), Vector::Ones(mix.means.front().size()));
        mix.variances = kv.get_points(prefix + "variances", ones);
        mix.weights = kv.get_list(prefix + "weights", uniform_weights(mix.means.size()));
        return Distribution::mixture(std::move(mix));
    }
    if (kind == "ring") {
        if (dim != 2) {
            throw ConfigError(prefix + "kind = ring is two-dimensional; set dim = 2");
        }
        return Distribution::mixture(ring_mixture(kv.get_size(prefix + "modes", 8), kv.get_double(prefix + "radius", 4.0),
                                                  kv.get_double(prefix + "std", 0.5)));
    }
    throw ConfigError("unknown " + prefix + "kind '" + kind + "' (expected gaussian, normal, dirac, atoms, mixture or ring)");
}

} // namespace detail

/// Reads and validates every key; unknown keys are an error.
inline RunConfig build_run_config(KeyValueConfig& kv) {
    kv.check_known(known_config_keys());
    RunConfig rc;
    rc.seed = kv.get_u64("seed", 0);
    rc.dim = kv.get_size("dim", 2);
    if (rc.dim == 0) {
        throw ConfigError("dim must be positive");
    }
    rc.reference = detail::read_distribution(kv, "reference.", "gaussian", rc.dim);
    rc.target = detail::read_distribution(kv, "target.", "ring", rc.dim);
    if (rc.reference.dim() != rc.target.dim()) {
        throw ConfigError("reference and target dimensions differ (" + std::to_string(rc.reference.dim()) + " vs " +
                          std::to_string(rc.target.dim()) + ")");
    }
    rc.dim = rc.target.dim();

    rc.coupling_kind = kv.get_string("coupling.kind", "independent");
    if (rc.coupling_kind == "independent") {
        rc.coupling = Coupling::independent(rc.reference, rc.target);
    } else if (rc.coupling_kind == "paired") {
        if (!rc.reference.is_atoms() || !rc.target.is_atoms()) {
            throw ConfigError("coupling.kind = paired requires atom reference and target");
        }
        rc.coupling = Coupling::paired(rc.reference.as_atoms(), rc.target.as_atoms());
    } else {
        throw ConfigError("unknown coupling.kind '" + rc.coupling_kind + "' (expected independent or paired)");
    }

    rc.horizon = kv.get_double("bridge.T", 0.1);
    if (!(rc.horizon > 0.0) || !std::isfinite(rc.horizon)) {
        throw ConfigError("bridge.T must be positive");
    }
    rc.epsilon = kv.get_double("grid.epsilon", TimeGrid::default_epsilon(rc.horizon));
    rc.grid_steps = kv.get_size("grid.steps", 100);
    (void)rc.grid(); // validates epsilon and step count

    const auto d = static_cast<Eigen::Index>(rc.dim);
    rc.driver_kind = kv.get_string("driver.kind", "brownian");
    if (rc.driver_kind == "brownian" || rc.driver_kind == "ou") {
        auto sigma = kv.get_list("driver.sigma", {1.0});
        Vector s = sigma.size() == 1 ? Vector::Constant(d, sigma.front()) : detail::to_vector(sigma);
        if (s.size() != d) {
            throw ConfigError("driver.sigma must have 1 or dim entries");
        }
        if (rc.driver_kind == "brownian") {
            rc.driver = gaussian::GaussianKernel::scaled_brownian(std::move(s));
        } else {
            rc.driver = gaussian::GaussianKernel::ornstein_uhlenbeck(kv.get_double("driver.theta", 1.0), std::move(s));
        }
    } else if (rc.driver_kind == "gamma") {
        rc.driver = levy::LevyFamily::gamma(kv.get_double("driver.kappa", 1.0), rc.dim);
    } else if (rc.driver_kind == "stable") {
        rc.driver = levy::LevyFamily::stable_half(kv.get_double("driver.c", std::numbers::sqrt2), rc.dim);
    } else if (rc.driver_kind == "poisson") {
        rc.driver = levy::LevyFamily::poisson(kv.get_double("driver.rate", 1.0), rc.dim);
    } else {
        throw ConfigError("unknown driver.kind '" + rc.driver_kind + "' (expected brownian, ou, gamma, stable or poisson)");
    }

    rc.train.steps = kv.get_size("train.steps", 40000);
    rc.train.batch_size = kv.get_size("train.batch", 128);
    rc.train.learning_rate = kv.get_double("train.lr", 1e-3);
    rc.train.checkpoint_interval = kv.get_size("train.checkpoint_interval", 1000);
    rc.train.max_support_retries = kv.get_size("train.max_support_retries", 100);
    rc.train.horizon = rc.horizon;
    rc.train.model.dim = rc.dim;
    const std::size_t width = kv.get_size("model.width", 128);
    const std::size_t layers = kv.get_size("model.layers", 3);
    rc.train.model.hidden.assign(layers, width);
    rc.train.model.time_frequencies = kv.get_size("model.time_features", 8);
    rc.train.model.activation = nn::parse_activation(kv.get_string("model.activation", "silu"));
    rc.train.validate();

    rc.validation_size = kv.get_size("validation.size", 10000);
    rc.sim_paths = kv.get_size("sim.paths", 10000);
    rc.sim_mode = kv.get_string("sim.mode", "exact-filter");
    rc.trajectory_paths = kv.get_size("sim.trajectory_paths", 10);
    rc.noise_refinement = kv.get_size("sim.noise_refinement", 1);
    if (rc.noise_refinement == 0) {
        throw ConfigError("sim.noise_refinement must be at least 1");
    }
    rc.permutations = kv.get_size("eval.permutations", 0);
    rc.diagnose_paths = kv.get_size("diagnose.paths", 1000);
    rc.check_paths = kv.get_size("diagnose.check_paths", 10000);
    const Vector p0 = (Vector(2) << 0.0, 0.5).finished();
    const Vector p1 = (Vector(2) << 0.25, 0.5).finished();
    const Vector p2 = (Vector(2) << 0.5, 0.9).finished();
    const Vector p3 = (Vector(2) << 0.75, 0.99).finished();
    rc.diagnose_pairs = kv.get_points("diagnose.pairs", {p0, p1, p2, p3});
    for (const auto& p : rc.diagnose_pairs) {
        if (p.size() != 2 || !(p[0] >= 0.0) || !(p[1] > p[0]) || !(p[1] < 1.0)) {
            throw ConfigError("diagnose.pairs entries must be 'u,t' fractions with 0 <= u < t < 1");
        }
    }
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    auto kv = KeyValueConfig::load(path);
    return build_run_config(kv);
}

} // namespace rbridge::io
