#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rbridge/eval.hpp"
#include "rbridge/filter.hpp"
#include "rbridge/levy_bridge.hpp"
#include "support/oracles.hpp"

using namespace rbridge;
using levy::LevyFamily;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

// stable-1/2 density in its original normalization, t / (sqrt(pi) w^{3/2}) e^{-t^2/w}
double stable_paper_density(double t, double w) {
    return std::exp(std::log(t) - 0.5 * std::log(std::numbers::pi) - 1.5 * std::log(w) - t * t / w);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate(f, a, b, 1e-13);
}

} // namespace

TEST(LevyDensity, PointValues) {
    EXPECT_NEAR(levy::log_increment_density(LevyFamily::gamma(1.0, 1), 1.0, scalar(1.0)), -1.0, 1e-14);
    EXPECT_NEAR(levy::log_increment_density(LevyFamily::stable_half(std::numbers::sqrt2, 1), 1.0, scalar(1.0)),
                -0.5 * std::log(std::numbers::pi) - 1.0, 1e-14);
    EXPECT_NEAR(levy::log_increment_density(LevyFamily::poisson(1.0, 1), 1.0, scalar(0.0)), -1.0, 1e-15);
}

TEST(LevyDensity, DefaultActivityReproducesOriginalStableForm) {
    const auto f = LevyFamily::stable_half(levy::StableHalf{}.activity, 1);
    for (double t : {0.1, 0.5, 2.0}) {
        for (double w : {0.01, 0.3, 1.0, 7.0}) {
            EXPECT_NEAR(levy::log_increment_density(f, t, scalar(w)), std::log(stable_paper_density(t, w)), 1e-12);
        }
    }
}

TEST(LevyDensity, GammaMeanIsTime) {
    // E[Z_t] = t with variance t / kappa
    const auto f = LevyFamily::gamma(2.5, 1);
    const double t = 0.7;
    auto pdf = [&](double w) { return std::exp(levy::log_increment_density(f, t, scalar(w))); };
    EXPECT_NEAR(integrate(pdf, 0.0, 60.0), 1.0, 1e-9);
    EXPECT_NEAR(integrate([&](double w) { return w * pdf(w); }, 0.0, 60.0), t, 1e-9);
    EXPECT_NEAR(integrate([&](double w) { return (w - t) * (w - t) * pdf(w); }, 0.0, 60.0), t / 2.5, 1e-9);
}

TEST(LevyDensity, SupportAndCoordinateSum) {
    const auto g = LevyFamily::gamma(1.0, 2);
    EXPECT_EQ(levy::log_increment_density(g, 1.0, vec({1.0, -0.5})), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(levy::log_increment_density(g, 1.0, vec({1.0, 0.0})), -std::numeric_limits<double>::infinity());
    EXPECT_NEAR(levy::log_increment_density(g, 1.0, vec({1.0, 2.0})), -3.0, 1e-14);
    const auto p = LevyFamily::poisson(2.0, 1);
    EXPECT_EQ(levy::log_increment_density(p, 1.0, scalar(1.5)), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(levy::log_increment_density(p, 1.0, scalar(-1.0)), -std::numeric_limits<double>::infinity());
    EXPECT_NEAR(levy::log_increment_density(p, 1.0, scalar(3.0)), -2.0 + 3.0 * std::log(2.0) - std::log(6.0), 1e-14);
}

TEST(LevyDensity, Errors) {
    EXPECT_THROW(LevyFamily::gamma(0.0, 1), ConfigError);
    EXPECT_THROW(LevyFamily::stable_half(-1.0, 1), ConfigError);
    EXPECT_THROW(LevyFamily::poisson(1.0, 0), ConfigError);
    const auto g = LevyFamily::gamma(1.0, 2);
    EXPECT_THROW(levy::log_increment_density(g, 0.0, vec({1.0, 1.0})), DomainError);
    EXPECT_THROW(levy::log_increment_density(g, 1.0, scalar(1.0)), UsageError);
}

TEST(LevyFamily, StoresTripletAsMetadata) {
    auto f = LevyFamily::gamma(1.0, 2);
    EXPECT_FALSE(f.triplet().has_value());
    f.with_triplet({vec({0.0, 0.0}), Eigen::MatrixXd::Zero(2, 2), "kappa e^{-kappa w} / w dw"});
    ASSERT_TRUE(f.triplet().has_value());
    EXPECT_EQ(f.triplet()->eta, "kappa e^{-kappa w} / w dw");
    EXPECT_FALSE(f.is_discrete());
    EXPECT_TRUE(LevyFamily::poisson(1.0, 1).is_discrete());
}

TEST(LevyBridgeDensity, GammaUnitBridgeIsBeta) {
    const auto f = LevyFamily::gamma(1.0, 1);
    for (double t : {0.1, 0.3, 0.5, 0.9}) {
        for (double u : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.999}) {
            const double lhs = levy::log_bridge_density(f, scalar(0.0), scalar(1.0), t, 1.0, scalar(u));
            EXPECT_NEAR(lhs, std::log(oracle::beta_pdf(u, t, 1.0 - t)), 1e-10) << t << " " << u;
        }
    }
    // for small 1 - t most of the mass lies within 1e-16 of y, out of reach of any
    // quadrature in z; normalization is checked where the y-end shape is >= 0.6
    for (double t : {0.1, 0.25, 0.4}) {
        auto pdf = [&](double u) {
            return std::exp(levy::log_bridge_density(f, scalar(0.0), scalar(1.0), t, 1.0, scalar(u)));
        };
        EXPECT_NEAR(integrate(pdf, 0.0, 1.0), 1.0, 1e-8) << t;
    }
}

TEST(LevyBridgeDensity, GammaGeneralBridgeIsScaledBeta) {
    const double kappa = 2.5;
    const double horizon = 2.0;
    const auto f = LevyFamily::gamma(kappa, 1);
    const double x = 0.3;
    const double y = 2.2;
    for (double t : {0.2, 1.0, 1.7}) {
        for (double u : {0.05, 0.5, 0.95}) {
            const double z = x + (y - x) * u;
            const double lhs = levy::log_bridge_density(f, scalar(x), scalar(y), t, horizon, scalar(z));
            const double rhs = std::log(oracle::beta_pdf(u, kappa * t, kappa * (horizon - t)) / (y - x));
            EXPECT_NEAR(lhs, rhs, 1e-10);
        }
    }
}

TEST(LevyBridgeDensity, StableThreeFactorValue) {
    const auto f = LevyFamily::stable_half(std::numbers::sqrt2, 1);
    const double expected =
        std::log(stable_paper_density(0.5, 1.0) * stable_paper_density(0.5, 2.0) / stable_paper_density(1.0, 3.0));
    EXPECT_NEAR(levy::log_bridge_density(f, scalar(0.0), scalar(3.0), 0.5, 1.0, scalar(1.0)), expected, 1e-12);
}

TEST(LevyBridgeDensity, StableNormalizes) {
    const auto f = LevyFamily::stable_half(1.3, 1);
    for (double t : {0.2, 0.5, 0.8}) {
        auto pdf = [&](double z) {
            return std::exp(levy::log_bridge_density(f, scalar(0.0), scalar(1.5), t, 1.0, scalar(z)));
        };
        EXPECT_NEAR(integrate(pdf, 0.0, 1.5), 1.0, 1e-8) << t;
    }
}

TEST(LevyBridgeDensity, PoissonSumsToOne) {
    const auto f = LevyFamily::poisson(3.0, 1);
    for (double t : {0.1, 0.5, 0.9}) {
        double total = 0.0;
        for (int k = -1; k <= 8; ++k) {
            total += std::exp(levy::log_bridge_density(f, scalar(0.0), scalar(7.0), t, 1.0, scalar(k)));
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        // with y - x = N the bridge count at t is Binomial(N, t/T)
        for (unsigned k = 0; k <= 7; ++k) {
            EXPECT_NEAR(std::exp(levy::log_bridge_density(f, scalar(0.0), scalar(7.0), t, 1.0, scalar(k))),
                        oracle::binomial_pmf(7, t, k), 1e-12);
        }
    }
}

TEST(LevyBridgeDensity, ProductOverCoordinates) {
    const auto f2 = LevyFamily::gamma(1.5, 2);
    const auto f1 = LevyFamily::gamma(1.5, 1);
    const double joint = levy::log_bridge_density(f2, vec({0, 1}), vec({2, 1.5}), 0.4, 1.0, vec({0.7, 1.2}));
    const double a = levy::log_bridge_density(f1, scalar(0), scalar(2), 0.4, 1.0, scalar(0.7));
    const double b = levy::log_bridge_density(f1, scalar(1), scalar(1.5), 0.4, 1.0, scalar(1.2));
    EXPECT_NEAR(joint, a + b, 1e-12);
}

TEST(LevyBridgeDensity, ConcentratesAtEndpointNearHorizon) {
    const auto f = LevyFamily::gamma(1.0, 1);
    // mass more than 1% of the gap below y, by quadrature of the bridge density
    double previous = 1.0;
    for (double t : {0.5, 0.9, 0.99, 0.999}) {
        auto pdf = [&](double z) {
            return std::exp(levy::log_bridge_density(f, scalar(0.0), scalar(1.0), t, 1.0, scalar(z)));
        };
        const double far = integrate(pdf, 0.0, 0.99);
        EXPECT_LT(far, previous);
        previous = far;
    }
    EXPECT_LT(previous, 0.01);
}

TEST(LevyBridgeDensity, UnsupportedEndpoint) {
    const auto g = LevyFamily::gamma(1.0, 1);
    EXPECT_THROW(levy::log_bridge_density(g, scalar(1.0), scalar(1.0), 0.5, 1.0, scalar(1.0)),
                 UnsupportedEndpointError);
    EXPECT_THROW(levy::log_bridge_density(g, scalar(1.0), scalar(0.5), 0.5, 1.0, scalar(0.7)),
                 UnsupportedEndpointError);
    EXPECT_THROW(levy::log_bridge_density(g, scalar(0.0), scalar(1.0), 1.0, 1.0, scalar(0.5)), DomainError);
    EXPECT_EQ(levy::log_bridge_density(g, scalar(0.0), scalar(1.0), 0.5, 1.0, scalar(1.5)),
              -std::numeric_limits<double>::infinity());
    const auto p = LevyFamily::poisson(1.0, 1);
    EXPECT_THROW(levy::log_bridge_density(p, scalar(0.0), scalar(2.5), 0.5, 1.0, scalar(1.0)),
                 UnsupportedEndpointError);
}

TEST(LevyMixtureDensity, SingleAtomAndSymmetry) {
    const auto g = LevyFamily::gamma(1.2, 1);
    const FiniteAtoms one{{scalar(2.0)}, {1.0}};
    EXPECT_DOUBLE_EQ(levy::log_marginal_mixture_density(g, scalar(0.0), one, 0.4, 1.0, scalar(0.8)),
                     levy::log_bridge_density(g, scalar(0.0), scalar(2.0), 0.4, 1.0, scalar(0.8)));
    const FiniteAtoms twin{{scalar(2.0), scalar(2.0)}, {0.5, 0.5}};
    EXPECT_NEAR(levy::log_marginal_mixture_density(g, scalar(0.0), twin, 0.4, 1.0, scalar(0.8)),
                levy::log_bridge_density(g, scalar(0.0), scalar(2.0), 0.4, 1.0, scalar(0.8)), 1e-14);
}

TEST(LevyMixtureDensity, GammaThreeAtomsIntegratesToOne) {
    const auto g = LevyFamily::gamma(1.7, 1);
    const FiniteAtoms atoms{{scalar(0.5), scalar(1.5), scalar(3.0)}, {0.2, 0.5, 0.3}};
    for (double t : {0.25, 0.5, 0.75}) {
        auto pdf = [&](double z) {
            return std::exp(levy::log_marginal_mixture_density(g, scalar(0.0), atoms, t, 1.0, scalar(z)));
        };
        const double total = integrate(pdf, 0.0, 0.5) + integrate(pdf, 0.5, 1.5) + integrate(pdf, 1.5, 3.0);
        EXPECT_NEAR(total, 1.0, 1e-6) << t;
    }
}

TEST(LevyMixtureDensity, NamesUnreachableAtom) {
    const auto g = LevyFamily::gamma(1.0, 1);
    const FiniteAtoms atoms{{scalar(2.0), scalar(-1.0)}, {0.5, 0.5}};
    try {
        levy::log_marginal_mixture_density(g, scalar(0.0), atoms, 0.5, 1.0, scalar(0.5));
        FAIL() << "expected UnsupportedEndpointError";
    } catch (const UnsupportedEndpointError& e) {
        EXPECT_NE(std::string(e.what()).find("atom 1"), std::string::npos) << e.what();
    }
}

TEST(HTransform, ReducesToBridgeDensityFromOrigin) {
    for (const auto& f : {LevyFamily::gamma(0.8, 1), LevyFamily::stable_half(1.0, 1)}) {
        for (double z : {0.1, 0.9, 1.9}) {
            EXPECT_NEAR(levy::h_transition_logdensity(f, scalar(0.0), scalar(z), scalar(2.0), 0.0, 0.6, 1.0),
                        levy::log_bridge_density(f, scalar(0.0), scalar(2.0), 0.6, 1.0, scalar(z)), 1e-12);
        }
    }
}

TEST(HTransform, GammaIncrementIsBeta) {
    const double kappa = 3.0;
    const auto f = LevyFamily::gamma(kappa, 1);
    const double r = 0.4;
    const double y = 1.9;
    const double s = 0.3;
    const double t = 0.65;
    for (double u : {0.001, 0.2, 0.5, 0.8, 0.999}) {
        const double z = r + (y - r) * u;
        EXPECT_NEAR(levy::h_transition_logdensity(f, scalar(r), scalar(z), scalar(y), s, t, 1.0),
                    std::log(oracle::beta_pdf(u, kappa * (t - s), kappa * (1.0 - t)) / (y - r)), 1e-10);
    }
}

TEST(HTransform, ChapmanKolmogorov) {
    const auto f = LevyFamily::gamma(1.5, 1);
    const double r = 0.0;
    const double y = 2.0;
    const double s = 0.0;
    const double t = 0.4;
    const double u = 0.7;
    const int cells = 200;
    double l1 = 0.0;
    for (int i = 0; i < cells; ++i) {
        const double w = y * (i + 0.5) / cells;
        auto integrand = [&](double z) {
            return std::exp(levy::h_transition_logdensity(f, scalar(r), scalar(z), scalar(y), s, t, 1.0) +
                            levy::h_transition_logdensity(f, scalar(z), scalar(w), scalar(y), t, u, 1.0));
        };
        const double composed = integrate(integrand, r, w);
        const double direct = std::exp(levy::h_transition_logdensity(f, scalar(r), scalar(w), scalar(y), s, u, 1.0));
        l1 += std::abs(composed - direct) * (y / cells);
    }
    EXPECT_LT(l1, 1e-3);
}

TEST(HTransform, UnsupportedState) {
    const auto f = LevyFamily::gamma(1.0, 1);
    EXPECT_THROW(levy::h_transition_logdensity(f, scalar(2.0), scalar(2.5), scalar(2.0), 0.1, 0.5, 1.0),
                 UnsupportedEndpointError);
    EXPECT_THROW(levy::h_transition_logdensity(f, scalar(0.0), scalar(0.5), scalar(2.0), 0.5, 0.5, 1.0), DomainError);
}

class GammaIncrementKs : public ::testing::TestWithParam<double> {};

TEST_P(GammaIncrementKs, NormalizedIncrementIsBeta) {
    const double kappa = GetParam();
    const auto f = LevyFamily::gamma(kappa, 1);
    const double r = 0.5;
    const double y = 2.0;
    const double s = 0.2;
    const double t = 0.5;
    RngStream rng(21, static_cast<std::uint64_t>(kappa * 100));
    const int n = 100000;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) {
        const double z = levy::sample_bridge_increment(f, scalar(r), scalar(y), s, t, 1.0, rng)[0];
        ASSERT_GE(z, r);
        ASSERT_LT(z, y);
        u[static_cast<std::size_t>(i)] = (z - r) / (y - r);
    }
    const double a = kappa * (t - s);
    const double b = kappa * (1.0 - t);
    const double d = eval::ks_statistic(u, [&](double v) { return oracle::beta_cdf(v, a, b); });
    EXPECT_LT(d, oracle::ks_coefficient_1pct() / std::sqrt(n));
}

INSTANTIATE_TEST_SUITE_P(Kappas, GammaIncrementKs, ::testing::Values(0.5, 1.0, 5.0));

class PoissonIncrementChiSquare : public ::testing::TestWithParam<int> {};

TEST_P(PoissonIncrementChiSquare, IncrementIsBinomial) {
    const int jumps = GetParam();
    const auto f = LevyFamily::poisson(2.0, 1);
    const double r = 3.0;
    const double y = r + jumps;
    const double s = 0.25;
    const double t = 0.6;
    const double p = (t - s) / (1.0 - s);
    RngStream rng(22, static_cast<std::uint64_t>(jumps));
    std::vector<std::size_t> counts(static_cast<std::size_t>(jumps) + 1, 0);
    for (int i = 0; i < 100000; ++i) {
        const double z = levy::sample_bridge_increment(f, scalar(r), scalar(y), s, t, 1.0, rng)[0];
        const double k = z - r;
        ASSERT_EQ(k, std::round(k));
        ASSERT_GE(k, 0.0);
        ASSERT_LE(k, jumps);
        ++counts[static_cast<std::size_t>(k)];
    }
    std::vector<double> probs;
    for (int k = 0; k <= jumps; ++k) {
        probs.push_back(oracle::binomial_pmf(static_cast<unsigned>(jumps), p, static_cast<unsigned>(k)));
    }
    const auto result = eval::chi_square(counts, probs);
    EXPECT_LT(result.statistic, oracle::chi_square_quantile(result.degrees_of_freedom, 0.99));
}

INSTANTIATE_TEST_SUITE_P(JumpCounts, PoissonIncrementChiSquare, ::testing::Values(3, 10));

TEST(SampleBridgeIncrement, StableMatchesQuadratureCdf) {
    const double c = std::numbers::sqrt2;
    const auto f = LevyFamily::stable_half(c, 1);
    const double r = 0.2;
    const double y = 1.4;
    const double s = 0.1;
    const double t = 0.45;
    // unnormalized kernel density in the gap fraction, from the original density form
    auto kernel = [&](double u) {
        if (u <= 0.0 || u >= 1.0) {
            return 0.0;
        }
        return stable_paper_density(t - s, (y - r) * u) * stable_paper_density(1.0 - t, (y - r) * (1.0 - u));
    };
    const double mass = integrate(kernel, 0.0, 1.0);
    auto cdf = [&](double u) { return u <= 0.0 ? 0.0 : u >= 1.0 ? 1.0 : integrate(kernel, 0.0, u) / mass; };

    RngStream rng(23, 0);
    const int n = 10000;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) {
        const double z = levy::sample_bridge_increment(f, scalar(r), scalar(y), s, t, 1.0, rng)[0];
        ASSERT_GT(z, r);
        ASSERT_LT(z, y);
        u[static_cast<std::size_t>(i)] = (z - r) / (y - r);
    }
    EXPECT_LT(eval::ks_statistic(u, cdf), oracle::ks_coefficient_1pct() / std::sqrt(n));
}

TEST(SampleBridgeIncrement, FinalStepReturnsEndpoint) {
    RngStream rng(24, 0);
    for (const auto& f : {LevyFamily::gamma(1.0, 2), LevyFamily::stable_half(1.0, 2)}) {
        EXPECT_EQ(levy::sample_bridge_increment(f, vec({0, 1}), vec({1, 3}), 0.5, 1.0, 1.0, rng), vec({1, 3}));
    }
    EXPECT_EQ(levy::sample_bridge_increment(LevyFamily::poisson(1.0, 1), scalar(1), scalar(4), 0.5, 1.0, 1.0, rng),
              scalar(4));
}

TEST(SampleBridgeIncrement, SupportViolations) {
    RngStream rng(25, 0);
    EXPECT_THROW(levy::sample_bridge_increment(LevyFamily::gamma(1.0, 1), scalar(2), scalar(1), 0.1, 0.5, 1.0, rng),
                 UnsupportedEndpointError);
    EXPECT_THROW(levy::sample_bridge_increment(LevyFamily::poisson(1.0, 1), scalar(0), scalar(1.5), 0.1, 0.5, 1.0, rng),
                 UnsupportedEndpointError);
    EXPECT_THROW(levy::sample_bridge_increment(LevyFamily::gamma(1.0, 1), scalar(0), scalar(1), 0.5, 0.5, 1.0, rng),
                 DomainError);
}

TEST(SampleBridgeIncrement, ExtremeParametersStayFiniteAndInside) {
    RngStream rng(26, 0);
    for (double kappa : {1e-3, 0.05, 1.0, 50.0, 1e3}) {
        const auto f = LevyFamily::gamma(kappa, 1);
        for (auto [r, y] : {std::pair{0.0, 1e-9}, std::pair{0.0, 1.0}, std::pair{-5.0, 1e6}}) {
            for (auto [s, t] : {std::pair{0.0, 1e-9}, std::pair{0.5, 0.5 + 1e-12}, std::pair{0.1, 1.0 - 1e-12},
                                std::pair{0.0, 0.5}}) {
                for (int i = 0; i < 200; ++i) {
                    const double z = levy::sample_bridge_increment(f, scalar(r), scalar(y), s, t, 1.0, rng)[0];
                    ASSERT_TRUE(std::isfinite(z));
                    ASSERT_GE(z, r);
                    ASSERT_LT(z, y) << kappa << " " << r << " " << y << " " << s << " " << t;
                }
            }
        }
    }
}

TEST(SampleBridgeIncrement, SequentialGammaPathsAreMonotone) {
    const auto f = LevyFamily::gamma(0.3, 2);
    RngStream rng(27, 0);
    const Vector y = vec({1.0, 4.0});
    for (int p = 0; p < 200; ++p) {
        Vector z = vec({0.0, 0.5});
        double s = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double t = k / 100.0;
            const Vector next = levy::sample_bridge_increment(f, z, y, s, t, 1.0, rng);
            ASSERT_TRUE(((next - z).array() >= 0.0).all());
            z = next;
            s = t;
        }
        EXPECT_EQ(z, y);
    }
}

TEST(GenerativeStep, MixesPosteriorKernels) {
    const double kappa = 2.0;
    const auto f = LevyFamily::gamma(kappa, 1);
    auto atoms = std::make_shared<const FiniteAtoms>(FiniteAtoms{{scalar(1.0), scalar(2.0), scalar(4.0)},
                                                                 {0.2, 0.3, 0.5}});
    const auto posterior = filter::Posterior::prior(atoms);
    const double r = 0.5;
    const double s = 0.2;
    const double t = 0.6;
    // E[z] = r + sum_i w_i (y_i - r) (t - s) / (T - s)
    double expected = r;
    for (std::size_t i = 0; i < atoms->size(); ++i) {
        expected += atoms->weights[i] * (atoms->points[i][0] - r) * (t - s) / (1.0 - s);
    }
    RngStream rng(28, 0);
    oracle::Moments m;
    for (int i = 0; i < 100000; ++i) {
        m.add(levy::sample_generative_step(f, scalar(r), posterior, s, t, 1.0, rng)[0]);
    }
    EXPECT_NEAR(m.mean(), expected, 4.0 * m.standard_error());
}

TEST(GenerativeStep, FinalStepLandsOnPosteriorAtoms) {
    const auto f = LevyFamily::poisson(1.0, 1);
    auto atoms = std::make_shared<const FiniteAtoms>(FiniteAtoms{{scalar(2.0), scalar(5.0)}, {0.25, 0.75}});
    const auto posterior = filter::Posterior::prior(atoms);
    RngStream rng(29, 0);
    int high = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = levy::sample_generative_step(f, scalar(0.0), posterior, 0.5, 1.0, 1.0, rng)[0];
        ASSERT_TRUE(z == 2.0 || z == 5.0);
        high += z == 5.0 ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(high) / n, 0.75, 0.02);
}
