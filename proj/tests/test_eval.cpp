#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "rbridge/eval.hpp"
#include "support/oracles.hpp"

using namespace rbridge;
using eval::SampleSet;
using Matrix = Eigen::MatrixXd;

namespace {

SampleSet gaussian_set(std::size_t n, Eigen::Index dim, double shift, RngStream& rng) {
    Matrix m(dim, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        m.col(i) = rng.normal_vector(dim);
        m(0, i) += shift;
    }
    return SampleSet(std::move(m));
}

SampleSet point_mass(const Vector& p, std::size_t copies) {
    return SampleSet(p.replicate(1, static_cast<Eigen::Index>(copies)));
}

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

} // namespace

TEST(EnergyDistance, IdenticalSetsGiveZero) {
    RngStream rng(1, 0);
    const auto a = gaussian_set(500, 3, 0.0, rng);
    EXPECT_NEAR(eval::energy_distance(a, a), 0.0, 1e-12);
    SampleSet copy(a.points);
    EXPECT_NEAR(eval::energy_distance(a, copy), 0.0, 1e-12);
}

TEST(EnergyDistance, PointMassesGiveTwiceTheGap) {
    const Vector p = vec2(1.0, -2.0);
    const Vector q = vec2(4.0, 2.0);
    EXPECT_NEAR(eval::energy_distance(point_mass(p, 7), point_mass(q, 11)), 10.0, 1e-12);
    EXPECT_NEAR(eval::energy_distance(point_mass(p, 1), point_mass(q, 1)), 10.0, 1e-12);
}

TEST(EnergyDistance, SameGaussianBelowPermutationQuantile) {
    RngStream rng(2, 0);
    const auto a = gaussian_set(10000, 2, 0.0, rng);
    const auto b = gaussian_set(10000, 2, 0.0, rng);
    RngStream perm(2, 1);
    // 99 relabellings: p > 0.01 exactly when the observed value is not above all of them
    const double p = eval::permutation_p_value(a, b, eval::energy_distance, 99, perm);
    EXPECT_GT(p, 0.01);
}

TEST(EnergyDistance, SymmetricBitForBit) {
    RngStream rng(3, 0);
    const auto a = gaussian_set(300, 2, 0.0, rng);
    const auto b = gaussian_set(450, 2, 0.7, rng);
    const auto c = gaussian_set(300, 2, -0.2, rng);
    EXPECT_EQ(eval::energy_distance(a, b), eval::energy_distance(b, a));
    EXPECT_EQ(eval::energy_distance(a, c), eval::energy_distance(c, a));
    EXPECT_EQ(eval::mmd_rbf(a, b, 0.8), eval::mmd_rbf(b, a, 0.8));
    EXPECT_EQ(eval::mmd_rbf(a, c, 0.8), eval::mmd_rbf(c, a, 0.8));
}

TEST(EnergyDistance, InvariantUnderRigidMotion) {
    RngStream rng(4, 0);
    const auto a = gaussian_set(400, 2, 0.0, rng);
    const auto b = gaussian_set(400, 2, 1.5, rng);
    const double angle = 0.83;
    Eigen::Matrix2d rot;
    rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    const Eigen::Vector2d shift(-3.0, 12.5);
    auto move = [&](const SampleSet& s) { return SampleSet((rot * s.points).colwise() + shift); };
    EXPECT_NEAR(eval::energy_distance(move(a), move(b)), eval::energy_distance(a, b), 1e-10);
}

TEST(EnergyDistance, DisjointPointMassesArePositive) {
    const auto a = point_mass(vec2(0.0, 0.0), 3);
    const auto b = point_mass(vec2(1e-3, 0.0), 3);
    EXPECT_GT(eval::energy_distance(a, b), 0.0);
    EXPECT_GT(eval::mmd_rbf(a, b, 1.0), 0.0);
}

TEST(EnergyDistance, Errors) {
    RngStream rng(5, 0);
    EXPECT_THROW(eval::energy_distance(gaussian_set(10, 2, 0, rng), gaussian_set(10, 3, 0, rng)), UsageError);
    EXPECT_THROW(eval::energy_distance(SampleSet(Matrix(2, 0)), gaussian_set(10, 2, 0, rng)), UsageError);
    EXPECT_THROW(eval::energy_distance(SampleSet(Matrix::Zero(1, eval::kMaxSampleSize + 1)), SampleSet(Matrix::Zero(1, 2))),
                 UsageError);
    EXPECT_THROW(SampleSet::from_vectors({vec2(0, 0), Vector::Zero(3)}), UsageError);
}

TEST(Mmd, IdenticalSetsAreAtMostZero) {
    RngStream rng(6, 0);
    const auto a = gaussian_set(400, 2, 0.0, rng);
    EXPECT_LE(eval::mmd_rbf(a, a, 1.0), 1e-12);
}

TEST(Mmd, SeparatedPointMassesFollowKernelLimit) {
    double previous = 0.0;
    for (double d : {0.5, 1.0, 2.0, 4.0, 10.0}) {
        const double value = eval::mmd_rbf(point_mass(vec2(0.0, 0.0), 5), point_mass(vec2(0.0, d), 8), 1.0);
        EXPECT_NEAR(value, 2.0 * (1.0 - std::exp(-d * d / 2.0)), 1e-12) << d;
        EXPECT_GT(value, previous);
        previous = value;
    }
    EXPECT_NEAR(previous, 2.0, 1e-12);
}

TEST(Mmd, ShiftedGaussianIsSignificant) {
    RngStream rng(7, 0);
    const auto a = gaussian_set(500, 2, 0.0, rng);
    const auto b = gaussian_set(500, 2, 1.0, rng);
    const double h = eval::median_bandwidth(a, b);
    auto stat = [h](const SampleSet& x, const SampleSet& y) { return eval::mmd_rbf(x, y, h); };
    EXPECT_GT(stat(a, b), 0.0);
    RngStream perm(7, 1);
    EXPECT_LT(eval::permutation_p_value(a, b, stat, 199, perm), 0.01);
}

TEST(Mmd, Errors) {
    RngStream rng(8, 0);
    const auto a = gaussian_set(10, 2, 0, rng);
    EXPECT_THROW(eval::mmd_rbf(a, SampleSet(Matrix::Zero(2, 1)), 1.0), UsageError);
    EXPECT_THROW(eval::mmd_rbf(a, a, 0.0), UsageError);
    EXPECT_THROW(eval::mmd_rbf(a, a, -1.0), UsageError);
}

TEST(Mmd, MedianBandwidth) {
    // pooled points 0, 1, 3 on a line: distances 1, 2, 3
    const SampleSet a(Matrix{{0.0, 1.0}});
    const SampleSet b(Matrix{{3.0}});
    EXPECT_DOUBLE_EQ(eval::median_bandwidth(a, b), 2.0);
    // degenerate pool falls back to 1
    EXPECT_DOUBLE_EQ(eval::median_bandwidth(point_mass(vec2(1, 1), 3), point_mass(vec2(1, 1), 2)), 1.0);
}

TEST(PermutationTest, ReproducibleAndInRange) {
    RngStream rng(9, 0);
    const auto a = gaussian_set(60, 2, 0.0, rng);
    const auto b = gaussian_set(60, 2, 0.3, rng);
    RngStream p1(9, 1);
    RngStream p2(9, 1);
    const double x = eval::permutation_p_value(a, b, eval::energy_distance, 50, p1);
    const double y = eval::permutation_p_value(a, b, eval::energy_distance, 50, p2);
    EXPECT_EQ(x, y);
    EXPECT_GE(x, 1.0 / 51.0);
    EXPECT_LE(x, 1.0);
}

TEST(Ks, SamplesFromReferencePass) {
    RngStream rng(10, 0);
    std::vector<double> s(10000);
    for (auto& v : s) {
        v = rng.normal();
    }
    EXPECT_LT(eval::ks_statistic(s, eval::normal_cdf), 1.63 / std::sqrt(10000.0));
}

TEST(Ks, AllSamplesAtMedian) {
    std::vector<double> s(37, 0.0);
    EXPECT_DOUBLE_EQ(eval::ks_statistic(s, eval::normal_cdf), 0.5);
}

TEST(Ks, RangeAndEmpty) {
    std::vector<double> s{100.0, 200.0};
    EXPECT_DOUBLE_EQ(eval::ks_statistic(s, eval::normal_cdf), 1.0);
    EXPECT_THROW(eval::ks_statistic({}, eval::normal_cdf), UsageError);
}

TEST(Ks, TwoSample) {
    const std::vector<double> a{0.1, 0.5, 0.9, 1.3};
    EXPECT_EQ(eval::ks_two_sample(a, a), 0.0);
    EXPECT_EQ(eval::ks_two_sample(a, {5.0, 6.0}), 1.0);
    // F_a - F_b peaks at 0.5 after {0.1, 0.5} with no b point below 0.7
    EXPECT_DOUBLE_EQ(eval::ks_two_sample(a, {0.7, 2.0}), 0.5);
    EXPECT_THROW(eval::ks_two_sample({}, a), UsageError);
}

TEST(Ks, CriticalValues) {
    EXPECT_NEAR(eval::ks_critical_value(10000), oracle::ks_coefficient_1pct() / 100.0, 1e-15);
    EXPECT_NEAR(eval::ks_coefficient(0.01), 1.6276, 1e-4);
    EXPECT_NEAR(eval::ks_critical_value(std::size_t{100}, std::size_t{100}), eval::ks_coefficient(0.01) * std::sqrt(0.02), 1e-15);
    EXPECT_THROW(eval::ks_coefficient(0.0), UsageError);
}

TEST(SpecialFunctions, IncompleteBetaMatchesReference) {
    for (double a : {0.05, 0.3, 1.0, 2.5, 12.0, 150.0}) {
        for (double b : {0.05, 0.7, 1.0, 4.0, 60.0}) {
            for (double x : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0 - 1e-9}) {
                EXPECT_NEAR(eval::incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12)
                    << "a=" << a << " b=" << b << " x=" << x;
            }
        }
    }
    EXPECT_EQ(eval::incomplete_beta(2.0, 3.0, 0.0), 0.0);
    EXPECT_EQ(eval::incomplete_beta(2.0, 3.0, 1.0), 1.0);
}

TEST(SpecialFunctions, NormalCdf) {
    for (double x : {-8.0, -2.0, -0.3, 0.0, 0.4, 1.96, 6.0}) {
        EXPECT_NEAR(eval::normal_cdf(x), oracle::normal_cdf(x, 0.0, 1.0), 1e-15);
    }
}

TEST(ChiSquare, StatisticAndPooling) {
    // expected 25 each: (30-25)^2/25 + (20-25)^2/25 + 0 + 0 = 2
    const auto r = eval::chi_square({30, 20, 25, 25}, {0.25, 0.25, 0.25, 0.25});
    EXPECT_DOUBLE_EQ(r.statistic, 2.0);
    EXPECT_EQ(r.degrees_of_freedom, 3U);
    // the sparse tail bins (expected 1 and 1) pool into the last full bin
    const auto pooled = eval::chi_square({48, 50, 1, 1}, {0.49, 0.49, 0.01, 0.01});
    EXPECT_EQ(pooled.bins, 2U);
    EXPECT_NEAR(pooled.statistic, (48.0 - 49.0) * (48.0 - 49.0) / 49.0 + (52.0 - 51.0) * (52.0 - 51.0) / 51.0, 1e-12);
    EXPECT_THROW(eval::chi_square({1, 2}, {1.0}), UsageError);
}

TEST(ChiSquare, CategoricalDrawsPass) {
    RngStream rng(11, 0);
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    std::vector<std::size_t> counts(4, 0);
    for (int i = 0; i < 100000; ++i) {
        ++counts[rng.categorical(p)];
    }
    const auto r = eval::chi_square(counts, p);
    EXPECT_LT(r.statistic, oracle::chi_square_quantile(static_cast<double>(r.degrees_of_freedom), 0.999));
}
