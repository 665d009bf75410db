#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rbridge/core/error.hpp"
#include "rbridge/core/parallel.hpp"
#include "rbridge/core/rng.hpp"

namespace rbridge::eval {

using Matrix = Eigen::MatrixXd;

/// Largest sample set the O(n^2) metrics accept.
inline constexpr std::size_t kMaxSampleSize = 20000;

/// Points stored as columns of a dim x n matrix.
struct SampleSet {
    Matrix points;
    std::string label;

    SampleSet() = default;
    SampleSet(Matrix pts, std::string name = {}) : points(std::move(pts)), label(std::move(name)) {}

    static SampleSet from_vectors(const std::vector<Vector>& pts, std::string name = {}) {
        if (pts.empty()) {
            return SampleSet(Matrix(0, 0), std::move(name));
        }
        Matrix m(pts.front().size(), static_cast<Eigen::Index>(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].size() != m.rows()) {
                throw UsageError("sample set: inconsistent point dimension");
            }
            m.col(static_cast<Eigen::Index>(i)) = pts[i];
        }
        return SampleSet(std::move(m), std::move(name));
    }

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(points.cols()); }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(points.rows()); }
};

namespace detail {

inline void check_pair(const SampleSet& a, const SampleSet& b, std::size_t min_size) {
    if (a.size() < min_size || b.size() < min_size) {
        throw UsageError("metric needs at least " + std::to_string(min_size) + " points per sample set");
    }
    if (a.dim() != b.dim()) {
        throw UsageError("sample sets have different dimensions (" + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()) + ")");
    }
    if (a.size() > kMaxSampleSize || b.size() > kMaxSampleSize) {
        throw UsageError("sample sets are capped at " + std::to_string(kMaxSampleSize) + " points");
    }
}

/// Lexicographic order on (size, contents), used to fix the argument order of symmetric metrics.
inline bool canonical_less(const SampleSet& a, const SampleSet& b) {
    if (a.size() != b.size()) {
        return a.size() < b.size();
    }
    const Eigen::Index n = a.points.size();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double x = a.points.data()[k];
        const double y = b.points.data()[k];
        if (x != y) {
            return x < y;
        }
    }
    return false;
}

/**
 * Sum over i of sum over j of k(|a_i - b_j|^2). Row i's terms are reduced by
 * one fixed Eigen reduction and rows are added in index order, so the result
 * does not depend on threading. `kernel` maps an array of squared distances
 * to an array of kernel values.
 */
template <typename Kernel>
double pair_sum(const Matrix& a, const Matrix& b, bool skip_diagonal, Kernel&& kernel) {
    const auto n = static_cast<std::size_t>(a.cols());
    const Eigen::Index dim = a.rows();
    const Eigen::ArrayXXd bt = b.transpose().array(); // one contiguous column per coordinate
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        const auto ci = static_cast<Eigen::Index>(i);
        Eigen::ArrayXd sq = Eigen::ArrayXd::Zero(bt.rows());
        for (Eigen::Index d = 0; d < dim; ++d) {
            sq += (bt.col(d) - a(d, ci)).square();
        }
        Eigen::ArrayXd k = kernel(sq);
        if (skip_diagonal && ci < k.size()) {
            k[ci] = 0.0;
        }
        rows[i] = k.sum();
    });
    double total = 0.0;
    for (double r : rows) {
        total += r;
    }
    return total;
}

inline double energy_impl(const Matrix& a, const Matrix& b) {
    auto dist = [](const Eigen::ArrayXd& sq) -> Eigen::ArrayXd { return sq.sqrt(); };
    const auto na = static_cast<double>(a.cols());
    const auto nb = static_cast<double>(b.cols());
    const double cross = pair_sum(a, b, false, dist) / (na * nb);
    const double within_a = pair_sum(a, a, true, dist) / (na * na);
    const double within_b = pair_sum(b, b, true, dist) / (nb * nb);
    return 2.0 * cross - within_a - within_b;
}

inline double mmd_impl(const Matrix& a, const Matrix& b, double bandwidth) {
    const double scale = -1.0 / (2.0 * bandwidth * bandwidth);
    auto k = [scale](const Eigen::ArrayXd& sq) -> Eigen::ArrayXd { return (scale * sq).exp(); };
    const auto na = static_cast<double>(a.cols());
    const auto nb = static_cast<double>(b.cols());
    const double kaa = pair_sum(a, a, true, k) / (na * (na - 1.0));
    const double kbb = pair_sum(b, b, true, k) / (nb * (nb - 1.0));
    const double kab = pair_sum(a, b, false, k) / (na * nb);
    return kaa + kbb - 2.0 * kab;
}

} // namespace detail

/**
 * Energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'| as a V-statistic (all
 * pairs, diagonal included as zero), so identical sets give exactly 0.
 */
inline double energy_distance(const SampleSet& a, const SampleSet& b) {
    detail::check_pair(a, b, 1);
    if (detail::canonical_less(b, a)) {
        return detail::energy_impl(b.points, a.points);
    }
    return detail::energy_impl(a.points, b.points);
}

/// Unbiased squared MMD with kernel exp(-|u - v|^2 / (2 h^2)); may be slightly negative.
inline double mmd_rbf(const SampleSet& a, const SampleSet& b, double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw UsageError("MMD bandwidth must be positive");
    }
    detail::check_pair(a, b, 2);
    if (detail::canonical_less(b, a)) {
        return detail::mmd_impl(b.points, a.points, bandwidth);
    }
    return detail::mmd_impl(a.points, b.points, bandwidth);
}

/**
 * Median pairwise distance of the pooled sample. Pools larger than
 * `max_points` are thinned by a fixed stride first.
 */
inline double median_bandwidth(const SampleSet& a, const SampleSet& b, std::size_t max_points = 2000) {
    detail::check_pair(a, b, 1);
    const std::size_t total = a.size() + b.size();
    const std::size_t stride = std::max<std::size_t>(1, (total + max_points - 1) / max_points);
    std::vector<Vector> pool;
    for (std::size_t i = 0; i < total; i += stride) {
        pool.push_back(i < a.size() ? Vector(a.points.col(static_cast<Eigen::Index>(i)))
                                    : Vector(b.points.col(static_cast<Eigen::Index>(i - a.size()))));
    }
    std::vector<double> d;
    d.reserve(pool.size() * (pool.size() - 1) / 2);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            d.push_back((pool[i] - pool[j]).norm());
        }
    }
    if (d.empty()) {
        return 1.0;
    }
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    const double med = *mid;
    return med > 0.0 ? med : 1.0;
}

/// sup |F_n - F| for a reference CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& reference_cdf) {
    if (samples.empty()) {
        throw UsageError("KS statistic of an empty sample");
    }
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = reference_cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::clamp(d, 0.0, 1.0);
}

/// sup |F_a - F_b| of two empirical CDFs.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw UsageError("KS statistic of an empty sample");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) {
            ++i;
        }
        while (j < b.size() && b[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic coefficient c(alpha) = sqrt(-ln(alpha / 2) / 2); 1.628 at alpha = 0.01.
inline double ks_coefficient(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw UsageError("KS significance level must be in (0, 1)");
    }
    return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

inline double ks_critical_value(std::size_t n, double alpha = 0.01) {
    return ks_coefficient(alpha) / std::sqrt(static_cast<double>(n));
}

inline double ks_critical_value(std::size_t n, std::size_t m, double alpha = 0.01) {
    const auto a = static_cast<double>(n);
    const auto b = static_cast<double>(m);
    return ks_coefficient(alpha) * std::sqrt((a + b) / (a * b));
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-15;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        d = std::abs(d) < kTiny ? kTiny : d;
        c = 1.0 + aa / c;
        c = std::abs(c) < kTiny ? kTiny : c;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        d = std::abs(d) < kTiny ? kTiny : d;
        c = 1.0 + aa / c;
        c = std::abs(c) < kTiny ? kTiny : c;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            return h;
        }
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw UsageError("incomplete beta requires positive shapes");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double beta_cdf(double x, double a, double b) { return incomplete_beta(a, b, x); }

/// Pearson statistic after pooling adjacent bins until each expected count is at least `min_expected`.
struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t degrees_of_freedom = 0;
    std::size_t bins = 0;
};

inline ChiSquareResult chi_square(const std::vector<std::size_t>& observed, const std::vector<double>& probabilities,
                                  double min_expected = 5.0) {
    if (observed.size() != probabilities.size() || observed.empty()) {
        throw UsageError("chi-square: observed and expected bin counts differ");
    }
    const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::size_t{0}));
    std::vector<double> obs;
    std::vector<double> exp;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        o_acc += static_cast<double>(observed[k]);
        e_acc += n * probabilities[k];
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp.empty()) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
        } else {
            obs.back() += o_acc;
            exp.back() += e_acc;
        }
    }
    ChiSquareResult r;
    r.bins = obs.size();
    r.degrees_of_freedom = obs.size() > 1 ? obs.size() - 1 : 0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
        if (exp[k] > 0.0) {
            r.statistic += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
        }
    }
    return r;
}

/**
 * Permutation p-value (1 + #{T_perm >= T_obs}) / (1 + permutations) for a
 * two-sample statistic, relabelling the pooled sample with `rng`.
 */
inline double permutation_p_value(const SampleSet& a, const SampleSet& b,
                                  const std::function<double(const SampleSet&, const SampleSet&)>& statistic,
                                  std::size_t permutations, RngStream& rng) {
    detail::check_pair(a, b, 1);
    const double observed = statistic(a, b);
    Matrix pool(a.points.rows(), a.points.cols() + b.points.cols());
    pool << a.points, b.points;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(pool.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::size_t exceed = 0;
    for (std::size_t p = 0; p < permutations; ++p) {
        // Fisher-Yates with the library stream, so the p-value is reproducible
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
        Matrix pa(pool.rows(), a.points.cols());
        Matrix pb(pool.rows(), b.points.cols());
        for (Eigen::Index i = 0; i < pa.cols(); ++i) {
            pa.col(i) = pool.col(order[static_cast<std::size_t>(i)]);
        }
        for (Eigen::Index i = 0; i < pb.cols(); ++i) {
            pb.col(i) = pool.col(order[static_cast<std::size_t>(pa.cols() + i)]);
        }
        if (statistic(SampleSet(std::move(pa)), SampleSet(std::move(pb))) >= observed) {
            ++exceed;
        }
    }
    return static_cast<double>(1 + exceed) / static_cast<double>(1 + permutations);
}

/// One metric evaluation, as written to the JSON report.
struct MetricReport {
    std::string metric;
    double value = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    std::uint64_t seed = 0;
    std::optional<double> permutation_p_value;
    std::optional<double> bandwidth;
};

} // namespace rbridge::eval
