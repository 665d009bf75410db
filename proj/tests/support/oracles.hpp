#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's own density or CDF code.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace oracle {

/// Welford running mean and variance.
class Moments {
  public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] double mean() const { return mean_; }
    [[nodiscard]] double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    [[nodiscard]] double standard_error() const { return std::sqrt(variance() / static_cast<double>(n_)); }
    /// Standard error of the sample variance for a Gaussian population.
    [[nodiscard]] double variance_standard_error() const {
        return variance() * std::sqrt(2.0 / static_cast<double>(n_ - 1));
    }

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline double normal_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

inline double normal_cdf(double x, double mean, double var) {
    return boost::math::cdf(boost::math::normal_distribution<double>(mean, std::sqrt(var)), x);
}

inline double beta_cdf(double x, double a, double b) {
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    return boost::math::cdf(boost::math::beta_distribution<double>(a, b), x);
}

inline double beta_pdf(double x, double a, double b) {
    return boost::math::pdf(boost::math::beta_distribution<double>(a, b), x);
}

inline double binomial_pmf(unsigned n, double p, unsigned k) {
    return boost::math::pdf(boost::math::binomial_distribution<double>(n, p), k);
}

inline double chi_square_quantile(double dof, double p) {
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

/// Two-sided 1% Kolmogorov-Smirnov critical coefficient, sqrt(-ln(0.005)/2).
inline double ks_coefficient_1pct() { return std::sqrt(-0.5 * std::log(0.005)); }

} // namespace oracle
