#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace wclt {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

/// Left-to-right reduction; results are reproducible for a given ordering.
MeanSE mean_se(std::span<const double> xs);

double sample_variance(std::span<const double> xs);

double normal_pdf(double x);
double normal_cdf(double x);

/// E[Z^2, |Z| >= a] for Z ~ N(0, sigma^2).
double gaussian_truncated_second_moment(double a, double sigma);

/// One-sample Kolmogorov-Smirnov statistic against a cdf.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

/// Quantile of the asymptotic Kolmogorov distribution, K(lambda) = p.
double kolmogorov_quantile(double p);

/// Asymptotic critical value for the one-sample KS test at the given level.
double ks_critical_value(std::size_t n, double level);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual_max = 0.0;  // max |y - fit|
};

LineFit least_squares_line(std::span<const double> xs, std::span<const double> ys);

/// Percentile-bootstrap halfwidth (level ~95%) of the mean of xs.
double bootstrap_mean_halfwidth(std::span<const double> xs, int n_boot,
                                std::uint64_t seed);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

Histogram histogram(std::span<const double> xs, int n_bins);

}  // namespace wclt
