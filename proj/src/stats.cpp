#include "wclt/stats.hpp"

#include <algorithm>
#include <cmath>

#include "wclt/errors.hpp"
#include "wclt/rng.hpp"

namespace wclt {

MeanSE mean_se(std::span<const double> xs) {
  MeanSE out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - out.mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const MeanSE m = mean_se(xs);
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    ss += d * d;
  }
  return ss / static_cast<double>(xs.size() - 1);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.39894228040143267794;
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

double gaussian_truncated_second_moment(double a, double sigma) {
  if (sigma <= 0.0) return 0.0;
  const double t = a / sigma;
  if (t <= 0.0) return sigma * sigma;
  return 2.0 * sigma * sigma * (t * normal_pdf(t) + (1.0 - normal_cdf(t)));
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidInput("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    const double lo = F - static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n - F;
    d = std::max(d, std::max(lo, hi));
  }
  return d;
}

namespace {
// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double lambda) {
  if (lambda < 0.05) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}
}  // namespace

double kolmogorov_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw InvalidInput("kolmogorov_quantile: p in (0,1)");
  double lo = 0.05, hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_sf(mid) > 1.0 - p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_critical_value(std::size_t n, double level) {
  return kolmogorov_quantile(1.0 - level) / std::sqrt(static_cast<double>(n));
}

LineFit least_squares_line(std::span<const double> xs,
                           std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw InvalidInput("least_squares_line: need >= 2 matched points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300)
    throw NumericalError("least_squares_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  for (std::size_t i = 0; i < xs.size(); ++i)
    f.residual_max = std::max(f.residual_max,
                              std::abs(ys[i] - (f.intercept + f.slope * xs[i])));
  return f;
}

double bootstrap_mean_halfwidth(std::span<const double> xs, int n_boot,
                                std::uint64_t seed) {
  if (xs.size() < 2 || n_boot < 8) return 0.0;
  SplitRng rng = SplitRng::derive(seed, "bootstrap");
  std::vector<double> means(static_cast<std::size_t>(n_boot));
  const std::size_t n = xs.size();
  for (int b = 0; b < n_boot; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_uniform() * n);
      s += xs[j < n ? j : n - 1];
    }
    means[static_cast<std::size_t>(b)] = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto q = [&](double p) {
    const double pos = p * (means.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return i + 1 < means.size() ? means[i] * (1 - w) + means[i + 1] * w
                                : means.back();
  };
  return 0.5 * (q(0.975) - q(0.025));
}

Histogram histogram(std::span<const double> xs, int n_bins) {
  Histogram h;
  if (xs.empty() || n_bins < 1) return h;
  h.lo = *std::min_element(xs.begin(), xs.end());
  h.hi = *std::max_element(xs.begin(), xs.end());
  if (h.hi <= h.lo) h.hi = h.lo + 1.0;
  h.edges.resize(static_cast<std::size_t>(n_bins) + 1);
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  const double w = (h.hi - h.lo) / n_bins;
  for (int i = 0; i <= n_bins; ++i) h.edges[static_cast<std::size_t>(i)] = h.lo + w * i;
  for (double x : xs) {
    auto k = static_cast<std::size_t>((x - h.lo) / w);
    if (k >= h.counts.size()) k = h.counts.size() - 1;
    ++h.counts[k];
  }
  return h;
}

}  // namespace wclt
