#include "wclt/measure.hpp"

#include <cmath>

#include "wclt/errors.hpp"

namespace wclt {

MetricSpace MetricSpace::euclidean(int dim, Point reference) {
  if (dim < 1) throw InvalidInput("MetricSpace: dimension must be positive");
  MetricSpace s;
  s.dim_ = dim;
  s.kind_ = MetricKind::EuclideanNorm;
  s.x0_ = reference.empty() ? Point(static_cast<std::size_t>(dim), 0.0) : std::move(reference);
  if (static_cast<int>(s.x0_.size()) != dim)
    throw InvalidInput("MetricSpace: reference point dimension mismatch");
  return s;
}

MetricSpace MetricSpace::weighted(std::vector<double> weights, Point reference) {
  if (weights.empty()) throw InvalidInput("MetricSpace: empty weight vector");
  for (double w : weights)
    if (!(w > 0.0)) throw InvalidInput("MetricSpace: weights must be positive");
  MetricSpace s;
  s.dim_ = static_cast<int>(weights.size());
  s.kind_ = MetricKind::WeightedNorm;
  s.weights_ = std::move(weights);
  s.x0_ = reference.empty() ? Point(s.weights_.size(), 0.0) : std::move(reference);
  if (s.x0_.size() != s.weights_.size())
    throw InvalidInput("MetricSpace: reference point dimension mismatch");
  return s;
}

MetricSpace MetricSpace::discrete(std::vector<double> table, int n_states,
                                  int reference_state) {
  if (n_states < 1 || table.size() != static_cast<std::size_t>(n_states) * n_states)
    throw InvalidInput("MetricSpace: distance table must be n x n");
  for (int i = 0; i < n_states; ++i) {
    if (table[static_cast<std::size_t>(i) * n_states + i] != 0.0)
      throw InvalidInput("MetricSpace: nonzero diagonal in distance table");
    for (int j = 0; j < n_states; ++j) {
      const double dij = table[static_cast<std::size_t>(i) * n_states + j];
      const double dji = table[static_cast<std::size_t>(j) * n_states + i];
      if (dij < 0.0 || std::abs(dij - dji) > 1e-12)
        throw InvalidInput("MetricSpace: distance table not symmetric/nonnegative");
    }
  }
  if (reference_state < 0 || reference_state >= n_states)
    throw InvalidInput("MetricSpace: reference state out of range");
  MetricSpace s;
  s.dim_ = 1;
  s.kind_ = MetricKind::DiscreteTable;
  s.table_ = std::move(table);
  s.n_states_ = n_states;
  s.x0_ = {static_cast<double>(reference_state)};
  return s;
}

namespace {
int state_index(std::span<const double> a, int n_states) {
  const double v = a[0];
  const int i = static_cast<int>(std::lround(v));
  if (i < 0 || i >= n_states || std::abs(v - i) > 1e-9)
    throw InvalidInput("MetricSpace: point is not a valid state index");
  return i;
}
}  // namespace

double MetricSpace::distance(std::span<const double> a,
                             std::span<const double> b) const {
  switch (kind_) {
    case MetricKind::EuclideanNorm: {
      double s = 0.0;
      for (int d = 0; d < dim_; ++d) {
        const double diff = a[static_cast<std::size_t>(d)] - b[static_cast<std::size_t>(d)];
        s += diff * diff;
      }
      return std::sqrt(s);
    }
    case MetricKind::WeightedNorm: {
      double s = 0.0;
      for (int d = 0; d < dim_; ++d) {
        const double diff = weights_[static_cast<std::size_t>(d)] *
                            (a[static_cast<std::size_t>(d)] - b[static_cast<std::size_t>(d)]);
        s += diff * diff;
      }
      return std::sqrt(s);
    }
    case MetricKind::DiscreteTable:
      return table_at(state_index(a, n_states_), state_index(b, n_states_));
  }
  return 0.0;
}

double MetricSpace::distance_to_reference(std::span<const double> a) const {
  return distance(a, x0_);
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> flat_atoms, int dim,
                                   std::vector<double> weights)
    : flat_(std::move(flat_atoms)), dim_(dim) {
  if (dim_ < 1 || flat_.empty() || flat_.size() % static_cast<std::size_t>(dim_) != 0)
    throw InvalidInput("EmpiricalMeasure: atom storage inconsistent with dimension");
  n_ = flat_.size() / static_cast<std::size_t>(dim_);
  for (double v : flat_)
    if (!std::isfinite(v)) throw InvalidInput("EmpiricalMeasure: non-finite atom coordinate");
  if (weights.empty()) {
    weights_.assign(n_, 1.0 / static_cast<double>(n_));
  } else {
    if (weights.size() != n_)
      throw InvalidInput("EmpiricalMeasure: weight count mismatch");
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InvalidInput("EmpiricalMeasure: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw InvalidInput("EmpiricalMeasure: weights must sum to 1 within 1e-12");
    weights_ = std::move(weights);
  }
  cum_.resize(n_);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    acc += weights_[i];
    cum_[i] = acc;
  }
  cum_.back() = 1.0;
}

EmpiricalMeasure EmpiricalMeasure::from_points(const std::vector<Point>& pts,
                                               std::vector<double> weights) {
  if (pts.empty()) throw InvalidInput("EmpiricalMeasure: need at least one atom");
  const int dim = static_cast<int>(pts.front().size());
  std::vector<double> flat;
  flat.reserve(pts.size() * static_cast<std::size_t>(dim));
  for (const auto& p : pts) {
    if (static_cast<int>(p.size()) != dim)
      throw InvalidInput("EmpiricalMeasure: inconsistent atom dimensions");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(std::move(flat), dim, std::move(weights));
}

EmpiricalMeasure EmpiricalMeasure::dirac(Point x) {
  const int dim = static_cast<int>(x.size());
  return EmpiricalMeasure(std::move(x), dim);
}

double EmpiricalMeasure::expect(const Observable& psi) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += weights_[i] * psi(atom(i));
  return s;
}

std::size_t EmpiricalMeasure::sample_index(double u) const {
  std::size_t lo = 0, hi = n_ - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cum_[mid] > u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

double moment(const EmpiricalMeasure& mu, const MetricSpace& space, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("moment: p must be finite and >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.n_atoms(); ++i)
    s += mu.weight(i) * std::pow(space.distance_to_reference(mu.atom(i)), p);
  return s;
}

LipschitzscanResult lipschitz_lower_bound(
    const Observable& psi, std::span<const std::pair<Point, Point>> samples,
    const MetricSpace& space) {
  if (samples.empty()) throw InvalidInput("lipschitz_lower_bound: no sample pairs");
  LipschitzscanResult r;
  for (const auto& [x, y] : samples) {
    const double d = space.distance(x, y);
    if (d <= 0.0) {
      ++r.pairs_skipped;
      continue;
    }
    r.bound = std::max(r.bound, std::abs(psi(x) - psi(y)) / d);
    ++r.pairs_used;
  }
  if (r.pairs_used == 0)
    throw InvalidInput("lipschitz_lower_bound: all sample pairs coincident");
  return r;
}

void validate_observable(const Observable& psi,
                         std::span<const std::pair<Point, Point>> samples,
                         const MetricSpace& space) {
  if (!psi.declared_lipschitz_bound) return;
  const double declared = *psi.declared_lipschitz_bound;
  const auto r = lipschitz_lower_bound(psi, samples, space);
  if (r.bound > declared * (1.0 + 1e-9) + 1e-15)
    throw InvalidInput("observable '" + psi.name +
                       "' violates its declared Lipschitz bound: sampled " +
                       std::to_string(r.bound) + " > declared " +
                       std::to_string(declared));
}

}  // namespace wclt
