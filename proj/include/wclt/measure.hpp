#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wclt {

using Point = std::vector<double>;

enum class MetricKind { EuclideanNorm, WeightedNorm, DiscreteTable };

/// Finite-dimensional metric-space scaffolding. Euclidean / per-coordinate
/// weighted norms for vector states; discrete states are integer-indexed
/// points with an explicit distance table.
class MetricSpace {
 public:
  MetricSpace() = default;  // placeholder; assign a factory result before use
  static MetricSpace euclidean(int dim, Point reference = {});
  static MetricSpace weighted(std::vector<double> weights, Point reference = {});
  /// table is row-major n x n; the reference point is a state index.
  static MetricSpace discrete(std::vector<double> table, int n_states,
                              int reference_state = 0);

  int dimension() const { return dim_; }
  MetricKind kind() const { return kind_; }
  const Point& reference_point() const { return x0_; }
  int n_states() const { return n_states_; }

  double distance(std::span<const double> a, std::span<const double> b) const;
  double distance_to_reference(std::span<const double> a) const;

  /// Distance between discrete states by index.
  double table_at(int i, int j) const { return table_[static_cast<std::size_t>(i) * n_states_ + j]; }

 private:
  int dim_ = 0;
  MetricKind kind_ = MetricKind::EuclideanNorm;
  Point x0_;
  std::vector<double> weights_;
  std::vector<double> table_;
  int n_states_ = 0;
};

/// A real observable on the state space; the declared Lipschitz bound, when
/// present, is validated against sampled difference quotients.
struct Observable {
  std::function<double(std::span<const double>)> eval;
  std::optional<double> declared_lipschitz_bound;
  std::string name = "observable";

  double operator()(std::span<const double> x) const { return eval(x); }
};

/// Weighted point cloud standing in for a probability measure. Weights are
/// normalized at construction and must sum to 1 within 1e-12.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::vector<double> flat_atoms, int dim,
                   std::vector<double> weights = {});
  static EmpiricalMeasure from_points(const std::vector<Point>& pts,
                                      std::vector<double> weights = {});
  static EmpiricalMeasure dirac(Point x);

  int dim() const { return dim_; }
  std::size_t n_atoms() const { return n_; }
  std::span<const double> atom(std::size_t i) const {
    return {flat_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> flat() const { return flat_; }

  double expect(const Observable& psi) const;

  /// Samples an atom index from the weights (inverse-cdf on a uniform).
  std::size_t sample_index(double u) const;

 private:
  std::vector<double> flat_;
  int dim_ = 0;
  std::size_t n_ = 0;
  std::vector<double> weights_;
  std::vector<double> cum_;
};

/// Sum_i w_i rho(atom_i, x0)^p.
double moment(const EmpiricalMeasure& mu, const MetricSpace& space, double p);

struct LipschitzscanResult {
  double bound = 0.0;            // certified lower bound for ||psi||_L
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0; // coincident pairs, skipped with a warning
};

LipschitzscanResult lipschitz_lower_bound(
    const Observable& psi, std::span<const std::pair<Point, Point>> samples,
    const MetricSpace& space);

/// Throws when a declared Lipschitz bound is violated by more than 1e-9
/// relative slack on the sampled pairs.
void validate_observable(const Observable& psi,
                         std::span<const std::pair<Point, Point>> samples,
                         const MetricSpace& space);

}  // namespace wclt
