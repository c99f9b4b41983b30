#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "wclt/measure.hpp"

namespace wclt {

enum class W1Method { Sorted1D, Assignment, FiniteLP, Sliced };

std::string to_string(W1Method m);

struct W1Result {
  double value = 0.0;
  W1Method method = W1Method::Sorted1D;
  bool is_exact = true;
  std::optional<int> projections_used;
};

/// Exact W1 between equal-size uniform 1-d samples via the quantile coupling.
W1Result w1_sorted_1d(std::span<const double> xs, std::span<const double> ys);

/// Exact W1 between equal-size uniform clouds via optimal assignment
/// (Hungarian algorithm with potentials). n <= 2048.
W1Result w1_assignment(const EmpiricalMeasure& xs, const EmpiricalMeasure& ys,
                       const MetricSpace& space);

/// Exact optimal-transport cost between weighted measures on the same
/// discrete-table space (successive shortest augmenting paths). <= 512 states.
W1Result w1_finite_lp(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      const MetricSpace& space);

/// Sliced-W1 diagnostic proxy: average of 1-d distances over random unit
/// directions. Not exact in dimension >= 2; deterministic given the seed.
W1Result w1_sliced(const EmpiricalMeasure& xs, const EmpiricalMeasure& ys,
                   int n_projections, std::uint64_t seed);

inline constexpr std::size_t kAssignmentMaxN = 2048;
inline constexpr int kFiniteLpMaxStates = 512;

}  // namespace wclt
