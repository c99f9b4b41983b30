#include "wclt/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "wclt/errors.hpp"
#include "wclt/rng.hpp"

namespace wclt {

std::string to_string(W1Method m) {
  switch (m) {
    case W1Method::Sorted1D: return "sorted-1d";
    case W1Method::Assignment: return "assignment";
    case W1Method::FiniteLP: return "finite-lp";
    case W1Method::Sliced: return "sliced";
  }
  return "?";
}

W1Result w1_sorted_1d(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw InvalidInput("w1_sorted_1d: sample sizes differ (resample upstream)");
  if (xs.empty()) throw InvalidInput("w1_sorted_1d: empty samples");
  std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
  std::stable_sort(a.begin(), a.end());
  std::stable_sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return {s / static_cast<double>(a.size()), W1Method::Sorted1D, true, std::nullopt};
}

namespace {

// Hungarian algorithm with potentials (shortest augmenting paths), O(n^3).
// Returns the column->row matching for the square cost matrix.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);    // p[j] = row matched to column j
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  return p;
}

}  // namespace

W1Result w1_assignment(const EmpiricalMeasure& xs, const EmpiricalMeasure& ys,
                       const MetricSpace& space) {
  if (xs.n_atoms() != ys.n_atoms())
    throw InvalidInput("w1_assignment: clouds must have equal sizes");
  const std::size_t n = xs.n_atoms();
  if (n > kAssignmentMaxN)
    throw InvalidInput("w1_assignment: n exceeds the cost-matrix bound (" +
                       std::to_string(kAssignmentMaxN) + "); use w1_sliced");
  const int ni = static_cast<int>(n);
  std::vector<double> cost(n * n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < ni; ++j)
      cost[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] =
          space.distance(xs.atom(static_cast<std::size_t>(i)), ys.atom(static_cast<std::size_t>(j)));

  const auto p = solve_assignment(cost, ni);
  // Re-sum the matched distances in sorted order: the value depends only on
  // the multiset of matched distances, so w1(a,b) == w1(b,a) bitwise.
  std::vector<int> match(n, -1);  // row -> column
  for (int j = 1; j <= ni; ++j) match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  std::vector<double> matched(n);
  for (std::size_t i = 0; i < n; ++i)
    matched[i] = cost[i * n + static_cast<std::size_t>(match[i])];
  std::sort(matched.begin(), matched.end());
  double s = 0.0;
  for (double d : matched) s += d;
  return {s / static_cast<double>(n), W1Method::Assignment, true, std::nullopt};
}

namespace {

// Min-cost flow via successive shortest augmenting paths with Johnson
// potentials on the full residual network. Real-valued capacities; each
// augmentation saturates a source or sink arc, so it terminates after at
// most m + k rounds.
class MinCostFlow {
 public:
  explicit MinCostFlow(int n_nodes) : head_(static_cast<std::size_t>(n_nodes), -1) {}

  void add_edge(int from, int to, double cap, double cost) {
    edges_.push_back({to, head_[static_cast<std::size_t>(from)], cap, cost});
    head_[static_cast<std::size_t>(from)] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({from, head_[static_cast<std::size_t>(to)], 0.0, -cost});
    head_[static_cast<std::size_t>(to)] = static_cast<int>(edges_.size()) - 1;
  }

  // Ships as much flow as possible from s to t; returns total cost.
  double run(int s, int t) {
    const std::size_t n = head_.size();
    std::vector<double> pot(n, 0.0), dist(n);
    std::vector<int> prev_edge(n);
    std::vector<char> done(n);
    const double kInf = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (;;) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      std::fill(prev_edge.begin(), prev_edge.end(), -1);
      dist[static_cast<std::size_t>(s)] = 0.0;
      for (;;) {  // O(V^2) Dijkstra; supports here are small
        int u = -1;
        double best = kInf;
        for (std::size_t v = 0; v < n; ++v)
          if (!done[v] && dist[v] < best) {
            best = dist[v];
            u = static_cast<int>(v);
          }
        if (u < 0) break;
        done[static_cast<std::size_t>(u)] = 1;
        for (int e = head_[static_cast<std::size_t>(u)]; e >= 0; e = edges_[static_cast<std::size_t>(e)].next) {
          const Edge& ed = edges_[static_cast<std::size_t>(e)];
          if (ed.cap <= 1e-15) continue;
          const double nd = dist[static_cast<std::size_t>(u)] + ed.cost +
                            pot[static_cast<std::size_t>(u)] - pot[static_cast<std::size_t>(ed.to)];
          if (nd < dist[static_cast<std::size_t>(ed.to)] - 1e-15) {
            dist[static_cast<std::size_t>(ed.to)] = nd;
            prev_edge[static_cast<std::size_t>(ed.to)] = e;
          }
        }
      }
      if (prev_edge[static_cast<std::size_t>(t)] < 0) break;  // no augmenting path left
      for (std::size_t v = 0; v < n; ++v)
        if (dist[v] < kInf) pot[v] += dist[v];
      double bottleneck = kInf;
      for (int v = t; v != s;) {
        const Edge& ed = edges_[static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)])];
        bottleneck = std::min(bottleneck, ed.cap);
        v = edges_[static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)] ^ 1)].to;
      }
      if (!(bottleneck > 1e-15)) break;
      for (int v = t; v != s;) {
        Edge& ed = edges_[static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)])];
        Edge& rev = edges_[static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(v)] ^ 1)];
        ed.cap -= bottleneck;
        rev.cap += bottleneck;
        total += bottleneck * ed.cost;
        v = rev.to;
      }
    }
    return total;
  }

 private:
  struct Edge {
    int to;
    int next;
    double cap;
    double cost;
  };
  std::vector<Edge> edges_;
  std::vector<int> head_;
};

double transport_cost(const std::vector<double>& supply,
                      const std::vector<double>& demand,
                      const std::vector<int>& sidx, const std::vector<int>& didx,
                      const MetricSpace& space) {
  const int m = static_cast<int>(sidx.size());
  const int k = static_cast<int>(didx.size());
  // nodes: 0 = super-source, 1 = super-sink, 2.. sources, 2+m.. sinks
  MinCostFlow mcf(2 + m + k);
  const double kInf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) mcf.add_edge(0, 2 + i, supply[static_cast<std::size_t>(i)], 0.0);
  for (int j = 0; j < k; ++j) mcf.add_edge(2 + m + j, 1, demand[static_cast<std::size_t>(j)], 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j)
      mcf.add_edge(2 + i, 2 + m + j, kInf,
                   space.table_at(sidx[static_cast<std::size_t>(i)], didx[static_cast<std::size_t>(j)]));
  return mcf.run(0, 1);
}

}  // namespace

W1Result w1_finite_lp(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      const MetricSpace& space) {
  if (space.kind() != MetricKind::DiscreteTable)
    throw InvalidInput("w1_finite_lp: requires a discrete-table space");
  const int n = space.n_states();
  if (n > kFiniteLpMaxStates)
    throw InvalidInput("w1_finite_lp: support exceeds 512 states");
  std::vector<double> pm(static_cast<std::size_t>(n), 0.0), pn(static_cast<std::size_t>(n), 0.0);
  double sm = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < mu.n_atoms(); ++i) {
    const int s = static_cast<int>(std::lround(mu.atom(i)[0]));
    if (s < 0 || s >= n) throw InvalidInput("w1_finite_lp: atom outside state space");
    pm[static_cast<std::size_t>(s)] += mu.weight(i);
    sm += mu.weight(i);
  }
  for (std::size_t i = 0; i < nu.n_atoms(); ++i) {
    const int s = static_cast<int>(std::lround(nu.atom(i)[0]));
    if (s < 0 || s >= n) throw InvalidInput("w1_finite_lp: atom outside state space");
    pn[static_cast<std::size_t>(s)] += nu.weight(i);
    sn += nu.weight(i);
  }
  if (std::abs(sm - sn) > 1e-9)
    throw InvalidInput("w1_finite_lp: weight sums differ by more than 1e-9");

  // canonical orientation: the value depends only on |pm - pn|, so choosing
  // the supply side by a deterministic rule makes the result exactly symmetric
  const bool swapped = std::lexicographical_compare(pm.begin(), pm.end(), pn.begin(), pn.end());
  const auto& pa = swapped ? pn : pm;
  const auto& pb = swapped ? pm : pn;
  std::vector<double> supply, demand;
  std::vector<int> sidx, didx;
  for (int s = 0; s < n; ++s) {
    const double diff = pa[static_cast<std::size_t>(s)] - pb[static_cast<std::size_t>(s)];
    if (diff > 1e-15) {
      supply.push_back(diff);
      sidx.push_back(s);
    } else if (diff < -1e-15) {
      demand.push_back(-diff);
      didx.push_back(s);
    }
  }
  if (supply.empty())
    return {0.0, W1Method::FiniteLP, true, std::nullopt};
  const double value = transport_cost(supply, demand, sidx, didx, space);
  return {value, W1Method::FiniteLP, true, std::nullopt};
}

W1Result w1_sliced(const EmpiricalMeasure& xs, const EmpiricalMeasure& ys,
                   int n_projections, std::uint64_t seed) {
  if (xs.n_atoms() != ys.n_atoms())
    throw InvalidInput("w1_sliced: clouds must have equal sizes");
  const int dim = xs.dim();
  if (dim < 1 || n_projections < 1)
    throw InvalidInput("w1_sliced: need dimension >= 1 and n_projections >= 1");
  if (dim == 1) {
    // single possible direction up to sign
    std::vector<double> a(xs.n_atoms()), b(ys.n_atoms());
    for (std::size_t i = 0; i < xs.n_atoms(); ++i) {
      a[i] = xs.atom(i)[0];
      b[i] = ys.atom(i)[0];
    }
    auto r = w1_sorted_1d(a, b);
    r.projections_used = 1;
    return r;
  }
  SplitRng rng = SplitRng::derive(seed, "sliced-w1");
  std::vector<double> dir(static_cast<std::size_t>(dim));
  std::vector<double> a(xs.n_atoms()), b(ys.n_atoms());
  double acc = 0.0;
  for (int pr = 0; pr < n_projections; ++pr) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& d : dir) {
        d = rng.next_gaussian();
        norm += d * d;
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (auto& d : dir) d /= norm;
    for (std::size_t i = 0; i < xs.n_atoms(); ++i) {
      double pa = 0.0, pb = 0.0;
      const auto xa = xs.atom(i), ya = ys.atom(i);
      for (int d = 0; d < dim; ++d) {
        pa += dir[static_cast<std::size_t>(d)] * xa[static_cast<std::size_t>(d)];
        pb += dir[static_cast<std::size_t>(d)] * ya[static_cast<std::size_t>(d)];
      }
      a[i] = pa;
      b[i] = pb;
    }
    acc += w1_sorted_1d(a, b).value;
  }
  return {acc / n_projections, W1Method::Sliced, false, n_projections};
}

}  // namespace wclt
