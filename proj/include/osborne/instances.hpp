#ifndef OSBORNE_INSTANCES_HPP
#define OSBORNE_INSTANCES_HPP

// Test-instance generators and structural statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "osborne/core.hpp"
#include "osborne/solver.hpp"

namespace osborne {

namespace detail {

// Uniform on the open interval (0, b); a zero draw is redrawn.
template <class Rng>
double positive_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (;;) {
    const double v = dist(rng);
    if (v > 0.0 && v > lo) return v;
  }
}

} // namespace detail

// Dense off-diagonal matrix: entries uniform in (0, lo), except those whose
// row or column is among the last s indices, which are uniform in (0, hi).
inline SparseNonnegMatrix gen_salient(std::size_t n, std::size_t s, double lo = 0.001, double hi = 1.0,
                                      std::uint64_t seed = 0) {
  if (n < 2) throw InvalidInput("salient instance needs n >= 2");
  if (s >= n) throw InvalidInput("salient count s must be smaller than n");
  if (!(lo > 0.0) || !(hi > 0.0)) throw InvalidInput("interval bounds must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Triplet> t;
  t.reserve(n * (n - 1));
  const std::size_t band = n - s;
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool salient = i >= band || j >= band;
      t.push_back({i, j, detail::positive_uniform(rng, 0.0, salient ? hi : lo)});
    }
  return SparseNonnegMatrix::from_canonical(n, t);
}

// Hard instance on a bidirectional cycle of length n = 2k + 1. With 1-based
// indices, for i = 1..k:
//   A[i, i+1] = A[2k+2-i, 2k+1-i] = 1
//   A[i+1, i] = A[2k+1-i, 2k+2-i] = 0.01
// plus A[n, 1] = A[1, n] = 1. Stored 0-based (subtract one from each index).
inline SparseNonnegMatrix gen_kalantari(std::size_t k) {
  if (k < 1) throw InvalidInput("kalantari instance needs k >= 1");
  const std::size_t n = 2 * k + 1;
  std::vector<Triplet> t;
  auto put = [&](std::size_t i1, std::size_t j1, double v) { t.push_back({i1 - 1, j1 - 1, v}); };
  for (std::size_t i = 1; i <= k; ++i) {
    put(i, i + 1, 1.0);
    put(2 * k + 2 - i, 2 * k + 1 - i, 1.0);
    put(i + 1, i, 0.01);
    put(2 * k + 1 - i, 2 * k + 2 - i, 0.01);
  }
  put(n, 1, 1.0);
  put(1, n, 1.0);
  return build_matrix(n, std::move(t));
}

// Each off-diagonal position present independently with probability p,
// values uniform in (value_lo, value_hi).
inline SparseNonnegMatrix gen_random_sparse(std::size_t n, double p, double value_lo, double value_hi,
                                            std::uint64_t seed) {
  if (n == 0) throw InvalidInput("matrix dimension must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("edge probability must lie in (0, 1]");
  if (!(value_lo >= 0.0 && value_hi > value_lo)) throw InvalidInput("need 0 <= value_lo < value_hi");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(p);
  std::vector<Triplet> t;
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) {
      if (i == j || !keep(rng)) continue;
      t.push_back({i, j, detail::positive_uniform(rng, value_lo, value_hi)});
    }
  return SparseNonnegMatrix::from_canonical(n, t);
}

struct InstanceStats {
  std::size_t n = 0;
  std::size_t m = 0;
  double kappa = 0.0;
  // Unset when the support graph is not strongly connected (or not computed).
  std::optional<std::size_t> diameter;
  bool strongly_connected = false;
  // Largest number of distinct neighbors in the undirected support graph.
  std::size_t max_degree = 0;
};

namespace detail {

// Vertices reachable from `src` following rows (forward) or columns (reverse).
inline std::vector<std::size_t> bfs_levels(const SparseNonnegMatrix& a, index_t src, bool forward) {
  constexpr auto inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(a.n(), inf);
  std::vector<index_t> frontier{src};
  dist[src] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const auto v = frontier[head];
    const auto adj = forward ? a.row(v) : a.col(v);
    for (auto w : adj.index)
      if (dist[w] == inf) {
        dist[w] = dist[v] + 1;
        frontier.push_back(w);
      }
  }
  return dist;
}

} // namespace detail

inline bool strongly_connected(const SparseNonnegMatrix& a) {
  constexpr auto inf = std::numeric_limits<std::size_t>::max();
  for (bool fwd : {true, false}) {
    const auto d = detail::bfs_levels(a, 0, fwd);
    if (std::find(d.begin(), d.end(), inf) != d.end()) return false;
  }
  return true;
}

// Diameter by BFS from every vertex, O(n m). Unset if some pair is unreachable.
inline std::optional<std::size_t> diameter(const SparseNonnegMatrix& a) {
  constexpr auto inf = std::numeric_limits<std::size_t>::max();
  std::size_t best = 0;
  for (index_t s = 0; s < a.n(); ++s) {
    const auto d = detail::bfs_levels(a, s, true);
    const auto mx = *std::max_element(d.begin(), d.end());
    if (mx == inf) return std::nullopt;
    best = std::max(best, mx);
  }
  return best;
}

// `with_diameter = false` skips the O(n m) all-pairs search.
inline InstanceStats stats(const SparseNonnegMatrix& a, bool with_diameter = true) {
  if (a.nnz() == 0) throw InvalidInput("statistics of an empty matrix are undefined");
  InstanceStats st;
  st.n = a.n();
  st.m = a.nnz();
  st.kappa = conditioning(a);
  st.strongly_connected = strongly_connected(a);
  if (with_diameter && st.strongly_connected) st.diameter = diameter(a);
  std::vector<index_t> nb;
  for (index_t v = 0; v < a.n(); ++v) {
    nb.assign(a.row(v).index.begin(), a.row(v).index.end());
    nb.insert(nb.end(), a.col(v).index.begin(), a.col(v).index.end());
    std::sort(nb.begin(), nb.end());
    st.max_degree = std::max<std::size_t>(st.max_degree, std::unique(nb.begin(), nb.end()) - nb.begin());
  }
  return st;
}

struct SccBlock {
  std::vector<index_t> vertices; // ascending original indices
  SparseNonnegMatrix submatrix;  // induced on `vertices`, local indices
};

struct SccDecomposition {
  std::vector<SccBlock> blocks;      // topological order
  std::vector<Triplet> cross_entries; // entries joining different blocks
  std::vector<std::size_t> block_of;  // vertex -> block position
};

// Strongly connected components (iterative Tarjan), in topological order of
// the condensation: every cross entry goes from an earlier block to a later one.
inline SccDecomposition scc_decompose(const SparseNonnegMatrix& a) {
  const std::size_t n = a.n();
  constexpr auto unvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<index_t> stack;
  std::vector<std::pair<index_t, std::size_t>> call; // (vertex, next edge)
  std::size_t counter = 0, ncomp = 0;

  for (index_t root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, e] = call.back();
      const auto adj = a.row(v).index;
      if (e < adj.size()) {
        const auto w = adj[e++];
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const auto done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        for (;;) {
          const auto w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = ncomp;
          if (w == done) break;
        }
        ++ncomp;
      }
    }
  }

  // Tarjan emits sinks first; reverse for topological order.
  SccDecomposition out;
  out.block_of.resize(n);
  for (index_t v = 0; v < n; ++v) out.block_of[v] = ncomp - 1 - comp[v];
  std::vector<std::vector<index_t>> verts(ncomp);
  for (index_t v = 0; v < n; ++v) verts[out.block_of[v]].push_back(v);
  std::vector<std::size_t> local(n);
  for (const auto& vs : verts)
    for (std::size_t k = 0; k < vs.size(); ++k) local[vs[k]] = k;
  std::vector<std::vector<Triplet>> inner(ncomp);
  for (const auto& t : a.entries()) {
    const auto b = out.block_of[t.row];
    if (b == out.block_of[t.col])
      inner[b].push_back({local[t.row], local[t.col], t.value});
    else
      out.cross_entries.push_back(t);
  }
  for (std::size_t b = 0; b < ncomp; ++b) {
    std::sort(inner[b].begin(), inner[b].end(), [](const Triplet& x, const Triplet& y) {
      return std::pair(x.row, x.col) < std::pair(y.row, y.col);
    });
    auto sub = SparseNonnegMatrix::from_canonical(verts[b].size(), inner[b]);
    out.blocks.push_back({std::move(verts[b]), std::move(sub)});
  }
  return out;
}

// Entrywise power. Balancing the result in l1 and dividing u by p yields an
// lp balancing of the original matrix.
inline SparseNonnegMatrix lp_reduce(const SparseNonnegMatrix& a, double p) {
  if (!(p > 0.0)) throw InvalidInput("power must be positive");
  auto e = a.entries();
  for (auto& t : e) {
    t.value = std::pow(t.value, p);
    if (!(t.value > 0.0) || !std::isfinite(t.value)) throw NumericRangeError("entry power out of range");
  }
  return SparseNonnegMatrix::from_canonical(a.n(), e);
}

struct CycleBound {
  // ceil(80 ceil(log2 kappa) / eps^2): a hard upper bound for cyclic Osborne.
  std::uint64_t explicit_cycles = 0;
  // (ln kappa / eps) * min(1/eps, d); its constant is unknown, reported only.
  double shape = 0.0;
};

inline CycleBound theoretical_cycle_bound(const InstanceStats& st, double eps) {
  if (!st.strongly_connected) throw InvalidInput("cycle bound requires a strongly connected support");
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  CycleBound b;
  b.explicit_cycles = explicit_cycle_bound(st.kappa, eps);
  const double d = st.diameter ? static_cast<double>(*st.diameter) : std::numeric_limits<double>::infinity();
  b.shape = std::log(st.kappa) / eps * std::min(1.0 / eps, d);
  return b;
}

} // namespace osborne

#endif
