#ifndef OSBORNE_PARALLEL_HPP
#define OSBORNE_PARALLEL_HPP

// Colored Osborne: vertices of one color class share no entry, so their
// updates read disjoint parts of u and may run concurrently. The result is
// bit-identical to a sequential cyclic run over the concatenated classes.

#include <algorithm>
#include <atomic>
#include <barrier>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "osborne/core.hpp"
#include "osborne/solver.hpp"

namespace osborne {

struct Coloring {
  std::vector<std::size_t> colors;
  std::size_t num_colors = 0;

  // Vertices of each color in ascending order.
  std::vector<std::vector<index_t>> classes() const {
    std::vector<std::vector<index_t>> out(num_colors);
    for (index_t v = 0; v < colors.size(); ++v) out[colors[v]].push_back(v);
    return out;
  }

  // Classes concatenated by ascending color.
  std::vector<index_t> sequential_order() const {
    std::vector<index_t> order;
    order.reserve(colors.size());
    for (const auto& cls : classes()) order.insert(order.end(), cls.begin(), cls.end());
    return order;
  }
};

// Neighbors in the undirected support graph, deduplicated and sorted.
inline std::vector<std::vector<index_t>> undirected_neighbors(const SparseNonnegMatrix& a) {
  std::vector<std::vector<index_t>> nb(a.n());
  for (index_t v = 0; v < a.n(); ++v) {
    auto& list = nb[v];
    const auto row = a.row(v);
    const auto col = a.col(v);
    list.assign(row.index.begin(), row.index.end());
    list.insert(list.end(), col.index.begin(), col.index.end());
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return nb;
}

// Smallest available color in ascending vertex order; uses at most
// max undirected degree + 1 colors.
inline Coloring greedy_color(const SparseNonnegMatrix& a) {
  const auto nb = undirected_neighbors(a);
  Coloring c;
  constexpr auto unset = static_cast<std::size_t>(-1);
  c.colors.assign(a.n(), unset);
  std::vector<std::size_t> mark;
  for (index_t v = 0; v < a.n(); ++v) {
    mark.assign(nb[v].size() + 1, 0);
    for (auto w : nb[v])
      if (c.colors[w] != unset && c.colors[w] < mark.size()) mark[c.colors[w]] = 1;
    std::size_t k = 0;
    while (mark[k]) ++k;
    c.colors[v] = k;
    c.num_colors = std::max(c.num_colors, k + 1);
  }
  return c;
}

// Throws InvalidInput naming the first entry whose endpoints share a color.
inline void validate_coloring(const SparseNonnegMatrix& a, const Coloring& c) {
  if (c.colors.size() != a.n()) throw InvalidInput("coloring size does not match the matrix");
  for (auto k : c.colors)
    if (k >= c.num_colors) throw InvalidInput("color index out of range");
  for (const auto& t : a.entries())
    if (c.colors[t.row] == c.colors[t.col])
      throw InvalidInput("improper coloring: entry (" + std::to_string(t.row) + ", " +
                         std::to_string(t.col) + ") joins two vertices of color " +
                         std::to_string(c.colors[t.row]));
}

// Cyclic Osborne over color classes S_0..S_{p-1}; each class is split into
// contiguous chunks across `workers` threads with a barrier between classes.
// Strategy fields of cfg are ignored; the order is fixed by the coloring.
// Observers are not supported here since updates run on worker threads.
inline BalanceReport run_parallel(const SparseNonnegMatrix& a, const Coloring& coloring,
                                  const SolverConfig& cfg, std::size_t workers = 1) {
  validate_coloring(a, coloring);
  if (workers < 1) throw InvalidInput("need at least one worker");
  SolverConfig seq = cfg;
  seq.strategy = {StrategyKind::Cyclic, 0, {}};
  detail::RunDriver drv(a, seq, nullptr);
  if (!drv.start()) return std::move(drv.report);

  auto classes = coloring.classes();
  std::erase_if(classes, [](const auto& cls) { return cls.empty(); });
  const std::size_t rounds = classes.size();

  // Per-class results land in slots indexed by position so the driver can
  // replay them in sequential order after the barrier.
  std::vector<RowColSums> sums(a.n());
  std::vector<double> before(a.n());
  std::vector<std::exception_ptr> errors(workers);

  auto process = [&](const std::vector<index_t>& cls, std::size_t w) {
    const std::size_t chunk = (cls.size() + workers - 1) / workers;
    const std::size_t lo = std::min(cls.size(), w * chunk), hi = std::min(cls.size(), lo + chunk);
    try {
      for (std::size_t k = lo; k < hi; ++k) {
        const auto j = cls[k];
        before[j] = drv.u[j];
        sums[j] = osborne_update(a, drv.u, j, cfg.radix_rounding);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  auto replay = [&](const std::vector<index_t>& cls, std::size_t cycle) {
    for (auto& e : errors)
      if (e) std::rethrow_exception(std::exchange(e, nullptr));
    for (auto j : cls) drv.record_update(j, sums[j], before[j], cycle);
  };

  if (workers == 1) {
    for (std::size_t cycle = 0;; ++cycle) {
      drv.begin_cycle();
      for (const auto& cls : classes) {
        process(cls, 0);
        replay(cls, cycle);
      }
      if (drv.end_cycle(rounds)) break;
    }
    return std::move(drv.report);
  }

  std::barrier sync(static_cast<std::ptrdiff_t>(workers));
  const std::vector<index_t>* current = nullptr;
  std::atomic<bool> stop{false};
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        sync.arrive_and_wait();
        if (stop.load()) return;
        process(*current, w);
        sync.arrive_and_wait();
      }
    });
  }
  auto shutdown = [&] {
    stop.store(true);
    sync.arrive_and_wait();
    pool.clear();
  };

  try {
    for (std::size_t cycle = 0;; ++cycle) {
      drv.begin_cycle();
      for (const auto& cls : classes) {
        current = &cls;
        sync.arrive_and_wait();
        process(cls, 0);
        sync.arrive_and_wait();
        replay(cls, cycle);
      }
      if (drv.end_cycle(rounds)) break;
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();
  return std::move(drv.report);
}

} // namespace osborne

#endif
