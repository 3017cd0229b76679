#ifndef OSBORNE_BENCH_HPP
#define OSBORNE_BENCH_HPP

// Convergence traces for comparing selection strategies on one matrix.
// Each termination check of each run becomes one CSV row with the three cost
// axes (updates, nonzeros touched, wall time) and the normalized imbalance.
// Greedy selection overhead shows up in nonzeros and wall time only; every
// Osborne update counts as one iteration regardless of strategy.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "osborne/io.hpp"
#include "osborne/solver.hpp"

namespace osborne::bench {

struct BenchRecord {
  std::string instance;
  std::string strategy;
  std::size_t updates = 0;
  std::size_t nonzeros = 0;
  std::int64_t wall_nanos = 0;
  double imbalance = 0.0;
};

struct Series {
  std::string strategy;
  BalanceReport report;
};

// Seed of strategy `kind` derived from the bench seed, so adding or removing
// strategies from a bench does not change the others' streams.
inline std::uint64_t strategy_seed(std::uint64_t seed, StrategyKind kind) {
  return seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(kind) + 1;
}

inline std::vector<Series> run_series(const SparseNonnegMatrix& a, const std::vector<StrategyKind>& kinds,
                                      SolverConfig base, std::uint64_t seed) {
  std::vector<Series> out;
  for (auto kind : kinds) {
    SolverConfig cfg = base;
    cfg.strategy = {kind, strategy_seed(seed, kind), {}};
    out.push_back({std::string(to_string(kind)), run(a, cfg)});
  }
  return out;
}

inline std::vector<BenchRecord> records(const std::string& instance, const Series& s) {
  std::vector<BenchRecord> out;
  out.reserve(s.report.trajectory.size());
  for (const auto& p : s.report.trajectory)
    out.push_back({instance, s.strategy, p.updates, p.nonzeros, p.wall_nanos, p.imbalance});
  return out;
}

inline void write_csv_header(std::ostream& out) { out << "instance,strategy,updates,nonzeros,wall_nanos,imbalance\n"; }

inline void write_csv(std::ostream& out, const std::vector<BenchRecord>& rows) {
  for (const auto& r : rows)
    out << r.instance << ',' << r.strategy << ',' << r.updates << ',' << r.nonzeros << ',' << r.wall_nanos << ','
        << io::format_real(r.imbalance) << '\n';
}

} // namespace osborne::bench

#endif
