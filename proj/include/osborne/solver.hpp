#ifndef OSBORNE_SOLVER_HPP
#define OSBORNE_SOLVER_HPP

// Osborne's iteration as exact coordinate descent on the potential.
//
// One update at index j replaces u_j by u_j + (ln c_j - ln r_j) / 2, which
// makes the j-th row and column sums both equal to sqrt(r_j c_j). The run
// loop repeats updates under a pluggable index-selection strategy and checks
// termination at cycle boundaries, where a cycle is n updates.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osborne/core.hpp"
#include "osborne/selection.hpp"

namespace osborne {

enum class StrategyKind { Cyclic, ShuffledCyclic, UniformRandom, WeightedRandom, Greedy };

struct Strategy {
  StrategyKind kind = StrategyKind::Cyclic;
  std::uint64_t seed = 0;
  // Cyclic only: a fixed update order (a permutation of 0..n-1). Empty means
  // ascending index order.
  std::vector<index_t> order;
};

enum class Criterion { L1Normalized, PracticalParlett };

enum class Termination { Converged, MaxCyclesReached, NotBalanceable, Stalled };

struct SolverConfig {
  double eps = 1e-8;
  // Unset: derived from the conditioning, see default_max_cycles().
  std::optional<std::size_t> max_cycles;
  Criterion criterion = Criterion::L1Normalized;
  Strategy strategy;
  // Restrict each step to an integer multiple of ln 2, so D holds powers of two.
  bool radix_rounding = false;
  std::size_t check_every = 1;
};

struct TrajectorySample {
  std::size_t updates = 0;
  std::size_t nonzeros = 0;
  std::int64_t wall_nanos = 0;
  double imbalance = 0.0;
};

struct BalanceReport {
  ScalingVector u_final;
  std::size_t cycles_used = 0;
  std::size_t updates_used = 0;
  std::size_t nonzeros_touched = 0;
  // Synchronization rounds; n per cycle for sequential runs, p for colored runs.
  std::size_t rounds_used = 0;
  std::chrono::nanoseconds wall_time{0};
  std::vector<TrajectorySample> trajectory;
  Termination termination = Termination::MaxCyclesReached;
  double final_imbalance = std::numeric_limits<double>::quiet_NaN();
  // Termination checks at which the potential went up (exact mode: always 0).
  std::size_t potential_increases = 0;
  std::string message;
};

// Observation hooks for instrumentation; called synchronously from run().
struct UpdateEvent {
  std::size_t cycle;
  index_t index;
  double r_before;
  double c_before;
  double u_before;
  std::span<const double> u;
};

struct RunObserver {
  std::function<void(const UpdateEvent&)> on_update;
  std::function<void(std::size_t cycle, std::span<const double> u)> on_cycle_end;
};

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
  case StrategyKind::Cyclic: return "cyclic";
  case StrategyKind::ShuffledCyclic: return "shuffled";
  case StrategyKind::UniformRandom: return "random";
  case StrategyKind::WeightedRandom: return "weighted";
  case StrategyKind::Greedy: return "greedy";
  }
  return "?";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view s) {
  if (s == "cyclic") return StrategyKind::Cyclic;
  if (s == "shuffled" || s == "shuffled-cyclic" || s == "reshuffle") return StrategyKind::ShuffledCyclic;
  if (s == "random" || s == "uniform") return StrategyKind::UniformRandom;
  if (s == "weighted" || s == "weighted-random") return StrategyKind::WeightedRandom;
  if (s == "greedy") return StrategyKind::Greedy;
  return std::nullopt;
}

inline std::string_view to_string(Termination t) {
  switch (t) {
  case Termination::Converged: return "converged";
  case Termination::MaxCyclesReached: return "max_cycles_reached";
  case Termination::NotBalanceable: return "not_balanceable";
  case Termination::Stalled: return "stalled";
  }
  return "?";
}

// ceil(80 * ceil(log2 kappa) / eps^2), saturating.
inline std::uint64_t explicit_cycle_bound(double kappa, double eps) {
  const double lg = std::max(0.0, std::ceil(std::log2(kappa)));
  const double b = std::ceil(80.0 * lg / (eps * eps));
  if (!(b < 1.8e19)) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(b);
}

// Four times the explicit cycle bound, or 10^6 when kappa is unknown.
inline std::size_t default_max_cycles(std::optional<double> kappa, double eps) {
  if (!kappa) return 1'000'000;
  const auto b = explicit_cycle_bound(*kappa, eps);
  if (b > std::numeric_limits<std::size_t>::max() / 4) return std::numeric_limits<std::size_t>::max();
  return std::max<std::size_t>(1, 4 * b);
}

inline double round_to_radix(double step) {
  return std::nearbyint(step / std::numbers::ln2) * std::numbers::ln2;
}

// Balances row/column j in place. Returns the sums before the update.
inline RowColSums osborne_update(const SparseNonnegMatrix& a, std::span<double> u, index_t j,
                                 bool radix_rounding = false) {
  const auto s = row_col_sums_at(a, u, j);
  double step = 0.5 * (std::log(s.c) - std::log(s.r));
  if (radix_rounding) step = round_to_radix(step);
  u[j] += step;
  return s;
}

// Per-cycle generator: a fresh mt19937_64 seeded from (seed, cycle), so the
// stream for cycle k does not depend on how earlier cycles consumed theirs.
inline std::mt19937_64 cycle_rng(std::uint64_t seed, std::uint64_t cycle) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cycle), static_cast<std::uint32_t>(cycle >> 32)};
  return std::mt19937_64(seq);
}

namespace detail {

inline void validate(const SolverConfig& cfg, std::size_t n) {
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw InvalidInput("eps must lie in (0, 1)");
  if (cfg.max_cycles && *cfg.max_cycles < 1) throw InvalidInput("max_cycles must be at least 1");
  if (cfg.check_every < 1) throw InvalidInput("check_every must be at least 1");
  const auto& order = cfg.strategy.order;
  if (!order.empty()) {
    if (order.size() != n) throw InvalidInput("cyclic order must list every index once");
    std::vector<char> seen(n, 0);
    for (auto j : order) {
      if (j >= n || seen[j]) throw InvalidInput("cyclic order must be a permutation");
      seen[j] = 1;
    }
  }
}

inline std::optional<index_t> first_empty_line(const SparseNonnegMatrix& a) {
  for (index_t j = 0; j < a.n(); ++j)
    if (a.row(j).empty() || a.col(j).empty()) return j;
  return std::nullopt;
}

// Bookkeeping shared by the sequential and colored runs: accounting,
// termination checks and trajectory samples.
class RunDriver {
public:
  RunDriver(const SparseNonnegMatrix& a, const SolverConfig& cfg, const RunObserver* obs)
      : a_(a), cfg_(cfg), obs_(obs) {
    validate(cfg, a.n());
    max_cycles_ = cfg.max_cycles ? *cfg.max_cycles
                                 : default_max_cycles(a.nnz() ? std::optional(conditioning(a)) : std::nullopt, cfg.eps);
    u.assign(a.n(), 0.0);
  }

  ScalingVector u;
  BalanceReport report;

  std::size_t max_cycles() const { return max_cycles_; }

  // False if the input has an empty row or column; the report is then final.
  bool start() {
    start_time_ = std::chrono::steady_clock::now();
    if (auto j = first_empty_line(a_)) {
      report.termination = Termination::NotBalanceable;
      report.message = "row or column " + std::to_string(*j) +
                       " has no entries; split the matrix into strongly connected blocks first";
      report.u_final = u;
      return false;
    }
    const bool l1 = cfg_.criterion == Criterion::L1Normalized;
    const double g = sample(l1);
    if (l1 && g <= cfg_.eps) {
      finish(Termination::Converged);
      return false;
    }
    return true;
  }

  void begin_cycle() {
    parlett_ok_ = true;
    changed_ = false;
  }

  void record_update(index_t j, const RowColSums& s, double u_before, std::size_t cycle) {
    ++report.updates_used;
    report.nonzeros_touched += a_.degree(j);
    if (!(2.0 * std::sqrt(s.r * s.c) > 0.95 * (s.r + s.c))) parlett_ok_ = false;
    if (u[j] != u_before) changed_ = true;
    if (obs_ && obs_->on_update) obs_->on_update({cycle, j, s.r, s.c, u_before, u});
  }

  // Cycle-level bookkeeping; true when the run should stop.
  bool end_cycle(std::size_t rounds) {
    ++report.cycles_used;
    report.rounds_used += rounds;
    if (obs_ && obs_->on_cycle_end) obs_->on_cycle_end(report.cycles_used, u);
    const bool last = report.cycles_used >= max_cycles_;
    const bool stalled = cfg_.radix_rounding && !changed_;
    if (report.cycles_used % cfg_.check_every == 0 || last || stalled) {
      const bool l1 = cfg_.criterion == Criterion::L1Normalized;
      const double g = sample(l1);
      if (l1 ? g <= cfg_.eps : parlett_ok_) {
        finish(Termination::Converged);
        return true;
      }
    }
    if (stalled) {
      finish(Termination::Stalled);
      report.message = "radix-rounded steps are all zero; no further progress possible";
      return true;
    }
    if (last) {
      finish(Termination::MaxCyclesReached);
      return true;
    }
    return false;
  }

  void add_nonzeros(std::size_t k) { report.nonzeros_touched += k; }

private:
  double sample(bool counted) {
    const auto cert = imbalance(a_, u);
    if (counted) report.nonzeros_touched += a_.nnz();
    if (have_potential_ && cert.potential > last_potential_ * (1.0 + 1e-12)) ++report.potential_increases;
    last_potential_ = cert.potential;
    have_potential_ = true;
    report.final_imbalance = cert.normalized;
    report.trajectory.push_back({report.updates_used, report.nonzeros_touched, elapsed().count(),
                                 cert.normalized});
    return cert.normalized;
  }

  std::chrono::nanoseconds elapsed() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                start_time_);
  }

  void finish(Termination t) {
    report.termination = t;
    report.u_final = u;
    report.wall_time = elapsed();
  }

  const SparseNonnegMatrix& a_;
  const SolverConfig& cfg_;
  const RunObserver* obs_;
  std::size_t max_cycles_ = 0;
  std::chrono::steady_clock::time_point start_time_;
  bool parlett_ok_ = true;
  bool changed_ = false;
  bool have_potential_ = false;
  double last_potential_ = 0.0;
};

// Maintained row/column sums driving weighted and greedy selection. Neighbors
// of an updated index are patched in O(deg(j)); everything is recomputed from
// scratch once per cycle so rounding drift never outlives a cycle.
class SelectionState {
public:
  SelectionState(const SparseNonnegMatrix& a, StrategyKind kind) : a_(a), kind_(kind) {}

  // Returns the number of entries read.
  std::size_t resync(std::span<const double> u) {
    auto s = full_sums(a_, u);
    r_ = std::move(s.r);
    c_ = std::move(s.c);
    if (kind_ == StrategyKind::WeightedRandom) {
      std::vector<double> w(a_.n());
      for (index_t i = 0; i < a_.n(); ++i) w[i] = r_[i] + c_[i];
      tree_.assign(w);
    } else {
      heap_.reset(a_.n());
      for (index_t i = 0; i < a_.n(); ++i) heap_.set(i, greedy_score(r_[i], c_[i]));
    }
    return a_.nnz();
  }

  template <class Rng>
  index_t next(Rng& rng) {
    return kind_ == StrategyKind::WeightedRandom ? tree_.sample(rng) : heap_.top();
  }

  // u already holds the new value at j; step = u_new[j] - u_old[j].
  // Returns the number of entries read.
  std::size_t after_update(std::span<const double> u, index_t j, const RowColSums& before, double step) {
    const double uj_old = u[j] - step;
    const double grow = std::expm1(step), shrink = std::expm1(-step);
    const auto row = a_.row(j);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const auto i = row.index[k];
      c_[i] = std::max(0.0, c_[i] + std::exp(uj_old - u[i]) * row.value[k] * grow);
      refresh(i);
    }
    const auto col = a_.col(j);
    for (std::size_t k = 0; k < col.size(); ++k) {
      const auto i = col.index[k];
      r_[i] = std::max(0.0, r_[i] + std::exp(u[i] - uj_old) * col.value[k] * shrink);
      refresh(i);
    }
    r_[j] = before.r * std::exp(step);
    c_[j] = before.c * std::exp(-step);
    refresh(j);
    return row.size() + col.size();
  }

private:
  void refresh(index_t i) {
    if (kind_ == StrategyKind::WeightedRandom)
      tree_.set(i, r_[i] + c_[i]);
    else
      heap_.set(i, greedy_score(r_[i], c_[i]));
  }

  const SparseNonnegMatrix& a_;
  StrategyKind kind_;
  std::vector<double> r_, c_;
  WeightTree tree_;
  GreedyHeap heap_;
};

} // namespace detail

// Runs Osborne's iteration from u = 0 until the configured criterion holds or
// the cycle budget is spent. Throws NumericRangeError if a scaled entry
// overflows; an empty row or column is reported as NotBalanceable.
inline BalanceReport run(const SparseNonnegMatrix& a, const SolverConfig& cfg,
                         const RunObserver* observer = nullptr) {
  detail::RunDriver drv(a, cfg, observer);
  if (!drv.start()) return std::move(drv.report);

  const std::size_t n = a.n();
  const auto kind = cfg.strategy.kind;
  std::vector<index_t> order(n);
  if (kind == StrategyKind::Cyclic && !cfg.strategy.order.empty())
    order = cfg.strategy.order;
  else
    std::iota(order.begin(), order.end(), index_t{0});

  const bool selective = kind == StrategyKind::WeightedRandom || kind == StrategyKind::Greedy;
  std::optional<detail::SelectionState> sel;
  if (selective) sel.emplace(a, kind);

  auto apply = [&](index_t j, std::size_t cycle) {
    const double before = drv.u[j];
    const auto s = osborne_update(a, drv.u, j, cfg.radix_rounding);
    drv.record_update(j, s, before, cycle);
    return std::pair(s, drv.u[j] - before);
  };

  for (std::size_t cycle = 0;; ++cycle) {
    drv.begin_cycle();
    auto rng = cycle_rng(cfg.strategy.seed, cycle);
    switch (kind) {
    case StrategyKind::Cyclic:
      for (auto j : order) apply(j, cycle);
      break;
    case StrategyKind::ShuffledCyclic:
      std::shuffle(order.begin(), order.end(), rng);
      for (auto j : order) apply(j, cycle);
      break;
    case StrategyKind::UniformRandom: {
      std::uniform_int_distribution<index_t> pick(0, n - 1);
      for (std::size_t t = 0; t < n; ++t) apply(pick(rng), cycle);
      break;
    }
    case StrategyKind::WeightedRandom:
    case StrategyKind::Greedy:
      drv.add_nonzeros(sel->resync(drv.u));
      for (std::size_t t = 0; t < n; ++t) {
        const auto j = sel->next(rng);
        const auto [s, step] = apply(j, cycle);
        drv.add_nonzeros(sel->after_update(drv.u, j, s, step));
      }
      break;
    }
    if (drv.end_cycle(n)) break;
  }
  return std::move(drv.report);
}

} // namespace osborne

#endif
