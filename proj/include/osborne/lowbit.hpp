#ifndef OSBORNE_LOWBIT_HPP
#define OSBORNE_LOWBIT_HPP

// Low-bit-complexity Osborne iteration in truncated log-domain arithmetic.
//
// Every quantity is a fixed-point natural logarithm: a signed 64-bit count of
// delta = 2^-f units. Matrix entries are accessed only through their logs,
// truncated to additive accuracy gamma = eps / (8n). Row and column sums are
// log-sum-exp reductions whose additive error is bounded per call, iterates
// are kept on a grid of spacing at most gamma' / 2 with gamma' = eps^2 / 400,
// and termination is decided from e^(+-rho) approximations of r, c and phi.
//
// Accuracy budget of one update (tau = gamma'):
//   log-sum-exp for r_j and c_j      <= gamma' / 4 each
//   rounding the iterate to its grid <= gamma' / 4
// so the step is within gamma' / 2 <= ln(1 + tau) of the exact Osborne step,
// which gives |e^step - sqrt(c/r)| <= tau sqrt(c/r) and
// |r_j - c_j| <= 2 tau sqrt(r_j c_j) afterwards.
//
// exp and ln are evaluated in integer arithmetic (range reduction by multiples
// of ln 2, then Taylor / atanh series) at a working precision chosen per call
// from the number of summands, so results are identical on every platform.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "osborne/core.hpp"
#include "osborne/solver.hpp"

namespace osborne::lowbit {

using i128 = __int128;
using u128 = unsigned __int128;

// Fixed-point natural-log quantity; the fractional bit count lives in the
// LowbitConfig that produced it.
struct FixedLog {
  std::int64_t units = 0;

  double to_double(int frac_bits) const { return std::ldexp(static_cast<double>(units), -frac_bits); }
  friend bool operator==(FixedLog, FixedLog) = default;
  friend auto operator<=>(FixedLog, FixedLog) = default;
};

inline int ceil_log2(double x) { return static_cast<int>(std::ceil(std::log2(x))); }

struct LowbitConfig {
  double eps = 0.01;
  double gamma = 0.0;       // log-entry truncation, eps / (8n)
  double gamma_prime = 0.0; // iterate truncation, eps^2 / 400
  double tau = 0.0;         // multiplicative step accuracy, equal to gamma'
  double eps_bar = 0.0;     // verification threshold, eps / 3
  double rho = 0.0;         // verification accuracy, eps_bar / 8
  int frac_bits = 0;        // f: delta = 2^-f
  int iterate_bits = 0;     // iterates live on a 2^-iterate_bits grid
  int log_entry_bits = 0;   // log entries live on a 2^-log_entry_bits grid
  static constexpr int word_bits = 64;

  static LowbitConfig make(double eps, std::size_t n) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("eps must lie in (0, 1)");
    if (n == 0) throw InvalidInput("matrix dimension must be positive");
    LowbitConfig c;
    c.eps = eps;
    c.gamma = eps / (8.0 * static_cast<double>(n));
    c.gamma_prime = eps * eps / 400.0;
    c.tau = c.gamma_prime;
    c.eps_bar = eps / 3.0;
    c.rho = c.eps_bar / 8.0;
    const int gp_bits = ceil_log2(1.0 / c.gamma_prime);
    c.iterate_bits = gp_bits + 1;
    c.log_entry_bits = std::max(0, ceil_log2(1.0 / c.gamma));
    c.frac_bits = std::max(gp_bits + 4, c.log_entry_bits);
    if (c.frac_bits > 50) throw InvalidInput("eps too small for 64-bit fixed-point logs");
    return c;
  }

  double delta() const { return std::ldexp(1.0, -frac_bits); }
  // Additive accuracy requested from each log-sum-exp inside an update.
  double lse_accuracy() const { return gamma_prime / 4.0; }

  FixedLog from_double(double x) const { return {std::llround(std::ldexp(x, frac_bits))}; }
};

namespace fixed {

// ln 2 * 2^64, rounded.
inline constexpr std::uint64_t kLn2Q64 = 0xB17217F7D1CF79ACull;
inline constexpr int kGuard = 6;
inline constexpr int kMaxWork = 56;

inline i128 ln2_at(int bits) {
  return static_cast<i128>((static_cast<u128>(kLn2Q64) + (u128{1} << (63 - bits))) >> (64 - bits));
}

// Round-to-nearest arithmetic right shift.
inline i128 round_shift(i128 x, int s) {
  if (s <= 0) return x << -s;
  return (x + (i128{1} << (s - 1))) >> s;
}

inline i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// e^x for x in units of 2^-w, result in units of 2^-w. Valid for x up to a
// few units of ln 2 above zero; very negative x returns 0.
inline u128 exp(i128 x, int w) {
  const int p = w + kGuard;
  const i128 big = x << kGuard;
  const i128 ln2 = ln2_at(p);
  const i128 k = floor_div(big, ln2);
  if (k < -(p + 2)) return 0;
  const u128 r = static_cast<u128>(big - k * ln2); // in [0, ln 2)
  const u128 one = u128{1} << p;
  u128 sum = one, term = one;
  for (unsigned i = 1; term != 0; ++i) {
    term = ((term * r) >> p) / i;
    sum += term;
  }
  const int shift = static_cast<int>(k) - kGuard;
  if (shift >= 0) return sum << shift;
  const int s = -shift;
  if (s >= 127) return 0;
  return (sum + (u128{1} << (s - 1))) >> s;
}

// ln s for s > 0 in units of 2^-w, result in units of 2^-w.
inline i128 ln(u128 s, int w) {
  const int p = w + kGuard;
  int top = 0;
  for (u128 t = s; t > 1; t >>= 1) ++top;
  const int k = top - w;
  // Mantissa in [1, 2] at p fractional bits.
  u128 m = s;
  if (top > p) {
    const int sh = top - p;
    m = (s + (u128{1} << (sh - 1))) >> sh;
  } else if (top < p) {
    m = s << (p - top);
  }
  const u128 one = u128{1} << p;
  // ln m = 2 atanh(z), z = (m - 1) / (m + 1) <= 1/3.
  const u128 z = ((m - one) << p) / (m + one);
  const u128 z2 = (z * z) >> p;
  u128 sum = 0, term = z;
  for (unsigned i = 1; term != 0; i += 2) {
    sum += term / i;
    term = (term * z2) >> p;
  }
  const i128 total = static_cast<i128>(k) * ln2_at(p) + 2 * static_cast<i128>(sum);
  return round_shift(total, kGuard);
}

} // namespace fixed

// Tracks results that do not fit the declared 64-bit word.
struct OverflowCounter {
  std::uint64_t events = 0;

  std::int64_t narrow(i128 x) {
    constexpr i128 hi = std::numeric_limits<std::int64_t>::max();
    constexpr i128 lo = std::numeric_limits<std::int64_t>::min();
    if (x > hi) {
      ++events;
      return std::numeric_limits<std::int64_t>::max();
    }
    if (x < lo) {
      ++events;
      return std::numeric_limits<std::int64_t>::min();
    }
    return static_cast<std::int64_t>(x);
  }
};

// ln sum_i e^(x_i) with additive error at most `accuracy` + delta. Terms
// more than ln(accuracy / (2 count)) below the maximum are raised to that
// floor, which bounds both the work precision and the truncation error.
inline FixedLog log_sum_exp(std::span<const FixedLog> values, int frac_bits, double accuracy,
                            OverflowCounter* overflow = nullptr) {
  if (values.empty()) throw InvalidInput("log_sum_exp of an empty list");
  if (values.size() == 1) return values[0];
  const auto mx = std::max_element(values.begin(), values.end())->units;
  const double count = static_cast<double>(values.size());
  const int w = std::min(fixed::kMaxWork, std::max(frac_bits, frac_bits + ceil_log2(count) + 6));
  const i128 floor_w = static_cast<i128>(std::floor(std::ldexp(std::log(accuracy / (2.0 * count)), w)));
  u128 s = 0;
  for (const auto& v : values) {
    const i128 d = fixed::round_shift(static_cast<i128>(v.units) - mx, frac_bits - w);
    s += fixed::exp(std::max(d, floor_w), w);
  }
  const i128 l = fixed::round_shift(fixed::ln(s, w), w - frac_bits);
  OverflowCounter local;
  auto& oc = overflow ? *overflow : local;
  return {oc.narrow(static_cast<i128>(mx) + l)};
}

inline FixedLog log_sum_exp(std::span<const FixedLog> values, const LowbitConfig& cfg,
                            OverflowCounter* overflow = nullptr) {
  return log_sum_exp(values, cfg.frac_bits, cfg.lse_accuracy(), overflow);
}

// Truncated logs of the entries, aligned with the CSR and CSC storage.
struct LogMatrix {
  std::vector<FixedLog> row_logs;
  std::vector<FixedLog> col_logs;
};

inline FixedLog truncated_log(double value, const LowbitConfig& cfg) {
  if (!(value > 0.0)) throw InvalidInput("log of a nonpositive entry");
  const auto coarse = std::llround(std::ldexp(std::log(value), cfg.log_entry_bits));
  return {coarse * (std::int64_t{1} << (cfg.frac_bits - cfg.log_entry_bits))};
}

inline LogMatrix preprocess_log_entries(const SparseNonnegMatrix& a, const LowbitConfig& cfg) {
  LogMatrix out;
  out.row_logs.reserve(a.nnz());
  out.col_logs.reserve(a.nnz());
  for (index_t j = 0; j < a.n(); ++j)
    for (double v : a.row(j).value) out.row_logs.push_back(truncated_log(v, cfg));
  for (index_t j = 0; j < a.n(); ++j)
    for (double v : a.col(j).value) out.col_logs.push_back(truncated_log(v, cfg));
  return out;
}

// Iteration state of one low-bit run.
class LowbitState {
public:
  LowbitState(const SparseNonnegMatrix& a, const LowbitConfig& cfg)
      : a_(a), cfg_(cfg), logs_(preprocess_log_entries(a, cfg)), u_(a.n()) {
    row_off_.resize(a.n() + 1, 0);
    col_off_.resize(a.n() + 1, 0);
    for (index_t j = 0; j < a.n(); ++j) {
      row_off_[j + 1] = row_off_[j] + a.row(j).size();
      col_off_[j + 1] = col_off_[j] + a.col(j).size();
    }
  }

  const SparseNonnegMatrix& matrix() const { return a_; }
  const LowbitConfig& config() const { return cfg_; }
  const LogMatrix& logs() const { return logs_; }
  std::span<const FixedLog> u() const { return u_; }
  std::span<FixedLog> u() { return u_; }
  OverflowCounter& overflow() { return overflow_; }
  std::uint64_t overflow_events() const { return overflow_.events; }

  std::vector<double> u_double() const {
    std::vector<double> out(u_.size());
    for (std::size_t i = 0; i < u_.size(); ++i) out[i] = u_[i].to_double(cfg_.frac_bits);
    return out;
  }

  // ln r_j and ln c_j at the current iterate.
  std::pair<FixedLog, FixedLog> log_sums_at(index_t j, double accuracy) {
    const auto row = a_.row(j);
    const auto col = a_.col(j);
    if (row.empty() || col.empty())
      throw NotBalanceableError("row or column " + std::to_string(j) + " has no entries");
    const std::int64_t uj = u_[j].units;
    scratch_.resize(row.size());
    for (std::size_t k = 0; k < row.size(); ++k)
      scratch_[k] = {overflow_.narrow(i128{uj} - u_[row.index[k]].units + logs_.row_logs[row_off_[j] + k].units)};
    const auto lr = log_sum_exp(scratch_, cfg_.frac_bits, accuracy, &overflow_);
    scratch_.resize(col.size());
    for (std::size_t k = 0; k < col.size(); ++k)
      scratch_[k] = {overflow_.narrow(i128{u_[col.index[k]].units} - uj + logs_.col_logs[col_off_[j] + k].units)};
    const auto lc = log_sum_exp(scratch_, cfg_.frac_bits, accuracy, &overflow_);
    return {lr, lc};
  }

  // ln phi at the current iterate.
  FixedLog log_potential(double accuracy) {
    scratch_.resize(a_.nnz());
    std::size_t k = 0;
    for (index_t i = 0; i < a_.n(); ++i) {
      const auto row = a_.row(i);
      for (std::size_t t = 0; t < row.size(); ++t, ++k)
        scratch_[k] = {overflow_.narrow(i128{u_[i].units} - u_[row.index[t]].units + logs_.row_logs[k].units)};
    }
    return log_sum_exp(scratch_, cfg_.frac_bits, accuracy, &overflow_);
  }

private:
  const SparseNonnegMatrix& a_;
  LowbitConfig cfg_;
  LogMatrix logs_;
  std::vector<FixedLog> u_;
  std::vector<std::size_t> row_off_, col_off_;
  std::vector<FixedLog> scratch_;
  OverflowCounter overflow_;
};

struct LowbitStep {
  FixedLog log_r;
  FixedLog log_c;
  FixedLog u_before;
  FixedLog u_after;
};

// Approximate Osborne step at j: u_j + (ln c_j - ln r_j) / 2 from truncated
// logs, rounded to the iterate grid.
inline LowbitStep lowbit_update(LowbitState& st, index_t j) {
  const auto& cfg = st.config();
  const auto [lr, lc] = st.log_sums_at(j, cfg.lse_accuracy());
  const FixedLog before = st.u()[j];
  // Twice the target, in units of 2^-(f+1), rounded onto the iterate grid.
  const i128 twice = 2 * i128{before.units} + lc.units - lr.units;
  const int coarsen = cfg.frac_bits + 1 - cfg.iterate_bits;
  const i128 grid = fixed::round_shift(twice, coarsen);
  const FixedLog after{st.overflow().narrow(grid << (cfg.frac_bits - cfg.iterate_bits))};
  st.u()[j] = after;
  return {lr, lc, before, after};
}

struct TerminationCheck {
  double g_hat = 0.0;
  bool decided = false;
  FixedLog log_phi_hat;
};

// Estimates the normalized imbalance g from e^(+-rho) approximations of
// r_j, c_j and phi. The estimate satisfies g/2 - eps_bar/2 <= g_hat <=
// 2g + eps_bar/2, so accepting at g_hat <= eps_bar certifies g <= 3 eps_bar.
inline TerminationCheck inexact_terminate_check(LowbitState& st) {
  const auto& cfg = st.config();
  const auto& a = st.matrix();
  const std::size_t n = a.n();
  std::vector<FixedLog> lr(n), lc(n);
  for (index_t j = 0; j < n; ++j) std::tie(lr[j], lc[j]) = st.log_sums_at(j, cfg.rho);
  TerminationCheck out;
  out.log_phi_hat = st.log_potential(cfg.rho);

  const int wv = std::min(fixed::kMaxWork, ceil_log2(static_cast<double>(n) / cfg.rho) + 8);
  const int f = cfg.frac_bits;
  u128 acc = 0;
  for (index_t j = 0; j < n; ++j) {
    const i128 x = fixed::round_shift(i128{lr[j].units} - out.log_phi_hat.units, f - wv);
    const i128 y = fixed::round_shift(i128{lc[j].units} - out.log_phi_hat.units, f - wv);
    const u128 ex = fixed::exp(x, wv), ey = fixed::exp(y, wv);
    acc += ex > ey ? ex - ey : ey - ex;
  }
  out.g_hat = std::ldexp(static_cast<double>(acc), -wv);
  out.decided = out.g_hat <= cfg.eps_bar;
  return out;
}

struct LowbitUpdateEvent {
  std::size_t cycle;
  index_t index;
  LowbitStep step;
  const LowbitState& state;
};

struct LowbitObserver {
  std::function<void(const LowbitUpdateEvent&)> on_update;
};

struct LowbitReport {
  BalanceReport report;
  std::uint64_t overflow_events = 0;
  std::size_t no_descent_cycles = 0;
  double g_hat = 0.0;
  LowbitConfig config;
};

// Cyclic-family Osborne in low-bit arithmetic. After every cycle the inexact
// check runs; a cycle whose estimated potential did not drop by more than
// the estimation slack 2 rho phi is counted as a no-descent cycle, which by
// itself certifies an O(eps) balancing, so the check is expected to accept
// there. Trajectory imbalances are exact-mode values of the current iterate,
// computed for instrumentation only and not counted in nonzeros_touched.
inline LowbitReport run_lowbit(const SparseNonnegMatrix& a, double eps, const Strategy& strategy = {},
                               std::optional<std::size_t> max_cycles = std::nullopt,
                               const LowbitObserver* observer = nullptr) {
  if (strategy.kind != StrategyKind::Cyclic && strategy.kind != StrategyKind::ShuffledCyclic)
    throw InvalidInput("low-bit mode supports cyclic and shuffled-cyclic orderings only");
  SolverConfig scfg;
  scfg.eps = eps;
  scfg.strategy = strategy;
  detail::validate(scfg, a.n());

  LowbitReport out;
  out.config = LowbitConfig::make(eps, a.n());
  auto& rep = out.report;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0);
  };

  if (auto j = detail::first_empty_line(a)) {
    rep.termination = Termination::NotBalanceable;
    rep.message = "row or column " + std::to_string(*j) +
                  " has no entries; split the matrix into strongly connected blocks first";
    rep.u_final.assign(a.n(), 0.0);
    return out;
  }
  const std::size_t budget = max_cycles ? *max_cycles : default_max_cycles(conditioning(a), eps);
  if (budget < 1) throw InvalidInput("max_cycles must be at least 1");

  LowbitState st(a, out.config);
  const double descent_slack = std::log1p(-2.0 * out.config.rho);

  auto check = [&] {
    const auto chk = inexact_terminate_check(st);
    rep.nonzeros_touched += 3 * a.nnz();
    out.g_hat = chk.g_hat;
    const auto ud = st.u_double();
    rep.final_imbalance = imbalance(a, ud).normalized;
    rep.trajectory.push_back({rep.updates_used, rep.nonzeros_touched, elapsed().count(), rep.final_imbalance});
    return chk;
  };
  auto finish = [&](Termination t) {
    rep.termination = t;
    rep.u_final = st.u_double();
    rep.wall_time = elapsed();
    out.overflow_events = st.overflow_events();
  };

  auto prev = check();
  if (prev.decided) {
    finish(Termination::Converged);
    return out;
  }

  std::vector<index_t> order(a.n());
  if (strategy.kind == StrategyKind::Cyclic && !strategy.order.empty())
    order = strategy.order;
  else
    std::iota(order.begin(), order.end(), index_t{0});

  for (std::size_t cycle = 0;; ++cycle) {
    if (strategy.kind == StrategyKind::ShuffledCyclic) {
      auto rng = cycle_rng(strategy.seed, cycle);
      std::shuffle(order.begin(), order.end(), rng);
    }
    for (auto j : order) {
      const auto step = lowbit_update(st, j);
      ++rep.updates_used;
      rep.nonzeros_touched += a.degree(j);
      if (observer && observer->on_update) observer->on_update({cycle, j, step, st});
    }
    ++rep.cycles_used;
    rep.rounds_used += a.n();
    const auto cur = check();
    const bool no_descent =
        cur.log_phi_hat.to_double(out.config.frac_bits) >= prev.log_phi_hat.to_double(out.config.frac_bits) + descent_slack;
    if (no_descent) ++out.no_descent_cycles;
    if (cur.decided) {
      finish(Termination::Converged);
      return out;
    }
    if (rep.cycles_used >= budget) {
      finish(Termination::MaxCyclesReached);
      return out;
    }
    prev = cur;
  }
}

} // namespace osborne::lowbit

#endif
