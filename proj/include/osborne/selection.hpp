#ifndef OSBORNE_SELECTION_HPP
#define OSBORNE_SELECTION_HPP

// Index-selection structures for the non-cyclic Osborne variants.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <random>
#include <vector>

#include "osborne/errors.hpp"

namespace osborne {

// Fenwick tree over nonnegative weights; samples i with probability w_i / sum(w).
class WeightTree {
public:
  explicit WeightTree(std::size_t n = 0) { reset(n); }

  void reset(std::size_t n) {
    w_.assign(n, 0.0);
    tree_.assign(n + 1, 0.0);
    top_bit_ = 1;
    while (top_bit_ * 2 <= n) top_bit_ *= 2;
  }

  // Rebuild in O(n) from a full weight vector; clears accumulated drift.
  void assign(const std::vector<double>& w) {
    reset(w.size());
    w_ = w;
    for (std::size_t i = 1; i <= w_.size(); ++i) {
      tree_[i] += w_[i - 1];
      const auto parent = i + (i & (~i + 1));
      if (parent <= w_.size()) tree_[parent] += tree_[i];
    }
  }

  void set(std::size_t i, double w) {
    const double delta = w - w_[i];
    w_[i] = w;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
  }

  double weight(std::size_t i) const { return w_[i]; }
  std::size_t size() const { return w_.size(); }

  double total() const {
    double s = 0.0;
    for (std::size_t k = w_.size(); k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }

  template <class Rng>
  std::size_t sample(Rng& rng) const {
    const double tot = total();
    if (!(tot > 0.0)) throw InvalidInput("cannot sample from all-zero weights");
    double x = std::uniform_real_distribution<double>(0.0, tot)(rng);
    std::size_t pos = 0;
    for (std::size_t step = top_bit_; step > 0; step >>= 1) {
      if (pos + step < tree_.size() && tree_[pos + step] <= x) {
        x -= tree_[pos + step];
        pos += step;
      }
    }
    // Rounding can walk past the last positive weight; back off to it.
    if (pos >= w_.size()) pos = w_.size() - 1;
    while (w_[pos] <= 0.0 && pos > 0) --pos;
    return pos;
  }

private:
  std::vector<double> w_;
  std::vector<double> tree_;
  std::size_t top_bit_ = 1;
};

// Lazy max-heap keyed by score; superseded entries are skipped on pop via
// per-index version stamps. Ties go to the smallest index.
class GreedyHeap {
public:
  explicit GreedyHeap(std::size_t n = 0) { reset(n); }

  void reset(std::size_t n) {
    version_.assign(n, 0);
    score_.assign(n, 0.0);
    heap_ = {};
  }

  void set(std::size_t i, double score) {
    score_[i] = score;
    heap_.push({score, i, ++version_[i]});
  }

  double score(std::size_t i) const { return score_[i]; }

  std::size_t top() {
    while (!heap_.empty()) {
      const auto& e = heap_.top();
      if (e.version == version_[e.index]) return e.index;
      heap_.pop();
    }
    throw InvalidInput("greedy heap is empty");
  }

  std::size_t pending() const { return heap_.size(); }

private:
  struct Item {
    double score;
    std::size_t index;
    std::uint64_t version;
  };
  struct Lower {
    bool operator()(const Item& a, const Item& b) const {
      if (a.score != b.score) return a.score < b.score;
      return a.index > b.index;
    }
  };
  std::vector<std::uint64_t> version_;
  std::vector<double> score_;
  std::priority_queue<Item, std::vector<Item>, Lower> heap_;
};

// Greedy priority of a row/column pair.
inline double greedy_score(double r, double c) {
  const double d = std::sqrt(r) - std::sqrt(c);
  return d * d;
}

} // namespace osborne

#endif
