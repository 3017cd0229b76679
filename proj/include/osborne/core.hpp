#ifndef OSBORNE_CORE_HPP
#define OSBORNE_CORE_HPP

// Sparse nonnegative matrices and the convex potential used for balancing.
//
// A diagonal scaling is kept in the log domain: u holds natural-log exponents
// and D = diag(e^u). Balancing A means finding u such that M = D A D^-1 has
// equal i-th row and column sums for every i. The potential
//
//   phi(u) = sum_ij e^(u_i - u_j) A_ij
//
// is convex, its gradient is r(M) - c(M), and the normalized imbalance
// ||r(M) - c(M)||_1 / phi(u) is the termination measure used throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "osborne/errors.hpp"

namespace osborne {

using index_t = std::size_t;

struct Triplet {
  index_t row;
  index_t col;
  double value;
};

inline bool operator==(const Triplet& a, const Triplet& b) {
  return a.row == b.row && a.col == b.col && a.value == b.value;
}

// What build_matrix() silently discarded or merged.
struct BuildSummary {
  std::size_t dropped_diagonal = 0;
  std::size_t dropped_zero = 0;
  std::size_t merged_duplicates = 0;
};

// One row (or column) of the matrix: parallel index/value arrays.
struct Adjacency {
  std::span<const index_t> index;
  std::span<const double> value;

  std::size_t size() const { return index.size(); }
  bool empty() const { return index.empty(); }
};

// Nonnegative square matrix with zero diagonal, stored twice: CSR for row
// access and CSC for column access. Only strictly positive values are stored.
// Immutable after construction.
class SparseNonnegMatrix {
public:
  SparseNonnegMatrix() = default;

  std::size_t n() const { return n_; }
  std::size_t nnz() const { return row_val_.size(); }

  Adjacency row(index_t j) const {
    const auto b = row_ptr_[j], e = row_ptr_[j + 1];
    return {std::span(col_idx_).subspan(b, e - b), std::span(row_val_).subspan(b, e - b)};
  }
  Adjacency col(index_t j) const {
    const auto b = col_ptr_[j], e = col_ptr_[j + 1];
    return {std::span(row_idx_).subspan(b, e - b), std::span(col_val_).subspan(b, e - b)};
  }

  // Row j plus column j entry count; the cost of one Osborne update at j.
  std::size_t degree(index_t j) const {
    return (row_ptr_[j + 1] - row_ptr_[j]) + (col_ptr_[j + 1] - col_ptr_[j]);
  }

  // Row-major (row, col) sorted entry list.
  std::vector<Triplet> entries() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (index_t i = 0; i < n_; ++i) {
      const auto r = row(i);
      for (std::size_t k = 0; k < r.size(); ++k) out.push_back({i, r.index[k], r.value[k]});
    }
    return out;
  }

  // Same entry set as entries() but assembled from the column view.
  std::vector<Triplet> entries_from_columns() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (index_t j = 0; j < n_; ++j) {
      const auto c = col(j);
      for (std::size_t k = 0; k < c.size(); ++k) out.push_back({c.index[k], j, c.value[k]});
    }
    std::sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
      return std::pair(a.row, a.col) < std::pair(b.row, b.col);
    });
    return out;
  }

  double min_value() const {
    return row_val_.empty() ? 0.0 : *std::min_element(row_val_.begin(), row_val_.end());
  }
  double total() const { return std::accumulate(row_val_.begin(), row_val_.end(), 0.0); }

  // Entries in canonical row-major order; assumes sorted, deduplicated input
  // with positive values off the diagonal.
  static SparseNonnegMatrix from_canonical(std::size_t n, const std::vector<Triplet>& sorted) {
    SparseNonnegMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    m.col_ptr_.assign(n + 1, 0);
    for (const auto& t : sorted) {
      ++m.row_ptr_[t.row + 1];
      ++m.col_ptr_[t.col + 1];
    }
    std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
    std::partial_sum(m.col_ptr_.begin(), m.col_ptr_.end(), m.col_ptr_.begin());
    m.col_idx_.resize(sorted.size());
    m.row_val_.resize(sorted.size());
    m.row_idx_.resize(sorted.size());
    m.col_val_.resize(sorted.size());
    std::vector<std::size_t> cfill(m.col_ptr_.begin(), m.col_ptr_.end() - 1);
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      const auto& t = sorted[k];
      m.col_idx_[k] = t.col;
      m.row_val_[k] = t.value;
      const auto slot = cfill[t.col]++;
      m.row_idx_[slot] = t.row;
      m.col_val_[slot] = t.value;
    }
    return m;
  }

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_, col_idx_;
  std::vector<double> row_val_;
  std::vector<std::size_t> col_ptr_, row_idx_;
  std::vector<double> col_val_;
};

// Drops zero and diagonal triplets, sums duplicates.
inline SparseNonnegMatrix build_matrix(std::size_t n, std::vector<Triplet> triplets,
                                       BuildSummary* summary = nullptr) {
  if (n == 0) throw InvalidInput("matrix dimension must be positive");
  BuildSummary s;
  std::vector<Triplet> kept;
  kept.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (t.row >= n || t.col >= n)
      throw InvalidInput("index out of range: (" + std::to_string(t.row) + ", " +
                         std::to_string(t.col) + ") for n = " + std::to_string(n));
    if (t.value < 0.0)
      throw InvalidInput("negative value at (" + std::to_string(t.row) + ", " +
                         std::to_string(t.col) + ")");
    if (!std::isfinite(t.value))
      throw InvalidInput("non-finite value at (" + std::to_string(t.row) + ", " +
                         std::to_string(t.col) + ")");
    if (t.row == t.col) {
      ++s.dropped_diagonal;
      continue;
    }
    if (t.value == 0.0) {
      ++s.dropped_zero;
      continue;
    }
    kept.push_back(t);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Triplet& a, const Triplet& b) {
    return std::pair(a.row, a.col) < std::pair(b.row, b.col);
  });
  std::vector<Triplet> merged;
  merged.reserve(kept.size());
  for (const auto& t : kept) {
    if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col) {
      merged.back().value += t.value;
      ++s.merged_duplicates;
    } else {
      merged.push_back(t);
    }
  }
  if (summary) *summary = s;
  return SparseNonnegMatrix::from_canonical(n, merged);
}

// Log-domain diagonal scaling; u = 0 is the identity.
using ScalingVector = std::vector<double>;

struct ImbalanceCertificate {
  double l1_gradient_norm = 0.0;
  double potential = 0.0;
  double normalized = 0.0;
};

namespace detail {

inline double checked(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericRangeError(std::string(what) + " overflowed");
  return x;
}

inline void check_dims(const SparseNonnegMatrix& a, std::span<const double> u) {
  if (u.size() != a.n())
    throw InvalidInput("scaling has " + std::to_string(u.size()) + " entries, matrix has n = " +
                       std::to_string(a.n()));
}

} // namespace detail

struct RowColSums {
  double r = 0.0;
  double c = 0.0;
};

// r_j and c_j of D A D^-1, recomputed from the adjacency lists in O(deg(j)).
inline RowColSums row_col_sums_at(const SparseNonnegMatrix& a, std::span<const double> u, index_t j) {
  if (j >= a.n()) throw InvalidInput("index out of range");
  const auto row = a.row(j);
  const auto col = a.col(j);
  if (row.empty() || col.empty())
    throw NotBalanceableError("row or column " + std::to_string(j) + " has no entries");
  const double uj = u[j];
  RowColSums s;
  for (std::size_t k = 0; k < row.size(); ++k) s.r += std::exp(uj - u[row.index[k]]) * row.value[k];
  for (std::size_t k = 0; k < col.size(); ++k) s.c += std::exp(u[col.index[k]] - uj) * col.value[k];
  detail::checked(s.r, "row sum");
  detail::checked(s.c, "column sum");
  if (s.r == 0.0 || s.c == 0.0) throw NumericRangeError("row or column sum underflowed to zero");
  return s;
}

// Full row and column sums of D A D^-1 in one pass over the entries.
struct FullSums {
  std::vector<double> r, c;
  double total = 0.0;
};

inline FullSums full_sums(const SparseNonnegMatrix& a, std::span<const double> u) {
  detail::check_dims(a, u);
  FullSums s;
  s.r.assign(a.n(), 0.0);
  s.c.assign(a.n(), 0.0);
  for (index_t i = 0; i < a.n(); ++i) {
    const auto row = a.row(i);
    const double ui = u[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double w = std::exp(ui - u[row.index[k]]) * row.value[k];
      acc += w;
      s.c[row.index[k]] += w;
    }
    s.r[i] = acc;
    s.total += acc;
  }
  detail::checked(s.total, "potential");
  return s;
}

inline double potential(const SparseNonnegMatrix& a, std::span<const double> u) {
  return full_sums(a, u).total;
}

// Component j is r_j(u) - c_j(u).
inline std::vector<double> gradient(const SparseNonnegMatrix& a, std::span<const double> u) {
  auto s = full_sums(a, u);
  std::vector<double> g(a.n());
  for (index_t j = 0; j < a.n(); ++j) g[j] = s.r[j] - s.c[j];
  return g;
}

inline ImbalanceCertificate imbalance(const SparseNonnegMatrix& a, std::span<const double> u) {
  if (a.nnz() == 0) throw InvalidInput("imbalance of the zero matrix is undefined");
  const auto s = full_sums(a, u);
  ImbalanceCertificate cert;
  for (index_t j = 0; j < a.n(); ++j) cert.l1_gradient_norm += std::abs(s.r[j] - s.c[j]);
  cert.potential = s.total;
  if (!(cert.potential > 0.0)) throw NumericRangeError("potential underflowed to zero");
  cert.normalized = cert.l1_gradient_norm / cert.potential;
  return cert;
}

// D A D^-1 with the same sparsity pattern.
inline SparseNonnegMatrix scaled_matrix(const SparseNonnegMatrix& a, std::span<const double> u) {
  detail::check_dims(a, u);
  auto e = a.entries();
  for (auto& t : e) {
    t.value = detail::checked(std::exp(u[t.row] - u[t.col]) * t.value, "scaled entry");
    if (t.value == 0.0) throw NumericRangeError("scaled entry underflowed to zero");
  }
  return SparseNonnegMatrix::from_canonical(a.n(), e);
}

inline bool verify_balance(const SparseNonnegMatrix& a, std::span<const double> u, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  return imbalance(a, u).normalized <= eps;
}

// Sum of entries over the smallest entry.
inline double conditioning(const SparseNonnegMatrix& a) {
  if (a.nnz() == 0) throw InvalidInput("conditioning of the zero matrix is undefined");
  return a.total() / a.min_value();
}

} // namespace osborne

#endif
