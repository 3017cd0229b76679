#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "osborne/core.hpp"
#include "osborne/instances.hpp"
#include "osborne/solver.hpp"

using namespace osborne;

namespace {

SparseNonnegMatrix two_by_two() { return build_matrix(2, {{0, 1, 4.0}, {1, 0, 1.0}}); }

SparseNonnegMatrix symmetric4() {
  std::vector<Triplet> t;
  for (index_t i = 0; i < 4; ++i)
    for (index_t j = i + 1; j < 4; ++j) {
      const double v = 1.0 + static_cast<double>(i + 2 * j);
      t.push_back({i, j, v});
      t.push_back({j, i, v});
    }
  return build_matrix(4, t);
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

} // namespace

TEST(BuildMatrix, DropsDiagonal) {
  BuildSummary s;
  const auto a = build_matrix(2, {{0, 1, 4.0}, {1, 0, 1.0}, {0, 0, 7.0}}, &s);
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_EQ(s.dropped_diagonal, 1u);
}

TEST(BuildMatrix, SumsDuplicates) {
  BuildSummary s;
  const auto a = build_matrix(3, {{0, 1, 1.0}, {0, 1, 2.0}}, &s);
  ASSERT_EQ(a.nnz(), 1u);
  EXPECT_EQ(a.entries()[0], (Triplet{0, 1, 3.0}));
  EXPECT_EQ(s.merged_duplicates, 1u);
}

TEST(BuildMatrix, RejectsNegative) {
  try {
    build_matrix(2, {{0, 1, -1.0}});
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("negative value"), std::string::npos);
  }
}

TEST(BuildMatrix, RejectsBadShape) {
  EXPECT_THROW(build_matrix(0, {}), InvalidInput);
  EXPECT_THROW(build_matrix(2, {{0, 2, 1.0}}), InvalidInput);
  EXPECT_THROW(build_matrix(2, {{0, 1, std::nan("")}}), InvalidInput);
}

TEST(BuildMatrix, DropsZerosAndViewsAgree) {
  BuildSummary s;
  const auto a = oracle::random_matrix(12, 0.4, 3);
  auto e = a.entries();
  e.push_back({1, 2, 0.0});
  const auto b = build_matrix(12, e, &s);
  EXPECT_EQ(s.dropped_zero, 1u);
  EXPECT_EQ(b.entries(), b.entries_from_columns());
  EXPECT_EQ(b.entries(), a.entries());
}

TEST(RowColSums, TwoByTwo) {
  const auto a = two_by_two();
  std::vector<double> u{0.0, 0.0};
  auto s = row_col_sums_at(a, u, 0);
  EXPECT_DOUBLE_EQ(s.r, 4.0);
  EXPECT_DOUBLE_EQ(s.c, 1.0);
  u = {-std::numbers::ln2, 0.0};
  s = row_col_sums_at(a, u, 0);
  EXPECT_NEAR(s.r, 2.0, 1e-15);
  EXPECT_NEAR(s.c, 2.0, 1e-15);
}

TEST(RowColSums, MatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = oracle::random_matrix(5, 1.0, seed);
    const auto u = oracle::random_u(5, seed, 2.0);
    const auto ref = oracle::sums(oracle::dense(a), oracle::widen(u));
    for (index_t j = 0; j < 5; ++j) {
      const auto s = row_col_sums_at(a, u, j);
      EXPECT_LT(rel(s.r, static_cast<double>(ref.r[j])), 1e-12);
      EXPECT_LT(rel(s.c, static_cast<double>(ref.c[j])), 1e-12);
    }
  }
}

TEST(RowColSums, EmptyLineIsNotBalanceable) {
  const auto a = build_matrix(3, {{0, 1, 1.0}, {1, 0, 1.0}});
  std::vector<double> u(3, 0.0);
  EXPECT_THROW(row_col_sums_at(a, u, 2), NotBalanceableError);
}

TEST(Potential, IdentityScalingIsTotal) {
  const auto a = oracle::random_matrix(7, 0.5, 11);
  std::vector<double> u(7, 0.0);
  EXPECT_LT(rel(potential(a, u), a.total()), 1e-14);
}

TEST(Potential, TwoByTwoBalanced) {
  const std::vector<double> u{-std::numbers::ln2, 0.0};
  EXPECT_NEAR(potential(two_by_two(), u), 4.0, 1e-14);
}

TEST(Potential, EqualsRowAndColumnTotals) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = oracle::random_matrix(6, 0.7, seed);
    const auto u = oracle::random_u(6, seed);
    const auto s = full_sums(a, u);
    double rs = 0, cs = 0;
    for (index_t j = 0; j < 6; ++j) {
      rs += s.r[j];
      cs += s.c[j];
    }
    const double phi = potential(a, u);
    EXPECT_LT(rel(rs, phi), 1e-12);
    EXPECT_LT(rel(cs, phi), 1e-12);
  }
}

TEST(Potential, OverflowIsReported) {
  const auto a = two_by_two();
  const std::vector<double> u{800.0, 0.0};
  EXPECT_THROW(potential(a, u), NumericRangeError);
}

TEST(Gradient, Examples) {
  const std::vector<double> z2{0.0, 0.0};
  const auto g = gradient(two_by_two(), z2);
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  EXPECT_DOUBLE_EQ(g[1], -3.0);
  const std::vector<double> z4(4, 0.0);
  for (double x : gradient(symmetric4(), z4)) EXPECT_EQ(x, 0.0);
}

TEST(Gradient, SumsToZero) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = oracle::random_matrix(9, 0.5, seed);
    const auto u = oracle::random_u(9, seed, 3.0);
    double s = 0;
    for (double x : gradient(a, u)) s += x;
    EXPECT_LE(std::fabs(s), 1e-12 * potential(a, u));
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 3 + seed % 8;
    const auto a = oracle::random_matrix(n, 0.8, seed);
    const auto u = oracle::random_u(n, seed);
    const auto g = gradient(a, u);
    const auto fd = oracle::fd_gradient(oracle::dense(a), oracle::widen(u));
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(g[j], static_cast<double>(fd[j]), 1e-5);
  }
}

TEST(Imbalance, Examples) {
  const std::vector<double> z4(4, 0.0), z2(2, 0.0);
  EXPECT_EQ(imbalance(symmetric4(), z4).normalized, 0.0);
  const auto c = imbalance(two_by_two(), z2);
  EXPECT_DOUBLE_EQ(c.normalized, 1.2);
  EXPECT_DOUBLE_EQ(c.l1_gradient_norm, 6.0);
  EXPECT_DOUBLE_EQ(c.potential, 5.0);
  EXPECT_THROW(imbalance(build_matrix(3, {}), std::vector<double>(3, 0.0)), InvalidInput);
}

TEST(Imbalance, MatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = oracle::random_matrix(8, 0.5, seed);
    const auto u = oracle::random_u(8, seed);
    const double ref = static_cast<double>(oracle::normalized_imbalance(oracle::dense(a), oracle::widen(u)));
    EXPECT_LT(rel(imbalance(a, u).normalized, ref), 1e-12);
  }
}

TEST(Imbalance, ScaleInvariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = oracle::random_matrix(8, 0.6, seed);
    for (double c : {0.5, 3.0, 1024.0, 1e-7}) {
      auto e = a.entries();
      for (auto& t : e) t.value *= c;
      const auto ca = build_matrix(8, e);
      const auto u = oracle::random_u(8, seed);
      EXPECT_LT(rel(imbalance(ca, u).normalized, imbalance(a, u).normalized), 1e-14);
    }
  }
}

TEST(Imbalance, ShiftInvariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = oracle::random_matrix(8, 0.6, seed);
    const auto u = oracle::random_u(8, seed);
    for (double t : {-3.0, 0.25, 7.5}) {
      auto v = u;
      for (auto& x : v) x += t;
      EXPECT_LT(rel(imbalance(a, v).normalized, imbalance(a, u).normalized), 1e-12);
    }
  }
}

TEST(ScaledMatrix, IdentityCopy) {
  const auto a = oracle::random_matrix(6, 0.5, 4);
  EXPECT_EQ(scaled_matrix(a, std::vector<double>(6, 0.0)).entries(), a.entries());
}

TEST(ScaledMatrix, TwoByTwoBalanced) {
  const std::vector<double> u{-std::numbers::ln2, 0.0};
  const auto m = scaled_matrix(two_by_two(), u).entries();
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(m[0].value, 2.0, 1e-15);
  EXPECT_NEAR(m[1].value, 2.0, 1e-15);
}

TEST(ScaledMatrix, InverseRoundTrip) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = oracle::random_matrix(10, 0.4, seed);
    const auto u = oracle::random_u(10, seed, 4.0);
    auto neg = u;
    for (auto& x : neg) x = -x;
    const auto back = scaled_matrix(scaled_matrix(a, u), neg).entries();
    const auto orig = a.entries();
    ASSERT_EQ(back.size(), orig.size());
    for (std::size_t k = 0; k < orig.size(); ++k) EXPECT_LT(rel(back[k].value, orig[k].value), 1e-12);
  }
}

TEST(VerifyBalance, Examples) {
  EXPECT_TRUE(verify_balance(symmetric4(), std::vector<double>(4, 0.0), 1e-12));
  EXPECT_FALSE(verify_balance(two_by_two(), std::vector<double>(2, 0.0), 1.0));
  EXPECT_THROW(verify_balance(two_by_two(), std::vector<double>(2, 0.0), 0.0), InvalidInput);
}

TEST(VerifyBalance, KalantariSolverOutput) {
  const auto a = gen_kalantari(40);
  SolverConfig cfg;
  cfg.eps = 1e-8;
  const auto rep = run(a, cfg);
  ASSERT_EQ(rep.termination, Termination::Converged);
  EXPECT_TRUE(verify_balance(a, rep.u_final, 1e-8));
}

TEST(Conditioning, PotentialRatioBoundedByKappa) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = gen_random_sparse(15, 0.4, 1e-3, 1.0, seed);
    const auto st = stats(a, false);
    if (!st.strongly_connected) continue;
    SolverConfig cfg;
    cfg.eps = 1e-12;
    cfg.max_cycles = 200000;
    const auto rep = run(a, cfg);
    ASSERT_EQ(rep.termination, Termination::Converged);
    const double ratio = potential(a, std::vector<double>(15, 0.0)) / potential(a, rep.u_final);
    EXPECT_GE(ratio, 1.0 - 1e-12);
    EXPECT_LE(ratio, st.kappa);
  }
}
