#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "osborne/bench.hpp"
#include "osborne/instances.hpp"
#include "osborne/io.hpp"

using namespace osborne;

namespace {

io::MatrixFile parse(const std::string& text) {
  std::istringstream in(text);
  return io::read_matrix_market(in);
}

} // namespace

TEST(MatrixMarket, RoundTripPreservesEntries) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = gen_random_sparse(25, 0.2, 1e-5, 1e5, seed);
    std::stringstream ss;
    io::write_matrix_market(ss, a, {" generator test", " seed " + std::to_string(seed)});
    const auto back = io::read_matrix_market(ss);
    EXPECT_EQ(back.matrix.entries(), a.entries());
    ASSERT_EQ(back.comments.size(), 2u);
    EXPECT_EQ(back.comments[0], " generator test");
  }
}

TEST(MatrixMarket, GeneratedSalientRoundTrip) {
  const auto a = gen_salient(50, 3, 0.001, 1.0, 7);
  std::stringstream ss;
  io::write_matrix_market(ss, a);
  EXPECT_EQ(io::read_matrix_market(ss).matrix.entries(), gen_salient(50, 3, 0.001, 1.0, 7).entries());
}

TEST(MatrixMarket, SymmetricPatternAndDiagonal) {
  const auto f = parse("%%MatrixMarket matrix coordinate pattern symmetric\n% c\n3 3 3\n2 1\n3 2\n3 3\n");
  EXPECT_EQ(f.matrix.nnz(), 4u);
  EXPECT_EQ(f.summary.dropped_diagonal, 1u);
  for (const auto& t : f.matrix.entries()) EXPECT_EQ(t.value, 1.0);
}

TEST(MatrixMarket, IntegerField) {
  const auto f = parse("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 2 4\n2 1 1\n");
  EXPECT_EQ(f.matrix.entries(), (std::vector<Triplet>{{0, 1, 4.0}, {1, 0, 1.0}}));
}

TEST(MatrixMarket, Errors) {
  EXPECT_THROW(parse(""), io::ParseError);
  EXPECT_THROW(parse("hello\n"), io::ParseError);
  EXPECT_THROW(parse("%%MatrixMarket matrix array real general\n2 2\n"), io::ParseError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate complex general\n2 2 0\n"), io::ParseError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 3 0\n"), io::ParseError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"), io::ParseError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 -1.0\n"), io::ParseError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n"), io::ParseError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x\n"), io::ParseError);
  EXPECT_THROW(io::read_matrix_market(std::string("/nonexistent/file.mtx")), io::ParseError);
}

TEST(Scaling, RoundTripAt17Digits) {
  const auto u = oracle::random_u(40, 3, 50.0);
  std::stringstream ss;
  ss << "# comment\n";
  io::write_scaling(ss, u);
  EXPECT_EQ(io::read_scaling(ss), u);
}

TEST(Scaling, Base2Divisor) {
  std::stringstream ss;
  io::write_scaling(ss, {-std::numbers::ln2 * 3}, std::numbers::ln2);
  EXPECT_NEAR(io::read_scaling(ss)[0], -3.0, 1e-15);
}

TEST(Scaling, MalformedLine) {
  std::istringstream in("1.0\nabc\n");
  EXPECT_THROW(io::read_scaling(in), io::ParseError);
}

TEST(Bench, CsvHeaderAndMonotoneSeries) {
  const auto a = gen_kalantari(10);
  SolverConfig cfg;
  cfg.eps = 1e-10;
  const std::vector<StrategyKind> kinds{StrategyKind::Cyclic, StrategyKind::ShuffledCyclic, StrategyKind::UniformRandom,
                                        StrategyKind::WeightedRandom, StrategyKind::Greedy};
  const auto series = bench::run_series(a, kinds, cfg, 1);
  ASSERT_EQ(series.size(), 5u);
  std::stringstream ss;
  bench::write_csv_header(ss);
  for (const auto& s : series) {
    EXPECT_EQ(s.report.termination, Termination::Converged) << s.strategy;
    const auto rows = bench::records("kalantari:k=10", s);
    ASSERT_FALSE(rows.empty());
    for (std::size_t k = 1; k < rows.size(); ++k) {
      EXPECT_GE(rows[k].updates, rows[k - 1].updates);
      EXPECT_GE(rows[k].nonzeros, rows[k - 1].nonzeros);
      EXPECT_GE(rows[k].wall_nanos, rows[k - 1].wall_nanos);
    }
    EXPECT_LE(rows.back().imbalance, 1e-10);
    bench::write_csv(ss, rows);
  }
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "instance,strategy,updates,nonzeros,wall_nanos,imbalance");
  std::string line;
  std::size_t count = 0;
  while (std::getline(ss, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
    ++count;
  }
  EXPECT_GT(count, 5u);
}

TEST(Bench, StrategySeedsIndependent) {
  EXPECT_NE(bench::strategy_seed(1, StrategyKind::UniformRandom), bench::strategy_seed(1, StrategyKind::WeightedRandom));
  EXPECT_EQ(bench::strategy_seed(1, StrategyKind::Greedy), bench::strategy_seed(1, StrategyKind::Greedy));
}
