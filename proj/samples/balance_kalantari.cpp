// Balances the Kalantari hard instance with every selection strategy and
// prints the cost of reaching a 1e-10 normalized imbalance.

#include <cstdio>

#include "osborne/osborne.hpp"

int main() {
  using namespace osborne;
  const auto a = gen_kalantari(40);
  const auto st = stats(a);
  std::printf("n=%zu m=%zu kappa=%.6g diameter=%zu\n", st.n, st.m, st.kappa, *st.diameter);

  for (auto kind : {StrategyKind::Cyclic, StrategyKind::ShuffledCyclic, StrategyKind::UniformRandom,
                    StrategyKind::WeightedRandom, StrategyKind::Greedy}) {
    SolverConfig cfg;
    cfg.eps = 1e-10;
    cfg.strategy = {kind, 1, {}};
    const auto rep = run(a, cfg);
    std::printf("%-9s %-10s updates=%-8zu nonzeros=%-9zu imbalance=%.3g\n", std::string(to_string(kind)).c_str(),
                std::string(to_string(rep.termination)).c_str(), rep.updates_used, rep.nonzeros_touched,
                rep.final_imbalance);
  }
}
