// osborne: command-line front end for the balancing toolkit.
//
//   osborne balance  matrix.mtx [-o u.txt] [--eps E] [--strategy S] ...
//   osborne gen      kalantari|salient|random [params] [-o out.mtx]
//   osborne stats    matrix.mtx [--eps E] [--json]
//   osborne verify   matrix.mtx u.txt --eps E
//   osborne bench    (--instance SPEC | --matrix FILE) [--strategies a,b] -o trace.csv
//
// Exit codes: 0 success / converged / verified, 1 verification failed,
// 2 cycle budget exhausted (or radix-rounded run stalled), 3 matrix not
// balanceable as given, 4 bad input.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "osborne/osborne.hpp"

namespace {

using namespace osborne;
using nlohmann::json;

enum Exit : int { kOk = 0, kFailed = 1, kBudget = 2, kNotBalanceable = 3, kBadInput = 4 };

int exit_for(Termination t) {
  switch (t) {
  case Termination::Converged: return kOk;
  case Termination::NotBalanceable: return kNotBalanceable;
  case Termination::MaxCyclesReached:
  case Termination::Stalled: return kBudget;
  }
  return kBudget;
}

io::MatrixFile load(const std::string& path) {
  auto f = io::read_matrix_market(path);
  const auto& s = f.summary;
  if (s.dropped_diagonal)
    std::cerr << "warning: dropped " << s.dropped_diagonal << " diagonal entr" << (s.dropped_diagonal == 1 ? "y" : "ies")
              << '\n';
  if (s.dropped_zero) std::cerr << "warning: dropped " << s.dropped_zero << " zero entries\n";
  if (s.merged_duplicates) std::cerr << "warning: summed " << s.merged_duplicates << " duplicate entries\n";
  return f;
}

json optional_size(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::string scc_hint(const SparseNonnegMatrix& a) {
  const auto dec = scc_decompose(a);
  std::ostringstream os;
  os << "matrix is not balanceable as given: its support graph has " << dec.blocks.size()
     << " strongly connected components (" << dec.cross_entries.size()
     << " entries between them); balance each irreducible block separately";
  return os.str();
}

// ---------------------------------------------------------------- balance

struct BalanceArgs {
  std::string matrix, output;
  double eps = 1e-8;
  std::string strategy = "cyclic";
  std::uint64_t seed = 0;
  std::size_t max_cycles = 0;
  std::string criterion = "l1";
  std::string precision = "exact";
  bool radix = false;
  bool parallel = false;
  std::string colors = "auto";
  std::size_t workers = 1;
  std::size_t sample_every = 1;
  bool json_out = false;
  bool base2 = false;
};

int cmd_balance(const BalanceArgs& args) {
  const auto file = load(args.matrix);
  const auto& a = file.matrix;
  const auto kind = parse_strategy(args.strategy);
  if (!kind) {
    std::cerr << "error: unknown strategy '" << args.strategy << "'\n";
    return kBadInput;
  }
  if (a.nnz() == 0 || !strongly_connected(a)) {
    std::cerr << "error: " << (a.nnz() == 0 ? std::string("matrix has no off-diagonal entries") : scc_hint(a)) << '\n';
    return kNotBalanceable;
  }
  const auto st = stats(a, args.json_out);

  SolverConfig cfg;
  cfg.eps = args.eps;
  if (args.max_cycles) cfg.max_cycles = args.max_cycles;
  cfg.criterion = args.criterion == "parlett" ? Criterion::PracticalParlett : Criterion::L1Normalized;
  cfg.strategy = {*kind, args.seed, {}};
  cfg.radix_rounding = args.radix;
  cfg.check_every = args.sample_every;

  BalanceReport rep;
  json extra = json::object();
  if (args.precision == "lowbit") {
    if (args.parallel || args.radix || cfg.criterion != Criterion::L1Normalized) {
      std::cerr << "error: --precision lowbit runs plain cyclic updates with the l1 criterion\n";
      return kBadInput;
    }
    auto lr = lowbit::run_lowbit(a, cfg.eps, cfg.strategy, cfg.max_cycles);
    rep = std::move(lr.report);
    extra = {{"g_hat", lr.g_hat},
             {"frac_bits", lr.config.frac_bits},
             {"word_bits", lowbit::LowbitConfig::word_bits},
             {"overflow_events", lr.overflow_events},
             {"no_descent_cycles", lr.no_descent_cycles}};
  } else if (args.parallel) {
    if (args.colors != "auto") {
      std::cerr << "error: only --colors auto is supported\n";
      return kBadInput;
    }
    const auto coloring = greedy_color(a);
    rep = run_parallel(a, coloring, cfg, args.workers);
    extra = {{"colors", coloring.num_colors}, {"rounds", rep.rounds_used}, {"workers", args.workers}};
  } else {
    rep = run(a, cfg);
  }

  const double divisor = args.base2 ? std::numbers::ln2 : 1.0;
  const bool scaling_to_stdout = args.output.empty() && !args.json_out;
  if (!args.output.empty()) {
    std::ofstream out(args.output);
    if (!out) {
      std::cerr << "error: cannot write " << args.output << '\n';
      return kBadInput;
    }
    io::write_scaling(out, rep.u_final, divisor);
  } else if (scaling_to_stdout) {
    io::write_scaling(std::cout, rep.u_final, divisor);
  }

  if (args.json_out) {
    json j = {{"termination", std::string(to_string(rep.termination))},
              {"cycles", rep.cycles_used},
              {"updates", rep.updates_used},
              {"nonzeros", rep.nonzeros_touched},
              {"imbalance", rep.final_imbalance},
              {"kappa", st.kappa},
              {"diameter", optional_size(st.diameter)},
              {"wall_nanos", rep.wall_time.count()}};
    if (!extra.empty()) j["details"] = extra;
    if (args.output.empty()) {
      json u = json::array();
      for (double v : rep.u_final) u.push_back(v / divisor);
      j["u"] = u;
    }
    std::cout << j.dump(2) << '\n';
  } else {
    auto& os = scaling_to_stdout ? std::cerr : std::cout;
    os << "termination: " << to_string(rep.termination) << '\n'
       << "cycles: " << rep.cycles_used << '\n'
       << "updates: " << rep.updates_used << '\n'
       << "nonzeros touched: " << rep.nonzeros_touched << '\n'
       << "imbalance: " << io::format_real(rep.final_imbalance) << '\n'
       << "kappa: " << io::format_real(st.kappa) << '\n'
       << "wall time: " << rep.wall_time.count() << " ns\n";
    for (auto it = extra.begin(); it != extra.end(); ++it) os << it.key() << ": " << it.value().dump() << '\n';
    if (!rep.message.empty()) os << "note: " << rep.message << '\n';
  }
  return exit_for(rep.termination);
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind, output;
  std::size_t k = 40, n = 1000, s = 20;
  double lo = 0.001, hi = 1.0, p = 0.1;
  std::uint64_t seed = 0;
};

int cmd_gen(const GenArgs& g) {
  SparseNonnegMatrix a;
  std::vector<std::string> header;
  std::ostringstream params;
  if (g.kind == "kalantari") {
    a = gen_kalantari(g.k);
    params << "k=" << g.k;
  } else if (g.kind == "salient") {
    a = gen_salient(g.n, g.s, g.lo, g.hi, g.seed);
    params << "n=" << g.n << " s=" << g.s << " lo=" << io::format_real(g.lo) << " hi=" << io::format_real(g.hi);
  } else if (g.kind == "random") {
    a = gen_random_sparse(g.n, g.p, g.lo, g.hi, g.seed);
    params << "n=" << g.n << " p=" << io::format_real(g.p) << " lo=" << io::format_real(g.lo)
           << " hi=" << io::format_real(g.hi);
  } else {
    std::cerr << "error: unknown generator '" << g.kind << "' (kalantari, salient, random)\n";
    return kBadInput;
  }
  header.push_back(" generator: " + g.kind);
  header.push_back(" parameters: " + params.str());
  header.push_back(" seed: " + std::to_string(g.seed));
  header.push_back(std::string(" toolkit: osborne ") + version);
  if (g.output.empty() || g.output == "-") {
    io::write_matrix_market(std::cout, a, header);
  } else {
    std::ofstream out(g.output);
    if (!out) {
      std::cerr << "error: cannot write " << g.output << '\n';
      return kBadInput;
    }
    io::write_matrix_market(out, a, header);
  }
  return kOk;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const std::string& path, double eps, bool as_json) {
  const auto file = load(path);
  const auto st = stats(file.matrix);
  std::optional<CycleBound> bound;
  if (st.strongly_connected) bound = theoretical_cycle_bound(st, eps);
  if (as_json) {
    json j = {{"n", st.n},
              {"m", st.m},
              {"kappa", st.kappa},
              {"diameter", optional_size(st.diameter)},
              {"strongly_connected", st.strongly_connected},
              {"max_degree", st.max_degree},
              {"eps", eps}};
    j["cycle_bound"] = bound ? json(bound->explicit_cycles) : json(nullptr);
    j["cycle_bound_shape"] = bound ? json(bound->shape) : json(nullptr);
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
  std::cout << "n: " << st.n << '\n'
            << "m: " << st.m << '\n'
            << "kappa: " << io::format_real(st.kappa) << '\n'
            << "diameter: " << (st.diameter ? std::to_string(*st.diameter) : std::string("inf")) << '\n'
            << "strongly connected: " << (st.strongly_connected ? "yes" : "no") << '\n'
            << "max degree: " << st.max_degree << '\n';
  if (bound)
    std::cout << "cycle bound at eps=" << io::format_real(eps) << ": " << bound->explicit_cycles << '\n'
              << "cycle bound shape (constant unknown): " << io::format_real(bound->shape) << '\n';
  else
    std::cout << "cycle bound: withheld (not strongly connected)\n";
  return kOk;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const std::string& mpath, const std::string& upath, double eps, bool base2) {
  const auto file = load(mpath);
  auto u = io::read_scaling(upath);
  if (u.size() != file.matrix.n()) {
    std::cerr << "error: scaling has " << u.size() << " values, matrix has n = " << file.matrix.n() << '\n';
    return kBadInput;
  }
  if (base2)
    for (auto& v : u) v *= std::numbers::ln2;
  const auto cert = imbalance(file.matrix, u);
  const bool ok = cert.normalized <= eps;
  std::cout << "l1 gradient norm: " << io::format_real(cert.l1_gradient_norm) << '\n'
            << "potential: " << io::format_real(cert.potential) << '\n'
            << "normalized imbalance: " << io::format_real(cert.normalized) << '\n'
            << (ok ? "balanced" : "not balanced") << " at eps=" << io::format_real(eps) << '\n';
  return ok ? kOk : kFailed;
}

// ---------------------------------------------------------------- bench

// "kalantari:k=40", "salient:n=200,s=5,seed=1", "random:n=100,p=0.1,seed=3".
SparseNonnegMatrix instance_from_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const auto kind = spec.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InvalidInput("bad instance parameter '" + item + "'");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  auto num = [&](const std::string& key, double dflt) { return kv.count(key) ? std::stod(kv.at(key)) : dflt; };
  auto cnt = [&](const std::string& key, std::size_t dflt) {
    return kv.count(key) ? static_cast<std::size_t>(std::stoull(kv.at(key))) : dflt;
  };
  if (kind == "kalantari") return gen_kalantari(cnt("k", 40));
  if (kind == "salient")
    return gen_salient(cnt("n", 1000), cnt("s", 20), num("lo", 0.001), num("hi", 1.0), cnt("seed", 0));
  if (kind == "random")
    return gen_random_sparse(cnt("n", 100), num("p", 0.1), num("lo", 0.0), num("hi", 1.0), cnt("seed", 0));
  throw InvalidInput("unknown instance kind '" + kind + "'");
}

struct BenchArgs {
  std::string instance, matrix, output, strategies = "cyclic,shuffled,random,weighted,greedy";
  double eps = 1e-10;
  std::uint64_t seed = 0;
  std::size_t max_cycles = 0;
  std::size_t sample_every = 1;
};

int cmd_bench(const BenchArgs& b) {
  SparseNonnegMatrix a;
  std::string id;
  if (!b.matrix.empty()) {
    a = load(b.matrix).matrix;
    id = std::filesystem::path(b.matrix).stem().string();
  } else if (!b.instance.empty()) {
    a = instance_from_spec(b.instance);
    id = b.instance;
    for (auto& ch : id)
      if (ch == ',') ch = ';';
  } else {
    std::cerr << "error: need --instance or --matrix\n";
    return kBadInput;
  }
  if (!strongly_connected(a)) {
    std::cerr << "error: " << scc_hint(a) << '\n';
    return kNotBalanceable;
  }
  std::vector<StrategyKind> kinds;
  std::stringstream ss(b.strategies);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const auto k = parse_strategy(name);
    if (!k) {
      std::cerr << "error: unknown strategy '" << name << "'\n";
      return kBadInput;
    }
    kinds.push_back(*k);
  }
  SolverConfig cfg;
  cfg.eps = b.eps;
  cfg.check_every = b.sample_every;
  if (b.max_cycles) cfg.max_cycles = b.max_cycles;
  const auto series = bench::run_series(a, kinds, cfg, b.seed);

  std::ofstream file;
  if (!b.output.empty() && b.output != "-") {
    file.open(b.output);
    if (!file) {
      std::cerr << "error: cannot write " << b.output << '\n';
      return kBadInput;
    }
  }
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  bench::write_csv_header(out);
  for (const auto& s : series) bench::write_csv(out, bench::records(id, s));
  // One accounting cycle is n updates for every strategy.
  std::cerr << "instance " << id << " (n=" << a.n() << ", m=" << a.nnz() << ", eps=" << io::format_real(b.eps) << ")\n";
  for (const auto& s : series)
    std::cerr << "  " << s.strategy << ": " << to_string(s.report.termination) << ", updates " << s.report.updates_used
              << ", nonzeros " << s.report.nonzeros_touched << ", wall " << s.report.wall_time.count() << " ns, imbalance "
              << io::format_real(s.report.final_imbalance) << '\n';
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Osborne matrix balancing toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(osborne::version));

  BalanceArgs ba;
  auto* bal = app.add_subcommand("balance", "Balance a MatrixMarket matrix");
  bal->add_option("matrix", ba.matrix, "Input MatrixMarket file")->required();
  bal->add_option("-o,--output", ba.output, "Scaling output file (natural-log exponents)");
  bal->add_option("--eps", ba.eps, "Target normalized l1 imbalance")->check(CLI::Range(0.0, 1.0));
  bal->add_option("--strategy", ba.strategy, "cyclic, shuffled, random, weighted or greedy");
  bal->add_option("--seed", ba.seed, "Seed for randomized strategies");
  bal->add_option("--max-cycles", ba.max_cycles, "Cycle budget (default derived from kappa and eps)");
  bal->add_option("--criterion", ba.criterion, "l1 or parlett")->check(CLI::IsMember({"l1", "parlett"}));
  bal->add_option("--precision", ba.precision, "exact or lowbit")->check(CLI::IsMember({"exact", "lowbit"}));
  bal->add_flag("--radix-rounding", ba.radix, "Restrict scalings to powers of two");
  bal->add_flag("--parallel", ba.parallel, "Run color classes concurrently");
  bal->add_option("--colors", ba.colors, "Coloring source (auto: greedy)");
  bal->add_option("--workers", ba.workers, "Worker threads for --parallel")->check(CLI::PositiveNumber);
  bal->add_option("--sample-every", ba.sample_every, "Cycles between termination checks")->check(CLI::PositiveNumber);
  bal->add_flag("--json", ba.json_out, "Machine-readable report on stdout");
  bal->add_flag("--base2", ba.base2, "Print u / ln 2");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a test instance");
  gen->add_option("kind", ga.kind, "kalantari, salient or random")->required();
  gen->add_option("--k", ga.k, "Kalantari half-length (n = 2k + 1)");
  gen->add_option("--n", ga.n, "Dimension");
  gen->add_option("--s", ga.s, "Salient rows/columns");
  gen->add_option("--lo", ga.lo, "Upper end of the small-entry interval (salient) / lower value bound (random)");
  gen->add_option("--hi", ga.hi, "Upper end of the large-entry interval");
  gen->add_option("--p", ga.p, "Edge probability (random)");
  gen->add_option("--seed", ga.seed, "Generator seed");
  gen->add_option("-o,--output", ga.output, "Output file (default stdout)");

  std::string stats_path;
  double stats_eps = 0.01;
  bool stats_json = false;
  auto* sta = app.add_subcommand("stats", "Print conditioning and connectivity statistics");
  sta->add_option("matrix", stats_path)->required();
  sta->add_option("--eps", stats_eps, "Accuracy for the cycle bound")->check(CLI::PositiveNumber);
  sta->add_flag("--json", stats_json);

  std::string vm, vu;
  double veps = 1e-8;
  bool vbase2 = false;
  auto* ver = app.add_subcommand("verify", "Check a scaling against a matrix");
  ver->add_option("matrix", vm)->required();
  ver->add_option("scaling", vu)->required();
  ver->add_option("--eps", veps)->check(CLI::PositiveNumber);
  ver->add_flag("--base2", vbase2, "Scaling file holds u / ln 2");

  BenchArgs bb;
  auto* ben = app.add_subcommand("bench", "Convergence traces of several strategies as CSV");
  ben->add_option("--instance", bb.instance, "Generator spec, e.g. kalantari:k=40 or salient:n=200,s=5,seed=1");
  ben->add_option("--matrix", bb.matrix, "MatrixMarket input");
  ben->add_option("--strategies", bb.strategies, "Comma-separated strategy list");
  ben->add_option("--eps", bb.eps)->check(CLI::Range(0.0, 1.0));
  ben->add_option("--seed", bb.seed);
  ben->add_option("--max-cycles", bb.max_cycles);
  ben->add_option("--sample-every", bb.sample_every)->check(CLI::PositiveNumber);
  ben->add_option("-o,--output", bb.output, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadInput;
  }

  try {
    if (*bal) return cmd_balance(ba);
    if (*gen) {
      if (ga.kind == "random" && gen->count("--lo") == 0) ga.lo = 0.0;
      return cmd_gen(ga);
    }
    if (*sta) return cmd_stats(stats_path, stats_eps, stats_json);
    if (*ver) return cmd_verify(vm, vu, veps, vbase2);
    if (*ben) return cmd_bench(bb);
  } catch (const io::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const NumericRangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kOk;
}
