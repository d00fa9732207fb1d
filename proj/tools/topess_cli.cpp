// Command-line front end: ess, compare, simulate, benchmark, bootstrap.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "topess/benchmark.hpp"
#include "topess/bootstrap_trace.hpp"
#include "topess/errors.hpp"
#include "topess/ess_tree.hpp"
#include "topess/fake_mcmc.hpp"
#include "topess/intervals.hpp"
#include "topess/random.hpp"
#include "topess/tree_io.hpp"
#include "topess/treedist.hpp"

namespace {

using namespace topess;
namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDegenerate = 3;

/// Raised for flag combinations CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::size_t burnin = 0;
  std::size_t thin = 1;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::string out = "-";
};

void add_common(CLI::App* cmd, Common& c, bool load_flags) {
  if (load_flags) {
    cmd->add_option("--burnin", c.burnin, "Samples dropped from the start of each chain");
    cmd->add_option("--thin", c.thin, "Keep every K-th sample after burn-in")->check(CLI::PositiveNumber);
  }
  cmd->add_option("--seed", c.seed, "Master random seed");
  cmd->add_flag("--strict", c.strict, "Exit with status 3 when a degenerate statistic is reported");
  cmd->add_option("-o,--out", c.out, "Output file ('-' for standard output)");
}

void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

std::uint64_t require_seed(const Common& c, const std::string& what) {
  if (!c.seed) throw UsageError(what + " is randomized; pass --seed");
  return *c.seed;
}

std::vector<Chain> load_chains(const std::vector<std::string>& trees, const std::vector<std::string>& logs,
                               const Common& c, const std::string& column) {
  if (!logs.empty() && logs.size() != trees.size()) throw UsageError("give one log file per tree file");
  LoadOptions opts{c.burnin, c.thin};
  std::vector<Chain> chains;
  TaxonMapPtr taxa;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    chains.push_back(read_chain(trees[i], logs.empty() ? fs::path() : fs::path(logs[i]), taxa, opts, column));
    if (chains.back().samples.empty()) throw DataError(trees[i] + ": no samples after burn-in and thinning");
    if (!taxa) taxa = chains.back().taxa;
  }
  return chains;
}

std::vector<TreeEssMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<TreeEssMethod> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_method(n));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

bool single_topology(const Chain& c) {
  for (const auto& t : c.samples)
    if (!(t == c.samples.front())) return false;
  return true;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// ---------------------------------------------------------------------------

struct EssArgs {
  std::vector<std::string> trees;
  std::vector<std::string> logs;
  std::vector<std::string> methods;
  std::string column = "lnP";
  std::string matrix_out;
};

int run_ess(const EssArgs& a, const Common& c) {
  auto chains = load_chains(a.trees, a.logs, c, a.column);
  std::vector<TreeEssMethod> methods;
  if (a.methods.empty()) {
    for (auto m : kAllTreeEssMethods) {
      if (m == TreeEssMethod::LogPosterior && a.logs.empty()) continue;
      if (is_randomized(m) && !c.seed) continue;
      methods.push_back(m);
    }
  } else {
    methods = parse_methods(a.methods);
  }
  for (auto m : methods) {
    if (m == TreeEssMethod::LogPosterior && a.logs.empty()) throw UsageError("logPosterior needs --log files");
    if (is_randomized(m)) require_seed(c, std::string(method_name(m)));
  }
  const bool any_distances = std::any_of(methods.begin(), methods.end(), needs_distance_matrix);

  std::ostringstream out;
  out << "chain\tn";
  for (auto m : methods) out << '\t' << method_name(m);
  out << '\n';
  bool degenerate = false;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    DistanceMatrix d;
    if (any_distances || !a.matrix_out.empty()) d = distance_matrix(chains[i]);
    if (!a.matrix_out.empty()) {
      std::ostringstream m;
      write_distance_matrix(m, d);
      emit(chains.size() == 1 ? a.matrix_out : a.matrix_out + "." + std::to_string(i + 1), m.str());
    }
    if (single_topology(chains[i])) {
      warn(a.trees[i] + ": every sample has the same topology; ESS reported as 1");
      degenerate = true;
    }
    out << a.trees[i] << '\t' << chains[i].size();
    for (auto m : methods) {
      const auto e = estimate_ess(m, chains[i], any_distances ? &d : nullptr, c.seed ? derive_seed(*c.seed, i) : 0);
      out << '\t' << format_double(e.value);
    }
    out << '\n';
  }
  emit(c.out, out.str());
  return degenerate && c.strict ? kExitDegenerate : 0;
}

struct CompareArgs {
  std::vector<std::string> trees;
  std::string method = "frechetCorrelation";
  double level = 0.95;
  double min_freq = 0.1;
};

int run_compare(const CompareArgs& a, const Common& c) {
  if (a.trees.size() < 2) throw UsageError("compare needs at least 2 tree files");
  const auto method = parse_methods({a.method}).front();
  if (method == TreeEssMethod::LogPosterior) throw UsageError("compare does not read log files; choose a tree method");
  const std::uint64_t seed = is_randomized(method) ? require_seed(c, a.method) : c.seed.value_or(0);
  const auto chains = load_chains(a.trees, {}, c, "lnP");
  const auto report = compare_chains(chains, method, a.level, seed, a.min_freq);
  std::ostringstream out;
  write_comparison_report(out, report);
  emit(c.out, out.str());
  if (c.out != "-") {
    std::cout << "chain_i\tchain_j\tasdsf\tmsdsf\tn_fail\n";
    for (const auto& p : report.pairs)
      std::cout << p.chain_i << '\t' << p.chain_j << '\t' << format_double(p.spread.asdsf) << '\t'
                << format_double(p.spread.msdsf) << '\t' << p.n_fail << '\n';
  }
  bool degenerate = false;
  for (std::size_t i = 0; i < chains.size(); ++i)
    if (single_topology(chains[i])) {
      warn(a.trees[i] + ": every sample has the same topology");
      degenerate = true;
    }
  return degenerate && c.strict ? kExitDegenerate : 0;
}

struct SimulateArgs {
  std::string target;
  std::size_t iterations = 0;
  std::size_t thin = 1;
  std::size_t chains = 1;
  std::string out_dir = ".";
  double hpd_mass = 1.0;
  std::size_t max_support = 4096;
};

std::shared_ptr<const CategoricalTreeDistribution> load_target(const std::string& path, double hpd,
                                                               std::size_t max_support) {
  return std::make_shared<const CategoricalTreeDistribution>(build_target(read_target_table(path), hpd, max_support));
}

int run_simulate(const SimulateArgs& a, const Common& c) {
  const auto seed = require_seed(c, "simulate");
  if (a.thin < 1 || a.iterations < a.thin) throw UsageError("need --iterations >= --thin >= 1");
  const auto target = load_target(a.target, a.hpd_mass, a.max_support);
  fs::create_directories(a.out_dir);
  for (std::size_t k = 0; k < a.chains; ++k) {
    const auto chain = run_chain(*target, a.iterations, a.thin, derive_seed(seed, k));
    const auto stem = fs::path(a.out_dir) / ("chain_" + std::to_string(k + 1));
    std::ostringstream trees, logs;
    write_tree_stream(trees, chain);
    write_log_stream(logs, chain);
    emit(stem.string() + ".trees", trees.str());
    emit(stem.string() + ".log", logs.str());
  }
  return 0;
}

struct BenchmarkArgs {
  std::string target;
  std::size_t m = 100;
  std::size_t iterations = 0;
  std::size_t thin = 1;
  std::vector<std::string> methods;
  std::vector<std::size_t> nruns;
  bool iid_chains = false;
  double hpd_mass = 1.0;
  std::size_t max_support = 4096;
  std::string meta_out;
  bool normal = false;
  std::size_t n_lengths = 50;
  std::size_t kept = 1000;
};

int run_benchmark_cmd(const BenchmarkArgs& a, const Common& c) {
  const auto seed = require_seed(c, "benchmark");
  std::ostringstream out;
  if (a.normal) {
    NormalCalibrationConfig cfg;
    cfg.n_lengths = a.n_lengths;
    cfg.kept = a.kept;
    cfg.m = a.m;
    cfg.seed = seed;
    const auto rows = run_normal_calibration(cfg);
    write_normal_calibration(out, rows);
    emit(c.out, out.str());
    return 0;
  }
  if (a.target.empty()) throw UsageError("benchmark needs a target file (or --normal-calibration)");
  BenchmarkConfig cfg;
  cfg.target = load_target(a.target, a.hpd_mass, a.max_support);
  cfg.m = a.m;
  cfg.iterations = a.iterations;
  cfg.thin = a.thin;
  cfg.seed = seed;
  cfg.iid_chains = a.iid_chains;
  cfg.nruns = a.nruns;
  std::vector<TreeEssMethod> methods;
  if (a.methods.empty()) {
    for (auto m : kAllTreeEssMethods) methods.push_back(m);
  } else {
    methods = parse_methods(a.methods);
  }
  for (auto m : methods) cfg.methods.push_back(method_estimator(m));
  const auto report = run_benchmark(cfg);
  write_benchmark_report(out, report);
  emit(c.out, out.str());
  if (!a.meta_out.empty()) {
    std::ostringstream meta;
    write_benchmark_metadata(meta, report);
    emit(a.meta_out, meta.str());
  }
  const auto n_deg = std::count_if(report.records.begin(), report.records.end(),
                                   [](const auto& r) { return r.cmp.degenerate; });
  if (n_deg > 0) warn(std::to_string(n_deg) + " records have a zero standard error");
  return n_deg > 0 && c.strict ? kExitDegenerate : 0;
}

struct BootstrapArgs {
  std::string trees;
  std::string kind = "asdsf";
  std::size_t replicates = 100;
  std::vector<std::size_t> sizes;
  std::vector<double> thresholds = {0.5, 0.75, 0.95};
};

int run_bootstrap(const BootstrapArgs& a, const Common& c) {
  const auto seed = require_seed(c, "bootstrap");
  TraceOptions opts;
  try {
    opts.kind = parse_trace_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opts.replicates = a.replicates;
  opts.subsample_sizes = a.sizes;
  opts.consensus_thresholds = a.thresholds;
  opts.seed = seed;
  const auto chains = load_chains({a.trees}, {}, c, "lnP");
  const auto rows = block_bootstrap_trace(chains.front(), opts);
  std::ostringstream out;
  write_trace(out, rows);
  emit(c.out, out.str());
  if (single_topology(chains.front())) {
    warn(a.trees + ": every sample has the same topology");
    return c.strict ? kExitDegenerate : 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective sample size and Monte Carlo error tools for phylogenetic tree samples"};
  app.require_subcommand(1);

  Common ess_c, cmp_c, sim_c, bench_c, boot_c;

  EssArgs ess;
  auto* ess_cmd = app.add_subcommand("ess", "Per-chain tree ESS table");
  ess_cmd->add_option("trees", ess.trees, "Tree files, one Newick per line")->required()->check(CLI::ExistingFile);
  ess_cmd->add_option("--log", ess.logs, "Log-density files aligned with the tree files")->check(CLI::ExistingFile);
  ess_cmd->add_option("-m,--methods", ess.methods, "ESS methods (default: all applicable)")->delimiter(',');
  ess_cmd->add_option("--lnp-column", ess.column, "Log-density column name");
  ess_cmd->add_option("--dump-matrix", ess.matrix_out, "Write the RF distance matrix to this file");
  add_common(ess_cmd, ess_c, true);

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Between-chain split probability comparison");
  cmp_cmd->add_option("trees", cmp.trees, "Tree files")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--method", cmp.method, "ESS method for the interval widths");
  cmp_cmd->add_option("--level", cmp.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  cmp_cmd->add_option("--min-freq", cmp.min_freq, "ASDSF split inclusion threshold")->check(CLI::Range(0.0, 1.0));
  add_common(cmp_cmd, cmp_c, true);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Fake MCMC chains on a known topology target");
  sim_cmd->add_option("target", sim.target, "Target TSV (newick, probability)")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--iterations", sim.iterations, "Iterations per chain")->required();
  sim_cmd->add_option("--thin", sim.thin, "Record every K-th state")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--chains", sim.chains, "Number of chains")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out-dir", sim.out_dir, "Directory for chain_K.trees / chain_K.log");
  sim_cmd->add_option("--hpd-mass", sim.hpd_mass, "Target HPD truncation mass")->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--max-support", sim.max_support, "Target support cap")->check(CLI::PositiveNumber);
  add_common(sim_cmd, sim_c, false);

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "RMCE/ITMCE validation of ESS methods");
  bench_cmd->add_option("target", bench.target, "Target TSV (newick, probability)")->check(CLI::ExistingFile);
  bench_cmd->add_option("--chains", bench.m, "Replicate chains (m)")->check(CLI::Range(2, 1000000));
  bench_cmd->add_option("--iterations", bench.iterations, "Iterations per chain");
  bench_cmd->add_option("--thin", bench.thin, "Record every K-th state")->check(CLI::PositiveNumber);
  bench_cmd->add_option("-m,--methods", bench.methods, "ESS methods (default: all)")->delimiter(',');
  bench_cmd->add_option("--nruns", bench.nruns, "Chain-subset sizes for nRuns comparators")->delimiter(',');
  bench_cmd->add_flag("--iid-chains", bench.iid_chains, "Replace chains by iid draws of the kept size");
  bench_cmd->add_option("--hpd-mass", bench.hpd_mass, "Target HPD truncation mass")->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--max-support", bench.max_support, "Target support cap")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--meta", bench.meta_out, "Write run metadata and per-chain ESS here");
  bench_cmd->add_flag("--normal-calibration", bench.normal, "Run the Normal(0,1) mean calibration instead");
  bench_cmd->add_option("--lengths", bench.n_lengths, "Calibration: number of run lengths")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--kept", bench.kept, "Calibration: kept samples per chain")->check(CLI::Range(16, 100000000));
  add_common(bench_cmd, bench_c, false);

  BootstrapArgs boot;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Block-bootstrap convergence trace of one chain");
  boot_cmd->add_option("trees", boot.trees, "Tree file")->required()->check(CLI::ExistingFile);
  boot_cmd->add_option("--kind", boot.kind, "asdsf | tree_prob_euclidean | consensus_rf");
  boot_cmd->add_option("--replicates", boot.replicates, "Bootstrap replicates per size")->check(CLI::Range(10, 100000000));
  boot_cmd->add_option("--sizes", boot.sizes, "Increasing subsample sizes")->delimiter(',');
  boot_cmd->add_option("--thresholds", boot.thresholds, "Consensus thresholds")->delimiter(',');
  add_common(boot_cmd, boot_c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ess_cmd) return run_ess(ess, ess_c);
    if (*cmp_cmd) return run_compare(cmp, cmp_c);
    if (*sim_cmd) return run_simulate(sim, sim_c);
    if (*bench_cmd) return run_benchmark_cmd(bench, bench_c);
    if (*boot_cmd) return run_bootstrap(boot, boot_c);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
