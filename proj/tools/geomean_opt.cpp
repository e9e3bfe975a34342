// geomean-opt: command-line front end for the solver library.
//
// Exit codes: 0 success, 1 input error, 2 numerical non-convergence.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geomean/geomean.hpp"

using namespace geomean;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text << '\n';
}

json vector_json(const Vec& v, FieldTag field) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (field == FieldTag::Real) {
      out.push_back(v(i).real());
    } else {
      out.push_back({v(i).real(), v(i).imag()});
    }
  }
  return out;
}

std::string density_json(const DensityMatrix& x) {
  json j;
  j["field"] = to_string(x.field());
  j["n"] = x.n();
  j["density"] = matrix_to_json(x.matrix());
  return j.dump(1);
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string instance;
  int level = 1;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string save;
  std::string save_density;
};

int cmd_solve(const SolveArgs& a) {
  if (a.level < 1) throw InvalidInput("--level must be >= 1");
  const auto inst = parse_instance(read_file(a.instance));
  json j;
  j["instance"] = a.instance;
  j["field"] = to_string(inst.field());
  j["n"] = inst.n();
  j["d"] = inst.d();
  j["level"] = a.level;
  j["tol"] = a.tol;
  j["seed"] = a.seed;
  bool converged = false;
  if (a.level == 1) {
    SdpOptions opt;
    opt.tol = a.tol;
    const auto rep = solve_optsdp(inst, opt);
    converged = rep.converged;
    j["solver"] = "optsdp";
    j["value"] = rep.value;
    j["upper"] = rep.upper_certificate;
    j["gap"] = rep.gap;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["rank"] = rep.rank;
    j["multipliers"] = rep.multipliers;
    j["exactness"] = to_string(exactness_hint(inst));
    j["wall_seconds"] = rep.wall_seconds;
    if (!a.save.empty()) write_text(a.save, serialize_moments(moments_from_density(rep.solution)));
    if (!a.save_density.empty()) write_text(a.save_density, density_json(rep.solution));
  } else {
    if (!a.save_density.empty()) throw InvalidInput("--save-density needs --level 1");
    SosOptions opt;
    opt.tol = a.tol;
    const auto rep = solve_optsos(inst, a.level, opt);
    converged = rep.converged;
    j["solver"] = "optsos";
    j["value"] = rep.value;
    j["upper"] = rep.upper;
    j["gap"] = rep.gap;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["rank"] = gram_factor(moment_matrix(rep.moments)).rank;
    j["min_moment_eigenvalue"] = rep.min_moment_eigenvalue;
    j["wall_seconds"] = rep.wall_seconds;
    if (!a.save.empty()) write_text(a.save, serialize_moments(rep.moments));
  }
  std::cout << j.dump(1) << '\n';
  return converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------- round

struct RoundArgs {
  std::string instance;
  std::string relaxation;
  long samples = 100000;
  int trials = 64;
  std::uint64_t seed = 0;
  std::string dump;
};

int cmd_round(const RoundArgs& a) {
  if (a.samples < 1 || a.trials < 1) throw InvalidInput("--samples and --trials must be >= 1");
  const auto inst = parse_instance(read_file(a.instance));
  const auto text = read_file(a.relaxation);
  const auto probe = detail::parse_json_text(text);

  std::unique_ptr<std::ofstream> csv;
  SampleSink sink;
  if (!a.dump.empty()) {
    csv = std::make_unique<std::ofstream>(a.dump);
    if (!*csv) throw InvalidInput("cannot write '" + a.dump + "'");
    write_sample_csv_header(*csv, inst.n(), inst.field());
    sink = csv_sink(*csv, inst.field());
  }

  RngStream rng(a.seed);
  json j;
  j["instance"] = a.instance;
  j["relaxation"] = a.relaxation;
  j["seed"] = a.seed;
  RoundingOutcome outcome;

  std::unique_ptr<DensityMatrix> x;
  int level = 1;
  MomentVector m;
  if (probe.is_object() && probe.contains("density")) {
    if (!probe.contains("n") || !probe["n"].is_number_integer() || !probe.contains("field"))
      throw ParseError("density file needs \"field\", \"n\" and \"density\"");
    const auto field = parse_field(probe["field"].get<std::string>());
    x = std::make_unique<DensityMatrix>(matrix_from_json(probe["density"], probe["n"].get<long>(), field, "density"));
  } else {
    m = parse_moments(text);
    level = m.k;
    if (level == 1) x = std::make_unique<DensityMatrix>(density_from_moments(m));
  }

  if (x) {
    if (x->n() != inst.n()) throw InvalidInput("relaxation dimension does not match the instance");
    require_same_field(inst.field(), x->field(), "round");
    outcome = round_gaussian(inst, *x, a.samples, rng, sink);
    const int rank = gram_factor(*x).rank;
    j["method"] = "gaussian";
    j["level"] = 1;
    j["rank"] = rank;
    j["approx_factor"] = approx_factor(std::max(rank, 1), inst.field());
    j["trials"] = 1;
  } else {
    if (m.n != inst.n()) throw InvalidInput("relaxation dimension does not match the instance");
    const long per_trial = std::max<long>(1, a.samples / a.trials);
    const auto ro = round_sos(inst, m, a.trials, per_trial, rng, sink);
    outcome = ro.pooled;
    j["method"] = "moments";
    j["level"] = level;
    j["trials"] = a.trials;
    j["trials_used"] = ro.trials_used;
    j["degenerate_trials"] = ro.degenerate_trials;
    j["best_trial"] = ro.best_trial;
    j["best_trial_mean"] = ro.best_trial_mean;
  }
  j["samples"] = a.samples;
  j["samples_used"] = outcome.samples_used;
  j["skipped"] = outcome.skipped;
  j["empirical_mean"] = outcome.empirical_mean;
  j["empirical_stderr"] = outcome.empirical_stderr;
  j["best_value"] = outcome.best_value;
  j["best_vector"] = vector_json(outcome.best_vector, inst.field());
  if (!a.dump.empty()) j["dump"] = a.dump;
  std::cout << j.dump(1) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- ico-table

struct IcoArgs {
  long samples = 100000;
  int trials = 64;
  std::uint64_t seed = 2024;
  int max_level = 6;
  std::string dump_prefix;
  std::string out;
  bool table = false;
};

int cmd_ico_table(const IcoArgs& a) {
  if (a.samples < 1 || a.trials < 1) throw InvalidInput("--samples and --trials must be >= 1");
  if (a.max_level < 1 || a.max_level > 6) throw InvalidInput("--max-level must be in 1..6");
  IcoTableOptions opt;
  opt.samples = a.samples;
  opt.trials = a.trials;
  opt.seed = a.seed;
  opt.max_level = a.max_level;

  std::vector<std::unique_ptr<std::ofstream>> files;
  std::function<SampleSink(int)> sinks;
  if (!a.dump_prefix.empty()) {
    sinks = [&](int k) -> SampleSink {
      const std::string path = a.dump_prefix + "_k" + std::to_string(k) + ".csv";
      files.push_back(std::make_unique<std::ofstream>(path));
      if (!*files.back()) throw InvalidInput("cannot write '" + path + "'");
      write_sample_csv_header(*files.back(), 3, FieldTag::Real);
      return csv_sink(*files.back(), FieldTag::Real);
    };
  }
  const auto rows = run_ico_table(opt, sinks);
  const auto record = ico_table_record(rows, opt);
  if (!a.out.empty()) write_text(a.out, record.dump(1));
  if (a.table) {
    std::cout << "k  upper_bound  rounding_mean\n" << std::fixed;
    for (const auto& r : rows)
      std::cout << r.k << "  " << std::setprecision(5) << r.upper_bound << "      " << r.rounding_mean << '\n';
  } else if (a.out.empty()) {
    std::cout << record.dump(1) << '\n';
  }
  for (const auto& r : rows)
    if (!r.converged) return kExitNotConverged;
  return kExitOk;
}

// ---------------------------------------------------------------- gap-sweep

struct GapArgs {
  int n = 2;
  std::string field = "complex";
  std::vector<int> d_list{4, 8, 16, 32, 64};
  int seeds = 20;
  std::uint64_t seed = 7;
  int restarts = 64;
  std::string out;
};

int cmd_gap_sweep(const GapArgs& a) {
  GapSweepOptions opt;
  opt.n = a.n;
  opt.field = parse_field(a.field);
  opt.d_list = a.d_list;
  opt.seeds = a.seeds;
  opt.seed = a.seed;
  opt.restarts = a.restarts;
  if (opt.restarts < 1) throw InvalidInput("--restarts must be >= 1");
  const auto record = gap_sweep_record(run_gap_sweep(opt), opt);
  write_text(a.out, record.dump(1));
  return kExitOk;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind;
  int n = 3;
  int d = 6;
  std::string field = "real";
  std::uint64_t seed = 0;
  std::vector<int> beta;
  std::vector<double> spectrum;
  std::string graph = "k4";
  int k = 1;
  std::string out;
};

GraphSpec load_graph(const std::string& g) {
  if (g == "k4") return GraphSpec::complete4();
  if (g == "prism") return GraphSpec::prism();
  return parse_graph(read_file(g));
}

int cmd_gen(const GenArgs& a) {
  ProblemInstance inst = [&]() {
    if (a.kind == "rank-one-random") {
      if (a.n < 1 || a.d < 1) throw InvalidInput("--n and --d must be >= 1");
      RngStream rng(a.seed);
      return gen_random_rank_one(a.n, static_cast<std::size_t>(a.d), parse_field(a.field), rng);
    }
    if (a.kind == "monomial") {
      if (a.beta.empty()) throw InvalidInput("monomial needs --beta");
      return gen_monomial(a.beta);
    }
    if (a.kind == "kantorovich") {
      if (a.spectrum.empty()) throw InvalidInput("kantorovich needs --spectrum");
      RVec diag(static_cast<Eigen::Index>(a.spectrum.size()));
      for (std::size_t i = 0; i < a.spectrum.size(); ++i) diag(static_cast<Eigen::Index>(i)) = a.spectrum[i];
      return gen_kantorovich(HermitianMatrix::diagonal(diag, parse_field(a.field)));
    }
    if (a.kind == "icosahedral") return gen_icosahedral();
    if (a.kind == "maxcut") return gen_maxcut(load_graph(a.graph), a.k);
    throw InvalidInput("unknown kind '" + a.kind + "'");
  }();
  write_text(a.out, serialize_instance(inst));
  return kExitOk;
}

// ---------------------------------------------------------------- constants

struct ConstArgs {
  std::vector<int> n_list{2, 3, 4, 5, 6};
  int k_max = 50;
  std::string out;
};

// C(n,k) and e^{-C(n,k)} as CSV, alongside e^{-L_n(C)}.
int cmd_constants(const ConstArgs& a) {
  if (a.k_max < 2) throw InvalidInput("--k-max must be >= 2");
  std::ostringstream os;
  os << std::setprecision(17) << "n,k,c,exp_neg_c,exp_neg_l\n";
  for (int n : a.n_list) {
    if (n < 1) throw InvalidInput("--n-list entries must be >= 1");
    const double el = std::exp(-loss_constant(FieldTag::Complex, n));
    for (int k = 2; k <= a.k_max; ++k) {
      const double c = rounding_constant(n, k);
      os << n << ',' << k << ',' << c << ',' << std::exp(-c) << ',' << el << '\n';
    }
  }
  std::string text = os.str();
  text.pop_back();
  write_text(a.out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric-mean maximization of PSD forms on the unit sphere"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve the degree-k relaxation (k = 1 is the SDP)");
  solve->add_option("instance", sa.instance, "Instance JSON")->required();
  solve->add_option("--level,-k", sa.level, "Relaxation level k");
  solve->add_option("--tol", sa.tol, "Relative gap tolerance");
  solve->add_option("--seed", sa.seed, "Seed (recorded; solves are deterministic)");
  solve->add_option("--save", sa.save, "Write the moment JSON here");
  solve->add_option("--save-density", sa.save_density, "Write the density matrix JSON here (k = 1)");

  RoundArgs ra;
  auto* round = app.add_subcommand("round", "Round a density matrix or moment vector");
  round->add_option("instance", ra.instance, "Instance JSON")->required();
  round->add_option("relaxation", ra.relaxation, "Moment or density JSON")->required();
  round->add_option("--samples", ra.samples, "Total samples");
  round->add_option("--trials", ra.trials, "Rounding directions for k >= 2");
  round->add_option("--seed", ra.seed, "RNG seed");
  round->add_option("--dump", ra.dump, "Write every sample to this CSV");

  IcoArgs ia;
  auto* ico = app.add_subcommand("ico-table", "Levels 1..6 on the icosahedral instance");
  ico->add_option("--samples", ia.samples, "Pooled samples per level");
  ico->add_option("--trials", ia.trials, "Rounding directions per level");
  ico->add_option("--seed", ia.seed, "RNG seed");
  ico->add_option("--max-level", ia.max_level, "Highest level");
  ico->add_option("--dump-prefix", ia.dump_prefix, "Write samples to PREFIX_k<k>.csv");
  ico->add_option("--out", ia.out, "Write the experiment record here");
  ico->add_flag("--table", ia.table, "Print a plain-text table");

  GapArgs ga;
  auto* gap = app.add_subcommand("gap-sweep", "OptSDP / oracle ratio on random rank-one instances");
  gap->add_option("--n", ga.n, "Dimension (1..3)");
  gap->add_option("--field", ga.field, "real or complex");
  gap->add_option("--d-list", ga.d_list, "Numbers of forms")->delimiter(',');
  gap->add_option("--seeds", ga.seeds, "Instances per d");
  gap->add_option("--seed", ga.seed, "RNG seed");
  gap->add_option("--restarts", ga.restarts, "Oracle restarts");
  gap->add_option("--out", ga.out, "Write the experiment record here");

  GenArgs gna;
  auto* gen = app.add_subcommand("gen", "Write an instance file");
  gen->add_option("kind", gna.kind, "rank-one-random|monomial|kantorovich|icosahedral|maxcut")->required();
  gen->add_option("--n", gna.n, "Dimension");
  gen->add_option("--d", gna.d, "Number of forms");
  gen->add_option("--field", gna.field, "real or complex");
  gen->add_option("--seed", gna.seed, "RNG seed");
  gen->add_option("--beta", gna.beta, "Monomial exponents")->delimiter(',');
  gen->add_option("--spectrum", gna.spectrum, "Diagonal of the Kantorovich matrix")->delimiter(',');
  gen->add_option("--graph", gna.graph, "k4, prism, or a graph JSON path");
  gen->add_option("--k", gna.k, "Copies of each coordinate form (maxcut)");
  gen->add_option("--out", gna.out, "Output path (stdout if omitted)");

  ConstArgs ca;
  auto* cons = app.add_subcommand("constants", "Tabulate the rounding constants C(n,k) as CSV");
  cons->add_option("--n-list", ca.n_list, "Dimensions")->delimiter(',');
  cons->add_option("--k-max", ca.k_max, "Largest level");
  cons->add_option("--out", ca.out, "Output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*solve) return cmd_solve(sa);
    if (*round) return cmd_round(ra);
    if (*ico) return cmd_ico_table(ia);
    if (*gap) return cmd_gap_sweep(ga);
    if (*gen) return cmd_gen(gna);
    if (*cons) return cmd_constants(ca);
  } catch (const std::exception& e) {
    std::cerr << "geomean-opt: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
