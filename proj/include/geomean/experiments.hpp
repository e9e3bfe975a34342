#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geomean/instance.hpp"
#include "geomean/oracle.hpp"
#include "geomean/rounding.hpp"
#include "geomean/sdp.hpp"
#include "geomean/sos.hpp"
#include "geomean/special.hpp"

namespace geomean {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct IcoTableRow {
  int k = 0;
  double upper_bound = 0.0;  // relaxation value
  double certified_upper = 0.0;
  bool converged = false;
  double rounding_mean = 0.0;
  double rounding_stderr = 0.0;
  double rounding_best = 0.0;
  double best_trial_mean = 0.0;
  long samples = 0;
  double solve_seconds = 0.0;
  double round_seconds = 0.0;
  MomentVector moments;
};

struct IcoTableOptions {
  long samples = 100000;
  int trials = 64;
  std::uint64_t seed = 2024;
  int max_level = 6;
  SosOptions sos;
};

// Levels k = 1..6 on the icosahedral instance: relaxation value and pooled
// moment-rounding statistics, each level on its own RNG substream.
// sink_for_level, when set, receives every rounded sample of level k.
inline std::vector<IcoTableRow> run_ico_table(const IcoTableOptions& opt,
                                              const std::function<SampleSink(int)>& sink_for_level = {}) {
  const auto inst = gen_icosahedral();
  const RngStream root(opt.seed);
  std::vector<IcoTableRow> rows;
  for (int k = 1; k <= opt.max_level; ++k) {
    IcoTableRow row;
    row.k = k;
    auto t0 = std::chrono::steady_clock::now();
    const auto rep = solve_optsos(inst, k, opt.sos);
    row.solve_seconds = seconds_since(t0);
    row.upper_bound = rep.value;
    row.certified_upper = rep.upper;
    row.converged = rep.converged;
    row.moments = rep.moments;
    t0 = std::chrono::steady_clock::now();
    const long per_trial = std::max<long>(1, opt.samples / opt.trials);
    const auto ro = round_sos(inst, rep.moments, opt.trials, per_trial, root.substream("ico-round-k" + std::to_string(k)),
                               sink_for_level ? sink_for_level(k) : SampleSink{});
    row.round_seconds = seconds_since(t0);
    row.rounding_mean = ro.pooled.empirical_mean;
    row.rounding_stderr = ro.pooled.empirical_stderr;
    row.rounding_best = ro.pooled.best_value;
    row.best_trial_mean = ro.best_trial_mean;
    row.samples = ro.pooled.samples_used;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json ico_table_record(const std::vector<IcoTableRow>& rows, const IcoTableOptions& opt) {
  nlohmann::json j;
  j["experiment"] = "ico-table";
  j["instance"] = "icosahedral";
  j["seed"] = opt.seed;
  j["samples"] = opt.samples;
  j["trials"] = opt.trials;
  j["tolerances"] = {{"relative_gap", opt.sos.tol}, {"mu_end", opt.sos.mu_end}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"k", r.k},
                         {"upper_bound", r.upper_bound},
                         {"certified_upper", r.certified_upper},
                         {"converged", r.converged},
                         {"rounding_mean", r.rounding_mean},
                         {"rounding_stderr", r.rounding_stderr},
                         {"rounding_best", r.rounding_best},
                         {"best_trial_mean", r.best_trial_mean},
                         {"samples", r.samples},
                         {"seed", opt.seed},
                         {"solve_seconds", r.solve_seconds},
                         {"round_seconds", r.round_seconds}});
  }
  return j;
}

struct GapSweepOptions {
  int n = 2;
  FieldTag field = FieldTag::Complex;
  std::vector<int> d_list{4, 8, 16, 32, 64};
  int seeds = 20;
  std::uint64_t seed = 7;
  int restarts = 64;
  SdpOptions sdp;
};

struct GapSweepPoint {
  int d = 0;
  std::vector<double> optsdp;
  std::vector<double> oracle;
  std::vector<double> ratios;
  double median_ratio = 0.0;
};

// OptSDP / oracle on random unit rank-one instances. The oracle is also started
// from the columns of the SDP solution's Gram factor.
inline std::vector<GapSweepPoint> run_gap_sweep(const GapSweepOptions& opt) {
  if (opt.n < 1 || opt.n > 3) throw InvalidInput("gap-sweep: n must be in 1..3");
  if (opt.d_list.empty()) throw InvalidInput("gap-sweep: empty d-list");
  if (opt.seeds < 1) throw InvalidInput("gap-sweep: need at least one seed");
  const RngStream root(opt.seed);
  std::vector<GapSweepPoint> out;
  for (int d : opt.d_list) {
    if (d < 1) throw InvalidInput("gap-sweep: d must be >= 1");
    GapSweepPoint pt;
    pt.d = d;
    for (int s = 0; s < opt.seeds; ++s) {
      RngStream inst_rng = root.substream("gap-d" + std::to_string(d)).substream(static_cast<std::uint64_t>(s));
      RngStream oracle_rng = inst_rng.substream("oracle");
      const auto inst = gen_random_rank_one(opt.n, static_cast<std::size_t>(d), opt.field, inst_rng);
      const auto rep = solve_optsdp(inst, opt.sdp);
      const auto g = gram_factor(rep.solution);
      std::vector<Vec> extra;
      for (int c = 0; c < g.rank; ++c) extra.push_back(g.factor.col(c));
      const auto orc = local_max_sphere(inst, opt.restarts, oracle_rng, extra);
      pt.optsdp.push_back(rep.value);
      pt.oracle.push_back(orc.best_value);
      pt.ratios.push_back(rep.value / orc.best_value);
    }
    pt.median_ratio = median(pt.ratios);
    out.push_back(std::move(pt));
  }
  return out;
}

inline nlohmann::json gap_sweep_record(const std::vector<GapSweepPoint>& pts, const GapSweepOptions& opt) {
  nlohmann::json j;
  j["experiment"] = "gap-sweep";
  j["instance"] = "random-rank-one n=" + std::to_string(opt.n) + " field=" + to_string(opt.field);
  j["n"] = opt.n;
  j["field"] = to_string(opt.field);
  j["seed"] = opt.seed;
  j["seeds"] = opt.seeds;
  j["restarts"] = opt.restarts;
  j["tolerances"] = {{"relative_gap", opt.sdp.tol}};
  j["asymptote"] = std::exp(loss_constant(opt.field, opt.n));
  j["points"] = nlohmann::json::array();
  for (const auto& p : pts)
    j["points"].push_back({{"d", p.d},
                           {"median_ratio", p.median_ratio},
                           {"ratios", p.ratios},
                           {"optsdp", p.optsdp},
                           {"oracle", p.oracle}});
  return j;
}

}  // namespace geomean
