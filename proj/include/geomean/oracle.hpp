#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "geomean/errors.hpp"
#include "geomean/field.hpp"
#include "geomean/instance.hpp"
#include "geomean/linalg.hpp"
#include "geomean/rng.hpp"

namespace geomean {

struct OracleResult {
  double best_value = 0.0;
  Vec best_vector;
  int restarts = 0;
  double converged_fraction = 0.0;
  bool degenerate = false;  // no start reached a point with all forms positive
};

struct OracleOptions {
  double grad_tol = 1e-10;  // on the Riemannian gradient of log(objective), i.e. relative to the objective
  double stall_grad_tol = 1e-6;  // accepted when the line search can no longer improve
  int max_steps = 10000;
};

namespace detail {

// (1/d) sum log <x, A_i x>, or -inf when some form vanishes.
inline double log_objective(const ProblemInstance& inst, const Vec& x) {
  double s = 0.0;
  for (const auto& a : inst.forms()) {
    const double v = a.quad(x);
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    s += std::log(v);
  }
  return s / static_cast<double>(inst.d());
}

// Tangent-space gradient of log_objective at unit x (real 2n-dimensional view over C).
inline Vec riemannian_gradient(const ProblemInstance& inst, const Vec& x) {
  Vec g = Vec::Zero(x.size());
  for (const auto& a : inst.forms()) {
    const Vec ax = a.mat() * x;
    g += ax / x.dot(ax).real();
  }
  g *= 2.0 / static_cast<double>(inst.d());
  return g - x.dot(g).real() * x;
}

struct AscentResult {
  Vec x;
  double log_value;
  bool converged;
};

// Gradient ascent with normalization retraction and Armijo backtracking.
inline AscentResult sphere_ascent(const ProblemInstance& inst, Vec x, const OracleOptions& opt) {
  x.normalize();
  double f = log_objective(inst, x);
  if (!std::isfinite(f)) return {x, f, false};
  double step = 1.0;
  for (int it = 0; it < opt.max_steps; ++it) {
    const Vec g = riemannian_gradient(inst, x);
    const double gn2 = g.squaredNorm();
    if (std::sqrt(gn2) <= opt.grad_tol) return {x, f, true};
    step = std::min(step * 2.0, 1e6);
    bool moved = false;
    while (step * std::sqrt(gn2) > 1e-13) {
      Vec cand = (x + step * g).normalized();
      const double fc = log_objective(inst, cand);
      if (fc >= f + 1e-4 * step * gn2 && fc > f) {
        x = std::move(cand);
        f = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) return {x, f, std::sqrt(gn2) <= opt.stall_grad_tol};
  }
  return {x, f, false};
}

}  // namespace detail

// Multistart Riemannian gradient ascent; a lower bound on Opt(A).
inline OracleResult local_max_sphere(const ProblemInstance& inst, int restarts, RngStream& rng,
                                     const std::vector<Vec>& extra_starts = {}, const OracleOptions& opt = {}) {
  if (restarts < 1) throw InvalidInput("local_max_sphere: restarts must be >= 1");
  std::vector<Vec> starts;
  for (int r = 0; r < restarts; ++r) starts.push_back(sample_sphere_uniform(inst.n(), inst.field(), rng));
  for (const auto& s : extra_starts)
    if (s.size() == inst.n() && s.norm() > 0.0) starts.push_back(s);
  OracleResult out;
  double best = -std::numeric_limits<double>::infinity();
  int conv = 0;
  for (const auto& s : starts) {
    const auto r = detail::sphere_ascent(inst, s, opt);
    if (r.converged) ++conv;
    if (r.log_value > best) {
      best = r.log_value;
      out.best_vector = r.x;
    }
  }
  out.restarts = static_cast<int>(starts.size());
  out.converged_fraction = static_cast<double>(conv) / static_cast<double>(starts.size());
  out.degenerate = !std::isfinite(best);
  if (out.degenerate) {
    out.best_vector = starts.front().normalized();
    out.best_value = 0.0;
  } else {
    out.best_value = evaluate(inst, out.best_vector);
  }
  return out;
}

// Exhaustive evaluation on an equal-area grid: real n <= 3 or complex n <= 2
// (points taken modulo the global sign/phase, which the objective ignores).
inline double grid_max_sphere(const ProblemInstance& inst, int resolution) {
  if (resolution < 16) throw InvalidInput("grid_max_sphere: resolution must be >= 16");
  const auto n = inst.n();
  const bool real = inst.field() == FieldTag::Real;
  if ((real && n > 3) || (!real && n > 2)) throw UnsupportedDimension("grid_max_sphere: dimension too large");
  const double pi = std::acos(-1.0);
  double best = 0.0;
  auto consider = [&](const Vec& x) { best = std::max(best, geometric_mean(form_values(inst, x))); };
  if (n == 1) {
    consider(Vec::Ones(1));
    return best;
  }
  if (real && n == 2) {
    for (int i = 0; i < 2 * resolution; ++i) {
      const double t = pi * (i + 0.5) / (2 * resolution);
      Vec x(2);
      x << std::cos(t), std::sin(t);
      consider(x);
    }
    return best;
  }
  // Equal-area cells: uniform in the cosine coordinate and in longitude.
  for (int i = 0; i < resolution; ++i) {
    const double c = -1.0 + 2.0 * (i + 0.5) / resolution;
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < 2 * resolution; ++j) {
      const double az = 2.0 * pi * (j + 0.5) / (2 * resolution);
      if (real) {
        Vec x(3);
        x << s * std::cos(az), s * std::sin(az), c;
        consider(x);
      } else {
        // (cos t, e^{i az} sin t) with cos 2t = c.
        Vec x(2);
        x << std::sqrt((1.0 + c) / 2.0), std::polar(std::sqrt((1.0 - c) / 2.0), az);
        consider(x);
      }
    }
  }
  return best;
}

// max over x in {+-1/sqrt(n)}^n of x^T Q_G x, by enumeration.
inline double cube_max(const GraphSpec& g) {
  g.validate();
  if (g.n > 24) throw UnsupportedDimension("cube_max: n must be <= 24");
  if (!g.is_regular(3)) throw InvalidInput("cube_max: graph is not 3-regular");
  // x^T Q x = (3n - s^T A s) / (6n) for s in {+-1}^n; minimize s^T A s over integers.
  long best = std::numeric_limits<long>::max();
  const std::uint32_t count = 1u << (g.n - 1);  // fix s_{n-1} = +1
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    long sas = 0;
    for (auto [u, v] : g.edges) {
      const int su = (u == g.n - 1) ? 1 : ((mask >> u) & 1u ? -1 : 1);
      const int sv = (v == g.n - 1) ? 1 : ((mask >> v) & 1u ? -1 : 1);
      sas += 2 * su * sv;
    }
    best = std::min(best, sas);
  }
  return static_cast<double>(3 * g.n - best) / static_cast<double>(6 * g.n);
}

}  // namespace geomean
