#pragma once

#include <chrono>
#include <cmath>
#include <vector>

#include "geomean/errors.hpp"
#include "geomean/field.hpp"
#include "geomean/instance.hpp"
#include "geomean/linalg.hpp"

namespace geomean {

// Uniform result record for the degree-1 relaxation.
struct SolveReport {
  double value = 0.0;              // (prod <A_i, X>)^{1/d} at the returned X
  double upper_certificate = 0.0;  // lambda of a feasible multiplier pair
  double gap = 0.0;                // upper_certificate - value
  long iterations = 0;
  bool converged = false;
  std::vector<double> multipliers;  // alpha_i, prod alpha_i = 1
  DensityMatrix solution;
  int rank = 0;
  double wall_seconds = 0.0;
};

struct SdpOptions {
  double tol = 1e-6;  // relative duality gap
  long max_iter = 50000;
  long certificate_every = 50;
};

// lambda_max(sum A_i) / d, an upper bound on the geometric-mean optimum.
inline double amgm_eigen_bound(const ProblemInstance& inst) {
  Mat g = Mat::Zero(inst.n(), inst.n());
  for (const auto& a : inst.forms()) g += a.mat();
  return lambda_max(HermitianMatrix(g, inst.field())) / static_cast<double>(inst.d());
}

struct DualCertificate {
  double lambda = 0.0;
  std::vector<double> alpha;
};

namespace detail {

inline std::vector<double> inner_products(const ProblemInstance& inst, const HermitianMatrix& x) {
  std::vector<double> t;
  t.reserve(inst.d());
  for (const auto& a : inst.forms()) t.push_back(inner(a, x));
  return t;
}

inline double mean_log(const std::vector<double>& t) {
  double s = 0.0;
  for (double v : t) s += std::log(v);
  return s / static_cast<double>(t.size());
}

}  // namespace detail

// alpha_i = gamma / <A_i, X> with gamma the geometric mean of <A_i, X>, and
// lambda = lambda_max((1/d) sum alpha_i A_i). The pair is feasible for the
// multiplier program, so lambda bounds the relaxation from above.
inline DualCertificate dual_certificate(const ProblemInstance& inst, const DensityMatrix& x) {
  require_same_field(inst.field(), x.field(), "dual_certificate");
  const auto t = detail::inner_products(inst, x.matrix());
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!(t[i] > 0.0)) throw DegenerateInnerProduct("dual_certificate: <A_" + std::to_string(i) + ", X> <= 0");
  const double gamma = std::exp(detail::mean_log(t));
  DualCertificate c;
  Mat s = Mat::Zero(inst.n(), inst.n());
  for (std::size_t i = 0; i < t.size(); ++i) {
    c.alpha.push_back(gamma / t[i]);
    s += c.alpha.back() * inst.form(i).mat();
  }
  c.lambda = lambda_max(HermitianMatrix(s / static_cast<double>(inst.d()), inst.field()));
  return c;
}

// Projected gradient ascent on F(X) = (1/d) sum log <A_i, X> over the trace-one
// spectrahedron, Armijo backtracking, stopped by the duality-gap certificate.
inline SolveReport solve_optsdp(const ProblemInstance& inst, const SdpOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InvalidInput("solve_optsdp: tol must be positive");
  const auto start = std::chrono::steady_clock::now();
  const auto d = static_cast<double>(inst.d());
  std::vector<double> floor_val;
  for (const auto& a : inst.forms()) floor_val.push_back(1e-14 * a.trace());

  DensityMatrix x = DensityMatrix::maximally_mixed(inst.n(), inst.field());
  auto t = detail::inner_products(inst, x.matrix());
  double f = detail::mean_log(t);

  SolveReport rep;
  auto certify = [&]() {
    const auto c = dual_certificate(inst, x);
    rep.value = std::exp(f);
    rep.upper_certificate = c.lambda;
    rep.gap = c.lambda - rep.value;
    rep.multipliers = c.alpha;
    return rep.gap <= opt.tol * rep.value;
  };

  long iter = 0;
  for (;; ++iter) {
    if (iter % opt.certificate_every == 0 && certify()) {
      rep.converged = true;
      break;
    }
    if (iter >= opt.max_iter) break;

    Mat grad = Mat::Zero(inst.n(), inst.n());
    for (std::size_t i = 0; i < inst.d(); ++i) grad += inst.form(i).mat() / (d * t[i]);

    double step = 1.0;
    bool accepted = false;
    while (step > 1e-18) {
      DensityMatrix cand = project_spectrahedron(HermitianMatrix(x.matrix().mat() + step * grad, inst.field()));
      auto tc = detail::inner_products(inst, cand.matrix());
      bool inside = true;
      for (std::size_t i = 0; i < tc.size(); ++i) inside = inside && tc[i] >= floor_val[i];
      if (inside) {
        const double fc = detail::mean_log(tc);
        const double slope = (grad.conjugate().cwiseProduct(cand.matrix().mat() - x.matrix().mat())).sum().real();
        if (fc >= f + 0.1 * slope) {
          x = std::move(cand);
          t = std::move(tc);
          f = fc;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent step exists at working precision; report what the certificate says.
      rep.converged = certify();
      break;
    }
  }
  if (!rep.converged && iter % opt.certificate_every != 0) rep.converged = certify();
  rep.iterations = iter;
  rep.solution = x;
  rep.rank = gram_factor(x).rank;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

enum class Exactness { ExactD2, ExactCommuting, Unknown };

inline const char* to_string(Exactness e) {
  switch (e) {
    case Exactness::ExactD2:
      return "exact-d2";
    case Exactness::ExactCommuting:
      return "exact-commuting";
    default:
      return "unknown";
  }
}

// Instance classes on which the degree-1 relaxation is exact. d = 2 over R is
// checked first, so two commuting real forms report ExactD2.
inline Exactness exactness_hint(const ProblemInstance& inst) {
  if (inst.d() == 2 && inst.field() == FieldTag::Real) return Exactness::ExactD2;
  for (std::size_t i = 0; i < inst.d(); ++i) {
    for (std::size_t j = i + 1; j < inst.d(); ++j) {
      const Mat& a = inst.form(i).mat();
      const Mat& b = inst.form(j).mat();
      const double scale = max_norm(a) * max_norm(b);
      if (max_norm(a * b - b * a) > 1e-10 * scale) return Exactness::Unknown;
    }
  }
  return Exactness::ExactCommuting;
}

}  // namespace geomean
