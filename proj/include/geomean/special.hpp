#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "geomean/errors.hpp"
#include "geomean/field.hpp"

namespace geomean {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Digamma for x > 0: shift upward with psi(x) = psi(x+1) - 1/x until x >= 10,
// then the asymptotic series with eight Bernoulli terms.
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma: x must be positive and finite");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B_2k / (2k), k = 1..8
  constexpr double c[8] = {1.0 / 12.0,       -1.0 / 120.0,  1.0 / 252.0,  -1.0 / 240.0,
                           1.0 / 132.0,      -691.0 / 32760.0, 1.0 / 12.0, -3617.0 / 8160.0};
  double series = 0.0;
  for (int k = 7; k >= 0; --k) series = (series + c[k]) * inv2;
  return acc + std::log(x) - 0.5 * inv - series;
}

// Expected log-norm loss of Gaussian rounding at rank r:
// real: gamma + log 2 + psi(r/2) - log(r/2); complex: gamma + psi(r) - log r.
inline double loss_constant(FieldTag field, int r) {
  if (r < 1) throw DomainError("loss_constant: rank must be >= 1");
  if (r == 1) return 0.0;
  const double rr = static_cast<double>(r);
  if (field == FieldTag::Real) return kEulerGamma + std::log(2.0) + digamma(rr / 2.0) - std::log(rr / 2.0);
  return kEulerGamma + digamma(rr) - std::log(rr);
}

// Limits of loss_constant as r -> infinity.
inline double loss_constant_sup(FieldTag field) {
  return field == FieldTag::Real ? kEulerGamma + std::log(2.0) : kEulerGamma;
}

// E[log X] for X ~ Gamma(shape, rate).
inline double expected_log_gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("expected_log_gamma: parameters must be positive");
  return digamma(shape) - std::log(rate);
}

// E[log sum_{i<=r} z_i^2] for real standard normals (chi-squared with r dof).
inline double expected_log_chisq_real(int r) { return expected_log_gamma(r / 2.0, 0.5); }

// Weights of Z = sum_i lambda_i |z_i|^2 with z_i ~ N_C(0,1), grouped into runs of
// values equal within relative tolerance 1e-9.
class EigenvalueProfile {
 public:
  explicit EigenvalueProfile(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.empty()) throw DomainError("EigenvalueProfile: empty");
    for (double l : lambdas_)
      if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("EigenvalueProfile: weights must be positive");
    std::vector<double> sorted = lambdas_;
    std::sort(sorted.begin(), sorted.end());
    for (double l : sorted) {
      if (!groups_.empty() && std::abs(l - groups_.back().value) <= 1e-9 * std::max(l, groups_.back().value)) {
        auto& g = groups_.back();
        g.value = (g.value * g.count + l) / (g.count + 1);
        ++g.count;
      } else {
        groups_.push_back({l, 1});
      }
    }
  }

  struct Group {
    double value;
    int count;
  };

  const std::vector<double>& lambdas() const { return lambdas_; }
  const std::vector<Group>& groups() const { return groups_; }
  int size() const { return static_cast<int>(lambdas_.size()); }

 private:
  std::vector<double> lambdas_;
  std::vector<Group> groups_;
};

namespace detail {

// -gamma + (-1)^{n-1} sum_i lambda_i^{n-1} log(lambda_i) / prod_{j!=i} (lambda_j - lambda_i),
// with each term accumulated as sign * exp(log-magnitude).
inline double genchisq_distinct(const std::vector<double>& l) {
  const int n = static_cast<int>(l.size());
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lg = std::log(l[i]);
    if (lg == 0.0) continue;
    double log_mag = (n - 1) * lg + std::log(std::abs(lg));
    int sign = lg < 0 ? -1 : 1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double diff = l[j] - l[i];
      log_mag -= std::log(std::abs(diff));
      if (diff < 0) sign = -sign;
    }
    sum += sign * std::exp(log_mag);
  }
  if ((n - 1) % 2 == 1) sum = -sum;
  return -kEulerGamma + sum;
}

// One weight lam and n-1 copies of eps.
inline double genchisq_two_block(double lam, double eps, int n) {
  const double diff = lam - eps;
  double out = std::pow(lam / diff, n - 1) * (-kEulerGamma + std::log(lam));
  for (int l = 1; l <= n - 1; ++l)
    out -= eps * std::pow(lam, l - 1) * (std::log(eps) + digamma(static_cast<double>(n - l))) / std::pow(diff, l);
  return out;
}

// -gamma + f[l_1, ..., l_n] for f(t) = t^{n-1} log t, as a confluent divided
// difference: repeated nodes use f^{(j)}(t)/j! = C(p, j) t^{p-j} (log t + H_p - H_{p-j}).
inline double genchisq_confluent(const std::vector<EigenvalueProfile::Group>& groups, int n) {
  const int p = n - 1;
  std::vector<double> harmonic(p + 1, 0.0);
  for (int i = 1; i <= p; ++i) harmonic[i] = harmonic[i - 1] + 1.0 / i;
  auto taylor = [&](double t, int j) {
    double binom = 1.0;
    for (int i = 0; i < j; ++i) binom = binom * (p - i) / (i + 1);
    return binom * std::pow(t, p - j) * (std::log(t) + harmonic[p] - harmonic[p - j]);
  };
  std::vector<double> z;
  for (const auto& g : groups)
    for (int c = 0; c < g.count; ++c) z.push_back(g.value);
  std::vector<double> col(n);
  for (int i = 0; i < n; ++i) col[i] = taylor(z[i], 0);
  for (int j = 1; j < n; ++j) {
    for (int i = n - 1; i >= j; --i) {
      if (z[i] == z[i - j]) {
        col[i] = taylor(z[i], j);
      } else {
        col[i] = (col[i] - col[i - 1]) / (z[i] - z[i - j]);
      }
    }
  }
  return -kEulerGamma + col[n - 1];
}

}  // namespace detail

// E[log Z] for Z = sum_i lambda_i |z_i|^2, z_i ~ N_C(0,1) i.i.d.
inline double expected_log_genchisq(const EigenvalueProfile& profile) {
  const int n = profile.size();
  const auto& g = profile.groups();
  if (g.size() == 1) return digamma(static_cast<double>(n)) + std::log(g.front().value);
  if (static_cast<int>(g.size()) == n) return detail::genchisq_distinct(profile.lambdas());
  if (g.size() == 2 && (g[0].count == 1 || g[1].count == 1)) {
    const auto& single = g[0].count == 1 ? g[0] : g[1];
    const auto& block = g[0].count == 1 ? g[1] : g[0];
    return detail::genchisq_two_block(single.value, block.value, n);
  }
  return detail::genchisq_confluent(g, n);
}

// Loss constant of the degree-k moment rounding with 1 - eps = k/(k+n-1).
inline double rounding_constant(int n, int k) {
  if (n < 1 || k < 1) throw DomainError("rounding_constant: n and k must be positive");
  if (n == 1) return 0.0;
  if (k == 1) throw FormulaSingular("rounding_constant: formula is singular at k = 1 (1 - eps = 1/n)");
  const double top = static_cast<double>(k) / (k + n - 1);
  const double eps = 1.0 - top;
  const double rest = eps / (n - 1);
  const double den = top - rest;
  double c = kEulerGamma + std::pow(top / den, n - 1) * (-kEulerGamma + std::log(top));
  for (int l = 1; l <= n - 1; ++l)
    c -= eps * std::pow(top, l - 1) * (std::log(rest) + digamma(static_cast<double>(n - l))) /
         ((n - 1) * std::pow(den, l));
  return c;
}

// max over the unit sphere of (x^beta)^{2/d} = (1/d) prod beta_i^{beta_i/d}, 0^0 = 1.
inline double monomial_max(const std::vector<int>& beta) {
  int d = 0;
  for (int b : beta) {
    if (b < 0) throw DomainError("monomial_max: negative exponent");
    d += b;
  }
  if (d < 1) throw DomainError("monomial_max: total degree must be >= 1");
  double log_val = -std::log(static_cast<double>(d));
  for (int b : beta)
    if (b > 0) log_val += b * std::log(static_cast<double>(b)) / d;
  return std::exp(log_val);
}

// Kantorovich bound on (x^T A x)(x^T A^{-1} x), product scale.
inline double kantorovich_bound(double lambda_max, double lambda_min) {
  if (!(lambda_min > 0.0) || !(lambda_max > 0.0)) throw DomainError("kantorovich_bound: eigenvalues must be positive");
  if (lambda_max < lambda_min) throw DomainError("kantorovich_bound: lambda_max < lambda_min");
  const double r = std::sqrt(lambda_max / lambda_min);
  const double s = r + 1.0 / r;
  return 0.25 * s * s;
}

}  // namespace geomean
