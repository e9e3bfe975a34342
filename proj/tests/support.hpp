#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "geomean/geomean.hpp"

namespace testing_support {

using namespace geomean;

// Haar-ish random unitary (orthogonal over R) from the QR of a Gaussian matrix.
inline Mat random_unitary(Eigen::Index n, FieldTag field, RngStream& rng) {
  Mat g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) g.col(j) = standard_gaussian(n, field, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(n, n);
}

inline ProblemInstance conjugate_instance(const ProblemInstance& inst, const Mat& q) {
  std::vector<HermitianMatrix> forms;
  for (const auto& a : inst.forms()) forms.push_back(HermitianMatrix(q * a.mat() * q.adjoint(), inst.field()));
  return ProblemInstance(inst.field(), std::move(forms));
}

// Random PSD form of the given rank with trace one.
inline HermitianMatrix random_psd(Eigen::Index n, int rank, FieldTag field, RngStream& rng) {
  Mat g = Mat::Zero(n, n);
  for (int r = 0; r < rank; ++r) {
    const Vec v = standard_gaussian(n, field, rng);
    g += v * v.adjoint();
  }
  return HermitianMatrix(g / g.trace().real(), field);
}

inline ProblemInstance random_psd_instance(Eigen::Index n, int d, int rank, FieldTag field, RngStream& rng) {
  std::vector<HermitianMatrix> forms;
  for (int i = 0; i < d; ++i) forms.push_back(random_psd(n, rank, field, rng));
  return ProblemInstance(field, std::move(forms));
}

inline ProblemInstance identity_instance(Eigen::Index n, int d, FieldTag field) {
  return ProblemInstance(field, std::vector<HermitianMatrix>(d, HermitianMatrix::identity(n, field)));
}

struct NamedInstance {
  std::string name;
  ProblemInstance inst;
};

// Fixed seeded regression suite: both fields, forms of rank 1..n, d in {2, 6, 32}.
inline std::vector<NamedInstance> regression_suite() {
  RngStream root(20240611);
  std::vector<NamedInstance> out;
  auto rng = [&](const char* name) { return root.substream(name); };
  {
    auto r = rng("r1");
    out.push_back({"real n=3 d=2 rank1", gen_random_rank_one(3, 2, FieldTag::Real, r)});
  }
  {
    auto r = rng("r2");
    out.push_back({"real n=3 d=6 rank1", gen_random_rank_one(3, 6, FieldTag::Real, r)});
  }
  {
    auto r = rng("r3");
    out.push_back({"real n=3 d=32 rank2", random_psd_instance(3, 32, 2, FieldTag::Real, r)});
  }
  {
    auto r = rng("r4");
    out.push_back({"real n=2 d=6 rank2", random_psd_instance(2, 6, 2, FieldTag::Real, r)});
  }
  {
    auto r = rng("c1");
    out.push_back({"complex n=2 d=2 rank1", gen_random_rank_one(2, 2, FieldTag::Complex, r)});
  }
  {
    auto r = rng("c2");
    out.push_back({"complex n=2 d=32 rank1", gen_random_rank_one(2, 32, FieldTag::Complex, r)});
  }
  {
    auto r = rng("c3");
    out.push_back({"complex n=3 d=6 rank1", gen_random_rank_one(3, 6, FieldTag::Complex, r)});
  }
  {
    auto r = rng("c4");
    out.push_back({"complex n=3 d=32 rank3", random_psd_instance(3, 32, 3, FieldTag::Complex, r)});
  }
  out.push_back({"icosahedral", gen_icosahedral()});
  out.push_back({"monomial (2,1,1)", gen_monomial({2, 1, 1})});
  return out;
}

// Expected value of p_ico^{1/6} under the uniform measure on S^2, by the midpoint
// rule on an equal-area (cos theta, azimuth) grid.
inline double ico_uniform_mean_quadrature(int resolution) {
  const auto ico = gen_icosahedral();
  const double pi = std::acos(-1.0);
  double s = 0.0;
  for (int i = 0; i < resolution; ++i) {
    const double c = -1.0 + 2.0 * (i + 0.5) / resolution;
    const double sn = std::sqrt(1.0 - c * c);
    for (int j = 0; j < 2 * resolution; ++j) {
      const double az = 2.0 * pi * (j + 0.5) / (2 * resolution);
      Vec x(3);
      x << sn * std::cos(az), sn * std::sin(az), c;
      s += geometric_mean(form_values(ico, x));
    }
  }
  return s / (2.0 * resolution * resolution);
}

// Mean and standard error of a sample.
struct Stat {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
Stat monte_carlo(long samples, F&& draw) {
  double mean = 0.0, m2 = 0.0;
  for (long s = 1; s <= samples; ++s) {
    const double v = draw();
    const double delta = v - mean;
    mean += delta / s;
    m2 += delta * (v - mean);
  }
  return {mean, std::sqrt(m2 / (samples - 1) / samples)};
}

}  // namespace testing_support
