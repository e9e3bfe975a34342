#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "geomean/errors.hpp"
#include "geomean/field.hpp"
#include "geomean/rng.hpp"

namespace geomean {

struct SpectralDecomposition {
  RVec eigenvalues;  // descending
  Mat basis;         // columns are eigenvectors
};

inline SpectralDecomposition eigh(const HermitianMatrix& h) {
  if (!h.mat().allFinite()) throw InvalidInput("eigh: non-finite entries");
  const Eigen::Index n = h.n();
  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.basis.resize(n, n);
  // Eigen returns ascending order; reverse into descending.
  if (h.field() == FieldTag::Real) {
    Eigen::SelfAdjointEigenSolver<RMat> es(h.mat().real());
    for (Eigen::Index i = 0; i < n; ++i) {
      out.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
      out.basis.col(i) = es.eigenvectors().col(n - 1 - i).cast<cplx>();
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(h.mat());
    for (Eigen::Index i = 0; i < n; ++i) {
      out.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
      out.basis.col(i) = es.eigenvectors().col(n - 1 - i);
    }
  }
  return out;
}

inline double lambda_max(const HermitianMatrix& h) { return eigh(h).eigenvalues(0); }
inline double lambda_min(const HermitianMatrix& h) {
  const auto ev = eigh(h).eigenvalues;
  return ev(ev.size() - 1);
}

// Euclidean projection onto the probability simplex (sort and threshold).
inline RVec project_simplex(const RVec& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  RVec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(v(i) - theta, 0.0);
  return out;
}

// PSD, trace-one matrix.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(HermitianMatrix x) : x_(std::move(x)) {
    const double tr = x_.trace();
    if (std::abs(tr - 1.0) > 1e-9) throw InvalidInput("density matrix trace is not 1");
    if (lambda_min(x_) < -1e-9) throw NotPSD("density matrix is not PSD");
  }

  static DensityMatrix maximally_mixed(Eigen::Index n, FieldTag field) {
    return DensityMatrix(HermitianMatrix(Mat::Identity(n, n) / static_cast<double>(n), field), Unchecked{});
  }

  const HermitianMatrix& matrix() const { return x_; }
  Eigen::Index n() const { return x_.n(); }
  FieldTag field() const { return x_.field(); }

 private:
  struct Unchecked {};
  DensityMatrix(HermitianMatrix x, Unchecked) : x_(std::move(x)) {}
  friend DensityMatrix project_spectrahedron(const HermitianMatrix& h);

  HermitianMatrix x_;
};

// Frobenius-nearest point of {X >= 0, tr X = 1}.
inline DensityMatrix project_spectrahedron(const HermitianMatrix& h) {
  const auto sd = eigh(h);
  const RVec p = project_simplex(sd.eigenvalues);
  Mat x = sd.basis * p.cast<cplx>().asDiagonal() * sd.basis.adjoint();
  return DensityMatrix(HermitianMatrix(x, h.field()), DensityMatrix::Unchecked{});
}

struct GramFactor {
  Mat factor;  // n x rank, X = factor * factor^H
  int rank = 0;
};

namespace detail {

inline GramFactor psd_factor(const HermitianMatrix& x, double neg_tol, const char* what) {
  const auto sd = eigh(x);
  const Eigen::Index n = x.n();
  const double top = sd.eigenvalues(0);
  const double bottom = sd.eigenvalues(n - 1);
  if (bottom < -neg_tol * std::max(1.0, std::abs(top)))
    throw NotPSD(std::string(what) + ": matrix has eigenvalue " + std::to_string(bottom));
  GramFactor g;
  if (top <= 0.0) {
    g.factor = Mat::Zero(n, 0);
    return g;
  }
  const double tau = 1e-8 * top;
  int r = 0;
  while (r < n && sd.eigenvalues(r) > tau) ++r;
  g.rank = r;
  g.factor.resize(n, r);
  for (int j = 0; j < r; ++j) g.factor.col(j) = sd.basis.col(j) * std::sqrt(sd.eigenvalues(j));
  return g;
}

}  // namespace detail

// X = U U^H keeping eigenvalues above 1e-8 * lambda_max.
inline GramFactor gram_factor(const HermitianMatrix& x) {
  return detail::psd_factor(x, 1e-8, "gram_factor");
}
inline GramFactor gram_factor(const DensityMatrix& x) { return gram_factor(x.matrix()); }

// Standard normal vector in K^r; complex coordinates are (y + i z)/sqrt(2).
inline Vec standard_gaussian(Eigen::Index r, FieldTag field, RngStream& rng) {
  Vec z(r);
  if (field == FieldTag::Real) {
    for (Eigen::Index i = 0; i < r; ++i) z(i) = cplx(rng.normal(), 0.0);
  } else {
    constexpr double s = 0.70710678118654752440;
    for (Eigen::Index i = 0; i < r; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      z(i) = cplx(re * s, im * s);
    }
  }
  return z;
}

// Samples U z with z ~ N_K(0, I_r), so the law is N_K(0, U U^H).
inline std::vector<Vec> sample_gaussian_factor(const Mat& factor, FieldTag field, std::size_t count,
                                               RngStream& rng) {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    if (factor.cols() == 0) {
      out.push_back(Vec::Zero(factor.rows()));
    } else {
      out.push_back(factor * standard_gaussian(factor.cols(), field, rng));
    }
  }
  return out;
}

inline std::vector<Vec> sample_gaussian(const HermitianMatrix& cov, std::size_t count, RngStream& rng) {
  const auto g = detail::psd_factor(cov, 1e-10, "sample_gaussian");
  return sample_gaussian_factor(g.factor, cov.field(), count, rng);
}

inline Vec sample_sphere_uniform(Eigen::Index n, FieldTag field, RngStream& rng) {
  if (n < 1) throw InvalidInput("sample_sphere_uniform: n must be >= 1");
  for (;;) {
    Vec z = standard_gaussian(n, field, rng);
    const double nrm = z.norm();
    if (nrm > 1e-300) return z / nrm;
  }
}

}  // namespace geomean
