#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "geomean/errors.hpp"

namespace geomean {

enum class FieldTag { Real, Complex };

inline std::string to_string(FieldTag f) {
  return f == FieldTag::Real ? "real" : "complex";
}

inline FieldTag parse_field(std::string_view s) {
  if (s == "real") return FieldTag::Real;
  if (s == "complex") return FieldTag::Complex;
  throw InvalidInput("unknown field '" + std::string(s) + "' (expected real|complex)");
}

using cplx = std::complex<double>;
// Both fields share complex storage; real-field objects keep zero imaginary parts.
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Dense self-adjoint matrix over R or C. Construction symmetrizes (A + A^H)/2,
// which is the identity, bit for bit, on input that is already self-adjoint.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  HermitianMatrix(Mat entries, FieldTag field) : field_(field) {
    if (entries.rows() != entries.cols() || entries.rows() == 0)
      throw InvalidInput("Hermitian matrix must be square and non-empty");
    if (!entries.allFinite()) throw InvalidInput("matrix has non-finite entries");
    const Eigen::Index n = entries.rows();
    m_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        cplx v = (entries(i, j) + std::conj(entries(j, i))) / 2.0;
        if (field == FieldTag::Real) v = cplx(v.real(), 0.0);
        m_(i, j) = v;
      }
    }
  }

  static HermitianMatrix from_real(const RMat& entries) {
    return HermitianMatrix(entries.cast<cplx>(), FieldTag::Real);
  }

  static HermitianMatrix identity(Eigen::Index n, FieldTag field = FieldTag::Real) {
    return HermitianMatrix(Mat::Identity(n, n), field);
  }

  static HermitianMatrix diagonal(const RVec& d, FieldTag field = FieldTag::Real) {
    return HermitianMatrix(d.cast<cplx>().asDiagonal().toDenseMatrix(), field);
  }

  // v v^H.
  static HermitianMatrix outer(const Vec& v, FieldTag field) {
    return HermitianMatrix(v * v.adjoint(), field);
  }

  Eigen::Index n() const { return m_.rows(); }
  FieldTag field() const { return field_; }
  const Mat& mat() const { return m_; }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }

  // <x, A x> = x^H A x (real by self-adjointness).
  double quad(const Vec& x) const { return x.dot(m_ * x).real(); }

  HermitianMatrix scaled(double c) const { return HermitianMatrix(m_ * c, field_); }

  friend bool operator==(const HermitianMatrix& a, const HermitianMatrix& b) {
    return a.field_ == b.field_ && a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Mat m_;
  FieldTag field_ = FieldTag::Real;
};

// Frobenius inner product <A, X> = Re tr(A^H X).
inline double inner(const HermitianMatrix& a, const HermitianMatrix& x) {
  return (a.mat().conjugate().cwiseProduct(x.mat())).sum().real();
}

inline double max_norm(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline void require_same_field(FieldTag a, FieldTag b, const char* what) {
  if (a != b) throw InvalidInput(std::string("mixed-field operation: ") + what);
}

}  // namespace geomean
