#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "geomean/errors.hpp"
#include "geomean/field.hpp"
#include "geomean/instance.hpp"
#include "geomean/linalg.hpp"
#include "geomean/rng.hpp"
#include "geomean/rounding.hpp"
#include "geomean/sdp.hpp"

namespace geomean {

using MultiIndex = std::vector<int>;

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

// All multi-indices of total degree k in n variables, descending lexicographic
// order: (k,0,..,0) first, (0,..,0,k) last.
class MonomialBasis {
 public:
  MonomialBasis(int n, int k) : n_(n), k_(k) {
    if (n < 1 || k < 0) throw InvalidInput("monomial_basis: need n >= 1, k >= 0");
    MultiIndex cur(n, 0);
    fill(cur, 0, k);
    for (std::size_t i = 0; i < index_.size(); ++i) pos_.emplace(encode(index_[i]), static_cast<int>(i));
  }

  int n() const { return n_; }
  int k() const { return k_; }
  int size() const { return static_cast<int>(index_.size()); }
  const MultiIndex& operator[](int i) const { return index_[i]; }
  const std::vector<MultiIndex>& indices() const { return index_; }

  // Position of alpha, or -1 if it is not in the basis.
  int position(const MultiIndex& alpha) const {
    const auto it = pos_.find(encode(alpha));
    return it == pos_.end() ? -1 : it->second;
  }

 private:
  void fill(MultiIndex& cur, int var, int remaining) {
    if (var == n_ - 1) {
      cur[var] = remaining;
      index_.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[var] = e;
      fill(cur, var + 1, remaining - e);
    }
    cur[var] = 0;
  }

  std::uint64_t encode(const MultiIndex& a) const {
    std::uint64_t code = 0;
    for (int v : a) code = code * static_cast<std::uint64_t>(k_ + 1) + static_cast<std::uint64_t>(v);
    return code;
  }

  int n_;
  int k_;
  std::vector<MultiIndex> index_;
  std::unordered_map<std::uint64_t, int> pos_;
};

inline MonomialBasis monomial_basis(int n, int k) { return MonomialBasis(n, k); }

inline MultiIndex add_unit(MultiIndex a, int i) {
  ++a[i];
  return a;
}

inline MultiIndex add_indices(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

// k! / prod alpha_i!
inline double multinomial(const MultiIndex& alpha) {
  double r = 1.0;
  int total = 0;
  for (int a : alpha) {
    for (int i = 1; i <= a; ++i) r = r * (total + i) / i;
    total += a;
  }
  return std::round(r);
}

// Linear coordinates of degree-k homogeneous pseudoexpectations.
//
// The moment matrix H is indexed by degree-k monomials with
// H[a, b] = pEx[conj(x)^a x^b], and H = sum_j m_j B_j. Over R the coordinates
// are the moments of the degree-2k monomials (H[a, b] = m_{a+b}); over C they
// are the real and imaginary parts of the upper triangle of H, which is then a
// general Hermitian matrix.
//
// Validity is PSD-ness of every block of the full moment matrix. Over R that is
// H alone. Over C a circularly symmetric pEx splits the matrix indexed by
// conj(x)^alpha x^beta, |alpha| + |beta| = k, into blocks by |alpha| = p, with
// block_p[(a,b), (a',b')] = H[a + b', b + a']; block k is H, and block k - p
// is the conjugate of block p, so p runs over k, k-1, ..., ceil(k/2).
class MomentSpace {
 public:
  struct Entry {
    int row;
    int col;
    cplx weight;
  };

  struct Block {
    int size = 0;
    std::vector<std::vector<Entry>> coords;  // coords[j]: entries of d(block)/dm_j
  };

  MomentSpace(int n, int k, FieldTag field) : n_(n), k_(k), field_(field), basis_(n, k), full_(n, field == FieldTag::Real ? 2 * k : 0) {
    if (k < 1) throw InvalidInput("moment space needs k >= 1");
    const int nb = basis_.size();
    if (field == FieldTag::Real) {
      coords_.resize(full_.size());
      for (int a = 0; a < nb; ++a)
        for (int b = 0; b < nb; ++b)
          coords_[full_.position(add_indices(basis_[a], basis_[b]))].push_back({a, b, cplx(1.0, 0.0)});
      normalization_ = RVec::Zero(full_.size());
      for (int a = 0; a < nb; ++a) normalization_(full_.position(add_indices(basis_[a], basis_[a]))) = multinomial(basis_[a]);
    } else {
      std::vector<double> norm;
      for (int a = 0; a < nb; ++a) {
        coords_.push_back({{a, a, cplx(1.0, 0.0)}});
        norm.push_back(multinomial(basis_[a]));
        for (int b = a + 1; b < nb; ++b) {
          coords_.push_back({{a, b, cplx(1.0, 0.0)}, {b, a, cplx(1.0, 0.0)}});
          norm.push_back(0.0);
          coords_.push_back({{a, b, cplx(0.0, 1.0)}, {b, a, cplx(0.0, -1.0)}});
          norm.push_back(0.0);
        }
      }
      normalization_ = RVec::Map(norm.data(), static_cast<Eigen::Index>(norm.size()));
    }
    build_blocks();
  }

  int n() const { return n_; }
  int k() const { return k_; }
  FieldTag field() const { return field_; }
  const MonomialBasis& basis() const { return basis_; }
  // Degree-2k basis indexing the real coordinates (empty over C).
  const MonomialBasis& full_basis() const { return full_; }
  int dim() const { return static_cast<int>(coords_.size()); }
  int matrix_size() const { return basis_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  // Sum of block sizes: the barrier parameter of sum_b -log det block_b.
  int barrier_size() const {
    int s = 0;
    for (const auto& b : blocks_) s += b.size;
    return s;
  }

  Mat block_matrix(int which, const RVec& m) const {
    const auto& blk = blocks_[which];
    Mat out = Mat::Zero(blk.size, blk.size);
    for (int j = 0; j < dim(); ++j)
      for (const auto& e : blk.coords[j]) out(e.row, e.col) += m(j) * e.weight;
    return out;
  }

  double min_eigenvalue(const RVec& m) const {
    double lo = std::numeric_limits<double>::infinity();
    for (int b = 0; b < static_cast<int>(blocks_.size()); ++b)
      lo = std::min(lo, lambda_min(HermitianMatrix(block_matrix(b, m), field_)));
    return lo;
  }
  const std::vector<Entry>& coordinate(int j) const { return coords_[j]; }
  // <normalization, m> = pEx[|x|^{2k}].
  const RVec& normalization() const { return normalization_; }

  Mat matrix(const RVec& m) const {
    const int nb = basis_.size();
    Mat h = Mat::Zero(nb, nb);
    for (int j = 0; j < dim(); ++j)
      for (const auto& e : coords_[j]) h(e.row, e.col) += m(j) * e.weight;
    return h;
  }

  // Coordinates of a linear functional sum_{a,b} C[a,b] H[a,b].
  RVec functional(const Mat& c) const {
    RVec out(dim());
    for (int j = 0; j < dim(); ++j) {
      cplx s = 0.0;
      for (const auto& e : coords_[j]) s += c(e.row, e.col) * e.weight;
      out(j) = s.real();
    }
    return out;
  }

  RVec point(const Vec& x) const {
    if (x.size() != n_) throw InvalidInput("point moments: dimension mismatch");
    RVec m(dim());
    if (field_ == FieldTag::Real) {
      for (int j = 0; j < full_.size(); ++j) {
        double v = 1.0;
        const auto& g = full_[j];
        for (int i = 0; i < n_; ++i) v *= std::pow(x(i).real(), g[i]);
        m(j) = v;
      }
      return m;
    }
    const int nb = basis_.size();
    Vec phi(nb);
    for (int a = 0; a < nb; ++a) {
      cplx v = 1.0;
      for (int i = 0; i < n_; ++i)
        for (int e = 0; e < basis_[a][i]; ++e) v *= x(i);
      phi(a) = v;
    }
    const Mat h = phi.conjugate() * phi.transpose();
    return coordinates_of(h);
  }

  // Moments of the uniform distribution on the unit sphere of K^n.
  RVec uniform() const {
    if (field_ == FieldTag::Real) {
      RVec m = RVec::Zero(dim());
      double denom = 1.0;
      for (int j = 0; j < k_; ++j) denom *= n_ + 2.0 * j;
      for (int j = 0; j < full_.size(); ++j) {
        const auto& g = full_[j];
        bool even = std::all_of(g.begin(), g.end(), [](int e) { return e % 2 == 0; });
        if (!even) continue;
        double num = 1.0;
        for (int e : g)
          for (int t = e - 1; t > 0; t -= 2) num *= t;
        m(j) = num / denom;
      }
      return m;
    }
    const int nb = basis_.size();
    Mat h = Mat::Zero(nb, nb);
    double denom = 1.0;
    for (int j = 1; j <= k_; ++j) denom *= n_ - 1 + j;
    for (int a = 0; a < nb; ++a) {
      double num = 1.0;
      for (int e : basis_[a])
        for (int t = 2; t <= e; ++t) num *= t;
      h(a, a) = num / denom;
    }
    return coordinates_of(h);
  }

  // Inverse of matrix() on matrices with the right structure.
  RVec coordinates_of(const Mat& h) const {
    RVec m(dim());
    for (int j = 0; j < dim(); ++j) {
      const auto& e = coords_[j].front();
      const cplx v = h(e.row, e.col);
      m(j) = e.weight.imag() != 0.0 ? v.imag() : v.real();
    }
    return m;
  }

 private:
  void build_blocks() {
    if (field_ == FieldTag::Real) {
      blocks_.push_back({basis_.size(), coords_});
      return;
    }
    // Which coordinates touch H(r, c), following the layout built above.
    const int nb = basis_.size();
    std::vector<std::vector<Entry>> touch(static_cast<std::size_t>(nb) * nb);
    for (int j = 0; j < dim(); ++j)
      for (const auto& e : coords_[j]) touch[static_cast<std::size_t>(e.row) * nb + e.col].push_back({j, 0, e.weight});
    for (int p = k_; 2 * p >= k_; --p) {
      MonomialBasis lo(n_, p);
      MonomialBasis hi(n_, k_ - p);
      std::vector<std::pair<const MultiIndex*, const MultiIndex*>> idx;
      for (int a = 0; a < lo.size(); ++a)
        for (int b = 0; b < hi.size(); ++b) idx.emplace_back(&lo[a], &hi[b]);
      Block blk;
      blk.size = static_cast<int>(idx.size());
      blk.coords.assign(dim(), {});
      for (int i = 0; i < blk.size; ++i)
        for (int t = 0; t < blk.size; ++t) {
          const int r = basis_.position(add_indices(*idx[i].first, *idx[t].second));
          const int c = basis_.position(add_indices(*idx[i].second, *idx[t].first));
          for (const auto& e : touch[static_cast<std::size_t>(r) * nb + c]) blk.coords[e.row].push_back({i, t, e.weight});
        }
      blocks_.push_back(std::move(blk));
    }
  }

  int n_;
  int k_;
  FieldTag field_;
  MonomialBasis basis_;
  MonomialBasis full_;
  std::vector<std::vector<Entry>> coords_;
  RVec normalization_;
  std::vector<Block> blocks_;
};

// Degree-k homogeneous pseudoexpectation in MomentSpace coordinates.
struct MomentVector {
  FieldTag field = FieldTag::Real;
  int n = 0;
  int k = 0;
  RVec values;

  MomentSpace space() const { return MomentSpace(n, k, field); }
};

inline HermitianMatrix moment_matrix(const MomentVector& m) {
  const auto sp = m.space();
  return HermitianMatrix(sp.matrix(m.values), m.field);
}

inline double moment_normalization(const MomentVector& m) { return m.space().normalization().dot(m.values); }

// Throws unless pEx[|x|^{2k}] = 1 within 1e-8 and every moment block is PSD within -1e-8.
inline void validate_moments(const MomentVector& m) {
  const auto sp = m.space();
  if (m.values.size() != sp.dim()) throw InvalidInput("moment vector has wrong length");
  if (std::abs(sp.normalization().dot(m.values) - 1.0) > 1e-8) throw InvalidInput("moment vector is not normalized");
  if (sp.min_eigenvalue(m.values) < -1e-8) throw NotPSD("moment matrix is not PSD");
}

inline MomentVector point_moments(const Vec& x, int k, FieldTag field) {
  MomentSpace sp(static_cast<int>(x.size()), k, field);
  return {field, sp.n(), k, sp.point(x)};
}

inline MomentVector uniform_moments(int n, int k, FieldTag field) {
  MomentSpace sp(n, k, field);
  return {field, n, k, sp.uniform()};
}

// Degree-1 moments and density matrices are related by H = conj(X).
inline MomentVector moments_from_density(const DensityMatrix& x) {
  MomentSpace sp(static_cast<int>(x.n()), 1, x.field());
  return {x.field(), sp.n(), 1, sp.coordinates_of(x.matrix().mat().conjugate())};
}

inline DensityMatrix density_from_moments(const MomentVector& m) {
  if (m.k != 1) throw InvalidInput("density_from_moments: moment vector is not degree 1");
  return DensityMatrix(HermitianMatrix(m.space().matrix(m.values).conjugate(), m.field));
}

namespace detail {

// Coefficients C[a,b] of conj(x)^a x^b in prod_{A in forms} <x, A x>, indexed
// by the degree-|forms| basis. Over R the same recursion yields x^a x^b.
inline Mat pair_product(const std::vector<const Mat*>& forms, int n) {
  Mat c = Mat::Ones(1, 1);
  for (std::size_t step = 0; step < forms.size(); ++step) {
    const int deg = static_cast<int>(step);
    MonomialBasis from(n, deg);
    MonomialBasis to(n, deg + 1);
    std::vector<std::vector<int>> up(from.size(), std::vector<int>(n));
    for (int a = 0; a < from.size(); ++a)
      for (int p = 0; p < n; ++p) up[a][p] = to.position(add_unit(from[a], p));
    Mat next = Mat::Zero(to.size(), to.size());
    const Mat& f = *forms[step];
    for (int a = 0; a < from.size(); ++a)
      for (int b = 0; b < from.size(); ++b) {
        const cplx cab = c(a, b);
        if (cab == 0.0) continue;
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q)
            if (f(p, q) != 0.0) next(up[a][p], up[b][q]) += cab * f(p, q);
      }
    c = std::move(next);
  }
  return c;
}

}  // namespace detail

// Coordinates c_I with <c_I, m> = pEx[prod_{i in I} <x, A_i x>].
struct ProductFormFunctional {
  std::vector<int> subset;
  RVec coeffs;

  double apply(const MomentVector& m) const { return coeffs.dot(m.values); }
};

inline ProductFormFunctional product_form_functional(const ProblemInstance& inst, const std::vector<int>& subset,
                                                     const MomentSpace& space) {
  if (static_cast<int>(subset.size()) != space.k())
    throw InvalidInput("product_form_functional: |I| must equal k");
  std::vector<const Mat*> forms;
  for (int i : subset) {
    if (i < 0 || i >= static_cast<int>(inst.d())) throw InvalidInput("product_form_functional: index out of range");
    forms.push_back(&inst.form(i).mat());
  }
  return {subset, space.functional(detail::pair_product(forms, static_cast<int>(inst.n())))};
}

inline ProductFormFunctional product_form_functional(const ProblemInstance& inst, const std::vector<int>& subset) {
  return product_form_functional(inst, subset,
                                 MomentSpace(static_cast<int>(inst.n()), static_cast<int>(subset.size()), inst.field()));
}

// Lexicographic enumeration of the k-subsets of {0..d-1}.
inline std::vector<std::vector<int>> k_subsets(int d, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  if (k > d || k < 0) return out;
  for (;;) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == d - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

// Normalized elementary symmetric mean E_k = C(d,k)^{-1} sum_{|I|=k} prod_{i in I} v_i.
// The recursion keeps every intermediate normalized, so each update is a convex combination.
inline double elementary_symmetric(const std::vector<double>& values, int k) {
  const int d = static_cast<int>(values.size());
  if (k < 0 || k > d) throw InvalidInput("elementary_symmetric: need 0 <= k <= d");
  std::vector<double> e(k + 1, 0.0);
  e[0] = 1.0;
  for (int i = 1; i <= d; ++i) {
    const double v = values[i - 1];
    for (int j = std::min(k, i); j >= 1; --j) {
      const double keep = j <= i - 1 ? e[j] * static_cast<double>(i - j) / i : 0.0;
      e[j] = keep + e[j - 1] * v * static_cast<double>(j) / i;
    }
  }
  return e[k];
}

struct SosOptions {
  double tol = 1e-6;  // relative bound gap required for convergence
  long max_iter = 5000;  // total Newton iterations
  double mu_start = 1.0;
  double mu_end = 1e-9;
  double mu_factor = 0.2;
  std::size_t max_subsets = 100000;
};

struct SosReport {
  MomentVector moments;
  double value = 0.0;  // exp of the objective at the returned moments
  double gap = 0.0;    // upper - value
  double upper = 0.0;  // exp(F_center + mu * N) at the last centered stage
  double mu = 0.0;     // barrier weight of the last centered stage
  long iterations = 0;
  int stages = 0;
  bool converged = false;
  double min_moment_eigenvalue = 0.0;
  double wall_seconds = 0.0;
};

namespace detail {

struct BarrierProblem {
  const MomentSpace* space;
  std::vector<RVec> functionals;
  double weight;
};

// Maximizes weight * sum_I log <c_I, m> over normalized PSD moment vectors by a
// log-det barrier path: each stage runs damped Newton on
//   weight * sum_I log <c_I, m> + mu * sum_b log det block_b(m)
// in the affine slice <normalization, m> = 1, then shrinks mu.
inline SosReport barrier_solve(const BarrierProblem& prob, const SosOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const MomentSpace& sp = *prob.space;
  const int dim = sp.dim();
  const auto& blocks = sp.blocks();
  const int nblocks = static_cast<int>(blocks.size());
  const RVec& a = sp.normalization();

  // Affine elimination of the normalization: m = m0 + Z y.
  Eigen::Index pivot = 0;
  a.cwiseAbs().maxCoeff(&pivot);
  RMat z = RMat::Zero(dim, dim - 1);
  for (int j = 0, c = 0; j < dim; ++j) {
    if (j == pivot) continue;
    z(j, c) = 1.0;
    z(pivot, c) = -a(j) / a(pivot);
    ++c;
  }

  RVec m = sp.uniform();
  const int nf = static_cast<int>(prob.functionals.size());
  RMat cmat(nf, dim);
  for (int i = 0; i < nf; ++i) cmat.row(i) = prob.functionals[i].transpose();

  auto objective = [&](const RVec& mm, double& f) {
    const RVec vals = cmat * mm;
    if ((vals.array() <= 0.0).any()) return false;
    f = prob.weight * vals.array().log().sum();
    return true;
  };
  // Sum of log det over blocks; inverses are kept when requested.
  auto barrier = [&](const RVec& mm, double& logdet, std::vector<Mat>* inverses) {
    double s = 0.0;
    for (int b = 0; b < nblocks; ++b) {
      Eigen::LLT<Mat> llt(sp.block_matrix(b, mm));
      if (llt.info() != Eigen::Success) return false;
      const Mat& l = llt.matrixL();
      for (int i = 0; i < blocks[b].size; ++i) {
        const double di = l(i, i).real();
        if (!(di > 0.0)) return false;
        s += 2.0 * std::log(di);
      }
      if (inverses) (*inverses)[b] = llt.solve(Mat::Identity(blocks[b].size, blocks[b].size));
    }
    logdet = s;
    return true;
  };

  SosReport rep;
  double mu = opt.mu_start;
  long iters = 0;
  bool budget_hit = false;
  double center_f = 0.0;
  double center_mu = std::numeric_limits<double>::infinity();
  bool any_center = false;

  while (true) {
    bool centered = false;
    for (int inner = 0; inner < 200; ++inner) {
      if (iters >= opt.max_iter) {
        budget_hit = true;
        break;
      }
      double f = 0.0, logdet = 0.0;
      std::vector<Mat> winv(nblocks);
      objective(m, f);
      barrier(m, logdet, &winv);
      const double phi = f + mu * logdet;

      const RVec vals = cmat * m;
      RVec grad = prob.weight * (cmat.transpose() * vals.cwiseInverse());
      RMat hess = -prob.weight * (cmat.transpose() * vals.array().square().inverse().matrix().asDiagonal() * cmat);
      for (int b = 0; b < nblocks; ++b) {
        const Mat& w = winv[b];
        const auto& coords = blocks[b].coords;
        for (int j = 0; j < dim; ++j) {
          if (coords[j].empty()) continue;
          cplx g = 0.0;
          Mat t = Mat::Zero(blocks[b].size, blocks[b].size);
          for (const auto& e : coords[j]) {
            g += e.weight * w(e.col, e.row);
            t.noalias() += e.weight * w.col(e.row) * w.row(e.col);
          }
          grad(j) += mu * g.real();
          for (int l = j; l < dim; ++l) {
            cplx s = 0.0;
            for (const auto& e : coords[l]) s += e.weight * t(e.col, e.row);
            hess(j, l) -= mu * s.real();
            if (l != j) hess(l, j) -= mu * s.real();
          }
        }
      }
      const RVec gr = z.transpose() * grad;
      const RMat hr = -(z.transpose() * hess * z);
      Eigen::LDLT<RMat> ldlt(hr);
      const RVec dy = ldlt.solve(gr);
      const double decrement = gr.dot(dy);
      ++iters;
      if (!(decrement >= 0.0) || !dy.allFinite()) break;
      if (decrement < 1e-10) {
        centered = true;
        break;
      }
      const RVec dm = z * dy;
      double step = 1.0;
      bool moved = false;
      while (step > 1e-14) {
        const RVec cand = m + step * dm;
        double fc = 0.0, ldc = 0.0;
        if (objective(cand, fc) && barrier(cand, ldc, nullptr) && fc + mu * ldc >= phi + 0.25 * step * decrement) {
          m = cand;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (centered) {
      objective(m, center_f);
      center_mu = mu;
      any_center = true;
      ++rep.stages;
    }
    if (!centered || budget_hit || mu <= opt.mu_end * (1.0 + 1e-12)) break;
    mu = std::max(mu * opt.mu_factor, opt.mu_end);
  }

  double f = 0.0;
  objective(m, f);
  rep.moments = {sp.field(), sp.n(), sp.k(), m};
  rep.value = std::exp(f);
  if (any_center) {
    rep.upper = std::exp(center_f + center_mu * sp.barrier_size());
    rep.mu = center_mu;
  } else {
    rep.upper = std::numeric_limits<double>::infinity();
    rep.mu = mu;
  }
  rep.gap = rep.upper - rep.value;
  rep.iterations = iters;
  rep.converged = any_center && !budget_hit && rep.gap <= opt.tol * rep.value;
  rep.min_moment_eigenvalue = sp.min_eigenvalue(m);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline void check_level(const ProblemInstance& inst, int k, const SosOptions& opt) {
  if (k < 1 || k > static_cast<int>(inst.d())) throw InvalidInput("level k must satisfy 1 <= k <= d");
  if (binomial(static_cast<int>(inst.d()), k) > static_cast<double>(opt.max_subsets))
    throw TooManySubsets("C(d, k) = " + std::to_string(binomial(static_cast<int>(inst.d()), k)) + " exceeds the subset guard");
}

}  // namespace detail

// Degree-k relaxation with multipliers, solved in its pseudoexpectation form:
// maximize (prod_{|I|=k} pEx[prod_{i in I} <x, A_i x>])^{1/(d C(d-1,k-1))}.
inline SosReport solve_optsos(const ProblemInstance& inst, int k, const SosOptions& opt = {}) {
  detail::check_level(inst, k, opt);
  const int d = static_cast<int>(inst.d());
  MomentSpace sp(static_cast<int>(inst.n()), k, inst.field());
  detail::BarrierProblem prob{&sp, {}, 1.0 / (d * binomial(d - 1, k - 1))};
  for (const auto& subset : k_subsets(d, k)) prob.functionals.push_back(product_form_functional(inst, subset, sp).coeffs);
  return detail::barrier_solve(prob, opt);
}

// Multiplier-free variant: maximize pEx[E_k(<x, A_1 x>, ..., <x, A_d x>)]^{1/k}.
inline SosReport solve_srel(const ProblemInstance& inst, int k, const SosOptions& opt = {}) {
  detail::check_level(inst, k, opt);
  const int d = static_cast<int>(inst.d());
  MomentSpace sp(static_cast<int>(inst.n()), k, inst.field());
  RVec avg = RVec::Zero(sp.dim());
  for (const auto& subset : k_subsets(d, k)) avg += product_form_functional(inst, subset, sp).coeffs;
  avg /= binomial(d, k);
  detail::BarrierProblem prob{&sp, {avg}, 1.0 / k};
  return detail::barrier_solve(prob, opt);
}

// M(v) = pEx[|<v, x>|^{2k-2} x x^H].
inline HermitianMatrix rounding_moment(const MomentVector& m, const Vec& v) {
  const MomentSpace sp = m.space();
  const int n = m.n;
  const int k = m.k;
  const Mat vv = v * v.adjoint();
  std::vector<const Mat*> forms(k - 1, &vv);
  const Mat pv = detail::pair_product(forms, n);
  const Mat h = sp.matrix(m.values);
  MonomialBasis low(n, k - 1);
  const MonomialBasis& top = sp.basis();
  Mat out = Mat::Zero(n, n);
  for (int a = 0; a < low.size(); ++a)
    for (int b = 0; b < low.size(); ++b) {
      const cplx c = pv(a, b);
      if (c == 0.0) continue;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          out(p, q) += c * h(top.position(add_unit(low[a], q)), top.position(add_unit(low[b], p)));
    }
  return HermitianMatrix(out, m.field);
}

struct SosRoundingOutcome {
  RoundingOutcome pooled;
  double best_trial_mean = 0.0;
  int best_trial = -1;
  int trials_used = 0;
  int degenerate_trials = 0;
};

// Moment rounding: for each trial draw v uniform on the sphere, form M(v),
// clip negative eigenvalues, rescale to trace one, then Gaussian-round.
inline SosRoundingOutcome round_sos(const ProblemInstance& inst, const MomentVector& m, int trials,
                                    long samples_per_trial, const RngStream& rng, const SampleSink& sink = {}) {
  if (m.k < 1) throw InvalidInput("round_sos: k must be >= 1");
  if (trials < 1 || samples_per_trial < 1) throw InvalidInput("round_sos: trials and samples must be >= 1");
  require_same_field(inst.field(), m.field, "round_sos");
  if (m.n != inst.n()) throw InvalidInput("round_sos: dimension mismatch");
  SosRoundingOutcome out;
  RoundingAccumulator pooled;
  for (int t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.substream(static_cast<std::uint64_t>(t));
    const Vec v = sample_sphere_uniform(inst.n(), inst.field(), trial_rng);
    const auto sd = eigh(rounding_moment(m, v));
    RVec ev = sd.eigenvalues.cwiseMax(0.0);
    const double tr = ev.sum();
    if (!(tr > 1e-14)) {
      ++out.degenerate_trials;
      continue;
    }
    ev /= tr;
    Mat factor = sd.basis * ev.cwiseSqrt().cast<cplx>().asDiagonal();
    RoundingAccumulator acc;
    detail::round_with_factor(inst, factor, samples_per_trial, trial_rng, acc, sink);
    if (acc.count() > 0 && (out.best_trial < 0 || acc.mean() > out.best_trial_mean)) {
      out.best_trial_mean = acc.mean();
      out.best_trial = t;
    }
    pooled.merge(acc);
    ++out.trials_used;
  }
  if (out.trials_used == 0) throw DegenerateMoments("round_sos: every M(v) was numerically zero");
  out.pooled = pooled.outcome();
  return out;
}

// --- serialization ----------------------------------------------------------

inline std::string multi_index_key(const MultiIndex& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(a[i]);
  }
  return s;
}

inline MultiIndex parse_multi_index(const std::string& s, int n) {
  MultiIndex out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(part, &used));
      if (used != part.size()) throw ParseError("bad multi-index '" + s + "'");
    } catch (const std::logic_error&) {
      throw ParseError("bad multi-index '" + s + "'");
    }
  }
  if (static_cast<int>(out.size()) != n) throw ParseError("multi-index '" + s + "' has wrong length");
  return out;
}

// {"n", "k", "field", "moments": {...}}. Real keys are degree-2k multi-indices
// "a1,...,an" with numeric values; complex keys are "a;b" pairs of degree-k
// multi-indices with [re, im] values of pEx[conj(x)^a x^b].
inline std::string serialize_moments(const MomentVector& m) {
  const auto sp = m.space();
  nlohmann::json j;
  j["n"] = m.n;
  j["k"] = m.k;
  j["field"] = to_string(m.field);
  nlohmann::json mom = nlohmann::json::object();
  if (m.field == FieldTag::Real) {
    for (int i = 0; i < sp.full_basis().size(); ++i) mom[multi_index_key(sp.full_basis()[i])] = m.values(i);
  } else {
    const Mat h = sp.matrix(m.values);
    const auto& b = sp.basis();
    for (int r = 0; r < b.size(); ++r)
      for (int c = 0; c < b.size(); ++c)
        mom[multi_index_key(b[r]) + ";" + multi_index_key(b[c])] = {h(r, c).real(), h(r, c).imag()};
  }
  j["moments"] = std::move(mom);
  return j.dump(1);
}

inline MomentVector parse_moments(const std::string& text) {
  const auto j = detail::parse_json_text(text);
  for (const char* key : {"n", "k", "field", "moments"})
    if (!j.contains(key)) throw ParseError(std::string("moments: missing \"") + key + "\"");
  if (!j["n"].is_number_integer() || !j["k"].is_number_integer()) throw ParseError("moments: n and k must be integers");
  const int n = j["n"].get<int>();
  const int k = j["k"].get<int>();
  if (n < 1 || k < 1) throw ParseError("moments: need n >= 1 and k >= 1");
  const FieldTag field = parse_field(j["field"].get<std::string>());
  MomentSpace sp(n, k, field);
  MomentVector m{field, n, k, RVec::Zero(sp.dim())};
  const auto& mom = j["moments"];
  if (!mom.is_object()) throw ParseError("moments: \"moments\" must be an object");
  if (field == FieldTag::Real) {
    for (auto it = mom.begin(); it != mom.end(); ++it) {
      const int pos = sp.full_basis().position(parse_multi_index(it.key(), n));
      if (pos < 0) throw ParseError("moments: key '" + it.key() + "' is not of degree 2k");
      if (!it.value().is_number()) throw ParseError("moments: value for '" + it.key() + "' must be a number");
      m.values(pos) = it.value().get<double>();
    }
  } else {
    const auto& b = sp.basis();
    Mat h = Mat::Zero(b.size(), b.size());
    for (auto it = mom.begin(); it != mom.end(); ++it) {
      const auto sep = it.key().find(';');
      if (sep == std::string::npos) throw ParseError("moments: complex key '" + it.key() + "' must be 'a;b'");
      const int r = b.position(parse_multi_index(it.key().substr(0, sep), n));
      const int c = b.position(parse_multi_index(it.key().substr(sep + 1), n));
      if (r < 0 || c < 0) throw ParseError("moments: key '" + it.key() + "' is not of degree k");
      const auto& v = it.value();
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ParseError("moments: complex value must be [re, im]");
      h(r, c) = cplx(v[0].get<double>(), v[1].get<double>());
    }
    if (max_norm(h - h.adjoint()) > 1e-10 * std::max(1.0, max_norm(h))) throw InvalidInput("moments: matrix is not Hermitian");
    m.values = sp.coordinates_of((h + h.adjoint()) / 2.0);
  }
  validate_moments(m);
  return m;
}

}  // namespace geomean
