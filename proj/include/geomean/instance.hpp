#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "geomean/errors.hpp"
#include "geomean/field.hpp"
#include "geomean/linalg.hpp"
#include "geomean/rng.hpp"

namespace geomean {

// An ordered list of d >= 1 nonzero PSD forms A_1..A_d on K^n.
class ProblemInstance {
 public:
  ProblemInstance(FieldTag field, std::vector<HermitianMatrix> forms) : field_(field), forms_(std::move(forms)) {
    if (forms_.empty()) throw InvalidInput("instance needs at least one form");
    n_ = forms_.front().n();
    for (std::size_t i = 0; i < forms_.size(); ++i) {
      const auto& a = forms_[i];
      const std::string tag = "form " + std::to_string(i);
      if (a.n() != n_) throw InvalidInput(tag + ": dimension mismatch");
      require_same_field(a.field(), field_, tag.c_str());
      const auto ev = eigh(a).eigenvalues;
      const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
      if (scale == 0.0) throw InvalidInput(tag + ": form is identically zero");
      if (ev(ev.size() - 1) < -1e-10 * scale)
        throw NotPSD(tag + ": not PSD (min eigenvalue " + std::to_string(ev(ev.size() - 1)) + ")");
    }
  }

  FieldTag field() const { return field_; }
  Eigen::Index n() const { return n_; }
  std::size_t d() const { return forms_.size(); }
  const std::vector<HermitianMatrix>& forms() const { return forms_; }
  const HermitianMatrix& form(std::size_t i) const { return forms_.at(i); }

 private:
  FieldTag field_;
  Eigen::Index n_ = 0;
  std::vector<HermitianMatrix> forms_;
};

// Values <x, A_i x> without the unit-norm check.
inline std::vector<double> form_values(const ProblemInstance& inst, const Vec& x) {
  std::vector<double> v;
  v.reserve(inst.d());
  for (const auto& a : inst.forms()) v.push_back(a.quad(x));
  return v;
}

// Geometric mean of the form values; 0 if any value is non-positive.
inline double geometric_mean(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) return 0.0;
    s += std::log(v);
  }
  return std::exp(s / static_cast<double>(values.size()));
}

inline double evaluate(const ProblemInstance& inst, const Vec& x) {
  if (x.size() != inst.n()) throw InvalidInput("evaluate: dimension mismatch");
  if (std::abs(x.norm() - 1.0) > 1e-9) throw InvalidInput("evaluate: x is not a unit vector");
  return geometric_mean(form_values(inst, x));
}

// --- generators -------------------------------------------------------------

inline ProblemInstance gen_rank_one(const std::vector<Vec>& vectors, const std::vector<double>& scales,
                                    FieldTag field) {
  if (vectors.empty()) throw InvalidInput("gen_rank_one: no vectors");
  if (!scales.empty() && scales.size() != vectors.size())
    throw InvalidInput("gen_rank_one: scale count does not match vector count");
  std::vector<HermitianMatrix> forms;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double nrm = vectors[i].norm();
    if (nrm == 0.0) throw InvalidInput("gen_rank_one: zero vector " + std::to_string(i));
    if (std::abs(nrm - 1.0) > 1e-9) throw InvalidInput("gen_rank_one: vector " + std::to_string(i) + " is not unit");
    const double c = scales.empty() ? 1.0 : scales[i];
    if (!(c > 0.0)) throw InvalidInput("gen_rank_one: scale must be positive");
    forms.push_back(HermitianMatrix(c * vectors[i] * vectors[i].adjoint(), field));
  }
  return ProblemInstance(field, std::move(forms));
}

inline ProblemInstance gen_random_rank_one(Eigen::Index n, std::size_t d, FieldTag field, RngStream& rng) {
  if (n < 1 || d < 1) throw InvalidInput("gen_random_rank_one: n and d must be >= 1");
  std::vector<Vec> vs;
  vs.reserve(d);
  for (std::size_t i = 0; i < d; ++i) vs.push_back(sample_sphere_uniform(n, field, rng));
  return gen_rank_one(vs, {}, field);
}

inline ProblemInstance gen_monomial(const std::vector<int>& beta) {
  if (beta.empty()) throw InvalidInput("gen_monomial: empty exponent");
  int d = 0;
  for (int b : beta) {
    if (b < 0) throw InvalidInput("gen_monomial: negative exponent");
    d += b;
  }
  if (d < 1) throw InvalidInput("gen_monomial: all-zero exponent");
  const auto n = static_cast<Eigen::Index>(beta.size());
  std::vector<HermitianMatrix> forms;
  for (Eigen::Index i = 0; i < n; ++i) {
    RVec e = RVec::Zero(n);
    e(i) = 1.0;
    for (int c = 0; c < beta[i]; ++c) forms.push_back(HermitianMatrix::diagonal(e));
  }
  return ProblemInstance(FieldTag::Real, std::move(forms));
}

// (A, A^{-1}) for positive definite A.
inline ProblemInstance gen_kantorovich(const HermitianMatrix& a) {
  const auto sd = eigh(a);
  const double top = sd.eigenvalues(0);
  const double bottom = sd.eigenvalues(sd.eigenvalues.size() - 1);
  if (!(top > 0.0) || bottom <= 1e-10 * top) throw NotPositiveDefinite("gen_kantorovich: A is not positive definite");
  const RVec inv = sd.eigenvalues.cwiseInverse();
  Mat ainv = sd.basis * inv.cast<cplx>().asDiagonal() * sd.basis.adjoint();
  return ProblemInstance(a.field(), {a, HermitianMatrix(ainv, a.field())});
}

inline double golden_ratio() { return (1.0 + std::sqrt(5.0)) / 2.0; }

// Six rank-one forms whose product is p_ico(x,y,z); the normalizing constant is
// split equally across the forms.
inline ProblemInstance gen_icosahedral() {
  const double phi = golden_ratio();
  const double c = std::pow(25.0 * (2.0 * phi - 3.0) * (2.0 * phi - 3.0), 1.0 / 6.0);
  const double w[6][3] = {{1, phi, 0}, {1, -phi, 0}, {0, 1, phi}, {0, 1, -phi}, {phi, 0, 1}, {-phi, 0, 1}};
  std::vector<HermitianMatrix> forms;
  for (const auto& row : w) {
    RVec v(3);
    v << row[0], row[1], row[2];
    forms.push_back(HermitianMatrix::from_real(c * v * v.transpose()));
  }
  return ProblemInstance(FieldTag::Real, std::move(forms));
}

// Undirected simple graph with unit weights, 0-based vertices.
struct GraphSpec {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  GraphSpec() = default;
  GraphSpec(int n_, std::vector<std::pair<int, int>> e) : n(n_), edges(std::move(e)) { validate(); }

  void validate() const {
    if (n < 1) throw InvalidInput("graph: n must be >= 1");
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n) throw InvalidInput("graph: vertex out of range");
      if (u == v) throw InvalidInput("graph: self-loop at " + std::to_string(u));
      if (!seen.insert({std::min(u, v), std::max(u, v)}).second)
        throw InvalidInput("graph: duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
    }
  }

  std::vector<int> degrees() const {
    std::vector<int> deg(n, 0);
    for (auto [u, v] : edges) {
      ++deg[u];
      ++deg[v];
    }
    return deg;
  }

  bool is_regular(int k) const {
    const auto deg = degrees();
    return std::all_of(deg.begin(), deg.end(), [k](int x) { return x == k; });
  }

  RMat adjacency() const {
    RMat a = RMat::Zero(n, n);
    for (auto [u, v] : edges) a(u, v) = a(v, u) = 1.0;
    return a;
  }

  static GraphSpec complete4() { return GraphSpec(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }

  // Triangular prism K3 x K2.
  static GraphSpec prism() {
    return GraphSpec(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {0, 3}, {1, 4}, {2, 5}});
  }
};

// Q_G = (I - A/3)/2 for a 3-regular graph.
inline HermitianMatrix maxcut_matrix(const GraphSpec& g) {
  if (!g.is_regular(3)) throw InvalidInput("maxcut: graph is not 3-regular");
  const RMat q = 0.5 * (RMat::Identity(g.n, g.n) - g.adjacency() / 3.0);
  return HermitianMatrix::from_real(q);
}

// Q_G followed by k copies of n e_i e_i^T for each coordinate i; d = nk + 1.
inline ProblemInstance gen_maxcut(const GraphSpec& g, int k) {
  if (k < 1) throw InvalidInput("gen_maxcut: k must be >= 1");
  g.validate();
  std::vector<HermitianMatrix> forms{maxcut_matrix(g)};
  for (int i = 0; i < g.n; ++i) {
    RVec e = RVec::Zero(g.n);
    e(i) = static_cast<double>(g.n);
    for (int c = 0; c < k; ++c) forms.push_back(HermitianMatrix::diagonal(e));
  }
  return ProblemInstance(FieldTag::Real, std::move(forms));
}

// --- serialization ----------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_rows(const RMat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline RMat parse_rows(const nlohmann::json& j, Eigen::Index n, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw ParseError(where + ": expected " + std::to_string(n) + " rows");
  RMat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw ParseError(where + ": row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
    for (Eigen::Index c = 0; c < n; ++c) {
      if (!row[c].is_number()) throw ParseError(where + ": non-numeric entry");
      m(i, c) = row[c].get<double>();
    }
  }
  return m;
}

inline nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

inline nlohmann::json matrix_to_json(const HermitianMatrix& a) {
  nlohmann::json j;
  j["re"] = detail::matrix_rows(a.mat().real());
  if (a.field() == FieldTag::Complex) j["im"] = detail::matrix_rows(a.mat().imag());
  return j;
}

// Reads {"re": ..., "im": ...}; the input must be self-adjoint up to 1e-10 relative.
inline HermitianMatrix matrix_from_json(const nlohmann::json& j, Eigen::Index n, FieldTag field,
                                        const std::string& where) {
  if (!j.is_object() || !j.contains("re")) throw ParseError(where + ": missing \"re\"");
  const RMat re = detail::parse_rows(j["re"], n, where + ".re");
  RMat im = RMat::Zero(n, n);
  if (j.contains("im")) {
    if (field == FieldTag::Real) throw ParseError(where + ": \"im\" given for a real instance");
    im = detail::parse_rows(j["im"], n, where + ".im");
  }
  Mat m(n, n);
  m.real() = re;
  m.imag() = im;
  const double scale = std::max(1.0, max_norm(m));
  if (max_norm(m - m.adjoint()) > 1e-10 * scale)
    throw InvalidInput(where + ": matrix is not " + (field == FieldTag::Real ? "symmetric" : "Hermitian"));
  return HermitianMatrix(m, field);
}

inline std::string serialize_instance(const ProblemInstance& inst) {
  nlohmann::json j;
  j["field"] = to_string(inst.field());
  j["n"] = inst.n();
  j["forms"] = nlohmann::json::array();
  for (const auto& a : inst.forms()) j["forms"].push_back(matrix_to_json(a));
  return j.dump(1);
}

inline ProblemInstance parse_instance(const std::string& text) {
  const auto j = detail::parse_json_text(text);
  if (!j.is_object()) throw ParseError("instance: top level must be an object");
  for (const char* key : {"field", "n", "forms"})
    if (!j.contains(key)) throw ParseError(std::string("instance: missing \"") + key + "\"");
  if (!j["field"].is_string()) throw ParseError("instance: \"field\" must be a string");
  const FieldTag field = parse_field(j["field"].get<std::string>());
  if (!j["n"].is_number_integer() || j["n"].get<long>() < 1) throw ParseError("instance: \"n\" must be a positive integer");
  const auto n = static_cast<Eigen::Index>(j["n"].get<long>());
  if (!j["forms"].is_array() || j["forms"].empty()) throw ParseError("instance: \"forms\" must be a non-empty array");
  std::vector<HermitianMatrix> forms;
  for (std::size_t i = 0; i < j["forms"].size(); ++i)
    forms.push_back(matrix_from_json(j["forms"][i], n, field, "form " + std::to_string(i)));
  return ProblemInstance(field, std::move(forms));
}

inline std::string serialize_graph(const GraphSpec& g) {
  nlohmann::json j;
  j["n"] = g.n;
  j["edges"] = nlohmann::json::array();
  for (auto [u, v] : g.edges) j["edges"].push_back({u, v});
  return j.dump();
}

inline GraphSpec parse_graph(const std::string& text) {
  const auto j = detail::parse_json_text(text);
  if (!j.is_object() || !j.contains("n") || !j.contains("edges")) throw ParseError("graph: expected {\"n\", \"edges\"}");
  if (!j["n"].is_number_integer()) throw ParseError("graph: \"n\" must be an integer");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ParseError("graph: each edge must be [u, v]");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return GraphSpec(j["n"].get<int>(), std::move(edges));
}

}  // namespace geomean
