#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace geomean;
using namespace testing_support;

namespace {

ProblemInstance complex_monomial(const std::vector<int>& beta) {
  const auto real = gen_monomial(beta);
  std::vector<HermitianMatrix> forms;
  for (const auto& a : real.forms()) forms.push_back(HermitianMatrix(a.mat(), FieldTag::Complex));
  return ProblemInstance(FieldTag::Complex, std::move(forms));
}

}  // namespace

TEST(Basis, OrderAndCounts) {
  MonomialBasis b(3, 2);
  ASSERT_EQ(b.size(), 6);
  EXPECT_EQ(b[0], (MultiIndex{2, 0, 0}));
  EXPECT_EQ(b[1], (MultiIndex{1, 1, 0}));
  EXPECT_EQ(b[5], (MultiIndex{0, 0, 2}));
  for (int i = 0; i < b.size(); ++i) EXPECT_EQ(b.position(b[i]), i);
  EXPECT_EQ(b.position({1, 0, 0}), -1);
  EXPECT_EQ(MonomialBasis(4, 3).size(), binomial(6, 3));
  EXPECT_EQ(binomial(10, 3), 120.0);
  EXPECT_EQ(binomial(3, 5), 0.0);
  EXPECT_EQ(multinomial({2, 1}), 3.0);
  EXPECT_EQ(multinomial({2, 2, 1}), 30.0);
  EXPECT_EQ(add_indices({1, 0}, {0, 2}), (MultiIndex{1, 2}));
  EXPECT_EQ(add_unit({1, 0}, 1), (MultiIndex{1, 1}));
}

TEST(MomentSpace, RealCoordinatesAreTheDegree2kMoments) {
  MomentSpace sp(3, 2, FieldTag::Real);
  EXPECT_EQ(sp.dim(), 15);
  EXPECT_EQ(sp.matrix_size(), 6);
  EXPECT_EQ(sp.blocks().size(), 1u);
}

TEST(MomentSpace, PointMomentsAreRankOneAndNormalized) {
  RngStream rng(41);
  for (FieldTag f : {FieldTag::Real, FieldTag::Complex})
    for (int k : {1, 2, 3}) {
      const Vec x = sample_sphere_uniform(3, f, rng);
      const auto m = point_moments(x, k, f);
      EXPECT_NEAR(moment_normalization(m), 1.0, 1e-12);
      EXPECT_NO_THROW(validate_moments(m));
      const auto ev = eigh(moment_matrix(m)).eigenvalues;
      EXPECT_GT(ev(0), 0.0);
      if (ev.size() > 1) EXPECT_LE(std::abs(ev(1)), 1e-12 * ev(0));
      EXPECT_GE(m.space().min_eigenvalue(m.values), -1e-12);
    }
}

TEST(MomentSpace, UniformMomentsMatchSampling) {
  RngStream rng(42);
  for (FieldTag f : {FieldTag::Real, FieldTag::Complex}) {
    const auto u = uniform_moments(3, 2, f);
    EXPECT_NEAR(moment_normalization(u), 1.0, 1e-12);
    EXPECT_NO_THROW(validate_moments(u));
    RVec acc = RVec::Zero(u.values.size());
    const int samples = 100000;
    for (int s = 0; s < samples; ++s) acc += point_moments(sample_sphere_uniform(3, f, rng), 2, f).values;
    acc /= samples;
    EXPECT_LE((acc - u.values).cwiseAbs().maxCoeff(), 0.01) << to_string(f);
  }
}

TEST(MomentSpace, DensityRoundTrip) {
  RngStream rng(43);
  const auto x = DensityMatrix(random_psd(3, 2, FieldTag::Complex, rng));
  const auto m = moments_from_density(x);
  EXPECT_EQ(m.k, 1);
  EXPECT_LE(max_norm(density_from_moments(m).matrix().mat() - x.matrix().mat()), 1e-15);
  EXPECT_THROW(density_from_moments(uniform_moments(3, 2, FieldTag::Complex)), InvalidInput);
}

TEST(MomentSpace, ValidationRejectsBadVectors) {
  auto m = uniform_moments(2, 2, FieldTag::Real);
  m.values *= 2.0;
  EXPECT_THROW(validate_moments(m), InvalidInput);
  auto short_m = uniform_moments(2, 2, FieldTag::Real);
  short_m.values.conservativeResize(2);
  EXPECT_THROW(validate_moments(short_m), InvalidInput);
  // x^4 + y^4 - moments of a "distribution" with negative x^2 y^2 mass.
  MomentSpace sp(2, 2, FieldTag::Real);
  RVec bad = RVec::Zero(sp.dim());
  bad(0) = 1.0;
  bad(4) = 1.0;
  bad(2) = -0.5;
  bad /= sp.normalization().dot(bad);
  EXPECT_THROW(validate_moments({FieldTag::Real, 2, 2, bad}), NotPSD);
}

// A complex Hermitian moment matrix that is PSD but violates the |alpha| = 1 block.
TEST(MomentSpace, ComplexValidityUsesEveryBlock) {
  MomentSpace sp(2, 2, FieldTag::Complex);
  EXPECT_EQ(sp.blocks().size(), 2u);
  // pEx[|x1|^4] = pEx[|x2|^4] = 1/2, pEx[|x1 x2|^2] = 0 and the coherence term
  // pEx[conj(x1)^2 x2^2] = 1/2. H is PSD, block 1 is not.
  Mat h = Mat::Zero(3, 3);
  h(0, 0) = 0.5;
  h(2, 2) = 0.5;
  h(0, 2) = h(2, 0) = 0.5;
  const RVec m = sp.coordinates_of(h);
  EXPECT_GE(eigh(HermitianMatrix(sp.matrix(m), FieldTag::Complex)).eigenvalues(2), -1e-15);
  EXPECT_LT(sp.min_eigenvalue(m), -0.1);
}

TEST(ProductForms, PointEvaluation) {
  RngStream rng(44);
  for (FieldTag f : {FieldTag::Real, FieldTag::Complex}) {
    const auto inst = random_psd_instance(3, 4, 2, f, rng);
    const Vec x = sample_sphere_uniform(3, f, rng);
    for (int k : {1, 2, 3}) {
      const auto m = point_moments(x, k, f);
      for (const auto& subset : k_subsets(4, k)) {
        double expect = 1.0;
        for (int i : subset) expect *= inst.form(i).quad(x);
        EXPECT_NEAR(product_form_functional(inst, subset).apply(m), expect, 1e-12);
      }
    }
  }
  const auto inst = gen_monomial({1, 1});
  EXPECT_THROW(product_form_functional(inst, {0, 5}), InvalidInput);
}

TEST(Subsets, Enumeration) {
  const auto s = k_subsets(5, 3);
  ASSERT_EQ(s.size(), 10u);
  EXPECT_EQ(s.front(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(s.back(), (std::vector<int>{2, 3, 4}));
  EXPECT_TRUE(k_subsets(3, 4).empty());
}

TEST(ElementarySymmetric, MatchesBruteForceAndMaclaurin) {
  RngStream rng(45);
  std::vector<double> v;
  for (int i = 0; i < 7; ++i) v.push_back(0.1 + 2.0 * rng.uniform());
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 7; ++k) {
    double sum = 0.0;
    const auto subsets = k_subsets(7, k);
    for (const auto& s : subsets) {
      double p = 1.0;
      for (int i : s) p *= v[i];
      sum += p;
    }
    const double e = elementary_symmetric(v, k);
    EXPECT_NEAR(e, sum / subsets.size(), 1e-12 * e);
    const double root = std::pow(e, 1.0 / k);
    EXPECT_LE(root, prev * (1 + 1e-14));
    prev = root;
  }
  EXPECT_EQ(elementary_symmetric(v, 0), 1.0);
  EXPECT_THROW(elementary_symmetric(v, 8), InvalidInput);
}

TEST(OptSos, LevelOneMatchesTheSdp) {
  for (const auto& [name, inst] : regression_suite()) {
    if (inst.d() > 8) continue;
    const auto sdp = solve_optsdp(inst);
    const auto sos = solve_optsos(inst, 1);
    EXPECT_TRUE(sos.converged) << name;
    EXPECT_NEAR(sos.value, sdp.value, 2e-6 * sdp.value) << name;
    EXPECT_LE(sos.value, sos.upper * (1 + 1e-12)) << name;
  }
}

TEST(OptSos, IcosahedralLevels) {
  const auto ico = gen_icosahedral();
  const double expect[] = {1.274540819, 1.168135956, 1.102923565, 1.058212417};
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 4; ++k) {
    const auto rep = solve_optsos(ico, k);
    EXPECT_TRUE(rep.converged) << "k=" << k;
    EXPECT_NEAR(rep.value, expect[k - 1], 2e-6 * expect[k - 1]) << "k=" << k;
    EXPECT_GE(rep.value, 1.0);
    EXPECT_LT(rep.value, prev);
    EXPECT_GE(rep.min_moment_eigenvalue, -1e-9);
    prev = rep.value;
  }
}

TEST(OptSos, BoundsTheOptimumAndDecreases) {
  RngStream rng(46);
  std::vector<ProblemInstance> cases{gen_monomial({2, 1, 1}), complex_monomial({1, 1, 1}),
                                     random_psd_instance(3, 4, 1, FieldTag::Real, rng),
                                     random_psd_instance(2, 4, 2, FieldTag::Complex, rng)};
  for (const auto& inst : cases) {
    auto r = rng.substream("oracle");
    const double opt = local_max_sphere(inst, 64, r).best_value;
    double first = 0.0;
    for (int k = 1; k <= static_cast<int>(inst.d()); ++k) {
      const auto rep = solve_optsos(inst, k);
      EXPECT_TRUE(rep.converged) << "k=" << k;
      EXPECT_GE(rep.upper, opt * (1 - 1e-9)) << "k=" << k;
      if (k == 1) first = rep.value;
      EXPECT_LE(rep.value, first * (1 + 1e-6)) << "k=" << k;
    }
  }
}

TEST(OptSos, ComplexMonomialIsExactAtEveryLevel) {
  const auto inst = complex_monomial({1, 1, 1});
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(solve_optsos(inst, k).value, 1.0 / 3.0, 1e-6) << "k=" << k;
}

TEST(OptSos, RandomComplexPlaneInstancesAreTight) {
  RngStream rng(47);
  const auto inst = gen_random_rank_one(2, 5, FieldTag::Complex, rng);
  const double sdp = solve_optsdp(inst).value;
  const double orc = local_max_sphere(inst, 64, rng).best_value;
  EXPECT_NEAR(sdp, orc, 2e-6 * orc);
  for (int k : {2, 3}) EXPECT_NEAR(solve_optsos(inst, k).value, orc, 2e-6 * orc) << "k=" << k;
}

TEST(Srel, DominatesOptSosAndMeetsItAtFullLevel) {
  RngStream rng(48);
  const auto inst = random_psd_instance(3, 4, 1, FieldTag::Real, rng);
  for (int k = 1; k <= 4; ++k) {
    const auto s = solve_srel(inst, k);
    const auto o = solve_optsos(inst, k);
    EXPECT_TRUE(s.converged);
    EXPECT_GE(s.value, o.value * (1 - 2e-6)) << "k=" << k;
    if (k == 4) EXPECT_NEAR(s.value, o.value, 2e-6 * o.value);
  }
}

TEST(OptSos, LevelGuards) {
  const auto inst = gen_monomial({1, 1});
  EXPECT_THROW(solve_optsos(inst, 0), InvalidInput);
  EXPECT_THROW(solve_optsos(inst, 3), InvalidInput);
  std::vector<HermitianMatrix> many(40, HermitianMatrix::identity(2));
  EXPECT_THROW(solve_optsos(ProblemInstance(FieldTag::Real, many), 10), TooManySubsets);
}

TEST(RoundingMoment, LevelOneIsTheDensity) {
  RngStream rng(49);
  const DensityMatrix x(random_psd(3, 3, FieldTag::Complex, rng));
  const auto m = moments_from_density(x);
  const Vec v = sample_sphere_uniform(3, FieldTag::Complex, rng);
  EXPECT_LE(max_norm(rounding_moment(m, v).mat() - x.matrix().mat()), 1e-15);
}

TEST(RoundingMoment, PointMoments) {
  RngStream rng(50);
  for (FieldTag f : {FieldTag::Real, FieldTag::Complex}) {
    const Vec x = sample_sphere_uniform(3, f, rng);
    const Vec v = sample_sphere_uniform(3, f, rng);
    for (int k : {2, 3}) {
      const auto mv = rounding_moment(point_moments(x, k, f), v);
      const Mat expect = std::pow(std::norm(v.dot(x)), k - 1) * (x * x.adjoint());
      EXPECT_LE(max_norm(mv.mat() - expect), 1e-13) << to_string(f) << " k=" << k;
    }
  }
}

TEST(SosRounding, ExactPointMomentsReturnThePoint) {
  RngStream rng(51);
  const auto inst = random_psd_instance(3, 4, 2, FieldTag::Complex, rng);
  const Vec x = sample_sphere_uniform(3, FieldTag::Complex, rng);
  const auto out = round_sos(inst, point_moments(x, 2, FieldTag::Complex), 8, 50, rng);
  // Clipped O(1e-16) eigenvalues of M(v) enter the samples through their square roots.
  EXPECT_NEAR(out.pooled.empirical_mean, evaluate(inst, x), 1e-9 * evaluate(inst, x));
  EXPECT_EQ(out.trials_used, 8);
}

// Complex monomial (1,1,1): the relaxation is exact, so the pooled mean must clear
// e^{-C(3,k)} Opt.
TEST(SosRounding, ComplexGuaranteeOnAnExactInstance) {
  const auto inst = complex_monomial({1, 1, 1});
  const RngStream root(52);
  for (int k : {2, 3}) {
    const auto rep = solve_optsos(inst, k);
    const auto out = round_sos(inst, rep.moments, 64, 2000, root.substream(static_cast<std::uint64_t>(k)));
    const double threshold = std::exp(-rounding_constant(3, k)) * rep.value;
    EXPECT_GE(out.pooled.empirical_mean, threshold - 3.0 * out.pooled.empirical_stderr) << "k=" << k;
    EXPECT_LE(out.pooled.best_value, 1.0 / 3.0 + 1e-12);
  }
}

TEST(SosRounding, DeterministicAndGuarded) {
  const auto ico = gen_icosahedral();
  const auto m = uniform_moments(3, 2, FieldTag::Real);
  const RngStream rng(53);
  const auto a = round_sos(ico, m, 4, 100, rng);
  const auto b = round_sos(ico, m, 4, 100, rng);
  EXPECT_EQ(a.pooled.empirical_mean, b.pooled.empirical_mean);
  EXPECT_EQ(a.best_trial, b.best_trial);
  EXPECT_THROW(round_sos(ico, m, 0, 100, rng), InvalidInput);
  EXPECT_THROW(round_sos(ico, uniform_moments(3, 2, FieldTag::Complex), 4, 100, rng), InvalidInput);
  MomentVector zero = m;
  zero.values.setZero();
  EXPECT_THROW(round_sos(ico, zero, 4, 100, rng), DegenerateMoments);
}

TEST(MomentsIO, RoundTrip) {
  RngStream rng(54);
  for (FieldTag f : {FieldTag::Real, FieldTag::Complex}) {
    const auto m = point_moments(sample_sphere_uniform(3, f, rng), 2, f);
    const auto back = parse_moments(serialize_moments(m));
    EXPECT_EQ(back.field, f);
    EXPECT_EQ(back.k, 2);
    EXPECT_LE((back.values - m.values).cwiseAbs().maxCoeff(), 1e-15);
  }
  EXPECT_THROW(parse_moments("[]"), ParseError);
}
