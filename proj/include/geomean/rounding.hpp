#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include "geomean/field.hpp"
#include "geomean/instance.hpp"
#include "geomean/linalg.hpp"
#include "geomean/rng.hpp"
#include "geomean/sdp.hpp"
#include "geomean/special.hpp"

namespace geomean {

struct RoundingOutcome {
  Vec best_vector;
  double best_value = -std::numeric_limits<double>::infinity();
  double empirical_mean = 0.0;
  double empirical_stderr = 0.0;
  long samples_used = 0;
  long skipped = 0;  // samples with norm below 1e-12
};

// Called once per accepted sample with the normalized vector and its value.
using SampleSink = std::function<void(const Vec&, double)>;

// Running mean and variance (Welford) plus the best sample.
class RoundingAccumulator {
 public:
  void add(const Vec& y, double value) {
    ++count_;
    const double delta = value - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (value - mean_);
    if (value > best_value_) {
      best_value_ = value;
      best_ = y;
    }
  }
  void skip() { ++skipped_; }

  void merge(const RoundingAccumulator& o) {
    if (o.count_ == 0) {
      skipped_ += o.skipped_;
      return;
    }
    const long n = count_ + o.count_;
    const double delta = o.mean_ - mean_;
    mean_ += delta * static_cast<double>(o.count_) / static_cast<double>(n);
    m2_ += o.m2_ + delta * delta * static_cast<double>(count_) * static_cast<double>(o.count_) / static_cast<double>(n);
    count_ = n;
    skipped_ += o.skipped_;
    if (o.best_value_ > best_value_) {
      best_value_ = o.best_value_;
      best_ = o.best_;
    }
  }

  long count() const { return count_; }
  double mean() const { return mean_; }

  RoundingOutcome outcome() const {
    RoundingOutcome out;
    out.best_vector = best_;
    out.best_value = best_value_;
    out.empirical_mean = mean_;
    out.samples_used = count_;
    out.skipped = skipped_;
    out.empirical_stderr = count_ > 1 ? std::sqrt(m2_ / static_cast<double>(count_ - 1) / static_cast<double>(count_)) : 0.0;
    return out;
  }

 private:
  long count_ = 0;
  long skipped_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double best_value_ = -std::numeric_limits<double>::infinity();
  Vec best_;
};

namespace detail {

// Draws x = U z, normalizes, evaluates; accumulates into acc.
inline void round_with_factor(const ProblemInstance& inst, const Mat& factor, long samples, RngStream& rng,
                              RoundingAccumulator& acc, const SampleSink& sink) {
  for (long s = 0; s < samples; ++s) {
    Vec x = factor.cols() == 0 ? Vec::Zero(inst.n()) : Vec(factor * standard_gaussian(factor.cols(), inst.field(), rng));
    const double nrm = x.norm();
    if (nrm < 1e-12) {
      acc.skip();
      continue;
    }
    x /= nrm;
    const double v = geometric_mean(form_values(inst, x));
    acc.add(x, v);
    if (sink) sink(x, v);
  }
}

}  // namespace detail

// Samples x ~ N_K(0, X), returns y = x/|x| statistics of the objective.
inline RoundingOutcome round_gaussian(const ProblemInstance& inst, const DensityMatrix& x, long samples, RngStream& rng,
                                      const SampleSink& sink = {}) {
  if (samples < 1) throw InvalidInput("round_gaussian: samples must be >= 1");
  require_same_field(inst.field(), x.field(), "round_gaussian");
  if (x.n() != inst.n()) throw InvalidInput("round_gaussian: dimension mismatch");
  const auto g = detail::psd_factor(x.matrix(), 1e-10, "round_gaussian");
  RoundingAccumulator acc;
  detail::round_with_factor(inst, g.factor, samples, rng, acc, sink);
  return acc.outcome();
}

// e^{-L_r(K)}.
inline double approx_factor(int rank, FieldTag field) { return std::exp(-loss_constant(field, rank)); }

struct RoundingVerdict {
  double empirical_mean = 0.0;
  double stderr_ = 0.0;
  double threshold = 0.0;
  double margin = 0.0;
  int rank = 0;
  bool pass = false;
  RoundingOutcome outcome;
};

// Empirical check of E[objective] >= e^{-L_r} * OptSDP with a 3-standard-error
// margin. The 1e-12 relative slack absorbs rounding in the rank-one equality case.
inline RoundingVerdict check_rounding_guarantee(const ProblemInstance& inst, const SolveReport& report, long samples,
                                                RngStream& rng) {
  RoundingVerdict v;
  v.outcome = round_gaussian(inst, report.solution, samples, rng);
  v.rank = gram_factor(report.solution).rank;
  v.empirical_mean = v.outcome.empirical_mean;
  v.stderr_ = v.outcome.empirical_stderr;
  v.threshold = approx_factor(std::max(v.rank, 1), inst.field()) * report.value;
  v.margin = v.empirical_mean - v.threshold;
  v.pass = v.margin >= -3.0 * v.stderr_ - 1e-12 * v.threshold;
  return v;
}

inline void write_sample_csv_header(std::ostream& os, Eigen::Index n, FieldTag field) {
  for (Eigen::Index i = 1; i <= n; ++i) {
    if (field == FieldTag::Real) {
      os << "x_" << i << ',';
    } else {
      os << "re_" << i << ",im_" << i << ',';
    }
  }
  os << "value\n";
}

inline void write_sample_csv_row(std::ostream& os, const Vec& y, FieldTag field, double value) {
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    os << y(i).real() << ',';
    if (field == FieldTag::Complex) os << y(i).imag() << ',';
  }
  os << value << '\n';
}

// Sink that streams samples as CSV rows in draw order.
inline SampleSink csv_sink(std::ostream& os, FieldTag field) {
  return [&os, field](const Vec& y, double v) { write_sample_csv_row(os, y, field, v); };
}

}  // namespace geomean
