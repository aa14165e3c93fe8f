// Quasi-log-likelihood of the asymmetric-Laplace causal model:
//   L_n(theta) = sum_t q_t(theta),
//   q_t = log K_v(sqrt(2 Q_t)) + (v/2) log Q_t - (1/2) log det H_t,
// with H_t = M_t M_t', Q_t the squared Mahalanobis residual, v = 1 - p/2.
// Theta-free constants of the exact log-density are dropped; the constant
// needed to recover a normalized density in x_t is
//   const(p) = log 2 - (p/2) log(2 pi) - (v/2) log 2,
// i.e. exp(q_t + const(p)) integrates to one over x_t.
//
// Two window conventions: the "full" likelihood reads pre-observation lags
// from a caller-provided presample; the observable "truncated" likelihood
// zero-pads them. For finite-memory families the two differ in the first
// `memory` terms only.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "alqmle/bessel.hpp"
#include "alqmle/models.hpp"

namespace alqmle {

// Floor for the quadratic form: a zero residual would send q_t to +inf for
// p >= 2 (integrable density singularity). Clamped values are counted.
inline constexpr double kQuadFormFloor = 1e-12;

struct TermRecord {
  double q_form = 0.0;  // Q_t (pre-clamp)
  double logdet = 0.0;  // log det H_t
  double q_t = 0.0;     // likelihood contribution
};

struct LikelihoodEvaluation {
  double value = 0.0;
  bool truncated = false;
  long clamp_count = 0;
  std::vector<TermRecord> per_t;  // populated only when terms are kept
};

// The theta-free constant relating q_t to the normalized conditional
// log-density of x_t.
inline double loglik_density_constant(int p) {
  const double v = bessel_order_from_dimension(p);
  return std::log(2.0) - 0.5 * p * std::log(2.0 * M_PI) -
         0.5 * v * std::log(2.0);
}

// Evaluation context: extended buffer = [prefix rows | series], where the
// prefix is zeros (truncated) or the presample tail (full). Building it
// once lets an optimizer evaluate many thetas against the same data.
class LikelihoodProblem {
 public:
  // Truncated (zero-padded) convention.
  LikelihoodProblem(const ModelFamily& family, const SeriesMatrix& series)
      : family_(&family), truncated_(true) {
    init(series, SeriesMatrix::Zero(family.memory(), family.p()));
  }

  // Full convention: presample must supply at least `memory` rows; its
  // last rows stand in for X_0, X_{-1}, ...
  LikelihoodProblem(const ModelFamily& family, const SeriesMatrix& series,
                    const SeriesMatrix& presample)
      : family_(&family), truncated_(false) {
    if (presample.rows() < family.memory())
      throw std::invalid_argument(
          "likelihood: presample shorter than family memory");
    if (family.memory() > 0 && presample.cols() != family.p())
      throw std::invalid_argument("likelihood: presample dimension mismatch");
    init(series, presample.bottomRows(family.memory()));
  }

  Eigen::Index n() const { return n_; }
  bool truncated() const { return truncated_; }

  LikelihoodEvaluation evaluate(const Eigen::VectorXd& theta,
                                bool keep_terms = false) const {
    family_->check_theta(theta);
    const int p = family_->p();
    const int q = family_->memory();
    const double v = bessel_order_from_dimension(p);

    LikelihoodEvaluation out;
    out.truncated = truncated_;
    if (keep_terms) out.per_t.reserve(n_);

    Eigen::VectorXd f(p), resid(p);
    Eigen::MatrixXd m(p, p), h(p, p);
    Eigen::LLT<Eigen::MatrixXd> llt(p);

    for (Eigen::Index t = 0; t < n_; ++t) {
      const LagWindow window{&ext_, q + t};
      family_->eval(theta, window, f, m);
      h.noalias() = m * m.transpose();
      llt.compute(h);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "likelihood: H_t factorization failed at t=" +
            std::to_string(t + 1) + " (theta = " + theta_string(theta) + ")");
      resid = ext_.row(q + t).transpose() - f;
      llt.matrixL().solveInPlace(resid);
      const double q_form = resid.squaredNorm();
      double logdet = 0.0;
      for (int k = 0; k < p; ++k) logdet += std::log(llt.matrixLLT()(k, k));
      logdet *= 2.0;

      double qc = q_form;
      if (qc < kQuadFormFloor) {
        qc = kQuadFormFloor;
        ++out.clamp_count;
      }
      const double term = log_bessel_k(v, std::sqrt(2.0 * qc)) +
                          0.5 * v * std::log(qc) - 0.5 * logdet;
      out.value += term;  // fixed left-to-right summation order
      if (keep_terms) out.per_t.push_back({q_form, logdet, term});
    }
    return out;
  }

 private:
  void init(const SeriesMatrix& series, const SeriesMatrix& prefix) {
    const int p = family_->p();
    const int q = family_->memory();
    if (series.cols() != p && series.rows() > 0)
      throw std::invalid_argument("likelihood: series dimension mismatch");
    n_ = series.rows();
    ext_.resize(q + n_, p);
    if (q > 0) ext_.topRows(q) = prefix;
    if (n_ > 0) ext_.bottomRows(n_) = series;
    if (n_ > 0 && !ext_.allFinite())
      throw std::invalid_argument("likelihood: series has non-finite entries");
  }

  static std::string theta_string(const Eigen::VectorXd& theta) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(theta[i]);
    }
    return s + "]";
  }

  const ModelFamily* family_;
  SeriesMatrix ext_;
  Eigen::Index n_ = 0;
  bool truncated_ = false;
};

// Single likelihood term. `window` rows are in time order with the most
// recent past last (row q-1 = X_{t-1}); it must supply the family memory.
inline double q_term(const ModelFamily& family, const Eigen::VectorXd& theta,
                     const SeriesMatrix& window, const Eigen::VectorXd& x_t) {
  if (window.rows() < family.memory())
    throw std::invalid_argument("q_term: window shorter than family memory");
  SeriesMatrix one(1, family.p());
  one.row(0) = x_t.transpose();
  return LikelihoodProblem(family, one, window).evaluate(theta).value;
}

inline LikelihoodEvaluation full_loglik(const ModelFamily& family,
                                        const Eigen::VectorXd& theta,
                                        const SeriesMatrix& series,
                                        const SeriesMatrix& presample,
                                        bool keep_terms = false) {
  return LikelihoodProblem(family, series, presample)
      .evaluate(theta, keep_terms);
}

inline LikelihoodEvaluation truncated_loglik(const ModelFamily& family,
                                             const Eigen::VectorXd& theta,
                                             const SeriesMatrix& series,
                                             bool keep_terms = false) {
  return LikelihoodProblem(family, series).evaluate(theta, keep_terms);
}

struct ProfilePoint {
  Eigen::VectorXd theta;
  double value = 0.0;
  long clamp_count = 0;
  bool in_theta2 = false;  // warning flag, not a gate
};

// Truncated likelihood over a user grid (CLI profile output).
inline std::vector<ProfilePoint> profile_loglik(
    const ModelFamily& family, const SeriesMatrix& series,
    const std::vector<Eigen::VectorXd>& grid) {
  LikelihoodProblem problem(family, series);
  std::vector<ProfilePoint> out;
  out.reserve(grid.size());
  for (const auto& theta : grid) {
    const auto eval = problem.evaluate(theta);
    out.push_back({theta, eval.value, eval.clamp_count,
                   theta2_membership(family, theta).member});
  }
  return out;
}

struct TruncationReport {
  double sup_diff = 0.0;   // max_t |q̂_t - q_t|
  double mean_diff = 0.0;  // |L̂_n - L_n| / n
};

// Gap between the truncated and full likelihoods at one theta. For
// finite-memory families only the first `memory` terms can differ, so
// mean_diff <= memory * sup_diff / n.
inline TruncationReport truncation_report(const ModelFamily& family,
                                          const Eigen::VectorXd& theta,
                                          const SeriesMatrix& series,
                                          const SeriesMatrix& presample) {
  const auto trunc = truncated_loglik(family, theta, series, true);
  const auto full = full_loglik(family, theta, series, presample, true);
  TruncationReport report;
  for (std::size_t t = 0; t < trunc.per_t.size(); ++t)
    report.sup_diff = std::max(
        report.sup_diff, std::abs(trunc.per_t[t].q_t - full.per_t[t].q_t));
  if (series.rows() > 0)
    report.mean_diff =
        std::abs(trunc.value - full.value) / double(series.rows());
  return report;
}

}  // namespace alqmle
