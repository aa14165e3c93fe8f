// QMLE theta_hat = argmax over the box of the truncated log-likelihood,
// by projected Nelder-Mead direct search with multistart.
//
// The objective can carry |.|-type kinks (the p = 1 likelihood collapses
// to a least-absolute-deviation form), so only function values are used.
// Trial points are projected coordinate-wise onto the box; scale-like
// coordinates (positive diagonal entries, omegas) are searched in log
// space. Each start re-initializes the simplex at its incumbent until the
// round stops improving or the evaluation budget runs out — plain
// Nelder-Mead alone stalls routinely above five or six dimensions.
//
// Everything is deterministic given (data, config): start points come from
// a seeded low-discrepancy sequence, and ties across starts break toward
// the lowest start index.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "alqmle/likelihood.hpp"
#include "alqmle/models.hpp"
#include "alqmle/rng.hpp"

namespace alqmle {

struct OptimizerConfig {
  int starts = 8;
  int max_evals = 2000;  // per-start objective evaluation budget
  double xtol = 1e-8;    // simplex spread tolerance, natural coordinates
  double ftol = 1e-10;
  std::uint64_t seed = 0;       // start-point sequence seed
  bool restrict_theta2 = true;  // soft penalty outside Theta(2)
  bool record_improvement = false;  // keep best-so-far trace per start
};

struct StartResult {
  Eigen::VectorXd theta_start;
  Eigen::VectorXd theta_end;
  double value = 0.0;            // truncated loglik at theta_end
  double penalized_value = 0.0;  // selection objective (value + penalty)
  int evals = 0;
  bool converged = false;
  std::vector<double> improvement;  // best-so-far penalized objective
};

struct EstimationResult {
  Eigen::VectorXd theta_hat;
  double value = 0.0;  // truncated loglik at theta_hat
  std::vector<StartResult> start_results;
  int best_start_index = -1;
  bool in_theta2 = false;
  long clamp_count = 0;
  long box_violations = 0;  // evaluations outside the box (must stay 0)
  std::vector<std::string> warnings;
};

namespace detail {

// Coordinate transform between natural and search space.
struct SearchSpace {
  Eigen::VectorXd lo, hi;        // search-space box
  std::vector<ParamScale> scales;

  static SearchSpace make(const ParameterBox& box,
                          const std::vector<ParamScale>& scales) {
    SearchSpace s;
    s.scales = scales;
    s.lo.resize(box.dim());
    s.hi.resize(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
      if (scales[i] == ParamScale::kLogScale) {
        if (!(box.lower[i] > 0.0))
          throw std::invalid_argument(
              "estimate: log-scale coordinate needs a positive box lower "
              "bound");
        s.lo[i] = std::log(box.lower[i]);
        s.hi[i] = std::log(box.upper[i]);
      } else {
        s.lo[i] = box.lower[i];
        s.hi[i] = box.upper[i];
      }
    }
    return s;
  }

  Eigen::VectorXd to_natural(const Eigen::VectorXd& y) const {
    Eigen::VectorXd x = y;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (scales[i] == ParamScale::kLogScale) x[i] = std::exp(y[i]);
    return x;
  }
};

// Generalized-golden-ratio low-discrepancy sequence on the unit cube.
inline Eigen::VectorXd rd_sequence_alpha(Eigen::Index d) {
  double phi = 1.5;
  for (int it = 0; it < 64; ++it)
    phi = std::pow(1.0 + phi, 1.0 / (d + 1.0));
  Eigen::VectorXd alpha(d);
  double g = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    g /= phi;
    alpha[i] = g;
  }
  return alpha;
}

struct NmOutcome {
  Eigen::VectorXd x;  // search coordinates
  double f = std::numeric_limits<double>::infinity();
  int evals = 0;
  bool converged = false;
};

// One Nelder-Mead round (minimization) over the free coordinates, with
// projection onto [lo, hi]. Degenerate (zero-width) coordinates stay
// pinned. spread_tol applies to the natural-coordinate simplex spread.
template <class Objective, class Spread>
NmOutcome nelder_mead_round(const Objective& objective, const Spread& spread,
                            const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi,
                            const Eigen::VectorXd& start, double step_frac,
                            int budget, double xtol, double ftol) {
  const Eigen::Index d = start.size();
  std::vector<Eigen::Index> free_dims;
  for (Eigen::Index i = 0; i < d; ++i)
    if (hi[i] - lo[i] > 0.0) free_dims.push_back(i);

  NmOutcome out;
  auto clamp = [&](Eigen::VectorXd& y) {
    y = y.cwiseMax(lo).cwiseMin(hi);
  };

  if (free_dims.empty()) {
    out.x = start;
    clamp(out.x);
    out.f = objective(out.x);
    out.evals = 1;
    out.converged = true;
    return out;
  }

  const std::size_t k = free_dims.size();
  std::vector<Eigen::VectorXd> vertex(k + 1, start);
  std::vector<double> fval(k + 1);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& y) {
    ++evals;
    const double f = objective(y);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  for (std::size_t i = 0; i < k; ++i) {
    const Eigen::Index dim = free_dims[i];
    double step = step_frac * (hi[dim] - lo[dim]);
    if (vertex[i + 1][dim] + step > hi[dim]) step = -step;
    vertex[i + 1][dim] += step;
    clamp(vertex[i + 1]);
  }
  for (std::size_t i = 0; i <= k; ++i) fval[i] = eval(vertex[i]);

  std::vector<std::size_t> order(k + 1);
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  while (evals < budget) {
    for (std::size_t i = 0; i <= k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fval[a] < fval[b];
    });
    const std::size_t best = order[0], worst = order[k],
                      second_worst = order[k - 1];

    // convergence: both the natural-coordinate spread and the objective
    // range must be inside tolerance (a kinked objective can flatten the
    // range while the simplex still straddles the kink)
    double max_spread = 0.0;
    for (std::size_t i = 0; i <= k; ++i)
      max_spread = std::max(max_spread, spread(vertex[i], vertex[best]));
    const double frange = fval[worst] - fval[best];
    if (max_spread < xtol && frange < ftol) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i <= k; ++i)
      if (i != worst) centroid += vertex[i];
    centroid /= double(k);

    Eigen::VectorXd reflected = centroid + alpha * (centroid - vertex[worst]);
    clamp(reflected);
    const double f_reflected = eval(reflected);

    if (f_reflected < fval[best]) {
      Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      clamp(expanded);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        fval[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        fval[worst] = f_reflected;
      }
    } else if (f_reflected < fval[second_worst]) {
      vertex[worst] = reflected;
      fval[worst] = f_reflected;
    } else {
      const bool outside = f_reflected < fval[worst];
      Eigen::VectorXd contracted =
          outside ? centroid + rho * (reflected - centroid)
                  : centroid + rho * (vertex[worst] - centroid);
      clamp(contracted);
      const double f_contracted = eval(contracted);
      if (f_contracted < (outside ? f_reflected : fval[worst])) {
        vertex[worst] = contracted;
        fval[worst] = f_contracted;
      } else {
        for (std::size_t i = 0; i <= k; ++i) {
          if (i == best) continue;
          vertex[i] = vertex[best] + sigma * (vertex[i] - vertex[best]);
          clamp(vertex[i]);
          fval[i] = eval(vertex[i]);
          if (evals >= budget) break;
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= k; ++i)
    if (fval[i] < fval[best]) best = i;
  out.x = vertex[best];
  out.f = fval[best];
  out.evals = evals;
  return out;
}

}  // namespace detail

// Box-constrained QMLE. The objective is the truncated log-likelihood,
// optionally penalized by -1e6 * max(0, -margin) outside Theta(2) so the
// search prefers the contraction region without shrinking the feasible
// set.
inline EstimationResult estimate(const ModelFamily& family,
                                 const SeriesMatrix& series,
                                 const ParameterBox& box,
                                 const OptimizerConfig& config = {}) {
  if (!box.valid() || box.dim() != family.dim())
    throw std::invalid_argument("estimate: invalid box");
  if (config.starts < 1 || config.max_evals < 1)
    throw std::invalid_argument("estimate: starts and max_evals must be >= 1");
  if (!(config.xtol > 0.0) || !(config.ftol > 0.0))
    throw std::invalid_argument("estimate: tolerances must be > 0");

  EstimationResult result;
  if (series.rows() < 10 * family.dim())
    result.warnings.push_back(
        "series length " + std::to_string(series.rows()) +
        " is below 10*d = " + std::to_string(10 * family.dim()));

  const auto space = detail::SearchSpace::make(box, family.param_scales());
  LikelihoodProblem problem(family, series);

  std::atomic<long> violations{0};
  std::vector<double>* trace = nullptr;
  auto penalized_loglik = [&](const Eigen::VectorXd& theta) {
    double value = problem.evaluate(theta).value;
    if (config.restrict_theta2) {
      const double margin = theta2_membership(family, theta).margin;
      if (margin < 0.0) value -= 1e6 * (-margin);
    }
    return value;
  };
  double best_so_far = -std::numeric_limits<double>::infinity();
  auto objective = [&](const Eigen::VectorXd& y) {  // minimized
    if (((y.array() < space.lo.array() - 1e-12) ||
         (y.array() > space.hi.array() + 1e-12))
            .any())
      ++violations;
    const double value = penalized_loglik(space.to_natural(y));
    if (trace) {
      if (std::isfinite(value)) best_so_far = std::max(best_so_far, value);
      trace->push_back(best_so_far);
    }
    return -value;
  };
  auto natural_spread = [&](const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
    return (space.to_natural(a) - space.to_natural(b))
        .cwiseAbs()
        .maxCoeff();
  };

  // deterministic start points: box center, then a seeded
  // low-discrepancy sequence
  Rng start_rng(config.seed);
  const Eigen::VectorXd alpha = detail::rd_sequence_alpha(box.dim());
  Eigen::VectorXd shift(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i)
    shift[i] = start_rng.uniform01();

  result.start_results.reserve(config.starts);
  for (int s = 0; s < config.starts; ++s) {
    Eigen::VectorXd y0(box.dim());
    if (s == 0) {
      y0 = 0.5 * (space.lo + space.hi);
    } else {
      for (Eigen::Index i = 0; i < box.dim(); ++i) {
        const double u = std::fmod(shift[i] + s * alpha[i], 1.0);
        y0[i] = space.lo[i] + u * (space.hi[i] - space.lo[i]);
      }
    }

    StartResult sr;
    sr.theta_start = space.to_natural(y0);
    if (config.record_improvement) {
      best_so_far = -std::numeric_limits<double>::infinity();
      trace = &sr.improvement;
    }

    // restart rounds at the incumbent until improvement stalls
    Eigen::VectorXd y_best = y0;
    double f_best = std::numeric_limits<double>::infinity();
    int used = 0;
    bool converged = false;
    int round = 0;
    while (used < config.max_evals) {
      const double step_frac = round == 0 ? 0.08 : 0.02;
      const auto nm = detail::nelder_mead_round(
          objective, natural_spread, space.lo, space.hi, y_best, step_frac,
          config.max_evals - used, config.xtol, config.ftol);
      used += nm.evals;
      const bool improved = nm.f < f_best - 1e-12 * std::abs(f_best);
      if (nm.f < f_best) {
        f_best = nm.f;
        y_best = nm.x;
      }
      converged = nm.converged;
      ++round;
      if (!improved && round > 1) break;
      if (nm.converged && !improved) break;
    }
    trace = nullptr;

    sr.theta_end = space.to_natural(y_best);
    sr.penalized_value = -f_best;
    sr.value = problem.evaluate(sr.theta_end).value;
    sr.evals = used;
    sr.converged = converged;
    result.start_results.push_back(std::move(sr));
  }

  int best_index = 0;
  for (int s = 1; s < config.starts; ++s)
    if (result.start_results[s].penalized_value >
        result.start_results[best_index].penalized_value)
      best_index = s;  // strict: ties keep the lowest start index
  if (!std::isfinite(result.start_results[best_index].penalized_value))
    throw std::runtime_error("estimate: objective non-finite everywhere");

  result.best_start_index = best_index;
  result.theta_hat = result.start_results[best_index].theta_end;
  const auto final_eval = problem.evaluate(result.theta_hat);
  result.value = final_eval.value;
  result.clamp_count = final_eval.clamp_count;
  result.in_theta2 = theta2_membership(family, result.theta_hat).member;
  result.box_violations = violations.load();
  return result;
}

// ---------------------------------------------------------------------------
// Monte Carlo consistency harness
// ---------------------------------------------------------------------------

struct McRow {
  Eigen::Index n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double err_norm = 0.0;
  bool converged = false;
  long clamp_count = 0;
};

struct McSummary {
  Eigen::Index n = 0;
  double median = 0.0;
  double iqr = 0.0;
  double max = 0.0;
  int failures = 0;
};

struct McError {
  Eigen::Index n = 0;
  int rep = 0;
  std::string message;
};

struct McReport {
  std::vector<McRow> rows;          // keyed by (n, rep), fixed order
  std::vector<McSummary> summaries; // one per n, recomputable from rows
  std::vector<McError> errors;      // failed replications, not fatal
  bool monotone_medians = false;    // strictly decreasing in n
};

namespace detail {

inline double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - double(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

// Recomputes per-n summaries from rows; exposed so reports can be
// re-derived from a CSV.
inline std::vector<McSummary> mc_summaries(
    const std::vector<McRow>& rows, const std::vector<Eigen::Index>& n_list,
    const std::vector<McError>& errors = {}) {
  std::vector<McSummary> summaries;
  for (const auto n : n_list) {
    std::vector<double> errs;
    for (const auto& row : rows)
      if (row.n == n) errs.push_back(row.err_norm);
    std::sort(errs.begin(), errs.end());
    McSummary s;
    s.n = n;
    s.median = detail::percentile(errs, 0.5);
    s.iqr = detail::percentile(errs, 0.75) - detail::percentile(errs, 0.25);
    s.max = errs.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : errs.back();
    for (const auto& e : errors)
      if (e.n == n) ++s.failures;
    summaries.push_back(s);
  }
  return summaries;
}

inline bool mc_monotone_medians(const std::vector<McSummary>& summaries) {
  for (std::size_t i = 1; i < summaries.size(); ++i) {
    if (!(summaries[i].median < summaries[i - 1].median)) return false;
    if (!std::isfinite(summaries[i].median) ||
        !std::isfinite(summaries[i - 1].median))
      return false;
  }
  return !summaries.empty() && std::isfinite(summaries.front().median);
}

// For each n in n_list and replication r: simulate with the seed
// derive_seed(master, {n, rep}), estimate, record ||theta_hat - theta0||.
// Replications run on a thread pool; results are keyed by (n, rep), so the
// report does not depend on scheduling.
inline McReport estimate_consistency_path(
    const ModelFamily& family, const Eigen::VectorXd& theta0,
    const std::vector<Eigen::Index>& n_list, int replications,
    std::uint64_t master_seed, const OptimizerConfig& config,
    const ParameterBox& box, Eigen::Index burn_in = kDefaultBurnIn,
    int threads = 0) {
  family.check_theta(theta0);
  if (!theta2_membership(family, theta0).member)
    throw std::invalid_argument(
        "consistency path: theta0 is not in Theta(2)");
  if (replications < 1)
    throw std::invalid_argument("consistency path: replications must be >= 1");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw std::invalid_argument("consistency path: n_list must increase");

  struct Task {
    Eigen::Index n;
    int rep;
  };
  std::vector<Task> tasks;
  for (const auto n : n_list)
    for (int r = 0; r < replications; ++r) tasks.push_back({n, r});

  std::vector<std::optional<McRow>> slots(tasks.size());
  std::vector<std::optional<McError>> error_slots(tasks.size());

  auto worker_body = [&](std::size_t index) {
    const auto [n, rep] = tasks[index];
    const std::uint64_t seed = derive_seed(
        master_seed,
        {{"n", static_cast<std::uint64_t>(n)},
         {"rep", static_cast<std::uint64_t>(rep)}});
    try {
      const InnovationSpec spec{family.p(), seed};
      const SeriesMatrix series =
          simulate_trajectory(family, theta0, n, burn_in, spec);
      OptimizerConfig local = config;
      local.seed = derive_seed(seed, {{"opt", 0}});
      const auto est = estimate(family, series, box, local);
      McRow row;
      row.n = n;
      row.rep = rep;
      row.seed = seed;
      row.err_norm = (est.theta_hat - theta0).norm();
      row.converged = est.start_results[est.best_start_index].converged;
      row.clamp_count = est.clamp_count;
      slots[index] = row;
    } catch (const std::exception& e) {
      error_slots[index] = McError{n, rep, e.what()};
    }
  };

  int pool = threads > 0 ? threads
                         : static_cast<int>(std::thread::hardware_concurrency());
  pool = std::max(1, std::min<int>(pool, static_cast<int>(tasks.size())));
  if (pool == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) worker_body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(pool);
    for (int w = 0; w < pool; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size();
             i = next.fetch_add(1))
          worker_body(i);
      });
    for (auto& w : workers) w.join();
  }

  McReport report;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (slots[i]) report.rows.push_back(*slots[i]);
    if (error_slots[i]) report.errors.push_back(*error_slots[i]);
  }
  report.summaries = mc_summaries(report.rows, n_list, report.errors);
  report.monotone_medians = mc_monotone_medians(report.summaries);
  return report;
}

}  // namespace alqmle
