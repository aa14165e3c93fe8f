// Fast invariant subset behind the `selfcheck` CLI subcommand: a smoke
// screen over every module, well under a minute end to end.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "alqmle/bessel.hpp"
#include "alqmle/estimator.hpp"
#include "alqmle/innovations.hpp"
#include "alqmle/likelihood.hpp"
#include "alqmle/models.hpp"

namespace alqmle {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {
inline std::string format_detail(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}
}  // namespace detail

inline std::vector<CheckResult> run_selfchecks() {
  std::vector<CheckResult> results;
  auto add = [&](const std::string& name, bool pass, std::string detail) {
    results.push_back({name, pass, std::move(detail)});
  };

  {  // closed form K_{1/2}
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double u =
          1e-3 * std::pow(50.0 / 1e-3, i / 99.0);
      const double ref = std::sqrt(M_PI / (2.0 * u)) * std::exp(-u);
      worst = std::max(worst, std::abs(bessel_k(0.5, u) - ref) / ref);
    }
    add("bessel.k_half_closed_form", worst < 1e-10,
        "max rel err " + detail::format_detail(worst));
  }
  {  // envelope bound, four negative orders
    bool ok = true;
    for (const double v : {-0.5, -1.0, -1.5, -2.0}) {
      const double a = bessel_bound_constant(v);
      for (int i = 0; i < 100; ++i) {
        const double u = 1e-3 * std::pow(10.0 / 1e-3, i / 99.0);
        if (!(bessel_k(v, u) <= a * std::pow(u, v))) ok = false;
      }
    }
    add("bessel.envelope_bound", ok, ok ? "0 violations" : "bound violated");
  }
  {  // sampler standardization at 1e5 draws
    const Eigen::MatrixXd draws =
        sample_innovations(InnovationSpec{1, 42}, 100000);
    const double mean = draws.col(0).mean();
    const double var =
        (draws.col(0).array() - mean).square().sum() / (draws.rows() - 1);
    const bool ok = std::abs(mean) < 0.02 && std::abs(var - 1.0) < 0.05;
    add("innovations.sampler_moments", ok,
        "mean " + detail::format_detail(mean) + ", var " + detail::format_detail(var));
  }
  {  // p = 1 likelihood collapse
    VarFamily family(1, 1);
    Rng rng(7);
    const double c1 = 0.5 * std::log(M_PI / 2.0) - 0.25 * std::log(2.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd theta(3);
      theta << 2.0 * rng.uniform01() - 1.0, 1.8 * rng.uniform01() - 0.9,
          0.2 + 2.0 * rng.uniform01();
      SeriesMatrix window(1, 1);
      window(0, 0) = 4.0 * rng.uniform01() - 2.0;
      Eigen::VectorXd x(1);
      x[0] = 4.0 * rng.uniform01() - 2.0;
      const double got = q_term(family, theta, window, x);
      const double f = theta[0] + theta[1] * window(0, 0);
      const double h = theta[2] * theta[2];
      const double expected =
          c1 - std::sqrt(2.0) * std::abs(x[0] - f) / theta[2] -
          0.5 * std::log(h);
      worst = std::max(worst, std::abs(got - expected));
    }
    add("likelihood.p1_collapse", worst < 1e-10,
        "max abs err " + detail::format_detail(worst));
  }
  {  // median oracle on a small location model
    VarFamily family(1, 0, true);
    const InnovationSpec spec{1, 99};
    Eigen::VectorXd theta0(2);
    theta0 << 0.4, 1.0;
    const SeriesMatrix series =
        simulate_trajectory(family, theta0, 501, 200, spec);
    std::vector<double> xs(series.col(0).data(),
                           series.col(0).data() + series.rows());
    std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
    const double median = xs[xs.size() / 2];
    ParameterBox box;
    box.lower.resize(2);
    box.upper.resize(2);
    box.lower << -5.0, 1.0;
    box.upper << 5.0, 1.0;  // scale pinned
    OptimizerConfig cfg;
    cfg.starts = 2;
    cfg.max_evals = 600;
    const auto est = estimate(family, series, box, cfg);
    const double err = std::abs(est.theta_hat[0] - median);
    add("estimator.median_oracle", err < 10 * cfg.xtol,
        "|c_hat - median| = " + detail::format_detail(err));
  }
  {  // Theta(2) worked examples
    VarFamily var2(2, 1, true);
    Eigen::VectorXd theta(var2.dim());
    theta << 0.0, 0.0, 0.3, 0.0, 0.0, 0.3, 1.0, 0.0, 1.0;
    const auto r1 = theta2_membership(var2, theta);
    DiagonalArchFamily arch2(2, 1);
    Eigen::VectorXd ta(arch2.dim());
    ta << 1.0, 1.0, 0.2, 0.2;
    const auto r2 = theta2_membership(arch2, ta);
    Eigen::VectorXd tbad = theta;
    tbad[2] = tbad[5] = 1.05;
    const auto r3 = theta2_membership(var2, tbad);
    const bool ok = r1.member && std::abs(r1.margin - 0.7) < 1e-12 &&
                    r2.member &&
                    std::abs(r2.margin -
                             (1.0 - std::sqrt(2.0) * std::sqrt(0.2))) < 1e-12 &&
                    !r3.member && std::abs(r3.margin + 0.05) < 1e-12;
    add("models.theta2_examples", ok,
        ok ? "margins match" : "margin mismatch");
  }
  return results;
}

}  // namespace alqmle
