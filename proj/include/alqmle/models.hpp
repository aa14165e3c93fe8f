// Causal model families X_t = M_theta(past) zeta_t + f_theta(past), their
// contraction (Theta(2) / Theta(r)) membership, and stationary trajectory
// simulation.
//
// A family exposes, besides the (f, M) evaluation on a finite lag window,
// closed-form Lipschitz coefficient sequences alpha_j(f), alpha_j(M) and a
// positive lower bound on det(M M'). All shipped families have finite
// memory, so the coefficient sequences are finite and the long-memory decay
// condition behind consistency holds trivially.

#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "alqmle/innovations.hpp"

namespace alqmle {

// Trajectory: rows are time steps, columns are components.
using SeriesMatrix = Eigen::MatrixXd;

// Compact per-coordinate parameter box.
struct ParameterBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }

  bool valid() const {
    if (lower.size() != upper.size() || lower.size() == 0) return false;
    return ((upper - lower).array() >= 0.0).all() &&
           lower.allFinite() && upper.allFinite();
  }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    return (x.array() >= lower.array() - tol).all() &&
           (x.array() <= upper.array() + tol).all();
  }
  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
};

// Optimizer treatment of a coordinate: scale-like parameters are searched
// in log space, which keeps them strictly positive between projections.
enum class ParamScale { kLinear, kLogScale };

// View of the q most recent values at time t. lag(1) is X_{t-1}. The
// backing buffer always carries `memory` prefix rows (zeros or presample),
// so the row index never underflows.
struct LagWindow {
  const SeriesMatrix* buffer;
  Eigen::Index t;  // row index of "time t" within the buffer

  auto lag(int j) const { return buffer->row(t - j); }
};

class ModelFamily {
 public:
  virtual ~ModelFamily() = default;

  const std::string& name() const { return name_; }
  int p() const { return p_; }
  int memory() const { return memory_; }  // number of lags read
  int dim() const { return dim_; }        // parameter count

  // Writes f (p-vector) and M (p x p) for theta at the given window.
  virtual void eval(const Eigen::VectorXd& theta, const LagWindow& past,
                    Eigen::VectorXd& f, Eigen::MatrixXd& m) const = 0;

  // alpha_j(f, theta), alpha_j(M, theta) for j = 1..memory.
  virtual Eigen::VectorXd lipschitz_f(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd lipschitz_m(const Eigen::VectorXd& theta) const = 0;

  // Lower bound on det(M M') over all windows.
  virtual double h_floor(const Eigen::VectorXd& theta) const = 0;

  virtual std::vector<std::string> param_names() const = 0;
  virtual ParameterBox default_box() const = 0;
  virtual std::vector<ParamScale> param_scales() const = 0;

  void check_theta(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim_)
      throw std::invalid_argument(name_ + ": theta has " +
                                  std::to_string(theta.size()) +
                                  " coordinates, expected " +
                                  std::to_string(dim_));
  }

 protected:
  ModelFamily(std::string name, int p, int memory, int dim)
      : name_(std::move(name)), p_(p), memory_(memory), dim_(dim) {
    if (p < 1) throw std::invalid_argument("ModelFamily: p must be >= 1");
    if (memory < 0) throw std::invalid_argument("ModelFamily: memory < 0");
  }

 private:
  std::string name_;
  int p_;
  int memory_;
  int dim_;
};

// ---------------------------------------------------------------------------
// Concrete families
// ---------------------------------------------------------------------------

// VAR(q): f = c + sum_j A_j x_{t-j}, M = L constant lower-triangular with
// positive diagonal. alpha_j(f) = ||A_j||_2 (spectral), alpha_j(M) = 0,
// h_floor = det(L L') = (prod diag L)^2. The intercept block is optional
// (the pure-location model is VAR(0) with an intercept).
class VarFamily : public ModelFamily {
 public:
  VarFamily(int p, int lag_order, bool include_intercept = true)
      : ModelFamily(lag_order == 1 ? "var1" : "var" + std::to_string(lag_order),
                    p, lag_order,
                    (include_intercept ? p : 0) + lag_order * p * p +
                        p * (p + 1) / 2),
        q_(lag_order),
        intercept_(include_intercept) {}

  void eval(const Eigen::VectorXd& theta, const LagWindow& past,
            Eigen::VectorXd& f, Eigen::MatrixXd& m) const override {
    const int p = this->p();
    int off = 0;
    if (intercept_) {
      f = theta.segment(0, p);
      off = p;
    } else {
      f.setZero();
    }
    for (int j = 1; j <= q_; ++j) {
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          a(theta.data() + off, p, p);
      f.noalias() += a * past.lag(j).transpose();
      off += p * p;
    }
    m.setZero();
    for (int r = 0; r < p; ++r)
      for (int c = 0; c <= r; ++c) m(r, c) = theta[off++];
  }

  Eigen::VectorXd lipschitz_f(const Eigen::VectorXd& theta) const override {
    const int p = this->p();
    Eigen::VectorXd alpha(q_);
    int off = intercept_ ? p : 0;
    for (int j = 0; j < q_; ++j) {
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          a(theta.data() + off, p, p);
      alpha[j] = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()[0];
      off += p * p;
    }
    return alpha;
  }

  Eigen::VectorXd lipschitz_m(const Eigen::VectorXd& theta) const override {
    (void)theta;
    return Eigen::VectorXd::Zero(q_);
  }

  double h_floor(const Eigen::VectorXd& theta) const override {
    const int p = this->p();
    double det = 1.0;
    int off = (intercept_ ? p : 0) + q_ * p * p;
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c <= r; ++c, ++off)
        if (c == r) det *= theta[off];
    }
    return det * det;
  }

  std::vector<std::string> param_names() const override {
    const int p = this->p();
    std::vector<std::string> names;
    if (intercept_)
      for (int k = 1; k <= p; ++k) names.push_back("c" + std::to_string(k));
    for (int j = 1; j <= q_; ++j)
      for (int r = 1; r <= p; ++r)
        for (int c = 1; c <= p; ++c)
          names.push_back("a" + std::to_string(j) + "_" + std::to_string(r) +
                          std::to_string(c));
    for (int r = 1; r <= p; ++r)
      for (int c = 1; c <= r; ++c)
        names.push_back("l_" + std::to_string(r) + std::to_string(c));
    return names;
  }

  ParameterBox default_box() const override {
    const int p = this->p();
    ParameterBox box;
    box.lower.resize(dim());
    box.upper.resize(dim());
    int off = 0;
    if (intercept_)
      for (int k = 0; k < p; ++k, ++off) {
        box.lower[off] = -5.0;
        box.upper[off] = 5.0;
      }
    for (int j = 0; j < q_ * p * p; ++j, ++off) {
      box.lower[off] = -0.95;
      box.upper[off] = 0.95;
    }
    for (int r = 0; r < p; ++r)
      for (int c = 0; c <= r; ++c, ++off) {
        box.lower[off] = (c == r) ? 0.05 : -5.0;
        box.upper[off] = 5.0;
      }
    return box;
  }

  std::vector<ParamScale> param_scales() const override {
    const int p = this->p();
    std::vector<ParamScale> scales(dim(), ParamScale::kLinear);
    int off = (intercept_ ? p : 0) + q_ * p * p;
    for (int r = 0; r < p; ++r)
      for (int c = 0; c <= r; ++c, ++off)
        if (c == r) scales[off] = ParamScale::kLogScale;
    return scales;
  }

 private:
  int q_;
  bool intercept_;
};

// Diagonal ARCH(q): f = 0, M = diag(sqrt(omega_k + sum_j a_{j,k} x_{t-j,k}^2)).
// alpha_j(M) = max_k sqrt(a_{j,k}) (the componentwise map x -> sqrt(w + a x^2)
// is sqrt(a)-Lipschitz), h_floor = prod_k omega_k.
class DiagonalArchFamily : public ModelFamily {
 public:
  DiagonalArchFamily(int p, int lag_order)
      : ModelFamily(
            lag_order == 1 ? "arch1" : "arch" + std::to_string(lag_order), p,
            lag_order, p + lag_order * p),
        q_(lag_order) {}

  void eval(const Eigen::VectorXd& theta, const LagWindow& past,
            Eigen::VectorXd& f, Eigen::MatrixXd& m) const override {
    const int p = this->p();
    f.setZero();
    m.setZero();
    for (int k = 0; k < p; ++k) {
      double h = theta[k];
      for (int j = 1; j <= q_; ++j) {
        const double x = past.lag(j)[k];
        h += theta[p + (j - 1) * p + k] * x * x;
      }
      m(k, k) = std::sqrt(h);
    }
  }

  Eigen::VectorXd lipschitz_f(const Eigen::VectorXd& theta) const override {
    (void)theta;
    return Eigen::VectorXd::Zero(q_);
  }

  Eigen::VectorXd lipschitz_m(const Eigen::VectorXd& theta) const override {
    const int p = this->p();
    Eigen::VectorXd alpha(q_);
    for (int j = 0; j < q_; ++j) {
      double worst = 0.0;
      for (int k = 0; k < p; ++k)
        worst = std::max(worst, std::sqrt(std::max(0.0, theta[p + j * p + k])));
      alpha[j] = worst;
    }
    return alpha;
  }

  double h_floor(const Eigen::VectorXd& theta) const override {
    double prod = 1.0;
    for (int k = 0; k < this->p(); ++k) prod *= theta[k];
    return prod;
  }

  std::vector<std::string> param_names() const override {
    std::vector<std::string> names;
    for (int k = 1; k <= this->p(); ++k)
      names.push_back("omega" + std::to_string(k));
    for (int j = 1; j <= q_; ++j)
      for (int k = 1; k <= this->p(); ++k)
        names.push_back("a" + std::to_string(j) + "_" + std::to_string(k));
    return names;
  }

  ParameterBox default_box() const override {
    ParameterBox box;
    box.lower.resize(dim());
    box.upper.resize(dim());
    const int p = this->p();
    for (int k = 0; k < p; ++k) {
      box.lower[k] = 0.05;
      box.upper[k] = 10.0;
    }
    for (int j = p; j < dim(); ++j) {
      box.lower[j] = 0.0;
      box.upper[j] = 0.95;
    }
    return box;
  }

  std::vector<ParamScale> param_scales() const override {
    std::vector<ParamScale> scales(dim(), ParamScale::kLinear);
    for (int k = 0; k < this->p(); ++k) scales[k] = ParamScale::kLogScale;
    return scales;
  }

 private:
  int q_;
};

// AR(1) + diagonal ARCH(1): f = c + A x_{t-1},
// M = diag(sqrt(omega_k + b_k x_{t-1,k}^2)).
class ArArchFamily : public ModelFamily {
 public:
  explicit ArArchFamily(int p)
      : ModelFamily("ar-arch", p, 1, p + p * p + 2 * p) {}

  void eval(const Eigen::VectorXd& theta, const LagWindow& past,
            Eigen::VectorXd& f, Eigen::MatrixXd& m) const override {
    const int p = this->p();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        a(theta.data() + p, p, p);
    f = theta.segment(0, p);
    f.noalias() += a * past.lag(1).transpose();
    m.setZero();
    const int om = p + p * p;
    for (int k = 0; k < p; ++k) {
      const double x = past.lag(1)[k];
      m(k, k) = std::sqrt(theta[om + k] + theta[om + p + k] * x * x);
    }
  }

  Eigen::VectorXd lipschitz_f(const Eigen::VectorXd& theta) const override {
    const int p = this->p();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        a(theta.data() + p, p, p);
    Eigen::VectorXd alpha(1);
    alpha[0] = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()[0];
    return alpha;
  }

  Eigen::VectorXd lipschitz_m(const Eigen::VectorXd& theta) const override {
    const int p = this->p();
    double worst = 0.0;
    for (int k = 0; k < p; ++k)
      worst = std::max(worst,
                       std::sqrt(std::max(0.0, theta[p + p * p + p + k])));
    Eigen::VectorXd alpha(1);
    alpha[0] = worst;
    return alpha;
  }

  double h_floor(const Eigen::VectorXd& theta) const override {
    const int p = this->p();
    double prod = 1.0;
    for (int k = 0; k < p; ++k) prod *= theta[p + p * p + k];
    return prod;
  }

  std::vector<std::string> param_names() const override {
    const int p = this->p();
    std::vector<std::string> names;
    for (int k = 1; k <= p; ++k) names.push_back("c" + std::to_string(k));
    for (int r = 1; r <= p; ++r)
      for (int c = 1; c <= p; ++c)
        names.push_back("a_" + std::to_string(r) + std::to_string(c));
    for (int k = 1; k <= p; ++k) names.push_back("omega" + std::to_string(k));
    for (int k = 1; k <= p; ++k) names.push_back("b" + std::to_string(k));
    return names;
  }

  ParameterBox default_box() const override {
    const int p = this->p();
    ParameterBox box;
    box.lower.resize(dim());
    box.upper.resize(dim());
    int off = 0;
    for (int k = 0; k < p; ++k, ++off) {
      box.lower[off] = -5.0;
      box.upper[off] = 5.0;
    }
    for (int j = 0; j < p * p; ++j, ++off) {
      box.lower[off] = -0.95;
      box.upper[off] = 0.95;
    }
    for (int k = 0; k < p; ++k, ++off) {
      box.lower[off] = 0.05;
      box.upper[off] = 10.0;
    }
    for (int k = 0; k < p; ++k, ++off) {
      box.lower[off] = 0.0;
      box.upper[off] = 0.95;
    }
    return box;
  }

  std::vector<ParamScale> param_scales() const override {
    const int p = this->p();
    std::vector<ParamScale> scales(dim(), ParamScale::kLinear);
    for (int k = 0; k < p; ++k) scales[p + p * p + k] = ParamScale::kLogScale;
    return scales;
  }
};

// Factory for the CLI family names (lag order 1 variants).
inline std::unique_ptr<ModelFamily> make_family(const std::string& name,
                                                int p) {
  if (name == "var1") return std::make_unique<VarFamily>(p, 1);
  if (name == "arch1") return std::make_unique<DiagonalArchFamily>(p, 1);
  if (name == "ar-arch") return std::make_unique<ArArchFamily>(p);
  throw std::invalid_argument("unknown family: " + name +
                              " (expected var1|arch1|ar-arch)");
}

// ---------------------------------------------------------------------------
// Contraction-region membership
// ---------------------------------------------------------------------------

struct Theta2Report {
  double sum_f = 0.0;   // sum_j alpha_j(f, theta)
  double sum_m = 0.0;   // sum_j alpha_j(M, theta)
  double margin = 0.0;  // 1 - (sum_f + sqrt(p) sum_m)
  bool member = false;
};

// Theta(2) check: sum_f + sqrt(p) sum_m < 1. The sqrt(p) factor is
// (E ||zeta||^2)^{1/2} for unit component variances.
inline Theta2Report theta2_membership(const ModelFamily& family,
                                      const Eigen::VectorXd& theta) {
  family.check_theta(theta);
  Theta2Report report;
  report.sum_f = family.lipschitz_f(theta).sum();
  report.sum_m = family.lipschitz_m(theta).sum();
  report.margin =
      1.0 - (report.sum_f + std::sqrt(double(family.p())) * report.sum_m);
  report.member = report.margin > 0.0;
  return report;
}

// Theta(r) check with a caller-supplied moment (E ||zeta||^r)^{1/r}
// (Monte Carlo via sample_norm_moment when no closed form is at hand).
inline bool theta_r_membership(const ModelFamily& family,
                               const Eigen::VectorXd& theta, double r,
                               double moment_r) {
  if (!(r >= 1.0))
    throw std::invalid_argument("theta_r_membership: r must be >= 1");
  if (!(moment_r > 0.0))
    throw std::invalid_argument("theta_r_membership: moment_r must be > 0");
  family.check_theta(theta);
  return family.lipschitz_f(theta).sum() +
             moment_r * family.lipschitz_m(theta).sum() <
         1.0;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

inline constexpr int kDefaultBurnIn = 500;

// Core recursion on a caller-provided innovation matrix (rows are time).
// Returns the trajectory with the first burn_in rows discarded. Exposed
// separately so tests can splice innovation streams.
inline SeriesMatrix simulate_with_innovations(const ModelFamily& family,
                                              const Eigen::VectorXd& theta,
                                              const Eigen::MatrixXd& innovations,
                                              Eigen::Index burn_in = 0) {
  family.check_theta(theta);
  if (innovations.cols() != family.p())
    throw std::invalid_argument("simulate: innovation dimension mismatch");
  const Eigen::Index total = innovations.rows();
  if (burn_in < 0 || burn_in > total)
    throw std::invalid_argument("simulate: burn_in out of range");
  const int q = family.memory();
  const int p = family.p();

  SeriesMatrix buffer = SeriesMatrix::Zero(q + total, p);
  Eigen::VectorXd f(p);
  Eigen::MatrixXd m(p, p);
  for (Eigen::Index t = 0; t < total; ++t) {
    const LagWindow window{&buffer, q + t};
    family.eval(theta, window, f, m);
    buffer.row(q + t) =
        (m * innovations.row(t).transpose() + f).transpose();
  }
  return buffer.bottomRows(total - burn_in);
}

// Simulates n values of the stationary solution: iterate from a zero past,
// discard burn_in values (initialization bias decays geometrically under
// Theta(2) membership), return the next n. Refuses theta outside Theta(2)
// unless force is set.
inline SeriesMatrix simulate_trajectory(const ModelFamily& family,
                                        const Eigen::VectorXd& theta,
                                        Eigen::Index n,
                                        Eigen::Index burn_in,
                                        const InnovationSpec& spec,
                                        bool force = false) {
  family.check_theta(theta);
  if (spec.p != family.p())
    throw std::invalid_argument("simulate: spec.p != family.p");
  if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
  if (!force && !theta2_membership(family, theta).member)
    throw std::invalid_argument(
        "simulate: theta not in Theta(2); pass force for deliberate "
        "misspecification runs");
  const Eigen::MatrixXd innovations =
      sample_innovations(spec, n + burn_in);
  return simulate_with_innovations(family, theta, innovations, burn_in);
}

}  // namespace alqmle
