#pragma once

// Finite-sum minimax problem oracles. A problem exposes component values
// and gradients f_i plus full gradients (means of components), feasible
// sets, and a smoothness estimate. Three concrete instances: a desk-scale
// bilinear toy with an analytic dual maximum, robust logistic regression
// on LIBSVM data, and the data-poisoning attack.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>

#include "ncc/data.hpp"
#include "ncc/sets.hpp"
#include "ncc/vec.hpp"

namespace ncc {

class MinimaxProblem {
 public:
  virtual ~MinimaxProblem() = default;

  virtual std::size_t components() const = 0;  // n
  virtual std::size_t dim_x() const = 0;
  virtual std::size_t dim_y() const = 0;
  virtual const FeasibleSet& set_x() const = 0;
  virtual const FeasibleSet& set_y() const = 0;
  virtual const char* name() const = 0;

  virtual double value(ConstView x, ConstView y) const = 0;
  virtual double comp_value(std::size_t i, ConstView x, ConstView y) const = 0;
  virtual void comp_grad_x(std::size_t i, ConstView x, ConstView y,
                           View out) const = 0;
  virtual void comp_grad_y(std::size_t i, ConstView x, ConstView y,
                           View out) const = 0;

  // Means of the component gradients. Overrides must stay within 1e-12 of
  // the componentwise mean.
  virtual void grad_x(ConstView x, ConstView y, View out) const;
  virtual void grad_y(ConstView x, ConstView y, View out) const;

  // Estimate of the Assumption-style joint smoothness constant.
  virtual double lipschitz_estimate() const = 0;

  // Closed-form primal value max_y f(x, y), when the problem has one.
  virtual std::optional<double> exact_primal(ConstView /*x*/) const {
    return std::nullopt;
  }

  // Closed-form argmin_x of f(x,y) + (r/2)||x - z||^2 over set_x, when
  // available. Returns false if the problem has no closed form.
  virtual bool inner_argmin_x(ConstView /*y*/, ConstView /*z*/, double /*r*/,
                              View /*out*/) const {
    return false;
  }

 protected:
  void check_component(std::size_t i) const {
    if (i >= components()) {
      throw std::out_of_range("component index " + std::to_string(i) +
                              " out of range [0, " +
                              std::to_string(components()) + ")");
    }
  }
};

// Throwing wrapper around MinimaxProblem::exact_primal.
double exact_primal_or_throw(const MinimaxProblem& p, ConstView x);

// ---------------------------------------------------------------------------
// Toy bilinear instance: f_i(x,y) = x'A_i y - (c/2)||x||^2 with A the mean
// of the A_i, X a symmetric box and Y the simplex. Nonconvex (concave) in x,
// linear in y, with a vertex-max closed-form primal.

class ToyBilinearProblem final : public MinimaxProblem {
 public:
  enum class Structure { Gaussian, Orthogonal };

  struct Params {
    std::size_t dim_x = 5;
    std::size_t dim_y = 5;
    std::size_t n = 50;
    double c = 0.5;               // curvature of the concave -||x||^2 term
    double scale = 0.5;           // magnitude of the mean matrix
    double noise = 0.1;           // component spread around the mean
    Structure structure = Structure::Gaussian;
    std::uint64_t seed = 1;
    double box_halfwidth = 1.0;
    Vec base;                     // explicit dim_x x dim_y base matrix; empty
                                  // -> generated from structure/scale
  };

  static ToyBilinearProblem random(const Params& params);
  // All components share the same matrix; useful for hand-checked values.
  static ToyBilinearProblem from_matrix(Vec a_flat, std::size_t dim_x,
                                        std::size_t dim_y, std::size_t n,
                                        double c, double box_halfwidth);

  std::size_t components() const override { return n_; }
  std::size_t dim_x() const override { return dx_; }
  std::size_t dim_y() const override { return dy_; }
  const FeasibleSet& set_x() const override { return set_x_; }
  const FeasibleSet& set_y() const override { return set_y_; }
  const char* name() const override { return "toy_bilinear"; }

  double value(ConstView x, ConstView y) const override;
  double comp_value(std::size_t i, ConstView x, ConstView y) const override;
  void comp_grad_x(std::size_t i, ConstView x, ConstView y, View out) const override;
  void comp_grad_y(std::size_t i, ConstView x, ConstView y, View out) const override;
  void grad_x(ConstView x, ConstView y, View out) const override;
  void grad_y(ConstView x, ConstView y, View out) const override;
  double lipschitz_estimate() const override { return lipschitz_; }
  std::optional<double> exact_primal(ConstView x) const override;
  bool inner_argmin_x(ConstView y, ConstView z, double r, View out) const override;

  double curvature() const { return c_; }
  // Mean matrix, row-major dim_x x dim_y.
  const Vec& mean_matrix() const { return a_mean_; }
  double max_abs_entry() const { return max_abs_entry_; }
  double box_halfwidth() const { return box_halfwidth_; }

 private:
  ToyBilinearProblem() = default;
  void finalize();

  std::size_t dx_ = 0, dy_ = 0, n_ = 0;
  double c_ = 0.0;
  Vec a_mean_;        // dx*dy
  Vec a_comp_;        // n*dx*dy
  double lipschitz_ = 0.0;
  double max_abs_entry_ = 0.0;
  double box_halfwidth_ = 0.0;
  FeasibleSet set_x_ = FeasibleSet::box_uniform(1, -1.0, 1.0);
  FeasibleSet set_y_ = FeasibleSet::simplex(1);
};

// ---------------------------------------------------------------------------
// Robust logistic regression:
//   f(x, y) = sum_i y_i log(1 + exp(-b_i a_i'x)) + g(x),
//   g(x) = lambda2 * sum_j alpha x_j^2 / (1 + alpha x_j^2),
// over x in a box surrogate and y in the simplex. The optional strongly
// concave dual regularizer -(lambda1/2)||n y - 1||^2 is off by default.

class RobustLogisticProblem final : public MinimaxProblem {
 public:
  struct Options {
    double lambda2 = 0.001;
    double alpha = 10.0;
    bool lambda1_enabled = false;
    double lambda1 = 0.0;   // 0 -> 1/n^2 when enabled
    double box_bound = 100.0;
  };

  explicit RobustLogisticProblem(Dataset data)
      : RobustLogisticProblem(std::move(data), Options()) {}
  RobustLogisticProblem(Dataset data, const Options& opts);

  std::size_t components() const override { return data_.n; }
  std::size_t dim_x() const override { return data_.d; }
  std::size_t dim_y() const override { return data_.n; }
  const FeasibleSet& set_x() const override { return set_x_; }
  const FeasibleSet& set_y() const override { return set_y_; }
  const char* name() const override { return "robust_logistic"; }

  double value(ConstView x, ConstView y) const override;
  double comp_value(std::size_t i, ConstView x, ConstView y) const override;
  void comp_grad_x(std::size_t i, ConstView x, ConstView y, View out) const override;
  void comp_grad_y(std::size_t i, ConstView x, ConstView y, View out) const override;
  void grad_x(ConstView x, ConstView y, View out) const override;
  void grad_y(ConstView x, ConstView y, View out) const override;
  double lipschitz_estimate() const override { return lipschitz_; }
  std::optional<double> exact_primal(ConstView x) const override;

  const Dataset& data() const { return data_; }
  const Options& options() const { return opts_; }
  double component_loss(std::size_t i, ConstView x) const;  // log-loss l_i(x)
  double regularizer(ConstView x) const;                    // g(x)
  double regularizer_grad_coord(double xj) const;           // dg/dx_j

 private:
  double margin(std::size_t i, ConstView x) const;  // b_i a_i'x
  void add_reg_grad(View out, ConstView x) const;

  Dataset data_;
  Options opts_;
  double lambda1_ = 0.0;
  double lipschitz_ = 0.0;
  FeasibleSet set_x_;
  FeasibleSet set_y_;
};

// ---------------------------------------------------------------------------
// Data poisoning in solver form. The attack
//   max_{||x||_inf <= eps} min_theta F(x,theta;Dtr1) + F(0,theta;Dtr2)
// is stored role-swapped and negated:
//   min_{x in InfBall(eps)} max_{theta in Box} -f(x, theta),
// which is concave in theta (negated convex logistic loss). Components are
// the training samples, poisoned subset first.

class PoisonProblem final : public MinimaxProblem {
 public:
  struct Options {
    double epsilon = 2.0;
    double theta_bound = 1e3;
    // Region used by the sampled-pair smoothness estimate; iterates live
    // near the origin, so probing the whole theta box would be vacuous.
    double sample_radius = 20.0;
    std::uint64_t estimate_seed = 2024;
  };

  PoisonProblem(Dataset tr1, Dataset tr2)
      : PoisonProblem(std::move(tr1), std::move(tr2), Options()) {}
  PoisonProblem(Dataset tr1, Dataset tr2, const Options& opts);

  std::size_t components() const override { return n_tr1_ + n_tr2_; }
  std::size_t dim_x() const override { return d_; }
  std::size_t dim_y() const override { return d_; }
  const FeasibleSet& set_x() const override { return set_x_; }
  const FeasibleSet& set_y() const override { return set_y_; }
  const char* name() const override { return "data_poison"; }

  double value(ConstView x, ConstView y) const override;
  double comp_value(std::size_t i, ConstView x, ConstView y) const override;
  void comp_grad_x(std::size_t i, ConstView x, ConstView y, View out) const override;
  void comp_grad_y(std::size_t i, ConstView x, ConstView y, View out) const override;
  double lipschitz_estimate() const override;

  std::size_t poisoned_count() const { return n_tr1_; }

 private:
  bool poisoned(std::size_t i) const { return i < n_tr1_; }
  double comp_scale(std::size_t i) const {
    return poisoned(i) ? scale_tr1_ : scale_tr2_;
  }
  ConstView row(std::size_t i) const;
  int label(std::size_t i) const;

  std::size_t n_tr1_ = 0, n_tr2_ = 0, d_ = 0;
  Vec rows_;                      // dense (n_tr1+n_tr2) x d
  std::vector<std::int8_t> labels_;  // 0/1
  double scale_tr1_ = 0.0, scale_tr2_ = 0.0;
  Options opts_;
  mutable double lipschitz_ = -1.0;
  FeasibleSet set_x_;
  FeasibleSet set_y_;
};

// Fraction of samples classified correctly by the 0.5-threshold logistic
// predictor sigmoid(z'theta); labels must be in {0,1}.
double poison_accuracy(const Dataset& test, ConstView theta);

// Numerically stable log(1 + exp(v)) and 1/(1 + exp(-v)).
double softplus(double v);
double sigmoid(double v);

}  // namespace ncc
