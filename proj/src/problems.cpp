#include "ncc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ncc {

double softplus(double v) {
  // log(1 + e^v) = max(v, 0) + log1p(e^{-|v|})
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

double sigmoid(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void MinimaxProblem::grad_x(ConstView x, ConstView y, View out) const {
  thread_local Vec buf;
  buf.resize(out.size());
  fill(out, 0.0);
  const std::size_t n = components();
  for (std::size_t i = 0; i < n; ++i) {
    comp_grad_x(i, x, y, buf);
    axpy(1.0, buf, out);
  }
  scale(1.0 / static_cast<double>(n), out);
}

void MinimaxProblem::grad_y(ConstView x, ConstView y, View out) const {
  thread_local Vec buf;
  buf.resize(out.size());
  fill(out, 0.0);
  const std::size_t n = components();
  for (std::size_t i = 0; i < n; ++i) {
    comp_grad_y(i, x, y, buf);
    axpy(1.0, buf, out);
  }
  scale(1.0 / static_cast<double>(n), out);
}

double exact_primal_or_throw(const MinimaxProblem& p, ConstView x) {
  auto v = p.exact_primal(x);
  if (!v) {
    throw std::runtime_error(std::string(p.name()) +
                             ": no closed-form primal value");
  }
  return *v;
}

// ---------------------------------------------------------------------------
// ToyBilinearProblem

namespace {

// Largest singular value of a row-major dx x dy matrix by power iteration
// on A'A with a deterministic start vector.
double spectral_norm(const Vec& a, std::size_t dx, std::size_t dy) {
  Vec v(dy, 1.0 / std::sqrt(static_cast<double>(dy)));
  Vec av(dx), atav(dy);
  double sigma = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    for (std::size_t r = 0; r < dx; ++r) {
      av[r] = dot(ConstView(a).subspan(r * dy, dy), v);
    }
    for (std::size_t c = 0; c < dy; ++c) atav[c] = 0.0;
    for (std::size_t r = 0; r < dx; ++r) {
      axpy(av[r], ConstView(a).subspan(r * dy, dy), atav);
    }
    const double norm = nrm2(atav);
    if (norm == 0.0) return 0.0;
    sigma = std::sqrt(norm);
    scale(1.0 / norm, View(atav));
    // deterministic tiny perturbation avoids getting stuck orthogonal to
    // the top singular direction
    if (iter == 0) atav[0] += 1e-12;
    v = atav;
  }
  return sigma;
}

}  // namespace

ToyBilinearProblem ToyBilinearProblem::random(const Params& p) {
  if (p.dim_x == 0 || p.dim_y == 0 || p.n == 0 || !(p.c > 0.0)) {
    throw std::invalid_argument("ToyBilinearProblem: need positive dims, n, c");
  }
  ToyBilinearProblem prob;
  prob.dx_ = p.dim_x;
  prob.dy_ = p.dim_y;
  prob.n_ = p.n;
  prob.c_ = p.c;
  prob.box_halfwidth_ = p.box_halfwidth;

  RngStream rng(p.seed, fnv1a("toy-bilinear"));
  Vec base(p.dim_x * p.dim_y);
  if (!p.base.empty()) {
    if (p.base.size() != p.dim_x * p.dim_y) {
      throw std::invalid_argument("ToyBilinearProblem: base matrix size mismatch");
    }
    base = p.base;
  } else if (p.structure == Structure::Orthogonal) {
    if (p.dim_y > p.dim_x) {
      throw std::invalid_argument(
          "ToyBilinearProblem: orthogonal structure needs dim_x >= dim_y");
    }
    // Gram-Schmidt on Gaussian columns, scaled: A'A = scale^2 I.
    Vec cols(p.dim_x * p.dim_y);
    for (auto& v : cols) v = rng.normal();
    for (std::size_t j = 0; j < p.dim_y; ++j) {
      View cj(cols.data() + j * p.dim_x, p.dim_x);
      for (std::size_t k = 0; k < j; ++k) {
        ConstView ck(cols.data() + k * p.dim_x, p.dim_x);
        axpy(-dot(ck, cj), ck, cj);
      }
      scale(1.0 / nrm2(cj), cj);
    }
    for (std::size_t r = 0; r < p.dim_x; ++r) {
      for (std::size_t j = 0; j < p.dim_y; ++j) {
        base[r * p.dim_y + j] = p.scale * cols[j * p.dim_x + r];
      }
    }
  } else {
    const double s = p.scale / std::sqrt(static_cast<double>(p.dim_x * p.dim_y));
    for (auto& v : base) v = s * rng.normal();
  }

  prob.a_comp_.resize(p.n * p.dim_x * p.dim_y);
  const double noise_s =
      p.noise / std::sqrt(static_cast<double>(p.dim_x * p.dim_y));
  for (std::size_t i = 0; i < p.n; ++i) {
    double* ai = prob.a_comp_.data() + i * p.dim_x * p.dim_y;
    for (std::size_t k = 0; k < p.dim_x * p.dim_y; ++k) {
      ai[k] = base[k] + noise_s * rng.normal();
    }
  }
  prob.finalize();
  return prob;
}

ToyBilinearProblem ToyBilinearProblem::from_matrix(Vec a_flat, std::size_t dim_x,
                                                   std::size_t dim_y,
                                                   std::size_t n, double c,
                                                   double box_halfwidth) {
  if (a_flat.size() != dim_x * dim_y || n == 0 || !(c > 0.0)) {
    throw std::invalid_argument("ToyBilinearProblem::from_matrix: bad arguments");
  }
  ToyBilinearProblem prob;
  prob.dx_ = dim_x;
  prob.dy_ = dim_y;
  prob.n_ = n;
  prob.c_ = c;
  prob.box_halfwidth_ = box_halfwidth;
  prob.a_comp_.resize(n * dim_x * dim_y);
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(prob.a_comp_.data() + i * dim_x * dim_y, a_flat.data(),
                dim_x * dim_y * sizeof(double));
  }
  prob.finalize();
  return prob;
}

void ToyBilinearProblem::finalize() {
  const std::size_t sz = dx_ * dy_;
  a_mean_.assign(sz, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    axpy(1.0, ConstView(a_comp_).subspan(i * sz, sz), a_mean_);
  }
  scale(1.0 / static_cast<double>(n_), View(a_mean_));
  max_abs_entry_ = 0.0;
  for (double v : a_mean_) max_abs_entry_ = std::max(max_abs_entry_, std::abs(v));
  // The largest component spectral norm bounds the joint smoothness of
  // every f_i (and hence of the mean), which the estimator-error
  // recursions rely on.
  double sigma = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    Vec ai(a_comp_.begin() + i * sz, a_comp_.begin() + (i + 1) * sz);
    sigma = std::max(sigma, spectral_norm(ai, dx_, dy_));
  }
  lipschitz_ = sigma + c_;
  set_x_ = FeasibleSet::box_uniform(dx_, -box_halfwidth_, box_halfwidth_);
  set_y_ = FeasibleSet::simplex(dy_);
}

double ToyBilinearProblem::value(ConstView x, ConstView y) const {
  double s = 0.0;
  for (std::size_t r = 0; r < dx_; ++r) {
    s += x[r] * dot(ConstView(a_mean_).subspan(r * dy_, dy_), y);
  }
  return s - 0.5 * c_ * nrm2sq(x);
}

double ToyBilinearProblem::comp_value(std::size_t i, ConstView x,
                                      ConstView y) const {
  check_component(i);
  const double* ai = a_comp_.data() + i * dx_ * dy_;
  double s = 0.0;
  for (std::size_t r = 0; r < dx_; ++r) {
    s += x[r] * dot(ConstView(ai + r * dy_, dy_), y);
  }
  return s - 0.5 * c_ * nrm2sq(x);
}

void ToyBilinearProblem::comp_grad_x(std::size_t i, ConstView x, ConstView y,
                                     View out) const {
  check_component(i);
  const double* ai = a_comp_.data() + i * dx_ * dy_;
  for (std::size_t r = 0; r < dx_; ++r) {
    out[r] = dot(ConstView(ai + r * dy_, dy_), y) - c_ * x[r];
  }
}

void ToyBilinearProblem::comp_grad_y(std::size_t i, ConstView x, ConstView y,
                                     View out) const {
  check_component(i);
  (void)y;
  const double* ai = a_comp_.data() + i * dx_ * dy_;
  fill(out, 0.0);
  for (std::size_t r = 0; r < dx_; ++r) {
    axpy(x[r], ConstView(ai + r * dy_, dy_), out);
  }
}

void ToyBilinearProblem::grad_x(ConstView x, ConstView y, View out) const {
  for (std::size_t r = 0; r < dx_; ++r) {
    out[r] = dot(ConstView(a_mean_).subspan(r * dy_, dy_), y) - c_ * x[r];
  }
}

void ToyBilinearProblem::grad_y(ConstView x, ConstView y, View out) const {
  (void)y;
  fill(out, 0.0);
  for (std::size_t r = 0; r < dx_; ++r) {
    axpy(x[r], ConstView(a_mean_).subspan(r * dy_, dy_), out);
  }
}

std::optional<double> ToyBilinearProblem::exact_primal(ConstView x) const {
  // max over the simplex of a linear function = max over vertices
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dy_; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < dx_; ++r) s += a_mean_[r * dy_ + j] * x[r];
    best = std::max(best, s);
  }
  return best - 0.5 * c_ * nrm2sq(x);
}

bool ToyBilinearProblem::inner_argmin_x(ConstView y, ConstView z, double r,
                                        View out) const {
  if (!(r > c_)) return false;
  // K(.,z;y) is an isotropic strongly convex quadratic in x, so the box
  // projection of the unconstrained minimizer (r z - A y)/(r - c) is exact.
  const double q = r - c_;
  for (std::size_t row = 0; row < dx_; ++row) {
    const double ay = dot(ConstView(a_mean_).subspan(row * dy_, dy_), y);
    double v = (r * z[row] - ay) / q;
    if (v < -box_halfwidth_) v = -box_halfwidth_;
    if (v > box_halfwidth_) v = box_halfwidth_;
    out[row] = v;
  }
  return true;
}

// ---------------------------------------------------------------------------
// RobustLogisticProblem

RobustLogisticProblem::RobustLogisticProblem(Dataset data, const Options& opts)
    : data_(std::move(data)),
      opts_(opts),
      set_x_(FeasibleSet::box_uniform(1, -1.0, 1.0)),
      set_y_(FeasibleSet::simplex(1)) {
  if (data_.n == 0 || data_.d == 0) {
    throw std::invalid_argument("RobustLogisticProblem: empty dataset");
  }
  for (auto lbl : data_.labels) {
    if (lbl != -1 && lbl != 1) {
      throw std::invalid_argument("RobustLogisticProblem: labels must be -1/+1");
    }
  }
  lambda1_ = 0.0;
  if (opts_.lambda1_enabled) {
    lambda1_ = opts_.lambda1 > 0.0
                   ? opts_.lambda1
                   : 1.0 / (static_cast<double>(data_.n) * static_cast<double>(data_.n));
  }
  double max_row_sq = 0.0;
  for (std::size_t i = 0; i < data_.n; ++i) {
    double s = 0.0;
    for (std::uint64_t k = data_.row_ptr[i]; k < data_.row_ptr[i + 1]; ++k) {
      s += data_.val[k] * data_.val[k];
    }
    max_row_sq = std::max(max_row_sq, s);
  }
  lipschitz_ = 0.25 * max_row_sq + 2.0 * opts_.lambda2 * opts_.alpha;
  set_x_ = FeasibleSet::box_uniform(data_.d, -opts_.box_bound, opts_.box_bound);
  set_y_ = FeasibleSet::simplex(data_.n);
}

double RobustLogisticProblem::margin(std::size_t i, ConstView x) const {
  double s = 0.0;
  for (std::uint64_t k = data_.row_ptr[i]; k < data_.row_ptr[i + 1]; ++k) {
    s += data_.val[k] * x[data_.col[k]];
  }
  return static_cast<double>(data_.labels[i]) * s;
}

double RobustLogisticProblem::component_loss(std::size_t i, ConstView x) const {
  return softplus(-margin(i, x));
}

double RobustLogisticProblem::regularizer(ConstView x) const {
  double g = 0.0;
  for (double xj : x) {
    const double a2 = opts_.alpha * xj * xj;
    g += a2 / (1.0 + a2);
  }
  return opts_.lambda2 * g;
}

double RobustLogisticProblem::regularizer_grad_coord(double xj) const {
  const double denom = 1.0 + opts_.alpha * xj * xj;
  return opts_.lambda2 * 2.0 * opts_.alpha * xj / (denom * denom);
}

void RobustLogisticProblem::add_reg_grad(View out, ConstView x) const {
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] += regularizer_grad_coord(x[j]);
  }
}

double RobustLogisticProblem::value(ConstView x, ConstView y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < data_.n; ++i) {
    s += y[i] * component_loss(i, x);
  }
  s += regularizer(x);
  if (lambda1_ > 0.0) {
    double q = 0.0;
    const double n = static_cast<double>(data_.n);
    for (std::size_t i = 0; i < data_.n; ++i) {
      const double t = n * y[i] - 1.0;
      q += t * t;
    }
    s -= 0.5 * lambda1_ * q;
  }
  return s;
}

double RobustLogisticProblem::comp_value(std::size_t i, ConstView x,
                                         ConstView y) const {
  check_component(i);
  const double n = static_cast<double>(data_.n);
  double s = n * y[i] * component_loss(i, x) + regularizer(x);
  if (lambda1_ > 0.0) {
    double q = 0.0;
    for (std::size_t k = 0; k < data_.n; ++k) {
      const double t = n * y[k] - 1.0;
      q += t * t;
    }
    s -= 0.5 * lambda1_ * q;
  }
  return s;
}

void RobustLogisticProblem::comp_grad_x(std::size_t i, ConstView x, ConstView y,
                                        View out) const {
  check_component(i);
  fill(out, 0.0);
  const double n = static_cast<double>(data_.n);
  // d l_i / d m = sigma(m) - 1, with m the signed margin
  const double coeff =
      n * y[i] * (sigmoid(margin(i, x)) - 1.0) * static_cast<double>(data_.labels[i]);
  for (std::uint64_t k = data_.row_ptr[i]; k < data_.row_ptr[i + 1]; ++k) {
    out[data_.col[k]] = coeff * data_.val[k];
  }
  add_reg_grad(out, x);
}

void RobustLogisticProblem::comp_grad_y(std::size_t i, ConstView x, ConstView y,
                                        View out) const {
  check_component(i);
  fill(out, 0.0);
  const double n = static_cast<double>(data_.n);
  out[i] = n * component_loss(i, x);
  if (lambda1_ > 0.0) {
    for (std::size_t k = 0; k < data_.n; ++k) {
      out[k] -= lambda1_ * n * (n * y[k] - 1.0);
    }
  }
}

void RobustLogisticProblem::grad_x(ConstView x, ConstView y, View out) const {
  fill(out, 0.0);
  for (std::size_t i = 0; i < data_.n; ++i) {
    const double coeff = y[i] * (sigmoid(margin(i, x)) - 1.0) *
                         static_cast<double>(data_.labels[i]);
    for (std::uint64_t k = data_.row_ptr[i]; k < data_.row_ptr[i + 1]; ++k) {
      out[data_.col[k]] += coeff * data_.val[k];
    }
  }
  add_reg_grad(out, x);
}

void RobustLogisticProblem::grad_y(ConstView x, ConstView y, View out) const {
  const double n = static_cast<double>(data_.n);
  for (std::size_t i = 0; i < data_.n; ++i) {
    out[i] = component_loss(i, x);
    if (lambda1_ > 0.0) out[i] -= lambda1_ * n * (n * y[i] - 1.0);
  }
}

std::optional<double> RobustLogisticProblem::exact_primal(ConstView x) const {
  thread_local Vec losses;
  losses.resize(data_.n);
  for (std::size_t i = 0; i < data_.n; ++i) losses[i] = component_loss(i, x);
  if (lambda1_ <= 0.0) {
    return *std::max_element(losses.begin(), losses.end()) + regularizer(x);
  }
  // One simplex projection solves the strongly concave dual exactly:
  // max_y l'y - (lambda1 n^2 / 2)||y - 1/n||^2 at y* = P(1/n + l/(lambda1 n^2)).
  const double n = static_cast<double>(data_.n);
  const double w = lambda1_ * n * n;
  thread_local Vec target, ystar;
  target.resize(data_.n);
  ystar.resize(data_.n);
  for (std::size_t i = 0; i < data_.n; ++i) {
    target[i] = 1.0 / n + losses[i] / w;
  }
  set_y_.project(target, ystar);
  double s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < data_.n; ++i) {
    s += ystar[i] * losses[i];
    const double t = n * ystar[i] - 1.0;
    q += t * t;
  }
  return s - 0.5 * lambda1_ * q + regularizer(x);
}

// ---------------------------------------------------------------------------
// PoisonProblem

PoisonProblem::PoisonProblem(Dataset tr1, Dataset tr2, const Options& opts)
    : opts_(opts),
      set_x_(FeasibleSet::box_uniform(1, -1.0, 1.0)),
      set_y_(FeasibleSet::box_uniform(1, -1.0, 1.0)) {
  if (tr1.n == 0 || tr2.n == 0) {
    throw std::invalid_argument("PoisonProblem: both training subsets must be nonempty");
  }
  if (tr1.d != tr2.d) {
    throw std::invalid_argument("PoisonProblem: subset dimensions differ");
  }
  if (!(opts.epsilon > 0.0) || !(opts.theta_bound > 0.0)) {
    throw std::invalid_argument("PoisonProblem: need positive epsilon and theta bound");
  }
  n_tr1_ = tr1.n;
  n_tr2_ = tr2.n;
  d_ = tr1.d;
  rows_.assign((n_tr1_ + n_tr2_) * d_, 0.0);
  labels_.resize(n_tr1_ + n_tr2_);
  auto pack = [&](const Dataset& ds, std::size_t offset) {
    for (std::size_t i = 0; i < ds.n; ++i) {
      if (ds.labels[i] != 0 && ds.labels[i] != 1) {
        throw std::invalid_argument("PoisonProblem: labels must be 0/1");
      }
      labels_[offset + i] = ds.labels[i];
      double* dst = rows_.data() + (offset + i) * d_;
      for (std::uint64_t k = ds.row_ptr[i]; k < ds.row_ptr[i + 1]; ++k) {
        dst[ds.col[k]] = ds.val[k];
      }
    }
  };
  pack(tr1, 0);
  pack(tr2, n_tr1_);
  const double n_c = static_cast<double>(n_tr1_ + n_tr2_);
  scale_tr1_ = n_c / static_cast<double>(n_tr1_);
  scale_tr2_ = n_c / static_cast<double>(n_tr2_);
  set_x_ = FeasibleSet::inf_ball(Vec(d_, 0.0), opts.epsilon);
  set_y_ = FeasibleSet::box_uniform(d_, -opts.theta_bound, opts.theta_bound);
}

ConstView PoisonProblem::row(std::size_t i) const {
  return ConstView(rows_.data() + i * d_, d_);
}

int PoisonProblem::label(std::size_t i) const { return labels_[i]; }

double PoisonProblem::comp_value(std::size_t i, ConstView x, ConstView y) const {
  check_component(i);
  double v = dot(row(i), y);
  if (poisoned(i)) v += dot(x, y);
  const double t = static_cast<double>(label(i));
  // cross-entropy: t*softplus(-v) + (1-t)*softplus(v); the solver sees -f
  const double ce = t * softplus(-v) + (1.0 - t) * softplus(v);
  return -comp_scale(i) * ce;
}

double PoisonProblem::value(ConstView x, ConstView y) const {
  double s = 0.0;
  const std::size_t n = components();
  for (std::size_t i = 0; i < n; ++i) {
    double v = dot(row(i), y);
    if (poisoned(i)) v += dot(x, y);
    const double t = static_cast<double>(label(i));
    s += comp_scale(i) * (t * softplus(-v) + (1.0 - t) * softplus(v));
  }
  return -s / static_cast<double>(n);
}

void PoisonProblem::comp_grad_x(std::size_t i, ConstView x, ConstView y,
                                View out) const {
  check_component(i);
  if (!poisoned(i)) {
    fill(out, 0.0);
    return;
  }
  double v = dot(row(i), y) + dot(x, y);
  const double coeff =
      -comp_scale(i) * (sigmoid(v) - static_cast<double>(label(i)));
  for (std::size_t j = 0; j < d_; ++j) out[j] = coeff * y[j];
}

void PoisonProblem::comp_grad_y(std::size_t i, ConstView x, ConstView y,
                                View out) const {
  check_component(i);
  double v = dot(row(i), y);
  const bool pois = poisoned(i);
  if (pois) v += dot(x, y);
  const double coeff =
      -comp_scale(i) * (sigmoid(v) - static_cast<double>(label(i)));
  ConstView zi = row(i);
  for (std::size_t j = 0; j < d_; ++j) {
    out[j] = coeff * (zi[j] + (pois ? x[j] : 0.0));
  }
}

double PoisonProblem::lipschitz_estimate() const {
  if (lipschitz_ > 0.0) return lipschitz_;
  // Sampled-pair difference quotient within a region where iterates
  // actually live, with a 1.5x safety factor.
  RngStream rng(opts_.estimate_seed, fnv1a("poison-lipschitz"));
  const double rx = opts_.epsilon;
  const double ry = std::min(opts_.theta_bound, opts_.sample_radius);
  Vec x1(d_), y1(d_), x2(d_), y2(d_), g1x(d_), g1y(d_), g2x(d_), g2y(d_);
  double best = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    for (std::size_t j = 0; j < d_; ++j) {
      x1[j] = rx * (2.0 * rng.uniform() - 1.0);
      x2[j] = rx * (2.0 * rng.uniform() - 1.0);
      y1[j] = ry * (2.0 * rng.uniform() - 1.0);
      y2[j] = ry * (2.0 * rng.uniform() - 1.0);
    }
    grad_x(x1, y1, g1x);
    grad_y(x1, y1, g1y);
    grad_x(x2, y2, g2x);
    grad_y(x2, y2, g2y);
    const double dist = dist2(x1, x2) + dist2(y1, y2);
    if (dist < 1e-9) continue;
    best = std::max(best, dist2(g1x, g2x) / dist);
    best = std::max(best, dist2(g1y, g2y) / dist);
  }
  lipschitz_ = 1.5 * best;
  return lipschitz_;
}

double poison_accuracy(const Dataset& test, ConstView theta) {
  if (test.n == 0) throw std::invalid_argument("poison_accuracy: empty dataset");
  for (double v : theta) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("poison_accuracy: nonfinite parameters");
    }
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.n; ++i) {
    double logit = 0.0;
    for (std::uint64_t k = test.row_ptr[i]; k < test.row_ptr[i + 1]; ++k) {
      logit += test.val[k] * theta[test.col[k]];
    }
    // sigmoid(logit) > 0.5 iff logit > 0
    const int pred = logit > 0.0 ? 1 : 0;
    if (pred == test.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.n);
}

}  // namespace ncc
