#include "shadow/model.hpp"

#include <cmath>
#include <stdexcept>

#include "shadow/errors.hpp"

namespace shadow {

namespace {

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0)
    r += kTwoPi;
  // fmod of a tiny negative number can round back up to 2pi
  if (r >= kTwoPi)
    r = 0.0;
  return r;
}

} // namespace

SystemModel::SystemModel(Index dim, Index num_unstable,
                         std::vector<bool> periodic)
    : dim_(dim), num_unstable_(num_unstable), periodic_(std::move(periodic)) {
  if (dim_ < 1)
    throw std::invalid_argument("model dimension must be positive");
  if (num_unstable_ < 0 || num_unstable_ > dim_)
    throw std::invalid_argument("unstable dimension must lie in [0, dim], got " +
                                std::to_string(num_unstable_) + " for dim " +
                                std::to_string(dim_));
  if (static_cast<Index>(periodic_.size()) != dim_)
    throw std::invalid_argument("periodic flags must have one entry per coordinate");
}

void SystemModel::check_vector(VecRef x, const char *what) const {
  if (x.size() != dim_)
    throw InvalidStateError(std::string(what) + " has length " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(dim_));
  if (!x.allFinite())
    throw InvalidStateError(std::string(what) + " has non-finite components");
}

Vec SystemModel::step(VecRef u, double s) const {
  check_vector(u, "state");
  return wrap(do_step(u, s));
}

Vec SystemModel::jvp(VecRef u, VecRef w, double s) const {
  check_vector(u, "state");
  check_vector(w, "tangent vector");
  return do_jvp(u, w, s);
}

Vec SystemModel::vjp(VecRef u, VecRef a, double s) const {
  check_vector(u, "state");
  check_vector(a, "cotangent vector");
  return do_vjp(u, a, s);
}

Vec SystemModel::forcing(VecRef u, double s) const {
  check_vector(u, "state");
  return do_forcing(u, s);
}

double SystemModel::objective(VecRef u) const {
  check_vector(u, "state");
  return do_objective(u);
}

Vec SystemModel::objective_gradient(VecRef u) const {
  check_vector(u, "state");
  return do_objective_gradient(u);
}

Mat SystemModel::jvp_columns(VecRef u, MatRef w, double s) const {
  Mat out(dim_, w.cols());
  for (Index j = 0; j < w.cols(); ++j)
    out.col(j) = jvp(u, w.col(j), s);
  return out;
}

Mat SystemModel::vjp_columns(VecRef u, MatRef a, double s) const {
  Mat out(dim_, a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    out.col(j) = vjp(u, a.col(j), s);
  return out;
}

Vec SystemModel::wrap(Vec u) const {
  for (Index i = 0; i < dim_; ++i)
    if (periodic_[i])
      u[i] = wrap_angle(u[i]);
  return u;
}

Vec SystemModel::difference(VecRef a, VecRef b) const {
  Vec d = a - b;
  for (Index i = 0; i < dim_; ++i) {
    if (periodic_[i]) {
      d[i] = wrap_angle(d[i] + 0.5 * kTwoPi) - 0.5 * kTwoPi;
    }
  }
  return d;
}

Vec SystemModel::sample_initial(std::mt19937_64 &rng) const {
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  Vec u(dim_);
  for (Index i = 0; i < dim_; ++i)
    u[i] = periodic_[i] ? angle(rng) : box(rng);
  return u;
}

ModelDerivatives model_derivatives(const SystemModel &model, VecRef u_prev,
                                   VecRef u, double s) {
  const Vec image = model.step(u_prev, s);
  const double defect = model.difference(image, u).norm();
  if (defect > 1e-10 * (1.0 + u.norm()))
    throw ConsistencyError("state is not the image of the previous state, defect " +
                           std::to_string(defect));
  return {model.forcing(u_prev, s), model.objective(u),
          model.objective_gradient(u)};
}

} // namespace shadow
