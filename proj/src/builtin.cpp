#include "shadow/builtin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shadow {

namespace {

Vec scalar(double x) { return Vec::Constant(1, x); }

std::vector<bool> leading_periodic(Index dim, Index count) {
  std::vector<bool> flags(static_cast<std::size_t>(dim), false);
  for (Index i = 0; i < count; ++i)
    flags[static_cast<std::size_t>(i)] = true;
  return flags;
}

} // namespace

// ---------------------------------------------------------------------------
// ExpandingCircle

ExpandingCircle::ExpandingCircle(std::optional<Index> declared_unstable)
    : SystemModel(1, declared_unstable.value_or(1), {true}) {}

Vec ExpandingCircle::do_step(VecRef u, double s) const {
  return scalar(2.0 * u[0] + s * std::sin(u[0]));
}

Vec ExpandingCircle::do_jvp(VecRef u, VecRef w, double s) const {
  return scalar((2.0 + s * std::cos(u[0])) * w[0]);
}

Vec ExpandingCircle::do_vjp(VecRef u, VecRef a, double s) const {
  return do_jvp(u, a, s);
}

Vec ExpandingCircle::do_forcing(VecRef u, double) const {
  return scalar(std::sin(u[0]));
}

double ExpandingCircle::do_objective(VecRef u) const { return std::cos(u[0]); }

Vec ExpandingCircle::do_objective_gradient(VecRef u) const {
  return scalar(-std::sin(u[0]));
}

// ---------------------------------------------------------------------------
// PerturbedCatMap

PerturbedCatMap::PerturbedCatMap(std::optional<Index> declared_unstable)
    : SystemModel(2, declared_unstable.value_or(1), {true, true}) {}

Vec PerturbedCatMap::do_step(VecRef u, double s) const {
  Vec out(2);
  out << 2.0 * u[0] + u[1] + s * std::sin(u[0]), u[0] + u[1];
  return out;
}

Vec PerturbedCatMap::do_jvp(VecRef u, VecRef w, double s) const {
  Vec out(2);
  out << (2.0 + s * std::cos(u[0])) * w[0] + w[1], w[0] + w[1];
  return out;
}

Vec PerturbedCatMap::do_vjp(VecRef u, VecRef a, double s) const {
  Vec out(2);
  out << (2.0 + s * std::cos(u[0])) * a[0] + a[1], a[0] + a[1];
  return out;
}

Vec PerturbedCatMap::do_forcing(VecRef u, double) const {
  Vec out(2);
  out << std::sin(u[0]), 0.0;
  return out;
}

double PerturbedCatMap::do_objective(VecRef u) const { return std::cos(u[0]); }

Vec PerturbedCatMap::do_objective_gradient(VecRef u) const {
  Vec out(2);
  out << -std::sin(u[0]), 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Solenoid

Solenoid::Solenoid(SolenoidParams params, std::optional<Index> declared_unstable)
    : SystemModel(3, declared_unstable.value_or(1), {true, false, false}),
      params_(params) {
  if (!(params_.contraction > 0.0 && params_.contraction < 1.0))
    throw std::invalid_argument("solenoid contraction must lie in (0, 1)");
  if (!(params_.radius > 0.0))
    throw std::invalid_argument("solenoid radius must be positive");
}

Vec Solenoid::do_step(VecRef u, double s) const {
  const double c = params_.contraction, r = params_.radius;
  Vec out(3);
  out << 2.0 * u[0] + s * std::sin(u[0]), c * u[1] + r * std::cos(u[0]),
      c * u[2] + r * std::sin(u[0]);
  return out;
}

Vec Solenoid::do_jvp(VecRef u, VecRef w, double s) const {
  const double c = params_.contraction, r = params_.radius;
  Vec out(3);
  out << (2.0 + s * std::cos(u[0])) * w[0],
      -r * std::sin(u[0]) * w[0] + c * w[1],
      r * std::cos(u[0]) * w[0] + c * w[2];
  return out;
}

Vec Solenoid::do_vjp(VecRef u, VecRef a, double s) const {
  const double c = params_.contraction, r = params_.radius;
  Vec out(3);
  out << (2.0 + s * std::cos(u[0])) * a[0] - r * std::sin(u[0]) * a[1] +
             r * std::cos(u[0]) * a[2],
      c * a[1], c * a[2];
  return out;
}

Vec Solenoid::do_forcing(VecRef u, double) const {
  Vec out = Vec::Zero(3);
  out[0] = std::sin(u[0]);
  return out;
}

double Solenoid::do_objective(VecRef u) const { return u[1]; }

Vec Solenoid::do_objective_gradient(VecRef) const {
  Vec out = Vec::Zero(3);
  out[1] = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// BlockHyperbolicLinear

Objective Objective::linear(Vec weights) {
  Objective o;
  o.kind = Kind::Linear;
  o.weights = std::move(weights);
  return o;
}

Objective Objective::cosine(Index coordinate) {
  Objective o;
  o.kind = Kind::Cosine;
  o.coordinate = coordinate;
  return o;
}

Objective Objective::sine(Index coordinate) {
  Objective o;
  o.kind = Kind::Sine;
  o.coordinate = coordinate;
  return o;
}

BlockHyperbolicLinear::BlockHyperbolicLinear(BlockHyperbolicParams params,
                                             std::optional<Index> declared_unstable)
    : SystemModel(params.dim, declared_unstable.value_or(params.unstable),
                  leading_periodic(params.dim, std::clamp<Index>(params.unstable, 0, params.dim))),
      params_(std::move(params)) {
  const Index M = params_.dim, m = params_.unstable;
  if (m < 0 || m > M)
    throw std::invalid_argument("block system needs 0 <= unstable <= dim");
  if (params_.expansion < 2.0 || params_.expansion != std::floor(params_.expansion))
    throw std::invalid_argument(
        "expansion must be an integer >= 2 so the map is continuous on the torus");
  if (!(params_.contraction > 0.0 && params_.contraction < 1.0))
    throw std::invalid_argument("contraction must lie in (0, 1)");
  if (params_.forcing.size() == 0)
    params_.forcing = Vec::Zero(M);
  if (params_.forcing.size() != M)
    throw std::invalid_argument("forcing vector must have length dim");
  const Objective &obj = params_.objective;
  if (obj.kind == Objective::Kind::Linear) {
    if (obj.weights.size() != M)
      throw std::invalid_argument("linear objective weights must have length dim");
  } else if (obj.coordinate < 0 || obj.coordinate >= M) {
    throw std::invalid_argument("objective coordinate out of range");
  }

  jacobian_ = Mat::Zero(M, M);
  for (Index i = 0; i < m; ++i)
    jacobian_(i, i) = params_.expansion;
  for (Index i = m; i < M; ++i)
    jacobian_(i, i) = params_.contraction;
  if (m > 0 && params_.shear != 0.0) {
    for (Index j = m; j < M; ++j)
      jacobian_((j - m) % m, j) = params_.shear;
  }
}

Vec BlockHyperbolicLinear::do_step(VecRef u, double s) const {
  return jacobian_ * u + s * params_.forcing;
}

Vec BlockHyperbolicLinear::do_jvp(VecRef, VecRef w, double) const {
  return jacobian_ * w;
}

Vec BlockHyperbolicLinear::do_vjp(VecRef, VecRef a, double) const {
  return jacobian_.transpose() * a;
}

Vec BlockHyperbolicLinear::do_forcing(VecRef, double) const {
  return params_.forcing;
}

double BlockHyperbolicLinear::do_objective(VecRef u) const {
  const Objective &obj = params_.objective;
  switch (obj.kind) {
  case Objective::Kind::Linear:
    return obj.weights.dot(u);
  case Objective::Kind::Cosine:
    return std::cos(u[obj.coordinate]);
  case Objective::Kind::Sine:
    return std::sin(u[obj.coordinate]);
  }
  return 0.0;
}

Vec BlockHyperbolicLinear::do_objective_gradient(VecRef u) const {
  const Objective &obj = params_.objective;
  if (obj.kind == Objective::Kind::Linear)
    return obj.weights;
  Vec g = Vec::Zero(dim());
  const double x = u[obj.coordinate];
  g[obj.coordinate] =
      obj.kind == Objective::Kind::Cosine ? -std::sin(x) : std::cos(x);
  return g;
}

} // namespace shadow
