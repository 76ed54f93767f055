#include "shadow/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "shadow/errors.hpp"
#include "shadow/linalg.hpp"

namespace shadow {

namespace {

constexpr double kCollapse = 1e-300;
constexpr double kOverflow = 1e100;

ThinQR checked_qr(MatRef w, Index step) {
  if (!w.allFinite())
    throw DegenerateBasisError("basis became non-finite", step);
  ThinQR qr = thin_qr(w);
  for (Index j = 0; j < qr.R.rows(); ++j)
    if (qr.R(j, j) < kCollapse)
      throw DegenerateBasisError("basis lost rank", step);
  return qr;
}

/// Shared driver for forward tangent and backward adjoint propagation.
BasisSeq propagate_basis(const SystemModel &model, const Orbit &orbit,
                         MatRef start, Index renorm_every, Direction direction) {
  const Index M = model.dim(), m = start.cols(), n = orbit.size();
  if (start.rows() != M)
    throw std::invalid_argument("initial basis has wrong row count");
  if (m > M)
    throw std::invalid_argument("initial basis has more columns than dimensions");
  if (renorm_every < 1)
    throw std::invalid_argument("renorm_every must be at least 1");

  BasisSeq basis(direction, M, m, orbit.steps(), renorm_every);
  if (m == 0)
    return basis;

  const bool forward = direction == Direction::Forward;
  const Index first = forward ? 0 : n - 1;
  const Index stride = forward ? 1 : -1;
  const double s = orbit.parameter();

  ThinQR qr = checked_qr(start, first);
  const double scale = qr.R.diagonal().cwiseAbs().maxCoeff();
  if (qr.R.diagonal().minCoeff() <= 1e-12 * scale)
    throw DegenerateBasisError("initial basis columns are linearly dependent",
                               first);
  Mat w = qr.Q;
  basis.set_Q(first, w);

  Index since = 0;
  for (Index i = 1; i < n; ++i) {
    const Index k = first + stride * i;
    // forward: w_k = f_*(u_{k-1}) w_{k-1}; backward: a_k = f_*^T(u_k) a_{k+1}
    w = forward ? model.jvp_columns(orbit.state(k - 1), w, s)
                : model.vjp_columns(orbit.state(k), w, s);
    ++since;
    const bool last = i == n - 1;
    if (since == renorm_every || last) {
      ThinQR f = checked_qr(w, k);
      basis.add_record({k, since, f.R});
      w = std::move(f.Q);
      since = 0;
      basis.set_Q(k, w);
    } else {
      if (!w.allFinite() || w.norm() > kOverflow)
        throw DegenerateBasisError("basis overflowed between renormalizations",
                                   k);
      basis.set_Q(k, checked_qr(w, k).Q);
    }
  }
  return basis;
}

} // namespace

BasisSeq::BasisSeq(Direction direction, Index dim, Index rank, StepRange steps,
                   Index renorm_every)
    : direction_(direction), dim_(dim), rank_(rank), steps_(steps),
      renorm_every_(renorm_every), q_(Mat::Zero(dim, rank * steps.size())) {}

Index BasisSeq::offset(Index step) const {
  if (!steps_.contains(step))
    throw std::out_of_range("basis has no entry for step " + std::to_string(step));
  return (step - steps_.begin) * rank_;
}

BasisSeq::ConstBlock BasisSeq::Q(Index step) const {
  return q_.middleCols(offset(step), rank_);
}

void BasisSeq::set_Q(Index step, MatRef q) {
  q_.middleCols(offset(step), rank_) = q;
}

void BasisSeq::add_record(RenormRecord record) {
  records_.push_back(std::move(record));
}

BasisSeq propagate_homogeneous(const SystemModel &model, const Orbit &orbit,
                               MatRef W0, Index renorm_every) {
  return propagate_basis(model, orbit, W0, renorm_every, Direction::Forward);
}

BasisSeq propagate_adjoint_homogeneous(const SystemModel &model,
                                       const Orbit &orbit, MatRef A_end,
                                       Index renorm_every) {
  return propagate_basis(model, orbit, A_end, renorm_every, Direction::Backward);
}

TangentSeq propagate_inhomogeneous(const SystemModel &model, const Orbit &orbit,
                                   VecRef v0, StepRange range) {
  if (!orbit.steps().covers(range) || range.size() < 1)
    throw std::invalid_argument("inhomogeneous propagation range outside orbit");
  if (v0.size() != model.dim())
    throw std::invalid_argument("initial tangent vector has wrong length");
  const double s = orbit.parameter();
  TangentSeq seq;
  seq.first_step = range.begin;
  seq.kind = TangentSeq::Kind::Inhomogeneous;
  seq.vectors.resize(model.dim(), range.size());
  Vec v = v0;
  seq.vectors.col(0) = v;
  for (Index k = range.begin + 1; k < range.end; ++k) {
    const auto u = orbit.state(k - 1);
    v = model.jvp(u, v, s) + model.forcing(u, s);
    if (!v.allFinite() || v.norm() > kOverflow)
      throw SegmentTooLongError("inhomogeneous tangent solution overflowed", k);
    seq.vectors.col(k - range.begin) = v;
  }
  return seq;
}

TangentSeq propagate_inhomogeneous(const SystemModel &model, const Orbit &orbit,
                                   VecRef v0) {
  return propagate_inhomogeneous(model, orbit, v0, orbit.steps());
}

std::vector<double> lyapunov_exponents(const BasisSeq &basis,
                                       Index discard_steps) {
  const StepRange steps = basis.steps();
  const bool forward = basis.direction() == Direction::Forward;
  Vec sum = Vec::Zero(basis.rank());
  Index length = 0, used = 0;
  for (const RenormRecord &rec : basis.records()) {
    // distance of the interval's origin from where propagation started
    const Index origin = forward ? rec.step - rec.interval - steps.begin
                                 : steps.end - 1 - (rec.step + rec.interval);
    if (origin < discard_steps)
      continue;
    sum += rec.R.diagonal().array().log().matrix();
    length += rec.interval;
    ++used;
  }
  if (used < 100)
    throw InsufficientDataError("Lyapunov estimate needs at least 100 "
                                "renormalization records, have " +
                                std::to_string(used));
  std::vector<double> out(static_cast<std::size_t>(basis.rank()));
  for (Index j = 0; j < basis.rank(); ++j)
    out[static_cast<std::size_t>(j)] = sum[j] / static_cast<double>(length);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

} // namespace shadow
