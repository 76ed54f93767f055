#include "shadow/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "shadow/errors.hpp"
#include "shadow/linalg.hpp"
#include "shadow/parallel.hpp"

namespace shadow {

FrameSeq::FrameSeq(Index first_step, std::vector<SplittingFrame> frames)
    : first_(first_step), frames_(std::move(frames)) {}

const SplittingFrame &FrameSeq::at(Index step) const {
  if (!steps().contains(step))
    throw NeedsLongerOrbitError("no splitting frame at step " +
                                std::to_string(step) + "; frames cover [" +
                                std::to_string(first_) + ", " +
                                std::to_string(first_ + size()) + ")");
  return frames_[static_cast<std::size_t>(step - first_)];
}

FrameSeq build_frames(const SystemModel &model, const Orbit &orbit,
                      const BasisSeq &tangent, const BasisSeq &adjoint,
                      StepRange range) {
  if (tangent.direction() != Direction::Forward ||
      adjoint.direction() != Direction::Backward)
    throw std::invalid_argument("build_frames needs a tangent and an adjoint basis");
  if (tangent.rank() != adjoint.rank())
    throw std::invalid_argument("tangent and adjoint bases differ in rank");
  if (!tangent.steps().covers(range) || !adjoint.steps().covers(range))
    throw NeedsLongerOrbitError("bases do not cover the requested frame range");

  const Index m = tangent.rank();
  const double s = orbit.parameter();
  std::vector<SplittingFrame> frames(static_cast<std::size_t>(range.size()));

  parallel_for(range.size(), [&](Index i) {
    const Index k = range.begin + i;
    SplittingFrame &f = frames[static_cast<std::size_t>(i)];
    f.step = k;
    f.W = tangent.Q(k);
    f.A = adjoint.Q(k);
    f.S = orthogonal_complement(f.A);
    if (m > 0) {
      const Mat gram = f.A.transpose() * f.W;
      // W and A are orthonormal, so the largest singular value of A^T W is
      // at most 1 and 1 / sigma_min is the norm of the oblique projector.
      const auto sv = Eigen::JacobiSVD<Mat>(gram).singularValues();
      const double smallest = sv(sv.size() - 1);
      f.condition = smallest > 0.0 ? 1.0 / smallest
                                   : std::numeric_limits<double>::infinity();
      if (!(f.condition <= kMaxSplittingCondition))
        throw SplittingDegenerateError("unstable and adjoint unstable subspaces "
                                       "are nearly orthogonal",
                                       k, f.condition);
      f.unstable_coords = gram.colPivHouseholderQr().solve(f.A.transpose());
      if (tangent.steps().contains(k + 1)) {
        f.to_next = tangent.Q(k + 1).transpose() *
                    model.jvp_columns(orbit.state(k), f.W, s);
        f.from_next = f.to_next.partialPivLu().inverse();
      }
    } else {
      f.unstable_coords = Mat(0, model.dim());
      f.to_next = Mat(0, 0);
      f.from_next = Mat(0, 0);
    }
  });
  return FrameSeq(range.begin, std::move(frames));
}

Vec unstable_coordinates(const SplittingFrame &frame, VecRef X) {
  return frame.unstable_coords * X;
}

Vec project_unstable(const SplittingFrame &frame, VecRef X) {
  if (frame.W.cols() == 0)
    return Vec::Zero(X.size());
  return frame.W * (frame.unstable_coords * X);
}

Vec project_stable(const SplittingFrame &frame, VecRef X) {
  return X - project_unstable(frame, X);
}

double splitting_angle(const SplittingFrame &frame) {
  if (frame.W.cols() == 0 || frame.S.cols() == 0)
    return std::numbers::pi / 2.0;
  Eigen::JacobiSVD<Mat> svd(frame.W.transpose() * frame.S);
  const double largest = std::min(1.0, svd.singularValues()(0));
  return std::acos(largest);
}

double min_angle(const FrameSeq &frames) {
  double angle = std::numbers::pi / 2.0;
  for (const SplittingFrame &f : frames.frames())
    angle = std::min(angle, splitting_angle(f));
  return angle;
}

} // namespace shadow
