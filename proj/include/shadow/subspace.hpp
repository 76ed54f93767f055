#pragma once

#include <vector>

#include "shadow/tangent.hpp"

namespace shadow {

inline constexpr double kMaxSplittingCondition = 1e8;

/// Hyperbolic splitting at one orbit step, built from converged tangent and
/// adjoint unstable bases. The stable subspace is recovered as the orthogonal
/// complement of the adjoint unstable subspace.
struct SplittingFrame {
  Index step = 0;
  Mat W; ///< M x m orthonormal basis of the unstable subspace
  Mat A; ///< M x m orthonormal basis of the adjoint unstable subspace
  Mat S; ///< M x (M-m) orthonormal basis of the stable subspace, S = A^perp
  /// m x M operator giving the W-coordinates of the unstable component,
  /// c = (A^T W)^{-1} A^T X.
  Mat unstable_coords;
  /// m x m matrix of f_*(u_k) restricted to the unstable subspace, from
  /// W_k-coordinates to W_{k+1}-coordinates. Empty when step k+1 has no
  /// tangent basis.
  Mat to_next;
  /// Inverse of to_next: pulls unstable coordinates back one step.
  Mat from_next;
  double condition = 1.0; ///< 1 / sigma_min(A^T W), the oblique projector norm
};

/// Frames for a contiguous range of steps.
class FrameSeq {
public:
  FrameSeq() = default;
  FrameSeq(Index first_step, std::vector<SplittingFrame> frames);

  StepRange steps() const { return {first_, first_ + size()}; }
  Index size() const { return static_cast<Index>(frames_.size()); }
  /// Throws NeedsLongerOrbitError when `step` has no frame.
  const SplittingFrame &at(Index step) const;
  const std::vector<SplittingFrame> &frames() const { return frames_; }

private:
  Index first_ = 0;
  std::vector<SplittingFrame> frames_;
};

/// Builds one frame per step of `range`. Both bases must cover the range;
/// callers pick the range to exclude the tangent spin-up at the start and
/// the adjoint spin-up at the end. Throws SplittingDegenerateError when
/// cond(A^T W) exceeds 1e8.
FrameSeq build_frames(const SystemModel &model, const Orbit &orbit,
                      const BasisSeq &tangent, const BasisSeq &adjoint,
                      StepRange range);

/// Coordinates c of X^+ = W c, from (A^T W) c = A^T X.
Vec unstable_coordinates(const SplittingFrame &frame, VecRef X);

/// Oblique projection of X onto the unstable subspace along the stable one.
Vec project_unstable(const SplittingFrame &frame, VecRef X);

/// X^- = X - X^+.
Vec project_stable(const SplittingFrame &frame, VecRef X);

inline const Mat &stable_basis(const SplittingFrame &frame) { return frame.S; }

/// Smallest principal angle between the unstable and stable subspaces of
/// one frame; pi/2 when either subspace is trivial.
double splitting_angle(const SplittingFrame &frame);

/// Minimum of splitting_angle over all frames.
double min_angle(const FrameSeq &frames);

} // namespace shadow
