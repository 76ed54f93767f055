#pragma once

#include <vector>

#include "shadow/orbit.hpp"

namespace shadow {

inline constexpr Index kDefaultRenormEvery = 10;
inline constexpr Index kDefaultTangentSpinup = 200;
inline constexpr Index kDefaultAdjointSpinup = 200;

/// A sequence of tangent vectors attached to consecutive orbit steps.
struct TangentSeq {
  enum class Kind { Homogeneous, Inhomogeneous };

  Index first_step = 0;
  Mat vectors; ///< dim x size; column j belongs to step first_step + j
  Kind kind = Kind::Inhomogeneous;

  Index size() const { return vectors.cols(); }
  StepRange steps() const { return {first_step, first_step + size()}; }
  Eigen::Block<const Mat, Eigen::Dynamic, 1, true> at(Index step) const {
    return vectors.col(step - first_step);
  }
};

enum class Direction { Forward, Backward };

/// QR factor recorded when a propagated basis is renormalized.
struct RenormRecord {
  Index step = 0;     ///< step at which the QR was taken
  Index interval = 0; ///< map applications since the previous QR
  Mat R;              ///< upper triangular, positive diagonal
};

/// Orthonormal bases of a propagated family of m homogeneous tangent
/// (Forward) or adjoint (Backward) solutions, stored at every step, plus the
/// triangular renormalization factors.
class BasisSeq {
public:
  BasisSeq(Direction direction, Index dim, Index rank, StepRange steps,
           Index renorm_every);

  Direction direction() const { return direction_; }
  Index dim() const { return dim_; }
  Index rank() const { return rank_; }
  Index renorm_every() const { return renorm_every_; }
  StepRange steps() const { return steps_; }
  const std::vector<RenormRecord> &records() const { return records_; }

  /// dim x rank orthonormal basis at `step`.
  using ConstBlock = Eigen::Block<const Mat, Eigen::Dynamic, Eigen::Dynamic, true>;
  ConstBlock Q(Index step) const;

  void set_Q(Index step, MatRef q);
  void add_record(RenormRecord record);

private:
  Index offset(Index step) const;

  Direction direction_;
  Index dim_;
  Index rank_;
  StepRange steps_;
  Index renorm_every_;
  Mat q_;
  std::vector<RenormRecord> records_;
};

/// Pushes the columns of W0 (attached to step 0) forward along the whole
/// orbit with the tangent map, QR-renormalizing every `renorm_every` steps.
/// After a tangent spin-up span(Q_k) approximates the unstable subspace.
/// Throws DegenerateBasisError on rank collapse.
BasisSeq propagate_homogeneous(const SystemModel &model, const Orbit &orbit,
                               MatRef W0,
                               Index renorm_every = kDefaultRenormEvery);

/// Pulls the columns of A_end (attached to the last step) backward with the
/// adjoint map a_k = f_*^T(u_k) a_{k+1}. After an adjoint spin-up span(Q_k)
/// approximates the adjoint unstable subspace, which is orthogonal to the
/// stable subspace.
BasisSeq propagate_adjoint_homogeneous(const SystemModel &model,
                                       const Orbit &orbit, MatRef A_end,
                                       Index renorm_every = kDefaultRenormEvery);

/// v_{k+1} = f_* v_k + X_{k+1} from v_{range.begin} = v0, without
/// renormalization. Throws SegmentTooLongError once |v| exceeds 1e100.
TangentSeq propagate_inhomogeneous(const SystemModel &model, const Orbit &orbit,
                                   VecRef v0, StepRange range);
TangentSeq propagate_inhomogeneous(const SystemModel &model, const Orbit &orbit,
                                   VecRef v0);

/// Lyapunov exponents from the renormalization records, largest first,
/// skipping records that touch the first `discard_steps` steps of the
/// propagation. Needs at least 100 records.
std::vector<double> lyapunov_exponents(const BasisSeq &basis,
                                       Index discard_steps = 0);

} // namespace shadow
