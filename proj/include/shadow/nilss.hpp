#pragma once

#include <vector>

#include "shadow/tangent.hpp"

namespace shadow {

inline constexpr double kMaxSegmentGrowth = 1e6;
inline constexpr double kRankDeficientCondition = 1e12;

struct Segment {
  Index begin = 0; ///< first orbit step of the segment
  Index end = 0;   ///< one past the last step
};

/// Minimizer of sum_k |v_k|^2 over inhomogeneous tangent solutions
/// v = v' + sum_j w_j a_j, where v' starts from zero at the first window step
/// and the w_j span the unstable subspace.
struct ShadowingSolution {
  TangentSeq v;
  std::vector<Segment> segments;
  /// Coefficients a_i of the per-segment homogeneous basis.
  std::vector<Vec> coefficients;
  /// sum_k |v_k|^2 over the window.
  double objective_norm = 0.0;
  /// max_j |<v, w_j>_K| / (|v|_K |w_j|_K) over a basis of the feasible
  /// homogeneous directions; zero at the exact minimizer.
  double optimality_residual = 0.0;
  /// Condition number of the reduced m x m coefficient system.
  double condition = 1.0;
  /// Set when the reduced system was numerically singular and the
  /// minimum-norm coefficient vector was returned.
  bool rank_deficient = false;
  /// Segment whose homogeneous block was worst conditioned.
  Index worst_segment = 0;
  double worst_segment_condition = 1.0;
};

/// Segment length keeping the expected growth per segment below
/// `max_growth`, from the largest Lyapunov exponent in `tangent`.
Index default_segment_length(const BasisSeq &tangent,
                             double max_growth = kMaxSegmentGrowth);

/// Solves the non-intrusive least-squares shadowing problem on `window`.
///
/// The window is cut into segments of `segment_len` steps. Inside a segment
/// the inhomogeneous solution and m homogeneous solutions are pushed forward
/// from the segment start; at each interface the homogeneous block is
/// QR-orthonormalized and the inhomogeneous solution is restarted from its
/// component orthogonal to that block, with continuity of v carried by the
/// linear relation a_{i+1} = R a_i + b. The resulting equality-constrained
/// least squares is algebraically identical to the single global problem.
///
/// The initial homogeneous block is tangent.Q(window.begin), which must span
/// the unstable subspace (run a tangent spin-up first).
ShadowingSolution solve_nilss(const SystemModel &model, const Orbit &orbit,
                              const BasisSeq &tangent, StepRange window,
                              Index segment_len);

/// J_u(u_k) v_k for every step of v.
std::vector<double> objective_derivative_series(const SystemModel &model,
                                                const Orbit &orbit,
                                                const TangentSeq &v);

/// (1/K) sum_k J_u(u_k) v_k over the steps of v, with batch-means error.
Estimate objective_derivative_average(const SystemModel &model,
                                      const Orbit &orbit, const TangentSeq &v);

/// Shadowing contribution of the linear response estimated from a solution.
Estimate shadowing_contribution(const ShadowingSolution &solution,
                                const Orbit &orbit, const SystemModel &model);

/// max_k |v_{k+1} - f_* v_k - X_{k+1}| divided by rms_k |f_* v_k| +
/// rms_k |X_{k+1}|. The scale is window-wide: pointwise ratios blow up at
/// steps where v and X both pass near zero even though the absolute defect
/// is at roundoff level.
double recurrence_residual(const SystemModel &model, const Orbit &orbit,
                           const TangentSeq &v);

} // namespace shadow
