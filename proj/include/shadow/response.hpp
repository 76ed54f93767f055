#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shadow/nilss.hpp"
#include "shadow/orbit.hpp"
#include "shadow/subspace.hpp"

namespace shadow {

inline constexpr Index kDefaultTruncation = 40;
inline constexpr Index kDefaultCorrectionBack = 8;
inline constexpr Index kDefaultCorrectionForward = 1;
inline constexpr int kReportSchemaVersion = 1;

/// Truncated explicit shadowing direction
///   v_k = sum_{n=0}^{N_f} f_*^n X^-_{k-n} - sum_{n=1}^{N_b} f_*^{-n} X^+_{k+n}.
struct ExplicitShadowing {
  TangentSeq v;
  /// Largest norm of the last retained stable or unstable term over a
  /// sample of steps; the neglected tail is of the same order.
  double truncation = 0.0;
};

/// Evaluates the truncated sums on `window`. Frames must cover
/// [window.begin - N_f, window.end + N_b) and window.begin - N_f >= 1 so the
/// earliest forcing X_j = df/ds(u_{j-1}) exists. Unstable components are
/// pulled back through the inverse m x m reduced map, so f is never inverted.
ExplicitShadowing explicit_shadowing_direction(const Orbit &orbit,
                                               const FrameSeq &frames,
                                               const SystemModel &model,
                                               StepRange window, Index N_f,
                                               Index N_b);

struct TermEstimate {
  Index n = 0;
  Estimate estimate;
};

struct CorrectionResult {
  Index N_back = 0;
  Index N = 0;
  /// One entry per n in [-N_back, N-1], ascending.
  std::vector<TermEstimate> terms;
  Estimate total;
  /// Per-step sum over n of J_u(u_{k+n}) f_*^n X^+_k, aligned with window.
  std::vector<double> series;
};

/// Partial sum of sum_n rho<grad(J o f^n), X^+> over n in [-N_back, N-1],
/// each term estimated as the time average over the window of
/// J_u(u_{k+n}) (f_*^n X^+_k). Forward terms push X^+_k with the tangent map;
/// backward terms pull its unstable coordinates back with the reduced map.
CorrectionResult correction_term(const Orbit &orbit, const FrameSeq &frames,
                                 const SystemModel &model, StepRange window,
                                 Index N_back, Index N);

struct RuelleResult {
  Index N_r = 0;
  /// One entry per n in [0, N_r].
  std::vector<TermEstimate> terms;
  /// Sample variance of each term's integrand along the window.
  std::vector<double> term_variance;
  Estimate total;
  /// Set when the total's standard error exceeds the variance budget.
  bool budget_exceeded = false;
};

/// sum_{n=0}^{N_r} of time averages of J_u(u_{k+n}) f_*^n X_k. The integrand
/// grows like the expansion rate to the power n, so large N_r needs very
/// long windows; `budget` caps the acceptable standard error.
RuelleResult direct_ruelle(const Orbit &orbit, const SystemModel &model,
                           StepRange window, Index N_r,
                           double budget = std::numeric_limits<double>::infinity());

struct FiniteDifferenceResult {
  double value = 0.0;
  double std_error = 0.0;
  double half_width = 0.0; ///< two standard errors across seeds
  std::vector<double> per_seed;
};

/// Central difference (<J>(s+ds) - <J>(s-ds)) / (2 ds), one K-step average
/// per seed and side. Both sides of a seed start from the same initial
/// condition, which cancels most of the sampling noise.
FiniteDifferenceResult finite_difference(const SystemModel &model, double s,
                                         double delta_s, Index K,
                                         std::span<const std::uint64_t> seeds,
                                         Index spinup = kDefaultSpinup);

/// `count` distinct seeds derived from `base`.
std::vector<std::uint64_t> seed_list(std::uint64_t base, Index count);

struct ErrorProfile {
  /// |v^N_k - v^oracle_k| per window step.
  std::vector<double> norms;
  /// Decay rate per step of the error moving away from the first step; NaN
  /// when the error does not start above the plateau.
  double forward_rate = std::numeric_limits<double>::quiet_NaN();
  /// Same, moving backward from the last step.
  double backward_rate = std::numeric_limits<double>::quiet_NaN();
  Index forward_points = 0;
  Index backward_points = 0;
  /// Median error over the middle half of the window.
  double plateau = 0.0;
};

ErrorProfile shadowing_error_profile(const TangentSeq &v_nilss,
                                     const TangentSeq &v_oracle);
ErrorProfile shadowing_error_profile(const ShadowingSolution &solution,
                                     const TangentSeq &v_oracle);

struct SensitivityReport {
  std::string system;
  Index M = 0;
  Index m = 0;
  double s = 0.0;
  Index K = 0;
  Index spinup = 0;
  Index tangent_spinup = 0;
  Index adjoint_spinup = 0;
  Index segment_len = 0;
  Index renorm_every = 0;
  std::uint64_t seed = 0;

  Estimate shadowing;
  Index N_back = 0;
  Index N = 0;
  Estimate correction;
  std::vector<TermEstimate> correction_terms;
  /// value is exactly shadowing.value + correction.value; the error bar
  /// comes from the summed per-step series.
  Estimate corrected_total;

  Index N_f = 0;
  Index N_b = 0;
  std::optional<Estimate> oracle_contribution;
  double oracle_truncation = 0.0;

  double delta_s = 0.0;
  Index fd_K = 0;
  Index fd_seeds = 0;
  std::optional<FiniteDifferenceResult> fd_oracle;

  std::optional<RuelleResult> ruelle_direct;

  double optimality_residual = 0.0;
  double recurrence_residual = 0.0;
  double nilss_condition = 1.0;
  bool rank_deficient = false;
  double min_splitting_angle = 0.0;
  std::vector<double> lyapunov;
};

/// Fills the shadowing, correction and corrected-total fields from the
/// per-step series of J_u v and of the correction integrand.
SensitivityReport assemble_report(std::span<const double> shadowing_series,
                                  const CorrectionResult &correction);

struct PipelineConfig {
  double s = 0.0;
  Index K = 10000;
  Index spinup = kDefaultSpinup;
  Index tangent_spinup = kDefaultTangentSpinup;
  Index adjoint_spinup = kDefaultAdjointSpinup;
  Index segment_len = 0; ///< 0 picks default_segment_length
  Index renorm_every = kDefaultRenormEvery;
  Index N_back = kDefaultCorrectionBack;
  Index N = kDefaultCorrectionForward;
  bool oracle = true;
  Index N_f = kDefaultTruncation;
  Index N_b = kDefaultTruncation;
  double delta_s = 1e-2;
  Index fd_seeds = 0; ///< 0 skips the finite-difference oracle
  Index fd_K = 0;     ///< 0 uses K
  std::optional<Index> N_r;
  double ruelle_budget = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
};

/// Orbit layout, in steps:
///   [tangent spin-up | past buffer | window K | future buffer | adjoint spin-up]
struct PipelineLayout {
  Index total = 0;
  StepRange window;
  StepRange frames;
};

PipelineLayout pipeline_layout(const PipelineConfig &config);

struct PipelineResult {
  PipelineLayout layout;
  Orbit orbit;
  BasisSeq tangent;
  BasisSeq adjoint;
  FrameSeq frames;
  ShadowingSolution nilss;
  std::optional<ExplicitShadowing> oracle;
  CorrectionResult correction;
  SensitivityReport report;
};

/// orbit -> tangent and adjoint bases -> frames -> NILSS -> correction and
/// oracles -> report. The unstable dimension is model.num_unstable().
PipelineResult run_pipeline(const SystemModel &model,
                            const PipelineConfig &config);

/// JSON document with a schema_version field.
std::string report_to_json(const SensitivityReport &report);

/// Flat CSV: fixed column order, one row per report, 17 significant digits.
/// Optional fields are left empty.
std::string report_csv_header();
std::string report_csv_row(const SensitivityReport &report);

} // namespace shadow
