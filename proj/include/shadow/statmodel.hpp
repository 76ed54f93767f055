#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "shadow/builtin.hpp"
#include "shadow/response.hpp"
#include "shadow/stats.hpp"

namespace shadow {

/// Constant random fields: X and J_u independent standard normal in R^M.
struct RandomFieldSample {
  Vec X;
  Vec J_u;
  std::uint64_t seed = 0;
};

RandomFieldSample draw_random_field(Index M, std::uint64_t seed);

/// One row of a study table.
struct TableRow {
  Index M = 0;
  Index m = 0;
  Index K = 0;
  std::uint64_t seed = 0;
  std::string quantity;
  double value = 0.0;
};
using Table = std::vector<TableRow>;

/// Columns M,m,K,seed,quantity,value; 17 significant digits.
void write_table_csv(const Table &table, std::ostream &out);

struct BoundCheckResult {
  Index M = 0;
  Index m = 0;
  Index trials = 0;
  /// Monte-Carlo (E (J_u X)^2)^{1/2}, which should approach sqrt(M).
  Estimate norm_full;
  /// Monte-Carlo (E (J_u X^+)^2)^{1/2}.
  Estimate norm_unstable;
  /// norm_unstable / norm_full with a delta-method standard error.
  Estimate ratio;
  /// Square of the ratio, compared with m/M for orthogonal splittings.
  Estimate ratio_squared;
  /// Mean and max over draws of |J_u X^+| / |J_u X|; diagnostics only,
  /// the bound is an expectation-level statement.
  double mean_draw_ratio = 0.0;
  double max_draw_ratio = 0.0;
  double sin_alpha = 1.0;
  double bound = 0.0; ///< sqrt(m/M) / sin(alpha)
  /// 1 when ratio - 3 std_error exceeds the bound, else 0.
  Index violations = 0;
};

/// Monte-Carlo check of |J_u X^+| / |J_u X| <= sqrt(m/M) / sin(alpha), with
/// the splitting taken from frames along an orbit of `system`.
BoundCheckResult check_projection_bound(const BlockHyperbolicLinear &system,
                                        Index trials, std::uint64_t seed = 1);

struct ScalingConfig {
  /// (M, m) pairs.
  std::vector<std::pair<Index, Index>> configs{{8, 1}, {8, 2}, {8, 4}};
  Index trials = 200;
  Index K = 2000;          ///< NILSS window
  Index fd_K = 20000;      ///< steps per finite-difference average
  Index fd_seeds = 4;
  /// <J> is exactly linear in s for the test family, so a wide step only
  /// reduces the noise.
  double delta_s = 0.5;
  double expansion = 2.0;
  double contraction = 0.5;
  std::uint64_t seed = 1;
};

struct ScalingPoint {
  Index M = 0;
  Index m = 0;
  /// RMS over trials of |shadowing - fd_oracle| / sqrt(M).
  Estimate relative_error;
  double predicted = 0.0; ///< sqrt(m/M)
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  /// log-log fit of relative error against m/M over points with m > 0.
  LinearFit fit;
  /// Smallest C with relative error <= C sqrt(m/M) / ((1 - lambda) sin alpha)
  /// on every configuration.
  double envelope_constant = 0.0;
  Table table;
};

/// Error of the shadowing contribution against a finite-difference oracle on
/// BlockHyperbolicLinear systems with random constant X and linear objective
/// J = <J_u, u>, as a function of m/M.
ScalingResult shadowing_error_scaling(const ScalingConfig &config);

struct ConvergenceConfig {
  std::vector<Index> K_list{100, 1000, 10000};
  Index seeds = 32;
  std::uint64_t seed = 1;
  Index N_f = kDefaultTruncation;
  Index N_b = kDefaultTruncation;
};

struct ConvergencePoint {
  Index K = 0;
  /// RMS over seeds of shadowing - oracle_contribution on the same orbit.
  double rms_bias = 0.0;
  /// |mean over seeds| of the same difference.
  double mean_bias = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergencePoint> points;
  LinearFit fit; ///< log rms_bias against log K; NaN slope if any bias is 0
  Table table;
};

/// Same-orbit difference between the NILSS and truncated-sum contributions
/// as K grows. The ergodic sampling error is shared by both estimators and
/// cancels, leaving the endpoint bias.
ConvergenceResult nilss_convergence_study(const SystemModel &model,
                                          const ConvergenceConfig &config);

struct DecorrelationResult {
  /// (1/(K-n)) sum_k g'(u_{k+n}) h'(u_k) for n = 0..n_max, where g', h' are
  /// the mean-removed functions.
  std::vector<double> correlations;
  /// 3 sqrt(var g var h / K): lags below this are indistinguishable from 0.
  double noise_level = 0.0;
  /// -slope of log|C(n)| over the leading lags above the noise level; NaN
  /// when fewer than two such lags exist.
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
};

DecorrelationResult empirical_decorrelation(const Orbit &orbit,
                                            const StateFunction &g,
                                            const StateFunction &h, Index n_max);

} // namespace shadow
