#include "shadow/statmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "shadow/linalg.hpp"
#include "shadow/parallel.hpp"

namespace shadow {

namespace {

struct MomentRatio {
  Estimate num, den, ratio2;
};

/// mean(a) / mean(b) with a delta-method standard error, plus the two means.
MomentRatio ratio_of_means(const std::vector<double> &a,
                           const std::vector<double> &b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double vaa = 0, vbb = 0, vab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    vaa += (a[i] - ma) * (a[i] - ma);
    vbb += (b[i] - mb) * (b[i] - mb);
    vab += (a[i] - ma) * (b[i] - mb);
  }
  vaa /= n - 1;
  vbb /= n - 1;
  vab /= n - 1;
  const double r = ma / mb;
  const double var_r =
      (vaa / (mb * mb) - 2 * ma * vab / (mb * mb * mb) + ma * ma * vbb / (mb * mb * mb * mb)) / n;
  return {{ma, std::sqrt(vaa / n)}, {mb, std::sqrt(vbb / n)}, {r, std::sqrt(std::max(0.0, var_r))}};
}

/// sqrt of a positive estimate, first-order error propagation.
Estimate sqrt_estimate(const Estimate &e) {
  const double root = std::sqrt(e.value);
  return {root, root > 0 ? e.std_error / (2 * root) : 0.0};
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return seed_list(a * 0x9e3779b97f4a7c15ULL + b, 1).front();
}

} // namespace

RandomFieldSample draw_random_field(Index M, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RandomFieldSample out;
  out.seed = seed;
  out.X.resize(M);
  out.J_u.resize(M);
  for (Index i = 0; i < M; ++i)
    out.X[i] = normal(rng);
  for (Index i = 0; i < M; ++i)
    out.J_u[i] = normal(rng);
  return out;
}

void write_table_csv(const Table &table, std::ostream &out) {
  const auto precision = out.precision();
  out << std::setprecision(17) << "M,m,K,seed,quantity,value\n";
  for (const TableRow &r : table)
    out << r.M << ',' << r.m << ',' << r.K << ',' << r.seed << ',' << r.quantity
        << ',' << r.value << '\n';
  out.precision(precision);
}

BoundCheckResult check_projection_bound(const BlockHyperbolicLinear &system,
                                        Index trials, std::uint64_t seed) {
  if (trials < 2)
    throw std::invalid_argument("projection bound check needs at least 2 trials");
  const Index M = system.dim(), m = system.num_unstable();

  // Splitting from converged bases along a short orbit.
  const Index spin = 100, len = 64;
  const Orbit orbit = generate_orbit(system, 0.0, spin + len + spin, kDefaultSpinup, seed);
  const BasisSeq tangent = propagate_homogeneous(system, orbit, gaussian_matrix(M, m, mix(seed, 1)));
  const BasisSeq adjoint =
      propagate_adjoint_homogeneous(system, orbit, gaussian_matrix(M, m, mix(seed, 2)));
  const FrameSeq frames = build_frames(system, orbit, tangent, adjoint, {spin, spin + len});

  BoundCheckResult out;
  out.M = M;
  out.m = m;
  out.trials = trials;
  out.sin_alpha = std::sin(min_angle(frames));
  out.bound = std::sqrt(static_cast<double>(m) / static_cast<double>(M)) / out.sin_alpha;

  std::vector<double> a(static_cast<std::size_t>(trials)), b(a.size()), draw(a.size());
  parallel_for(trials, [&](Index t) {
    const std::uint64_t s = mix(seed, 1000 + static_cast<std::uint64_t>(t));
    const RandomFieldSample f = draw_random_field(M, s);
    const SplittingFrame &frame = frames.frames()[s % static_cast<std::uint64_t>(len)];
    const double full = f.J_u.dot(f.X);
    const double unstable = f.J_u.dot(project_unstable(frame, f.X));
    a[static_cast<std::size_t>(t)] = unstable * unstable;
    b[static_cast<std::size_t>(t)] = full * full;
    draw[static_cast<std::size_t>(t)] = full != 0.0 ? std::abs(unstable / full) : 0.0;
  });

  const MomentRatio r = ratio_of_means(a, b);
  out.norm_unstable = sqrt_estimate(r.num);
  out.norm_full = sqrt_estimate(r.den);
  out.ratio_squared = r.ratio2;
  out.ratio = sqrt_estimate(r.ratio2);
  double sum = 0;
  for (double d : draw) {
    sum += d;
    out.max_draw_ratio = std::max(out.max_draw_ratio, d);
  }
  out.mean_draw_ratio = sum / static_cast<double>(trials);
  out.violations = out.ratio.value - 3 * out.ratio.std_error > out.bound ? 1 : 0;
  return out;
}

ScalingResult shadowing_error_scaling(const ScalingConfig &c) {
  if (c.trials < 2)
    throw std::invalid_argument("scaling study needs at least 2 trials");
  ScalingResult out;
  for (const auto &[M, m] : c.configs) {
    std::vector<double> sq(static_cast<std::size_t>(c.trials));
    double sin_alpha = 1.0;
    for (Index t = 0; t < c.trials; ++t) {
      // The same field draws are reused for every m at a given M, so the
      // sampling noise is shared across configurations and largely cancels
      // from the fitted slope.
      const std::uint64_t trial_seed =
          mix(c.seed, static_cast<std::uint64_t>(M) * 1000000 + static_cast<std::uint64_t>(t));
      const RandomFieldSample field = draw_random_field(M, trial_seed);
      BlockHyperbolicParams p;
      p.dim = M;
      p.unstable = m;
      p.expansion = c.expansion;
      p.contraction = c.contraction;
      p.forcing = field.X;
      p.objective = Objective::linear(field.J_u);
      const BlockHyperbolicLinear system(p);

      PipelineConfig pc;
      pc.K = c.K;
      pc.oracle = false;
      pc.N_back = 1;
      pc.seed = trial_seed;
      const PipelineResult run = run_pipeline(system, pc);
      sin_alpha = std::sin(run.report.min_splitting_angle);
      const std::vector<std::uint64_t> seeds = seed_list(trial_seed, c.fd_seeds);
      const FiniteDifferenceResult fd =
          finite_difference(system, 0.0, c.delta_s, c.fd_K, seeds, pc.spinup);
      const double err = (run.report.shadowing.value - fd.value) / std::sqrt(static_cast<double>(M));
      sq[static_cast<std::size_t>(t)] = err * err;
      out.table.push_back({M, m, c.K, trial_seed, "relative_error", std::abs(err)});
    }
    ScalingPoint point;
    point.M = M;
    point.m = m;
    point.relative_error = sqrt_estimate(sample_mean(sq));
    point.predicted = std::sqrt(static_cast<double>(m) / static_cast<double>(M));
    out.points.push_back(point);
    out.table.push_back({M, m, c.K, c.seed, "rms_relative_error", point.relative_error.value});
    out.table.push_back({M, m, c.K, c.seed, "rms_relative_error_se", point.relative_error.std_error});
    out.table.push_back({M, m, c.K, c.seed, "predicted_sqrt_m_over_M", point.predicted});
    if (m > 0) {
      const double scale = point.predicted / ((1.0 - c.contraction) * sin_alpha);
      out.envelope_constant = std::max(out.envelope_constant, point.relative_error.value / scale);
    }
  }
  std::vector<double> x, y;
  for (const ScalingPoint &p : out.points)
    if (p.m > 0) {
      x.push_back(static_cast<double>(p.m) / static_cast<double>(p.M));
      y.push_back(p.relative_error.value);
    }
  if (x.size() >= 2)
    out.fit = fit_loglog(x, y);
  return out;
}

ConvergenceResult nilss_convergence_study(const SystemModel &model,
                                          const ConvergenceConfig &c) {
  if (c.K_list.size() < 3)
    throw std::invalid_argument("convergence study needs at least three K values");
  if (!std::is_sorted(c.K_list.begin(), c.K_list.end()))
    throw std::invalid_argument("K values must be increasing");
  if (c.seeds < 1)
    throw std::invalid_argument("convergence study needs at least one seed");
  ConvergenceResult out;
  for (Index K : c.K_list) {
    std::vector<double> diff(static_cast<std::size_t>(c.seeds));
    for (Index i = 0; i < c.seeds; ++i) {
      PipelineConfig pc;
      pc.K = K;
      pc.N_f = c.N_f;
      pc.N_b = c.N_b;
      pc.N_back = 1;
      pc.seed = mix(c.seed, static_cast<std::uint64_t>(i));
      const PipelineResult run = run_pipeline(model, pc);
      diff[static_cast<std::size_t>(i)] =
          run.report.shadowing.value - run.report.oracle_contribution->value;
      out.table.push_back({model.dim(), model.num_unstable(), K, pc.seed, "bias",
                           diff[static_cast<std::size_t>(i)]});
    }
    ConvergencePoint p;
    p.K = K;
    double ss = 0, sum = 0;
    for (double d : diff) {
      ss += d * d;
      sum += d;
    }
    p.rms_bias = std::sqrt(ss / static_cast<double>(diff.size()));
    p.mean_bias = std::abs(sum / static_cast<double>(diff.size()));
    out.points.push_back(p);
    out.table.push_back({model.dim(), model.num_unstable(), K, c.seed, "rms_bias", p.rms_bias});
    out.table.push_back({model.dim(), model.num_unstable(), K, c.seed, "mean_bias", p.mean_bias});
  }
  std::vector<double> x, y;
  for (const ConvergencePoint &p : out.points) {
    x.push_back(static_cast<double>(p.K));
    y.push_back(p.rms_bias);
  }
  // A zero bias (e.g. zero forcing) has no logarithm; the slope is then NaN.
  if (std::all_of(y.begin(), y.end(), [](double b) { return b > 0.0; }))
    out.fit = fit_loglog(x, y);
  else
    out.fit.slope = out.fit.intercept = std::numeric_limits<double>::quiet_NaN();
  return out;
}

DecorrelationResult empirical_decorrelation(const Orbit &orbit,
                                            const StateFunction &g,
                                            const StateFunction &h, Index n_max) {
  const Index K = orbit.size();
  if (n_max < 0 || n_max >= K)
    throw std::invalid_argument("n_max must lie in [0, K)");
  std::vector<double> gs(static_cast<std::size_t>(K)), hs(gs.size());
  double gm = 0, hm = 0;
  for (Index k = 0; k < K; ++k) {
    gs[static_cast<std::size_t>(k)] = g(orbit.state(k));
    hs[static_cast<std::size_t>(k)] = h(orbit.state(k));
    gm += gs[static_cast<std::size_t>(k)];
    hm += hs[static_cast<std::size_t>(k)];
  }
  gm /= static_cast<double>(K);
  hm /= static_cast<double>(K);
  double gv = 0, hv = 0;
  for (Index k = 0; k < K; ++k) {
    gs[static_cast<std::size_t>(k)] -= gm;
    hs[static_cast<std::size_t>(k)] -= hm;
    gv += gs[static_cast<std::size_t>(k)] * gs[static_cast<std::size_t>(k)];
    hv += hs[static_cast<std::size_t>(k)] * hs[static_cast<std::size_t>(k)];
  }
  gv /= static_cast<double>(K);
  hv /= static_cast<double>(K);

  DecorrelationResult out;
  out.noise_level = 3.0 * std::sqrt(gv * hv / static_cast<double>(K));
  for (Index n = 0; n <= n_max; ++n) {
    double c = 0;
    for (Index k = 0; k + n < K; ++k)
      c += gs[static_cast<std::size_t>(k + n)] * hs[static_cast<std::size_t>(k)];
    out.correlations.push_back(c / static_cast<double>(K - n));
  }
  std::vector<double> x, y;
  for (Index n = 1; n <= n_max; ++n) {
    const double c = std::abs(out.correlations[static_cast<std::size_t>(n)]);
    if (!(c > out.noise_level))
      break;
    x.push_back(static_cast<double>(n));
    y.push_back(std::log(c));
  }
  if (x.size() >= 2)
    out.decay_rate = -fit_line(x, y).slope;
  return out;
}

} // namespace shadow
