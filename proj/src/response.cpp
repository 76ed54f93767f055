#include "shadow/response.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shadow/errors.hpp"
#include "shadow/linalg.hpp"
#include "shadow/parallel.hpp"
#include "shadow/stats.hpp"

namespace shadow {

namespace {

void require_frames(const FrameSeq &frames, StepRange needed, const char *what) {
  if (!frames.steps().covers(needed))
    throw NeedsLongerOrbitError(std::string(what) + " needs frames on [" +
                                std::to_string(needed.begin) + ", " +
                                std::to_string(needed.end) + "), have [" +
                                std::to_string(frames.steps().begin) + ", " +
                                std::to_string(frames.steps().end) + ")");
}

void require_states(const Orbit &orbit, StepRange needed, const char *what) {
  if (needed.begin < 0 || !orbit.steps().covers(needed))
    throw NeedsLongerOrbitError(std::string(what) + " needs orbit states on [" +
                                std::to_string(needed.begin) + ", " +
                                std::to_string(needed.end) + ")");
}

/// X_j = df/ds(u_{j-1}).
Vec forcing_at(const SystemModel &model, const Orbit &orbit, Index j) {
  return model.forcing(orbit.state(j - 1), orbit.parameter());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2)
    return 0.0;
  double mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Decay rate of norms[idx(0)], norms[idx(1)], ... while they stay above
/// `floor`; NaN with fewer than three usable points.
template <class IndexFn>
std::pair<double, Index> decay_rate(const std::vector<double> &norms,
                                    Index limit, double floor, IndexFn idx) {
  std::vector<double> x, y;
  for (Index i = 0; i < limit; ++i) {
    const double e = norms[static_cast<std::size_t>(idx(i))];
    if (!(e > floor))
      break;
    x.push_back(static_cast<double>(i));
    y.push_back(std::log(e));
  }
  if (x.size() < 3)
    return {std::numeric_limits<double>::quiet_NaN(), static_cast<Index>(x.size())};
  return {-fit_line(x, y).slope, static_cast<Index>(x.size())};
}

} // namespace

ExplicitShadowing explicit_shadowing_direction(const Orbit &orbit,
                                               const FrameSeq &frames,
                                               const SystemModel &model,
                                               StepRange window, Index N_f,
                                               Index N_b) {
  if (N_f < 0 || N_b < 0)
    throw std::invalid_argument("truncation lengths must be non-negative");
  if (window.size() < 1)
    throw std::invalid_argument("oracle window is empty");
  const StepRange span{window.begin - N_f, window.end + N_b};
  require_frames(frames, span, "explicit shadowing direction");
  require_states(orbit, {span.begin - 1, span.end}, "explicit shadowing direction");

  const Index M = model.dim();
  const Index m = frames.at(window.begin).W.cols();
  const double s = orbit.parameter();

  // Stable part of X and unstable coordinates of X at every step of the span.
  Mat x_minus(M, span.size());
  Mat x_plus(m, span.size());
  parallel_for(span.size(), [&](Index i) {
    const SplittingFrame &f = frames.at(span.begin + i);
    const Vec X = forcing_at(model, orbit, span.begin + i);
    const Vec c = unstable_coordinates(f, X);
    x_plus.col(i) = c;
    x_minus.col(i) = m > 0 ? Vec(X - f.W * c) : X;
  });
  auto col = [&](Index j) { return j - span.begin; };
  const bool has_stable = m < M;

  ExplicitShadowing out;
  out.v.first_step = window.begin;
  out.v.kind = TangentSeq::Kind::Inhomogeneous;
  out.v.vectors = Mat::Zero(M, window.size());

  parallel_for(window.size(), [&](Index i) {
    const Index k = window.begin + i;
    Vec v = Vec::Zero(M);
    if (has_stable) {
      // Horner form of sum_{n=0}^{N_f} f_*^n X^-_{k-n}; re-projecting onto
      // the stable subspace keeps roundoff from seeding unstable growth.
      Vec acc = x_minus.col(col(k - N_f));
      for (Index j = k - N_f + 1; j <= k; ++j) {
        acc = project_stable(frames.at(j), model.jvp(orbit.state(j - 1), acc, s));
        acc += x_minus.col(col(j));
      }
      v = acc;
    }
    if (m > 0) {
      Vec c = Vec::Zero(m);
      for (Index j = k + N_b; j >= k + 1; --j)
        c = frames.at(j - 1).from_next * (c + x_plus.col(col(j)));
      v -= frames.at(k).W * c;
    }
    out.v.vectors.col(i) = v;
  });

  // Size of the last retained terms on a sample of steps.
  const Index stride = std::max<Index>(1, window.size() / 32);
  for (Index k = window.begin; k < window.end; k += stride) {
    if (has_stable && N_f > 0) {
      Vec y = x_minus.col(col(k - N_f));
      for (Index j = k - N_f + 1; j <= k; ++j)
        y = project_stable(frames.at(j), model.jvp(orbit.state(j - 1), y, s));
      out.truncation = std::max(out.truncation, y.norm());
    }
    if (m > 0 && N_b > 0) {
      Vec c = x_plus.col(col(k + N_b));
      for (Index j = k + N_b; j >= k + 1; --j)
        c = frames.at(j - 1).from_next * c;
      out.truncation = std::max(out.truncation, (frames.at(k).W * c).norm());
    }
  }
  return out;
}

CorrectionResult correction_term(const Orbit &orbit, const FrameSeq &frames,
                                 const SystemModel &model, StepRange window,
                                 Index N_back, Index N) {
  if (N < 0 || N_back < 1)
    throw std::invalid_argument("correction window needs N >= 0 and N_back >= 1");
  if (window.size() < 1)
    throw std::invalid_argument("correction window is empty");
  require_frames(frames, {window.begin - N_back, window.end}, "correction term");
  require_states(orbit, {window.begin - N_back - 1, window.end + std::max<Index>(N - 1, 0)},
                 "correction term");

  const Index K = window.size();
  const Index n_terms = N_back + N;
  const double s = orbit.parameter();
  // integrand(t, i): term index t <-> n = t - N_back, window step i
  Mat integrand = Mat::Zero(n_terms, K);

  parallel_for(K, [&](Index i) {
    const Index k = window.begin + i;
    const SplittingFrame &f = frames.at(k);
    if (f.W.cols() == 0)
      return;
    const Vec X = forcing_at(model, orbit, k);
    const Vec c0 = unstable_coordinates(f, X);
    Vec y = f.W * c0;
    for (Index n = 0; n < N; ++n) {
      const auto u = orbit.state(k + n);
      integrand(N_back + n, i) = model.objective_gradient(u).dot(y);
      if (n + 1 < N)
        y = model.jvp(u, y, s);
    }
    Vec c = c0;
    for (Index back = 1; back <= N_back; ++back) {
      const SplittingFrame &g = frames.at(k - back);
      c = g.from_next * c;
      integrand(N_back - back, i) =
          model.objective_gradient(orbit.state(k - back)).dot(g.W * c);
    }
  });

  CorrectionResult out;
  out.N_back = N_back;
  out.N = N;
  out.series.assign(static_cast<std::size_t>(K), 0.0);
  for (Index t = 0; t < n_terms; ++t) {
    const Vec row = integrand.row(t).transpose();
    out.terms.push_back({t - N_back, batch_means({row.data(), static_cast<std::size_t>(K)})});
  }
  for (Index i = 0; i < K; ++i)
    out.series[static_cast<std::size_t>(i)] = integrand.col(i).sum();
  out.total = batch_means(out.series);
  return out;
}

RuelleResult direct_ruelle(const Orbit &orbit, const SystemModel &model,
                           StepRange window, Index N_r, double budget) {
  if (N_r < 0)
    throw std::invalid_argument("N_r must be non-negative");
  if (window.size() < 1)
    throw std::invalid_argument("Ruelle window is empty");
  require_states(orbit, {window.begin - 1, window.end + N_r}, "direct Ruelle sum");

  const Index K = window.size();
  const double s = orbit.parameter();
  Mat integrand(N_r + 1, K);
  parallel_for(K, [&](Index i) {
    const Index k = window.begin + i;
    Vec y = forcing_at(model, orbit, k);
    for (Index n = 0; n <= N_r; ++n) {
      const auto u = orbit.state(k + n);
      integrand(n, i) = model.objective_gradient(u).dot(y);
      if (n < N_r)
        y = model.jvp(u, y, s);
    }
  });

  RuelleResult out;
  out.N_r = N_r;
  std::vector<double> total(static_cast<std::size_t>(K));
  for (Index n = 0; n <= N_r; ++n) {
    const Vec row = integrand.row(n).transpose();
    const std::span<const double> view(row.data(), static_cast<std::size_t>(K));
    out.terms.push_back({n, batch_means(view)});
    out.term_variance.push_back(sample_variance(view));
  }
  for (Index i = 0; i < K; ++i)
    total[static_cast<std::size_t>(i)] = integrand.col(i).sum();
  out.total = batch_means(total);
  out.budget_exceeded = !(out.total.std_error <= budget);
  return out;
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, Index count) {
  std::vector<std::uint64_t> out;
  for (Index i = 0; i < count; ++i)
    out.push_back(splitmix64(base * 0x100000001b3ULL + static_cast<std::uint64_t>(i)));
  return out;
}

FiniteDifferenceResult finite_difference(const SystemModel &model, double s,
                                         double delta_s, Index K,
                                         std::span<const std::uint64_t> seeds,
                                         Index spinup) {
  if (!(delta_s > 0.0))
    throw std::invalid_argument("delta_s must be positive");
  if (seeds.empty())
    throw std::invalid_argument("finite difference needs at least one seed");
  FiniteDifferenceResult out;
  out.per_seed.resize(seeds.size());
  parallel_for(static_cast<Index>(seeds.size()), [&](Index i) {
    const std::uint64_t seed = seeds[static_cast<std::size_t>(i)];
    const double plus = streaming_objective_average(model, s + delta_s, K, spinup, seed);
    const double minus = streaming_objective_average(model, s - delta_s, K, spinup, seed);
    out.per_seed[static_cast<std::size_t>(i)] = (plus - minus) / (2.0 * delta_s);
  });
  const Estimate e = sample_mean(out.per_seed);
  out.value = e.value;
  out.std_error = seeds.size() > 1 ? e.std_error : std::numeric_limits<double>::infinity();
  out.half_width = 2.0 * out.std_error;
  return out;
}

ErrorProfile shadowing_error_profile(const TangentSeq &v_nilss,
                                     const TangentSeq &v_oracle) {
  if (v_nilss.first_step != v_oracle.first_step ||
      v_nilss.size() != v_oracle.size() ||
      v_nilss.vectors.rows() != v_oracle.vectors.rows())
    throw std::invalid_argument("error profile needs sequences on the same window");
  const Index K = v_nilss.size();
  ErrorProfile out;
  out.norms.resize(static_cast<std::size_t>(K));
  for (Index j = 0; j < K; ++j)
    out.norms[static_cast<std::size_t>(j)] =
        (v_nilss.vectors.col(j) - v_oracle.vectors.col(j)).norm();
  if (K == 0)
    return out;

  std::vector<double> middle(out.norms.begin() + K / 4,
                             out.norms.begin() + std::max<Index>(K / 4 + 1, 3 * K / 4));
  std::nth_element(middle.begin(), middle.begin() + middle.size() / 2, middle.end());
  out.plateau = middle[middle.size() / 2];

  const double peak = *std::max_element(out.norms.begin(), out.norms.end());
  const double floor = std::max({1e-8 * peak, 10.0 * out.plateau, 1e-300});
  const Index half = std::max<Index>(1, K / 2);
  std::tie(out.forward_rate, out.forward_points) =
      decay_rate(out.norms, half, floor, [](Index i) { return i; });
  std::tie(out.backward_rate, out.backward_points) =
      decay_rate(out.norms, half, floor, [K](Index i) { return K - 1 - i; });
  return out;
}

ErrorProfile shadowing_error_profile(const ShadowingSolution &solution,
                                     const TangentSeq &v_oracle) {
  return shadowing_error_profile(solution.v, v_oracle);
}

SensitivityReport assemble_report(std::span<const double> shadowing_series,
                                  const CorrectionResult &correction) {
  if (shadowing_series.size() != correction.series.size())
    throw std::invalid_argument("shadowing and correction series differ in length");
  SensitivityReport r;
  r.shadowing = batch_means(shadowing_series);
  r.correction = correction.total;
  r.correction_terms = correction.terms;
  r.N_back = correction.N_back;
  r.N = correction.N;
  std::vector<double> total(shadowing_series.size());
  for (std::size_t i = 0; i < total.size(); ++i)
    total[i] = shadowing_series[i] + correction.series[i];
  r.corrected_total.value = r.shadowing.value + r.correction.value;
  r.corrected_total.std_error = batch_means(total).std_error;
  return r;
}

PipelineLayout pipeline_layout(const PipelineConfig &c) {
  const Index ruelle = c.N_r.value_or(0);
  const Index oracle_past = c.oracle ? c.N_f : 0;
  const Index oracle_future = c.oracle ? c.N_b : 0;
  const Index past = std::max(oracle_past, c.N_back) + 1;
  const Index future = std::max({oracle_future, c.N, ruelle}) + 1;
  PipelineLayout l;
  l.window = {c.tangent_spinup + past, c.tangent_spinup + past + c.K};
  l.total = l.window.end + future + c.adjoint_spinup;
  l.frames = {c.tangent_spinup, l.total - c.adjoint_spinup};
  return l;
}

PipelineResult run_pipeline(const SystemModel &model, const PipelineConfig &c) {
  if (c.K < 1)
    throw std::invalid_argument("K must be at least 1");
  if (c.spinup < 0 || c.tangent_spinup < 0 || c.adjoint_spinup < 0)
    throw std::invalid_argument("spin-up lengths must be non-negative");
  if (c.segment_len < 0 || c.renorm_every < 1)
    throw std::invalid_argument("segment_len must be >= 0 and renorm_every >= 1");

  const Index M = model.dim(), m = model.num_unstable();
  const PipelineLayout layout = pipeline_layout(c);
  Orbit orbit = generate_orbit(model, c.s, layout.total, c.spinup, c.seed);
  BasisSeq tangent = propagate_homogeneous(
      model, orbit, gaussian_matrix(M, m, splitmix64(c.seed ^ 0x7a6e67ULL)),
      c.renorm_every);
  BasisSeq adjoint = propagate_adjoint_homogeneous(
      model, orbit, gaussian_matrix(M, m, splitmix64(c.seed ^ 0x61646aULL)),
      c.renorm_every);
  FrameSeq frames = build_frames(model, orbit, tangent, adjoint, layout.frames);

  const Index segment_len =
      c.segment_len > 0 ? c.segment_len : default_segment_length(tangent);
  ShadowingSolution nilss =
      solve_nilss(model, orbit, tangent, layout.window, segment_len);
  const std::vector<double> shadowing_series =
      objective_derivative_series(model, orbit, nilss.v);
  CorrectionResult correction =
      correction_term(orbit, frames, model, layout.window, c.N_back, c.N);

  SensitivityReport report = assemble_report(shadowing_series, correction);
  report.system = model.name();
  report.M = M;
  report.m = m;
  report.s = c.s;
  report.K = c.K;
  report.spinup = c.spinup;
  report.tangent_spinup = c.tangent_spinup;
  report.adjoint_spinup = c.adjoint_spinup;
  report.segment_len = segment_len;
  report.renorm_every = c.renorm_every;
  report.seed = c.seed;
  report.N_f = c.N_f;
  report.N_b = c.N_b;
  report.delta_s = c.delta_s;
  report.fd_seeds = c.fd_seeds;
  report.fd_K = c.fd_K > 0 ? c.fd_K : c.K;
  report.optimality_residual = nilss.optimality_residual;
  report.recurrence_residual = recurrence_residual(model, orbit, nilss.v);
  report.nilss_condition = nilss.condition;
  report.rank_deficient = nilss.rank_deficient;
  report.min_splitting_angle = min_angle(frames);
  try {
    report.lyapunov = lyapunov_exponents(tangent, c.tangent_spinup);
  } catch (const InsufficientDataError &) {
    // short runs carry no exponent estimate
  }

  std::optional<ExplicitShadowing> oracle;
  if (c.oracle) {
    oracle = explicit_shadowing_direction(orbit, frames, model, layout.window,
                                          c.N_f, c.N_b);
    report.oracle_contribution = objective_derivative_average(model, orbit, oracle->v);
    report.oracle_truncation = oracle->truncation;
  }
  if (c.fd_seeds > 0) {
    const std::vector<std::uint64_t> seeds = seed_list(c.seed, c.fd_seeds);
    report.fd_oracle =
        finite_difference(model, c.s, c.delta_s, report.fd_K, seeds, c.spinup);
  }
  if (c.N_r)
    report.ruelle_direct =
        direct_ruelle(orbit, model, layout.window, *c.N_r, c.ruelle_budget);

  return PipelineResult{layout,
                        std::move(orbit),
                        std::move(tangent),
                        std::move(adjoint),
                        std::move(frames),
                        std::move(nilss),
                        std::move(oracle),
                        std::move(correction),
                        std::move(report)};
}

namespace {

using nlohmann::ordered_json;

ordered_json estimate_json(const Estimate &e) {
  return {{"value", e.value}, {"std_error", e.std_error}};
}

ordered_json terms_json(const std::vector<TermEstimate> &terms) {
  ordered_json out = ordered_json::array();
  for (const TermEstimate &t : terms)
    out.push_back({{"n", t.n}, {"value", t.estimate.value}, {"std_error", t.estimate.std_error}});
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

} // namespace

std::string report_to_json(const SensitivityReport &r) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["metadata"] = {{"system", r.system},
                   {"M", r.M},
                   {"m", r.m},
                   {"s", r.s},
                   {"K", r.K},
                   {"spinup", r.spinup},
                   {"tangent_spinup", r.tangent_spinup},
                   {"adjoint_spinup", r.adjoint_spinup},
                   {"segment_len", r.segment_len},
                   {"renorm_every", r.renorm_every},
                   {"seed", r.seed}};
  j["shadowing"] = estimate_json(r.shadowing);
  j["correction"] = estimate_json(r.correction);
  j["correction"]["N_back"] = r.N_back;
  j["correction"]["N"] = r.N;
  j["correction"]["terms"] = terms_json(r.correction_terms);
  j["corrected_total"] = estimate_json(r.corrected_total);
  if (r.oracle_contribution) {
    j["oracle_contribution"] = estimate_json(*r.oracle_contribution);
    j["oracle_contribution"]["N_f"] = r.N_f;
    j["oracle_contribution"]["N_b"] = r.N_b;
    j["oracle_contribution"]["truncation"] = r.oracle_truncation;
    j["bias"] = r.shadowing.value - r.oracle_contribution->value;
  } else {
    j["oracle_contribution"] = nullptr;
    j["bias"] = nullptr;
  }
  if (r.fd_oracle) {
    j["fd_oracle"] = {{"value", r.fd_oracle->value},
                      {"half_width", r.fd_oracle->half_width},
                      {"std_error", r.fd_oracle->std_error},
                      {"delta_s", r.delta_s},
                      {"K", r.fd_K},
                      {"seeds", r.fd_seeds}};
  } else {
    j["fd_oracle"] = nullptr;
  }
  if (r.ruelle_direct) {
    j["ruelle_direct"] = estimate_json(r.ruelle_direct->total);
    j["ruelle_direct"]["N_r"] = r.ruelle_direct->N_r;
    j["ruelle_direct"]["budget_exceeded"] = r.ruelle_direct->budget_exceeded;
    j["ruelle_direct"]["terms"] = terms_json(r.ruelle_direct->terms);
    j["ruelle_direct"]["term_variance"] = r.ruelle_direct->term_variance;
  } else {
    j["ruelle_direct"] = nullptr;
  }
  j["diagnostics"] = {{"optimality_residual", r.optimality_residual},
                      {"recurrence_residual", r.recurrence_residual},
                      {"nilss_condition", r.nilss_condition},
                      {"rank_deficient", r.rank_deficient},
                      {"min_splitting_angle", r.min_splitting_angle},
                      {"lyapunov", r.lyapunov}};
  return j.dump(2);
}

std::string report_csv_header() {
  return "system,M,m,s,K,segment_len,N_back,N,seed,shadowing,shadowing_se,"
         "correction,correction_se,corrected_total,corrected_total_se,"
         "oracle_contribution,bias,fd_oracle,fd_half_width,ruelle_direct,"
         "ruelle_se,optimality_residual,recurrence_residual";
}

std::string report_csv_row(const SensitivityReport &r) {
  std::ostringstream os;
  os << r.system << ',' << r.M << ',' << r.m << ',' << fmt(r.s) << ',' << r.K
     << ',' << r.segment_len << ',' << r.N_back << ',' << r.N << ',' << r.seed
     << ',' << fmt(r.shadowing.value) << ',' << fmt(r.shadowing.std_error) << ','
     << fmt(r.correction.value) << ',' << fmt(r.correction.std_error) << ','
     << fmt(r.corrected_total.value) << ',' << fmt(r.corrected_total.std_error)
     << ',';
  if (r.oracle_contribution)
    os << fmt(r.oracle_contribution->value) << ','
       << fmt(r.shadowing.value - r.oracle_contribution->value);
  else
    os << ',';
  os << ',';
  if (r.fd_oracle)
    os << fmt(r.fd_oracle->value) << ',' << fmt(r.fd_oracle->half_width);
  else
    os << ',';
  os << ',';
  if (r.ruelle_direct)
    os << fmt(r.ruelle_direct->total.value) << ','
       << fmt(r.ruelle_direct->total.std_error);
  else
    os << ',';
  os << ',' << fmt(r.optimality_residual) << ',' << fmt(r.recurrence_residual);
  return os.str();
}

} // namespace shadow
