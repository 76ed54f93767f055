#include "shadow/nilss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "shadow/errors.hpp"
#include "shadow/linalg.hpp"
#include "shadow/stats.hpp"

namespace shadow {

namespace {

constexpr double kOverflow = 1e100;

struct SegmentData {
  Mat U;      ///< m x m, R factor of the stacked homogeneous block
  Vec g;      ///< m, Q^T of the stacked inhomogeneous solution
  Mat R_in;   ///< m x m interface factor into this segment (empty for i = 0)
  Vec b_in;   ///< m, interface offset into this segment
};

std::vector<Segment> make_segments(StepRange window, Index len) {
  std::vector<Segment> out;
  for (Index t = window.begin; t < window.end; t += len)
    out.push_back({t, std::min(t + len, window.end)});
  return out;
}

} // namespace

Index default_segment_length(const BasisSeq &tangent, double max_growth) {
  if (tangent.rank() == 0 || tangent.records().empty())
    return 20;
  double rate = 0.0;
  try {
    rate = lyapunov_exponents(tangent, 0).front();
  } catch (const InsufficientDataError &) {
    double sum = 0.0;
    Index len = 0;
    for (const RenormRecord &rec : tangent.records()) {
      sum += std::log(rec.R(0, 0));
      len += rec.interval;
    }
    rate = sum / static_cast<double>(len);
  }
  if (!(rate > 0.0))
    return 20;
  return std::max<Index>(1, static_cast<Index>(std::log(max_growth) / rate));
}

ShadowingSolution solve_nilss(const SystemModel &model, const Orbit &orbit,
                              const BasisSeq &tangent, StepRange window,
                              Index segment_len) {
  const Index M = model.dim(), m = tangent.rank(), K = window.size();
  if (K < 1)
    throw std::invalid_argument("NILSS window is empty");
  if (segment_len < 1)
    throw std::invalid_argument("segment length must be at least 1");
  if (!orbit.steps().covers(window))
    throw NeedsLongerOrbitError("NILSS window extends past the orbit");
  if (!tangent.steps().contains(window.begin))
    throw NeedsLongerOrbitError("tangent basis does not cover the window start");
  const double s = orbit.parameter();

  ShadowingSolution sol;
  sol.segments = make_segments(window, segment_len);
  const Index n_seg = static_cast<Index>(sol.segments.size());

  // Forward pass: per-step homogeneous block and inhomogeneous solution.
  Mat w_steps(M, m * K);
  Mat vp_steps(M, K);
  std::vector<SegmentData> data(static_cast<std::size_t>(n_seg));

  Mat w = tangent.Q(window.begin);
  Vec vp = Vec::Zero(M);
  for (Index i = 0; i < n_seg; ++i) {
    const Segment seg = sol.segments[static_cast<std::size_t>(i)];
    const Index len = seg.end - seg.begin;
    Mat G(M * len, m);
    Vec r(M * len);
    for (Index k = seg.begin; k < seg.end; ++k) {
      const Index j = k - window.begin;
      w_steps.middleCols(j * m, m) = w;
      vp_steps.col(j) = vp;
      G.middleRows((k - seg.begin) * M, M) = w;
      r.segment((k - seg.begin) * M, M) = vp;
      if (k + 1 < window.end) {
        const auto u = orbit.state(k);
        w = model.jvp_columns(u, w, s);
        vp = model.jvp(u, vp, s) + model.forcing(u, s);
        if (!vp.allFinite() || vp.norm() > kOverflow || !w.allFinite() ||
            (m > 0 && w.norm() > kOverflow))
          throw SegmentTooLongError(
              "tangent solution overflowed inside a segment; shorten segment_len",
              k + 1);
      }
    }
    SegmentData &d = data[static_cast<std::size_t>(i)];
    if (m > 0) {
      ThinQR blk = thin_qr(G);
      d.U = blk.R;
      d.g = blk.Q.transpose() * r;
      const double cond = condition_number(d.U);
      if (cond > sol.worst_segment_condition || !std::isfinite(cond)) {
        sol.worst_segment_condition = cond;
        sol.worst_segment = i;
      }
    }
    if (i + 1 < n_seg && m > 0) {
      ThinQR iface = thin_qr(w);
      for (Index c = 0; c < m; ++c)
        if (!(iface.R(c, c) > 1e-300))
          throw DegenerateBasisError("homogeneous block lost rank at a segment "
                                     "interface",
                                     seg.end);
      SegmentData &next = data[static_cast<std::size_t>(i + 1)];
      next.R_in = iface.R;
      next.b_in = iface.Q.transpose() * vp;
      vp -= iface.Q * next.b_in;
      w = std::move(iface.Q);
    }
  }

  sol.coefficients.assign(static_cast<std::size_t>(n_seg), Vec::Zero(m));
  std::vector<Mat> transfer(static_cast<std::size_t>(n_seg));

  if (m > 0) {
    // Backward square-root accumulation. Every segment coefficient is an
    // affine function of the last one, a_i = T_i y + c_i; going backward T_i
    // only contracts, so nothing overflows however long the window is.
    Mat acc(0, m + 1);
    Mat T = Mat::Identity(m, m);
    Vec c = Vec::Zero(m);
    for (Index i = n_seg - 1; i >= 0; --i) {
      const SegmentData &d = data[static_cast<std::size_t>(i)];
      transfer[static_cast<std::size_t>(i)] = T;
      Mat stacked(acc.rows() + m, m + 1);
      stacked.topRows(acc.rows()) = acc;
      stacked.bottomRows(m).leftCols(m) = d.U * T;
      stacked.bottomRows(m).col(m) = d.U * c + d.g;
      Eigen::HouseholderQR<Mat> qr(stacked);
      const Index keep = std::min<Index>(stacked.rows(), m + 1);
      acc = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
      if (i > 0) {
        const auto R = d.R_in.triangularView<Eigen::Upper>();
        T = R.solve(T);
        c = R.solve(c - d.b_in);
        if (!T.allFinite() || !c.allFinite() || T.norm() > kOverflow ||
            c.norm() > kOverflow)
          throw DegenerateBasisError(
              "backward coefficient transfer overflowed; the homogeneous "
              "basis contains decaying directions (declared m larger than "
              "the number of expanding directions?)",
              sol.segments[static_cast<std::size_t>(i)].begin);
      }
    }
    const Mat reduced = acc.topLeftCorner(m, m);
    const Vec rhs = -acc.topRightCorner(m, 1);
    sol.condition = condition_number(reduced);
    Vec y;
    if (!(sol.condition <= kRankDeficientCondition)) {
      sol.rank_deficient = true;
      y = reduced.completeOrthogonalDecomposition().solve(rhs);
    } else {
      y = reduced.triangularView<Eigen::Upper>().solve(rhs);
    }
    sol.coefficients.back() = y;
    for (Index i = n_seg - 1; i > 0; --i) {
      const SegmentData &d = data[static_cast<std::size_t>(i)];
      sol.coefficients[static_cast<std::size_t>(i - 1)] =
          d.R_in.triangularView<Eigen::Upper>().solve(
              sol.coefficients[static_cast<std::size_t>(i)] - d.b_in);
    }
  }

  // Assemble v and the diagnostics.
  sol.v.first_step = window.begin;
  sol.v.kind = TangentSeq::Kind::Inhomogeneous;
  sol.v.vectors = vp_steps;
  Vec inner = Vec::Zero(m);
  Vec w_norm2 = Vec::Zero(m);
  for (Index i = 0; i < n_seg; ++i) {
    const Segment seg = sol.segments[static_cast<std::size_t>(i)];
    const Vec &a = sol.coefficients[static_cast<std::size_t>(i)];
    for (Index k = seg.begin; k < seg.end; ++k) {
      const Index j = k - window.begin;
      if (m > 0) {
        const auto wk = w_steps.middleCols(j * m, m);
        sol.v.vectors.col(j) += wk * a;
        const Mat wt = wk * transfer[static_cast<std::size_t>(i)];
        inner += wt.transpose() * sol.v.vectors.col(j);
        w_norm2 += wt.colwise().squaredNorm().transpose();
      }
    }
  }
  sol.objective_norm = sol.v.vectors.squaredNorm();
  const double v_norm = std::sqrt(sol.objective_norm);
  for (Index j = 0; j < m; ++j) {
    const double denom = v_norm * std::sqrt(w_norm2[j]);
    if (denom > 0.0)
      sol.optimality_residual =
          std::max(sol.optimality_residual, std::abs(inner[j]) / denom);
  }
  return sol;
}

std::vector<double> objective_derivative_series(const SystemModel &model,
                                                const Orbit &orbit,
                                                const TangentSeq &v) {
  if (!orbit.steps().covers(v.steps()))
    throw NeedsLongerOrbitError("tangent sequence extends past the orbit");
  std::vector<double> series(static_cast<std::size_t>(v.size()));
  for (Index j = 0; j < v.size(); ++j) {
    const Index k = v.first_step + j;
    series[static_cast<std::size_t>(j)] =
        model.objective_gradient(orbit.state(k)).dot(v.vectors.col(j));
  }
  return series;
}

Estimate objective_derivative_average(const SystemModel &model,
                                      const Orbit &orbit, const TangentSeq &v) {
  return batch_means(objective_derivative_series(model, orbit, v));
}

Estimate shadowing_contribution(const ShadowingSolution &solution,
                                const Orbit &orbit, const SystemModel &model) {
  return objective_derivative_average(model, orbit, solution.v);
}

double recurrence_residual(const SystemModel &model, const Orbit &orbit,
                           const TangentSeq &v) {
  const double s = orbit.parameter();
  double worst = 0.0, pushed2 = 0.0, forcing2 = 0.0;
  for (Index j = 0; j + 1 < v.size(); ++j) {
    const auto u = orbit.state(v.first_step + j);
    const Vec pushed = model.jvp(u, v.vectors.col(j), s);
    const Vec X = model.forcing(u, s);
    worst = std::max(worst, (v.vectors.col(j + 1) - pushed - X).norm());
    pushed2 += pushed.squaredNorm();
    forcing2 += X.squaredNorm();
  }
  if (v.size() < 2)
    return 0.0;
  const double n = static_cast<double>(v.size() - 1);
  const double scale = std::sqrt(pushed2 / n) + std::sqrt(forcing2 / n);
  if (scale > 0.0)
    return worst / scale;
  return worst > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

} // namespace shadow
