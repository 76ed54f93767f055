#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "shadow/errors.hpp"
#include "shadow/subspace.hpp"

using namespace shadow;
using shadow::testing::all_builtins;

namespace {

struct Setup {
  Orbit orbit;
  BasisSeq tangent;
  BasisSeq adjoint;
  FrameSeq frames;
};

Setup setup(const SystemModel &model, Index len = 200, double s = 0.0) {
  const Index M = model.dim(), m = model.num_unstable();
  Orbit orbit = generate_orbit(model, s, len + 400, 500, 3);
  BasisSeq t = propagate_homogeneous(model, orbit, gaussian_matrix(M, m, 1));
  BasisSeq a = propagate_adjoint_homogeneous(model, orbit, gaussian_matrix(M, m, 2));
  FrameSeq f = build_frames(model, orbit, t, a, {200, 200 + len});
  return {std::move(orbit), std::move(t), std::move(a), std::move(f)};
}

} // namespace

TEST_CASE("sheared splitting angle has sin(alpha) = 3/sqrt(13)") {
  const BlockHyperbolicLinear block = shadow::testing::block_diag(Vec::Ones(2), Objective::cosine(0), 1.0);
  const Setup s = setup(block);
  CHECK(std::sin(min_angle(s.frames)) == doctest::Approx(3.0 / std::sqrt(13.0)).epsilon(1e-9));
}

TEST_CASE("orthogonal splitting angle is pi/2") {
  const BlockHyperbolicLinear block = shadow::testing::block_diag(Vec::Ones(2));
  const Setup s = setup(block);
  CHECK(min_angle(s.frames) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("oblique projections on the sheared linear system") {
  const BlockHyperbolicLinear block = shadow::testing::block_diag(Vec::Ones(2), Objective::cosine(0), 1.0);
  const Setup s = setup(block);
  const SplittingFrame &f = s.frames.at(250);
  const Vec unstable{{1.0, 0.0}};
  const Vec stable{{1.0, -1.5}};
  CHECK((project_unstable(f, unstable) - unstable).norm() <= 1e-12);
  CHECK(project_unstable(f, stable).norm() <= 1e-12);
  CHECK((project_stable(f, stable) - stable).norm() <= 1e-12);
  const Vec X{{0.3, 0.6}};
  CHECK(project_unstable(f, X)[0] == doctest::Approx(0.3 + 0.6 / 1.5));
}

TEST_CASE("projector algebra on every builtin") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    const Setup s = setup(*model, 100, 0.1);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    for (const SplittingFrame &f : s.frames.frames()) {
      Vec x(model->dim());
      for (Index i = 0; i < x.size(); ++i)
        x[i] = normal(rng);
      const Vec p = project_unstable(f, x);
      CHECK((project_unstable(f, p) - p).norm() <= 1e-10 * x.norm());
      CHECK((p + project_stable(f, x) - x).norm() <= 1e-12 * x.norm());
      CHECK((f.A.transpose() * project_stable(f, x)).norm() <= 1e-10 * x.norm());
      CHECK((stable_basis(f).transpose() * f.A).norm() <= 1e-12);
    }
  }
}

TEST_CASE("stable components stay orthogonal to the adjoint unstable subspace") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    const Setup s = setup(*model, 150, 0.2);
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal;
    for (Index k = 200; k < 300; k += 10) {
      Vec z(model->dim());
      for (Index i = 0; i < z.size(); ++i)
        z[i] = normal(rng);
      Vec y = project_stable(s.frames.at(k), z);
      // Rounding in A grows like the expansion rate, so keep the push short.
      for (Index n = 1; n <= 12; ++n) {
        y = model->jvp(s.orbit.state(k + n - 1), y, 0.2);
        CHECK((s.frames.at(k + n).A.transpose() * y).norm() <= 1e-8 * std::max(1.0, y.norm()));
      }
    }
  }
}

TEST_CASE("reduced unstable map matches the tangent map") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    const Setup s = setup(*model, 50, 0.1);
    for (Index k = 200; k < 249; ++k) {
      const SplittingFrame &f = s.frames.at(k);
      const Mat pushed = model->jvp_columns(s.orbit.state(k), f.W, 0.1);
      CHECK((s.frames.at(k + 1).W * f.to_next - pushed).norm() <= 1e-8 * pushed.norm());
      CHECK((f.to_next * f.from_next - Mat::Identity(f.W.cols(), f.W.cols())).norm() <= 1e-12);
    }
  }
}

TEST_CASE("frame lookup outside the range needs a longer orbit") {
  ExpandingCircle circle;
  const Setup s = setup(circle, 20);
  CHECK_THROWS_AS(s.frames.at(199), NeedsLongerOrbitError);
  CHECK_THROWS_AS(s.frames.at(220), NeedsLongerOrbitError);
  CHECK_NOTHROW(s.frames.at(219));
}

TEST_CASE("nearly orthogonal tangent and adjoint bases are degenerate") {
  PerturbedCatMap cat;
  const Orbit orbit = generate_orbit(cat, 0.0, 10);
  BasisSeq t(Direction::Forward, 2, 1, orbit.steps(), 10);
  BasisSeq a(Direction::Backward, 2, 1, orbit.steps(), 10);
  for (Index k = 0; k < 10; ++k) {
    t.set_Q(k, Vec{{1.0, 0.0}});
    a.set_Q(k, Vec{{1e-12, 1.0}}.normalized());
  }
  CHECK_THROWS_AS(build_frames(cat, orbit, t, a, {0, 10}), SplittingDegenerateError);
}

TEST_CASE("m = 0 frames project everything onto the stable subspace") {
  PerturbedCatMap cat(0);
  const Setup s = setup(cat, 10);
  const Vec x{{0.4, -1.0}};
  CHECK(project_unstable(s.frames.at(205), x).norm() == 0.0);
  CHECK(project_stable(s.frames.at(205), x) == x);
  CHECK(splitting_angle(s.frames.at(205)) == doctest::Approx(std::numbers::pi / 2));
}
