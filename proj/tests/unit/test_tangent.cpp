#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "shadow/errors.hpp"

using namespace shadow;
using shadow::testing::all_builtins;
using shadow::testing::full_spectrum;

TEST_CASE("Lyapunov exponents of the expanding circle and the cat map") {
  ExpandingCircle circle;
  CHECK(std::abs(full_spectrum(circle).front() - std::log(2.0)) <= 1e-6);

  PerturbedCatMap cat;
  const std::vector<double> l = full_spectrum(cat);
  const double golden = std::log((3.0 + std::sqrt(5.0)) / 2.0);
  CHECK(std::abs(l[0] - golden) <= 1e-3);
  CHECK(std::abs(l[1] + golden) <= 1e-3);
}

TEST_CASE("positive exponent count equals the declared m on every builtin") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    Index positive = 0;
    for (double l : full_spectrum(*model))
      positive += l > 1e-6 ? 1 : 0;
    CHECK(positive == model->num_unstable());
  }
}

TEST_CASE("propagated bases are orthonormal with positive triangular factors") {
  Solenoid solenoid;
  const Orbit orbit = generate_orbit(solenoid, 0.1, 600);
  for (Direction dir : {Direction::Forward, Direction::Backward}) {
    const BasisSeq b = dir == Direction::Forward
                           ? propagate_homogeneous(solenoid, orbit, gaussian_matrix(3, 2, 4), 7)
                           : propagate_adjoint_homogeneous(solenoid, orbit, gaussian_matrix(3, 2, 4), 7);
    CHECK(b.direction() == dir);
    for (Index k = 0; k < orbit.size(); k += 13)
      CHECK((b.Q(k).transpose() * b.Q(k) - Mat::Identity(2, 2)).norm() <= 1e-12);
    Index covered = 0;
    for (const RenormRecord &r : b.records()) {
      CHECK(r.R(1, 0) == 0.0);
      CHECK(r.R(0, 0) > 0.0);
      CHECK(r.R(1, 1) > 0.0);
      CHECK(r.interval <= 7);
      covered += r.interval;
    }
    CHECK(covered == orbit.size() - 1);
  }
}

TEST_CASE("tangent basis spans the unstable direction of a linear system") {
  const BlockHyperbolicLinear block = shadow::testing::block_diag(Vec::Ones(2), Objective::cosine(0), 1.0);
  const Orbit orbit = generate_orbit(block, 0.0, 300);
  const BasisSeq t = propagate_homogeneous(block, orbit, gaussian_matrix(2, 1, 1));
  CHECK(std::abs(std::abs(t.Q(250)(0, 0)) - 1.0) <= 1e-12);
  // Adjoint unstable direction of [[2,1],[0,0.5]] is (1.5, 1): orthogonal
  // to the stable eigenvector (1, -1.5).
  const BasisSeq a = propagate_adjoint_homogeneous(block, orbit, gaussian_matrix(2, 1, 2));
  const Vec stable = Vec{{1.0, -1.5}}.normalized();
  CHECK(std::abs(a.Q(50).col(0).dot(stable)) <= 1e-12);
}

TEST_CASE("inhomogeneous recurrence holds at every step") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    const Orbit orbit = generate_orbit(*model, 0.1, 60);
    const TangentSeq v = propagate_inhomogeneous(*model, orbit, Vec::Zero(model->dim()));
    CHECK(v.size() == 60);
    CHECK(v.kind == TangentSeq::Kind::Inhomogeneous);
    for (Index k = 0; k + 1 < v.size(); ++k) {
      const auto u = orbit.state(k);
      const Vec X = model->forcing(u, 0.1);
      const Vec defect = v.at(k + 1) - model->jvp(u, v.at(k), 0.1) - X;
      CHECK(defect.norm() <= 1e-10 * (v.at(k).norm() + X.norm()) + 1e-300);
    }
  }
}

TEST_CASE("long raw inhomogeneous propagation overflows with a step index") {
  ExpandingCircle circle;
  const Orbit orbit = generate_orbit(circle, 0.0, 1000);
  CHECK_THROWS_AS(propagate_inhomogeneous(circle, orbit, Vec::Ones(1)), SegmentTooLongError);
}

TEST_CASE("degenerate initial basis is rejected") {
  PerturbedCatMap cat;
  const Orbit orbit = generate_orbit(cat, 0.0, 50);
  Mat w(2, 2);
  w << 1, 1, 0, 0;
  CHECK_THROWS_AS(propagate_homogeneous(cat, orbit, w), DegenerateBasisError);
}

TEST_CASE("Lyapunov estimate needs enough records") {
  ExpandingCircle circle;
  const Orbit orbit = generate_orbit(circle, 0.0, 500);
  const BasisSeq b = propagate_homogeneous(circle, orbit, Mat::Ones(1, 1));
  CHECK_THROWS_AS(lyapunov_exponents(b), InsufficientDataError);
}

TEST_CASE("rank-zero basis is empty") {
  PerturbedCatMap cat(0);
  const Orbit orbit = generate_orbit(cat, 0.0, 20);
  const BasisSeq b = propagate_homogeneous(cat, orbit, Mat(2, 0));
  CHECK(b.rank() == 0);
  CHECK(b.records().empty());
}
