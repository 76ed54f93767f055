#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "shadow/errors.hpp"
#include "shadow/stats.hpp"

using namespace shadow;
using shadow::testing::all_builtins;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs)
    v[i++] = x;
  return v;
}

Vec gaussian(Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal;
  Vec v(n);
  for (Index i = 0; i < n; ++i)
    v[i] = normal(rng);
  return v;
}

/// A non-periodic map that blows up, for error-path tests.
class Runaway final : public SystemModel {
public:
  Runaway() : SystemModel(1, 1, {false}) {}
  std::string name() const override { return "runaway"; }

protected:
  Vec do_step(VecRef u, double) const override { return 1e200 * u; }
  Vec do_jvp(VecRef, VecRef w, double) const override { return 1e200 * w; }
  Vec do_vjp(VecRef, VecRef a, double) const override { return 1e200 * a; }
  Vec do_forcing(VecRef u, double) const override { return Vec::Zero(u.size()); }
  double do_objective(VecRef u) const override { return u[0]; }
  Vec do_objective_gradient(VecRef u) const override { return Vec::Ones(u.size()); }
};

} // namespace

TEST_CASE("step examples") {
  ExpandingCircle circle;
  CHECK(circle.step(vec({kPi / 2}), 0.0)[0] == doctest::Approx(kPi));
  CHECK(circle.step(vec({3 * kPi / 2}), 0.0)[0] == doctest::Approx(kPi));
  PerturbedCatMap cat;
  const Vec u = cat.step(vec({1.0, 1.0}), 0.0);
  CHECK(u[0] == doctest::Approx(3.0));
  CHECK(u[1] == doctest::Approx(2.0));
}

TEST_CASE("step wraps periodic coordinates into [0, 2pi)") {
  for (const auto &model : all_builtins()) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
      const Vec u = model->step(model->wrap(model->sample_initial(rng)) * 3.0, 0.2);
      for (Index i = 0; i < u.size(); ++i)
        if (model->periodic()[static_cast<std::size_t>(i)]) {
          CHECK(u[i] >= 0.0);
          CHECK(u[i] < kTwoPi);
        }
    }
  }
}

TEST_CASE("jvp and vjp examples") {
  ExpandingCircle circle;
  CHECK(circle.jvp(vec({1.3}), vec({1.0}), 0.0)[0] == doctest::Approx(2.0));
  CHECK(circle.jvp(vec({0.0}), vec({1.0}), 0.1)[0] == doctest::Approx(2.1));
  CHECK(circle.vjp(vec({0.4}), vec({1.0}), 0.0)[0] == doctest::Approx(2.0));
  PerturbedCatMap cat;
  const Vec j = cat.jvp(vec({0.3, 0.9}), vec({1.0, 0.0}), 0.0);
  CHECK(j[0] == doctest::Approx(2.0));
  CHECK(j[1] == doctest::Approx(1.0));
  const Vec a = cat.vjp(vec({0.3, 0.9}), vec({1.0, 0.0}), 0.0);
  CHECK(a[0] == doctest::Approx(2.0));
  CHECK(a[1] == doctest::Approx(1.0));
}

TEST_CASE("transpose identity on 10^4 random triples per builtin") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const Vec u = model->wrap(model->sample_initial(rng));
      const Vec w = gaussian(model->dim(), rng), a = gaussian(model->dim(), rng);
      const double s = 0.3 * std::sin(t);
      const double d = std::abs(a.dot(model->jvp(u, w, s)) - model->vjp(u, a, s).dot(w));
      worst = std::max(worst, d / (a.norm() * w.norm()));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("finite-difference Jacobian check converges at second order") {
  const std::vector<double> eps{1e-4, 1e-5, 1e-6};
  ExpandingCircle circle;
  PerturbedCatMap cat;
  Solenoid solenoid;
  for (const SystemModel *model : std::vector<const SystemModel *>{&circle, &cat, &solenoid}) {
    CAPTURE(model->name());
    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
      const Vec u = model->wrap(model->sample_initial(rng));
      const Vec w = gaussian(model->dim(), rng).normalized();
      std::vector<double> defect;
      for (double e : eps) {
        const Vec moved = model->difference(model->step(u + e * w, 0.3), model->step(u, 0.3));
        defect.push_back((moved - e * model->jvp(u, w, 0.3)).norm());
      }
      if (defect.back() < 1e-14)
        continue; // locally linear direction; nothing to fit
      CHECK(fit_loglog(eps, defect).slope >= 1.8);
    }
  }
}

TEST_CASE("linear block system has an exact Jacobian") {
  const BlockHyperbolicLinear block = shadow::testing::block_diag(Vec::Ones(2), Objective::cosine(0), 1.0);
  const Vec u = vec({1.0, 0.3}), w = vec({0.2, -0.7});
  const Vec moved = block.difference(block.step(u + 1e-5 * w, 0.1), block.step(u, 0.1));
  CHECK((moved - 1e-5 * block.jvp(u, w, 0.1)).norm() <= 1e-15);
}

TEST_CASE("expanding circle is two-to-one") {
  ExpandingCircle circle;
  for (double u : {0.1, 1.0, 2.5, 6.0}) {
    const double a = circle.step(vec({u / 2}), 0.0)[0];
    const double b = circle.step(vec({u / 2 + kPi}), 0.0)[0];
    CHECK(a == doctest::Approx(u));
    CHECK(b == doctest::Approx(u));
  }
}

TEST_CASE("model_derivatives examples") {
  ExpandingCircle circle;
  const Vec prev = vec({kPi / 2});
  const ModelDerivatives d = model_derivatives(circle, prev, circle.step(prev, 0.0), 0.0);
  CHECK(d.forcing[0] == doctest::Approx(1.0));
  CHECK(d.objective == doctest::Approx(-1.0));
  CHECK(std::abs(d.gradient[0]) < 1e-12);

  const Vec zero = vec({0.0});
  CHECK(model_derivatives(circle, zero, circle.step(zero, 0.0), 0.0).forcing[0] == 0.0);

  BlockHyperbolicParams p;
  const BlockHyperbolicLinear unforced(p);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Vec u = unforced.wrap(unforced.sample_initial(rng));
    CHECK(model_derivatives(unforced, u, unforced.step(u, 0.5), 0.5).forcing.norm() == 0.0);
  }
}

TEST_CASE("model_derivatives rejects a state that is not the image") {
  ExpandingCircle circle;
  CHECK_THROWS_AS(model_derivatives(circle, vec({1.0}), vec({0.5}), 0.0), ConsistencyError);
}

TEST_CASE("invalid states and dimensions are rejected") {
  ExpandingCircle circle;
  CHECK_THROWS_AS(circle.step(vec({std::nan("")}), 0.0), InvalidStateError);
  CHECK_THROWS_AS(circle.step(vec({1.0, 2.0}), 0.0), InvalidStateError);
  CHECK_THROWS_AS(circle.jvp(vec({1.0}), vec({INFINITY}), 0.0), InvalidStateError);
  CHECK_THROWS_AS(ExpandingCircle(2), std::invalid_argument);
  CHECK_THROWS_AS(ExpandingCircle(-1), std::invalid_argument);
  CHECK_NOTHROW(PerturbedCatMap(0));
  CHECK_NOTHROW(PerturbedCatMap(2));
}

TEST_CASE("block system parameter validation") {
  BlockHyperbolicParams p;
  p.expansion = 2.5;
  CHECK_THROWS_AS(BlockHyperbolicLinear{p}, std::invalid_argument);
  p.expansion = 2.0;
  p.contraction = 1.0;
  CHECK_THROWS_AS(BlockHyperbolicLinear{p}, std::invalid_argument);
  p.contraction = 0.5;
  p.forcing = Vec::Ones(3);
  CHECK_THROWS_AS(BlockHyperbolicLinear{p}, std::invalid_argument);
}

TEST_CASE("difference wraps periodic coordinates into [-pi, pi)") {
  ExpandingCircle circle;
  CHECK(circle.difference(vec({0.1}), vec({kTwoPi - 0.1}))[0] == doctest::Approx(0.2));
  CHECK(circle.difference(vec({kTwoPi - 0.1}), vec({0.1}))[0] == doctest::Approx(-0.2));
}

TEST_CASE("runaway model diverges") {
  Runaway r;
  CHECK_THROWS_AS(generate_orbit(r, 0.0, 10, 0, 1), DivergenceError);
  try {
    generate_orbit(r, 0.0, 10, 0, 1);
  } catch (const DivergenceError &e) {
    CHECK(e.step() >= 1);
  }
}
