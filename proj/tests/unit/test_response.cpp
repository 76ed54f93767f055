#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "shadow/errors.hpp"
#include "shadow/response.hpp"

using namespace shadow;
using shadow::testing::all_builtins;
using shadow::testing::block_diag;
using shadow::testing::scalar_doubling;

namespace {

PipelineConfig base(Index K) {
  PipelineConfig c;
  c.K = K;
  return c;
}

const TermEstimate &term(const std::vector<TermEstimate> &terms, Index n) {
  for (const TermEstimate &t : terms)
    if (t.n == n)
      return t;
  FAIL("missing term " << n);
  return terms.front();
}

BlockHyperbolicLinear stable_forcing_block() {
  BlockHyperbolicParams p;
  p.dim = 2;
  p.unstable = 1;
  p.forcing = Vec{{0.0, 1.0}};
  p.objective = Objective::cosine(1);
  return BlockHyperbolicLinear(p);
}

} // namespace

TEST_CASE("truncated-sum oracle on zero forcing is zero") {
  const PipelineResult r = run_pipeline(block_diag(Vec::Zero(2)), base(200));
  REQUIRE(r.oracle.has_value());
  CHECK(r.oracle->v.vectors.norm() == 0.0);
}

TEST_CASE("truncated-sum oracle reproduces the partial geometric sums") {
  PipelineConfig c = base(200);
  c.N_f = 30;
  c.N_b = 30;
  const PipelineResult d = run_pipeline(scalar_doubling(), c);
  const double partial = 1.0 - std::ldexp(1.0, -30);
  for (Index k = d.layout.window.begin; k < d.layout.window.end; ++k)
    CHECK(std::abs(d.oracle->v.at(k)[0] + partial) <= 1e-14);

  const PipelineResult b = run_pipeline(block_diag(Vec::Ones(2)), c);
  for (Index k = b.layout.window.begin; k < b.layout.window.end; ++k) {
    CHECK(std::abs(b.oracle->v.at(k)[0] + 1.0) <= 4 * std::ldexp(1.0, -30));
    CHECK(std::abs(b.oracle->v.at(k)[1] - 2.0) <= 4 * std::ldexp(1.0, -30));
  }
  CHECK(b.oracle->truncation > 0.0);
  CHECK(b.oracle->truncation <= 1e-8);
}

TEST_CASE("truncated-sum oracle needs buffer on both sides") {
  const BlockHyperbolicLinear block = block_diag(Vec::Ones(2));
  const PipelineResult r = run_pipeline(block, base(100));
  const StepRange w = r.layout.window;
  const Index past = w.begin - r.frames.steps().begin;
  const Index future = r.frames.steps().end - w.end;
  CHECK_NOTHROW(explicit_shadowing_direction(r.orbit, r.frames, block, w, past, future));
  CHECK_THROWS_AS(explicit_shadowing_direction(r.orbit, r.frames, block, w, past + 1, 10),
                  NeedsLongerOrbitError);
  CHECK_THROWS_AS(explicit_shadowing_direction(r.orbit, r.frames, block, w, 10, future + 1),
                  NeedsLongerOrbitError);
}

TEST_CASE("expanding circle correction: only the n = -1 term survives") {
  PipelineConfig c = base(100000);
  c.N_back = 3;
  c.N = 3;
  c.oracle = false;
  const PipelineResult r = run_pipeline(ExpandingCircle(), c);
  CHECK(r.correction.terms.size() == 6);
  CHECK(std::abs(term(r.correction.terms, -1).estimate.value + 0.25) <= 0.02);
  for (Index n : {-3, -2, 0, 1, 2}) {
    CAPTURE(n);
    CHECK(std::abs(term(r.correction.terms, n).estimate.value) <= 0.02);
  }
  double sum = 0.0;
  for (const TermEstimate &t : r.correction.terms)
    sum += t.estimate.value;
  CHECK(r.correction.total.value == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("correction with zero forcing is exactly zero") {
  const PipelineResult r = run_pipeline(block_diag(Vec::Zero(2)), base(500));
  CHECK(r.correction.total.value == 0.0);
  for (const TermEstimate &t : r.correction.terms)
    CHECK(t.estimate.value == 0.0);
}

TEST_CASE("correction window must fit the frame buffer") {
  ExpandingCircle circle;
  const PipelineResult r = run_pipeline(circle, base(200));
  CHECK_THROWS_AS(correction_term(r.orbit, r.frames, circle, r.layout.window, 500, 1),
                  NeedsLongerOrbitError);
  CHECK_THROWS(correction_term(r.orbit, r.frames, circle, r.layout.window, 0, 1));
}

TEST_CASE("direct Ruelle terms") {
  const BlockHyperbolicLinear zero = block_diag(Vec::Zero(2));
  const Orbit oz = generate_orbit(zero, 0.0, 2000);
  const RuelleResult rz = direct_ruelle(oz, zero, {1, 1900}, 5);
  CHECK(rz.total.value == 0.0);

  ExpandingCircle circle;
  const Orbit oc = generate_orbit(circle, 0.0, 100011);
  const RuelleResult rc = direct_ruelle(oc, circle, {1, 100001}, 5);
  REQUIRE(rc.terms.size() == 6);
  for (std::size_t n = 0; n < rc.terms.size(); ++n) {
    CAPTURE(n);
    CHECK(std::abs(rc.terms[n].estimate.value) <= std::max(0.02, 4 * rc.terms[n].estimate.std_error));
    if (n > 0)
      CHECK(rc.term_variance[n] > rc.term_variance[n - 1]);
  }
  CHECK(!rc.budget_exceeded);
  CHECK(direct_ruelle(oc, circle, {1, 100001}, 5, 1e-3).budget_exceeded);
}

TEST_CASE("direct Ruelle on the cat map agrees with finite differences") {
  PerturbedCatMap cat;
  for (double s : {0.0, 0.3}) {
    CAPTURE(s);
    const Orbit orbit = generate_orbit(cat, s, 100011, 500, 5);
    const RuelleResult ruelle = direct_ruelle(orbit, cat, {1, 100001}, 4);
    const FiniteDifferenceResult fd = finite_difference(cat, s, 0.05, 100000, seed_list(11, 16));
    MESSAGE("ruelle " << ruelle.total.value << " +- " << ruelle.total.std_error << ", fd "
                      << fd.value << " +- " << fd.half_width);
    CHECK(std::abs(ruelle.total.value - fd.value) <= 2 * ruelle.total.std_error + fd.half_width);
  }
}

TEST_CASE("finite differences") {
  const auto seeds = seed_list(3, 8);
  const FiniteDifferenceResult circle = finite_difference(ExpandingCircle(), 0.0, 1e-2, 100000, seeds);
  CHECK(circle.per_seed.size() == 8);
  CHECK(circle.half_width == doctest::Approx(2 * circle.std_error));
  CHECK(std::abs(circle.value) <= 1.5 * circle.half_width);

  const FiniteDifferenceResult zero = finite_difference(block_diag(Vec::Zero(2)), 0.0, 1e-2, 1000, seeds);
  CHECK(zero.value == 0.0);

  const FiniteDifferenceResult single =
      finite_difference(ExpandingCircle(), 0.0, 1e-2, 1000, std::span(seeds).first(1));
  CHECK(std::isinf(single.std_error));
  CHECK_THROWS(finite_difference(ExpandingCircle(), 0.0, 0.0, 1000, seeds));
}

TEST_CASE("stable-only forcing: shadowing matches finite differences, no correction") {
  const BlockHyperbolicLinear block = stable_forcing_block();
  PipelineConfig c = base(5000);
  c.s = 0.3;
  c.delta_s = 1e-3;
  c.fd_seeds = 4;
  c.fd_K = 5000;
  const PipelineResult r = run_pipeline(block, c);
  // d/ds cos(2s) at the stable fixed point u2 = 2s. The stable part of the
  // NILSS solution starts from 0 and relaxes at rate 1/2, an O(1/K) bias.
  const double exact = -2.0 * std::sin(0.6);
  REQUIRE(r.report.fd_oracle.has_value());
  CHECK(std::abs(r.report.fd_oracle->value - exact) <= 1e-5);
  CHECK(std::abs(r.report.shadowing.value - r.report.fd_oracle->value) <= 5.0 / c.K);
  CHECK(std::abs(r.report.correction.value) <= 1e-12);
}

TEST_CASE("corrected total is the exact sum") {
  const std::vector<double> series{0.1, 0.4, -0.2, 0.3};
  CorrectionResult corr;
  corr.N_back = 1;
  corr.N = 0;
  corr.total = {-0.05, 0.01};
  corr.series = {-0.1, 0.0, 0.0, -0.1};
  const SensitivityReport rep = assemble_report(series, corr);
  CHECK(rep.shadowing.value == doctest::Approx(0.15));
  CHECK(rep.corrected_total.value == rep.shadowing.value + rep.correction.value);
}

TEST_CASE("expanding circle report with a five-by-three correction window") {
  PipelineConfig c = base(100000);
  c.N_back = 5;
  c.N = 3;
  c.fd_seeds = 8;
  c.fd_K = 100000;
  const SensitivityReport rep = run_pipeline(ExpandingCircle(), c).report;
  CHECK(std::abs(rep.shadowing.value - 0.25) <= 0.02);
  CHECK(std::abs(rep.correction.value + 0.25) <= 0.03);
  CHECK(std::abs(rep.corrected_total.value) <= 0.04);
  CHECK(rep.corrected_total.value == rep.shadowing.value + rep.correction.value);
  REQUIRE(rep.fd_oracle.has_value());
  CHECK(std::abs(rep.fd_oracle->value) <= 1.5 * rep.fd_oracle->half_width);
  CHECK(std::abs(rep.corrected_total.value - rep.fd_oracle->value) <=
        2 * rep.corrected_total.std_error + rep.fd_oracle->half_width);
  CHECK(rep.correction_terms.size() == 8);
}

TEST_CASE("zero forcing gives an all-zero report") {
  PipelineConfig c = base(1000);
  c.fd_seeds = 2;
  c.N_r = 3;
  const SensitivityReport rep = run_pipeline(block_diag(Vec::Zero(2)), c).report;
  CHECK(rep.shadowing.value == 0.0);
  CHECK(rep.correction.value == 0.0);
  CHECK(rep.corrected_total.value == 0.0);
  CHECK(rep.oracle_contribution->value == 0.0);
  CHECK(rep.fd_oracle->value == 0.0);
  CHECK(rep.ruelle_direct->total.value == 0.0);
}

TEST_CASE("error profile of scalar doubling") {
  const PipelineResult r = run_pipeline(scalar_doubling(), base(400));
  const ErrorProfile p = shadowing_error_profile(r.nilss, r.oracle->v);
  CHECK(p.norms.size() == 400);
  CHECK(p.plateau <= 1e-4);
  CHECK(p.backward_points >= 3);
  CHECK(p.backward_rate == doctest::Approx(std::log(2.0)).epsilon(0.05));
}

TEST_CASE("error profile of diag(2, 0.5)") {
  const PipelineResult r = run_pipeline(block_diag(Vec::Ones(2)), base(400));
  const ErrorProfile p = shadowing_error_profile(r.nilss, r.oracle->v);
  CHECK(p.plateau <= 1e-4);
  CHECK(p.forward_rate == doctest::Approx(std::log(2.0)).epsilon(0.05));
  CHECK(p.backward_rate == doctest::Approx(std::log(2.0)).epsilon(0.05));

  const PipelineResult z = run_pipeline(block_diag(Vec::Zero(2)), base(100));
  for (double e : shadowing_error_profile(z.nilss, z.oracle->v).norms)
    CHECK(e == 0.0);
}

TEST_CASE("error profile requires matching windows") {
  const PipelineResult r = run_pipeline(scalar_doubling(), base(100));
  TangentSeq shifted = r.oracle->v;
  shifted.first_step += 1;
  CHECK_THROWS(shadowing_error_profile(r.nilss.v, shifted));
}

TEST_CASE("shadowing contribution matches the truncated-sum oracle on every builtin") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    PipelineConfig c = base(10000);
    c.s = 0.1;
    const SensitivityReport rep = run_pipeline(*model, c).report;
    REQUIRE(rep.oracle_contribution.has_value());
    CHECK(std::abs(rep.shadowing.value - rep.oracle_contribution->value) <= 5e-3);
  }
}

TEST_CASE("shifting the time origin changes estimates by O(1/sqrt(K))") {
  for (const auto &model : all_builtins()) {
    CAPTURE(model->name());
    PipelineConfig a = base(10000);
    a.s = 0.1;
    PipelineConfig b = a;
    b.spinup += 137;
    const SensitivityReport ra = run_pipeline(*model, a).report;
    const SensitivityReport rb = run_pipeline(*model, b).report;
    const double tol = 3.0 / std::sqrt(10000.0);
    CHECK(std::abs(ra.shadowing.value - rb.shadowing.value) <= tol);
    CHECK(std::abs(ra.correction.value - rb.correction.value) <= tol);
    CHECK(std::abs(ra.corrected_total.value - rb.corrected_total.value) <= tol);
  }
}

TEST_CASE("report serialization") {
  PipelineConfig c = base(1000);
  c.fd_seeds = 2;
  const SensitivityReport rep = run_pipeline(ExpandingCircle(), c).report;
  const auto j = nlohmann::json::parse(report_to_json(rep));
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["metadata"]["system"] == "expanding_circle");
  CHECK(j["metadata"]["K"] == 1000);
  CHECK(j["shadowing"]["value"].get<double>() == rep.shadowing.value);
  CHECK(j["corrected_total"]["value"].get<double>() == rep.corrected_total.value);
  CHECK(j["correction"]["terms"].size() == rep.correction_terms.size());
  CHECK(j["bias"].get<double>() == rep.shadowing.value - rep.oracle_contribution->value);
  CHECK(j["ruelle_direct"].is_null());
  CHECK(j["diagnostics"]["lyapunov"].size() == 1);

  const std::string header = report_csv_header();
  const std::string row = report_csv_row(rep);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(row.rfind("expanding_circle,1,1,", 0) == 0);
}

TEST_CASE("seed lists are distinct and reproducible") {
  const auto a = seed_list(7, 64);
  CHECK(std::set<std::uint64_t>(a.begin(), a.end()).size() == 64);
  CHECK(a == seed_list(7, 64));
  CHECK(a != seed_list(8, 64));
}
