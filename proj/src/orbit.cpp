#include "shadow/orbit.hpp"

#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>

#include "shadow/errors.hpp"
#include "shadow/stats.hpp"

namespace shadow {

Orbit::Orbit(Mat states, double s, Index spinup_steps, std::uint64_t seed)
    : states_(std::move(states)), s_(s), spinup_(spinup_steps), seed_(seed) {}

Orbit generate_orbit(const SystemModel &model, double s, Index K, Index spinup,
                     std::uint64_t seed) {
  if (K < 1)
    throw std::invalid_argument("orbit length must be at least 1");
  if (spinup < 0)
    throw std::invalid_argument("spin-up must be non-negative");

  std::mt19937_64 rng(seed);
  Vec u = model.wrap(model.sample_initial(rng));
  auto advance = [&](Index step) {
    u = model.step(u, s);
    if (!u.allFinite())
      throw DivergenceError("orbit diverged", step);
  };
  for (Index k = 0; k < spinup; ++k)
    advance(k - spinup);

  Mat states(model.dim(), K);
  states.col(0) = u;
  for (Index k = 1; k < K; ++k) {
    advance(k);
    states.col(k) = u;
  }
  return Orbit(std::move(states), s, spinup, seed);
}

double streaming_objective_average(const SystemModel &model, double s, Index K,
                                   Index spinup, std::uint64_t seed) {
  if (K < 1)
    throw std::invalid_argument("orbit length must be at least 1");
  std::mt19937_64 rng(seed);
  Vec u = model.wrap(model.sample_initial(rng));
  for (Index k = 0; k < spinup; ++k)
    u = model.step(u, s);
  double total = model.objective(u);
  for (Index k = 1; k < K; ++k) {
    u = model.step(u, s);
    if (!u.allFinite())
      throw DivergenceError("orbit diverged", k);
    total += model.objective(u);
  }
  return total / static_cast<double>(K);
}

double time_average(const Orbit &orbit, const StateFunction &g) {
  double total = 0.0;
  for (Index k = 0; k < orbit.size(); ++k)
    total += g(orbit.state(k));
  return total / static_cast<double>(orbit.size());
}

Estimate time_average_estimate(const Orbit &orbit, const StateFunction &g) {
  std::vector<double> series(static_cast<std::size_t>(orbit.size()));
  for (Index k = 0; k < orbit.size(); ++k)
    series[static_cast<std::size_t>(k)] = g(orbit.state(k));
  return batch_means(series);
}

void write_orbit_csv(const Orbit &orbit, std::ostream &out) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "step";
  for (Index i = 0; i < orbit.dim(); ++i)
    out << ",u" << i;
  out << '\n';
  for (Index k = 0; k < orbit.size(); ++k) {
    out << k;
    for (Index i = 0; i < orbit.dim(); ++i)
      out << ',' << orbit.state(k)[i];
    out << '\n';
  }
  out.precision(old_precision);
}

} // namespace shadow
