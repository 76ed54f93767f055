#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>

#include "shadow/model.hpp"

namespace shadow {

inline constexpr Index kDefaultSpinup = 500;

/// A stored forward trajectory u_0 .. u_{K-1} recorded after spin-up.
/// Immutable once built; the substrate of every average and every backward
/// pass.
class Orbit {
public:
  Orbit(Mat states, double s, Index spinup_steps, std::uint64_t seed);

  Index size() const { return states_.cols(); }
  Index dim() const { return states_.rows(); }
  double parameter() const { return s_; }
  Index spinup_steps() const { return spinup_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::Block<const Mat, Eigen::Dynamic, 1, true> state(Index k) const {
    return states_.col(k);
  }
  const Mat &states() const { return states_; }
  StepRange steps() const { return {0, size()}; }

private:
  Mat states_;
  double s_;
  Index spinup_;
  std::uint64_t seed_;
};

/// Draws u from the model's phase-space box using `seed`, discards `spinup`
/// steps and records K states. Throws DivergenceError on non-finite states.
Orbit generate_orbit(const SystemModel &model, double s, Index K,
                     Index spinup = kDefaultSpinup, std::uint64_t seed = 1);

using StateFunction = std::function<double(VecRef)>;

/// (1/K) sum_{k<K} g(u_k) over the whole orbit.
double time_average(const Orbit &orbit, const StateFunction &g);

/// Same, with a batch-means standard error.
Estimate time_average_estimate(const Orbit &orbit, const StateFunction &g);

/// (1/K) sum_{k<K} J(u_k) along the orbit generate_orbit(model, s, K,
/// spinup, seed) would record, without storing it.
double streaming_objective_average(const SystemModel &model, double s, Index K,
                                   Index spinup, std::uint64_t seed);

/// One row per state, one column per coordinate, 17 significant digits.
void write_orbit_csv(const Orbit &orbit, std::ostream &out);

} // namespace shadow
