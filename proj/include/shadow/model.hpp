#pragma once

#include <random>
#include <string>
#include <vector>

#include "shadow/types.hpp"

namespace shadow {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Discrete-time dynamical system u_{k+1} = f(u_k, s) with objective J(u).
///
/// Implementations supply the map, the Jacobian action f_* w and its
/// transpose f_*^T a, the parameter derivative df/ds, and J with its
/// gradient. The public entry points validate their arguments and wrap
/// periodic coordinates into [0, 2pi); tangent and adjoint vectors are
/// never wrapped.
///
/// Models are immutable once constructed and may be evaluated from several
/// threads at once. Invertibility of f is not required: everything that
/// runs backward in time does so along a stored forward orbit.
class SystemModel {
public:
  virtual ~SystemModel() = default;

  Index dim() const { return dim_; }
  Index num_unstable() const { return num_unstable_; }
  const std::vector<bool> &periodic() const { return periodic_; }
  virtual std::string name() const = 0;

  Vec step(VecRef u, double s) const;
  Vec jvp(VecRef u, VecRef w, double s) const;
  Vec vjp(VecRef u, VecRef a, double s) const;
  /// df/ds evaluated at u. Attached to the *next* step: X_{k+1} = forcing(u_k).
  Vec forcing(VecRef u, double s) const;
  double objective(VecRef u) const;
  Vec objective_gradient(VecRef u) const;

  /// Applies jvp column by column.
  Mat jvp_columns(VecRef u, MatRef w, double s) const;
  Mat vjp_columns(VecRef u, MatRef a, double s) const;

  /// Periodic coordinates reduced into [0, 2pi).
  Vec wrap(Vec u) const;
  /// a - b with periodic coordinates reduced into [-pi, pi).
  Vec difference(VecRef a, VecRef b) const;
  /// Uniform draw from the phase-space box.
  virtual Vec sample_initial(std::mt19937_64 &rng) const;

protected:
  SystemModel(Index dim, Index num_unstable, std::vector<bool> periodic);

  virtual Vec do_step(VecRef u, double s) const = 0;
  virtual Vec do_jvp(VecRef u, VecRef w, double s) const = 0;
  virtual Vec do_vjp(VecRef u, VecRef a, double s) const = 0;
  virtual Vec do_forcing(VecRef u, double s) const = 0;
  virtual double do_objective(VecRef u) const = 0;
  virtual Vec do_objective_gradient(VecRef u) const = 0;

private:
  void check_vector(VecRef x, const char *what) const;

  Index dim_;
  Index num_unstable_;
  std::vector<bool> periodic_;
};

struct ModelDerivatives {
  Vec forcing;       ///< X_{k+1} = df/ds(u_prev)
  double objective;  ///< J(u)
  Vec gradient;      ///< J_u(u)
};

/// Evaluates X, J and J_u for the step u_prev -> u. Throws ConsistencyError
/// when u is not the image of u_prev.
ModelDerivatives model_derivatives(const SystemModel &model, VecRef u_prev,
                                   VecRef u, double s);

} // namespace shadow
