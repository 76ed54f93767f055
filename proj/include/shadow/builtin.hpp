#pragma once

#include <optional>

#include "shadow/model.hpp"

namespace shadow {

/// u -> 2u + s sin(u) mod 2pi on the circle, J = cos u. M = m = 1.
class ExpandingCircle final : public SystemModel {
public:
  explicit ExpandingCircle(std::optional<Index> declared_unstable = {});
  std::string name() const override { return "expanding_circle"; }

protected:
  Vec do_step(VecRef u, double s) const override;
  Vec do_jvp(VecRef u, VecRef w, double s) const override;
  Vec do_vjp(VecRef u, VecRef a, double s) const override;
  Vec do_forcing(VecRef u, double s) const override;
  double do_objective(VecRef u) const override;
  Vec do_objective_gradient(VecRef u) const override;
};

/// Arnold cat map on the 2-torus, u -> A u + s (sin u1, 0) mod 2pi with
/// A = [[2,1],[1,1]], J = cos u1. M = 2, m = 1.
class PerturbedCatMap final : public SystemModel {
public:
  explicit PerturbedCatMap(std::optional<Index> declared_unstable = {});
  std::string name() const override { return "perturbed_cat_map"; }

protected:
  Vec do_step(VecRef u, double s) const override;
  Vec do_jvp(VecRef u, VecRef w, double s) const override;
  Vec do_vjp(VecRef u, VecRef a, double s) const override;
  Vec do_forcing(VecRef u, double s) const override;
  double do_objective(VecRef u) const override;
  Vec do_objective_gradient(VecRef u) const override;
};

struct SolenoidParams {
  double contraction = 0.25;
  double radius = 0.5;
};

/// Smale-Williams solenoid on S^1 x R^2:
///   theta -> 2 theta + s sin(theta) mod 2pi
///   x     -> c x + r cos(theta)
///   y     -> c y + r sin(theta)
/// with J = x. M = 3, m = 1.
class Solenoid final : public SystemModel {
public:
  explicit Solenoid(SolenoidParams params = {},
                    std::optional<Index> declared_unstable = {});
  std::string name() const override { return "solenoid"; }
  const SolenoidParams &params() const { return params_; }

protected:
  Vec do_step(VecRef u, double s) const override;
  Vec do_jvp(VecRef u, VecRef w, double s) const override;
  Vec do_vjp(VecRef u, VecRef a, double s) const override;
  Vec do_forcing(VecRef u, double s) const override;
  double do_objective(VecRef u) const override;
  Vec do_objective_gradient(VecRef u) const override;

private:
  SolenoidParams params_;
};

/// Objective of a BlockHyperbolicLinear system.
struct Objective {
  enum class Kind { Linear, Cosine, Sine };
  Kind kind = Kind::Cosine;
  Vec weights;          ///< Linear: J = <weights, u>
  Index coordinate = 0; ///< Cosine/Sine: J = cos(u_i) or sin(u_i)

  static Objective linear(Vec weights);
  static Objective cosine(Index coordinate);
  static Objective sine(Index coordinate);
};

struct BlockHyperbolicParams {
  Index dim = 2;
  Index unstable = 1;
  /// Integer expansion factor of the periodic coordinates.
  double expansion = 2.0;
  /// Contraction factor of the non-periodic coordinates, in (0, 1).
  double contraction = 0.5;
  /// Coupling of stable coordinate j into unstable coordinate j mod m.
  double shear = 0.0;
  /// Constant df/ds; empty means zero.
  Vec forcing;
  Objective objective = Objective::cosine(0);
};

/// Constant-Jacobian map u -> L u + s X with
///   L = [[expansion I_m, shear B], [0, contraction I_{M-m}]].
/// The m expanding coordinates are periodic; the contracting coordinates
/// live in R and converge to a fixed point.
class BlockHyperbolicLinear final : public SystemModel {
public:
  explicit BlockHyperbolicLinear(BlockHyperbolicParams params,
                                 std::optional<Index> declared_unstable = {});
  std::string name() const override { return "block_hyperbolic_linear"; }
  const BlockHyperbolicParams &params() const { return params_; }
  const Mat &jacobian() const { return jacobian_; }

protected:
  Vec do_step(VecRef u, double s) const override;
  Vec do_jvp(VecRef u, VecRef w, double s) const override;
  Vec do_vjp(VecRef u, VecRef a, double s) const override;
  Vec do_forcing(VecRef u, double s) const override;
  double do_objective(VecRef u) const override;
  Vec do_objective_gradient(VecRef u) const override;

private:
  BlockHyperbolicParams params_;
  Mat jacobian_;
};

} // namespace shadow
