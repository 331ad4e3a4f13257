#pragma once

#include <functional>
#include <span>
#include <vector>

#include "stablelad/regressors.hpp"
#include "stablelad/sde_sim.hpp"

namespace stablelad {

/// The slice of a model needed by the estimator (no noise / scale knowledge).
struct ModelLite {
  DriftFamily drift;
  WeightSpec weight_V = WeightOne{};
  ThetaBox theta_domain;
};

struct LadProblem {
  ObservationPath path;
  ModelLite model;
  RegressorKind regressor = RegressorKind::Euler;

  void validate() const;
};

enum class LadSolver { ConvexL1, NelderMead, GridRefine };

struct LadSolution {
  std::vector<double> theta_hat;
  double objective_value = 0.0;
  LadSolver solver = LadSolver::ConvexL1;
  int iterations = 0;
  bool converged = false;
  bool boundary = false;         // theta_hat within 1e-6 of the domain boundary
  double subgradient_gap = 0.0;  // optimality-certificate slack (affine route)
};

/// L_n(theta) = sum_k V(X_{k-1}) |X_k - F_h(theta; X_{k-1})|.
double lad_objective(const LadProblem& problem, std::span<const double> theta);

/// Minimizes L_n over the theta box. Objectives affine in theta (Euler
/// regressor with a drift linear in theta) go through smoothed IRLS with an
/// epsilon-continuation 1e-2 -> 1e-10 and a final subgradient certificate;
/// everything else through a 5-start Nelder-Mead with a golden-section polish.
LadSolution solve_lad(const LadProblem& problem);

/// q(x,v) = (2v-2x) 1{x in [0,v)} for v >= 0, (2x-2v) 1{x in (v,0]} for v < 0.
double q_function(double x, double v);

/// | |x-v| - |x| - (-v sgn(x) + q(x,v)) |; identically 0 for x != 0.
double q_identity_residual(double x, double v);

/// Closed form of int_{-1}^{1} q(z, v) dz: v^2 for |v| <= 1, 2|v| - 1 beyond.
double q_integral(double v);

struct QDecomposition {
  std::vector<double> zeta;                                            // zeta_{k,n}, k = 1..n
  std::function<std::vector<double>(std::span<const double>)> kappa;   // theta -> kappa_{k,n}
};

/// zeta_{k,n} = h^(-1/alpha) (X_k - F_h(theta0; X_{k-1})) V(X_{k-1}) and the
/// analogous regressor-difference kappa_{k,n}(theta); theta0 is only known in
/// simulation studies and is therefore an explicit input.
QDecomposition decompose(const LadProblem& problem, double alpha_for_scaling,
                         std::span<const double> theta0);

}  // namespace stablelad
