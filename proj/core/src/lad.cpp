#include "stablelad/lad.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "stablelad/errors.hpp"
#include "stablelad/rng.hpp"

namespace stablelad {

void LadProblem::validate() const {
  if (path.values.size() < 2) throw ValidationError("LAD problem needs a path of length >= 2");
  path.validate();
  model.theta_domain.validate();
  if (model.theta_domain.dim() != static_cast<std::size_t>(drift_dim(model.drift))) {
    throw ValidationError("theta domain dimension does not match the drift family");
  }
  validate_regressor_pair(regressor, model.drift);
}

double lad_objective(const LadProblem& problem, std::span<const double> theta) {
  if (!problem.model.theta_domain.contains(theta)) {
    throw ValidationError("lad_objective: theta outside the parameter domain");
  }
  const auto& x = problem.path.values;
  const double h = problem.path.h();
  double sum = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double v = weight_value(problem.model.weight_V, x[k - 1]);
    if (v == 0.0) continue;
    sum += v * std::abs(x[k] - regressor_value(problem.regressor, problem.model.drift, theta,
                                               x[k - 1], h));
  }
  return sum;
}

// ---------------------------------------------------------------------------
// q machinery

double q_function(double x, double v) {
  if (v >= 0.0) {
    return (x >= 0.0 && x < v) ? 2.0 * (v - x) : 0.0;
  }
  return (x > v && x <= 0.0) ? 2.0 * (x - v) : 0.0;
}

double q_identity_residual(double x, double v) {
  if (x == 0.0) throw ValidationError("q identity is stated for x != 0");
  const double sgn = x > 0.0 ? 1.0 : -1.0;
  return std::abs(std::abs(x - v) - std::abs(x) - (-v * sgn + q_function(x, v)));
}

double q_integral(double v) {
  const double av = std::abs(v);
  return av <= 1.0 ? v * v : 2.0 * av - 1.0;
}

// ---------------------------------------------------------------------------
// Solvers

namespace {

/// Euler regressor with a drift linear in theta: F_h(theta;x) = x + h theta.phi(x),
/// so the objective is a weighted L1 regression onto the rows h*phi(X_{k-1}).
bool is_affine_case(const LadProblem& p) {
  return p.regressor == RegressorKind::Euler &&
         (std::holds_alternative<LinearDrift>(p.model.drift) ||
          std::holds_alternative<BernoulliDrift>(p.model.drift));
}

struct AffineData {
  Eigen::MatrixXd rows;     // n x m, rows h*phi(X_{k-1})
  Eigen::VectorXd targets;  // X_k - X_{k-1}
  Eigen::VectorXd weights;  // V(X_{k-1})
};

AffineData build_affine(const LadProblem& p) {
  const auto& x = p.path.values;
  const double h = p.path.h();
  const std::size_t n = x.size() - 1;
  const int m = drift_dim(p.model.drift);
  AffineData d;
  d.rows.resize(n, m);
  d.targets.resize(n);
  d.weights.resize(n);
  std::vector<double> zero(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto phi = drift_grad_theta(p.model.drift, zero, x[k]);
    for (int j = 0; j < m; ++j) d.rows(k, j) = h * phi[j];
    d.targets(k) = x[k + 1] - x[k];
    d.weights(k) = weight_value(p.model.weight_V, x[k]);
  }
  return d;
}

struct SubgradientCheck {
  bool optimal = false;
  double gap = 0.0;
};

// KKT certificate for min over the box of sum w_k |y_k - r_k.theta|. Per
// coordinate the subdifferential is [g - slack, g + slack] with g collecting
// -sgn(res) w r_j over nonzero residuals and slack the mass of the zero
// residuals. Free coordinates need 0 inside; coordinates at a bound need the
// one-sided condition of the box normal cone.
SubgradientCheck subgradient_optimality(const AffineData& d, const Eigen::VectorXd& theta,
                                        const ThetaBox& box, double tol) {
  const Eigen::VectorXd res = d.targets - d.rows * theta;
  const double res_scale = 1e-9 * (1.0 + res.cwiseAbs().maxCoeff());
  const int m = static_cast<int>(theta.size());
  SubgradientCheck out;
  out.gap = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    double g = 0.0;
    double slack = 0.0;
    for (Eigen::Index k = 0; k < res.size(); ++k) {
      const double rj = d.weights(k) * d.rows(k, j);
      if (std::abs(res(k)) <= res_scale) {
        slack += std::abs(rj);
      } else {
        g -= (res(k) > 0.0 ? 1.0 : -1.0) * rj;
      }
    }
    const double margin = 1e-9 * (box.hi[j] - box.lo[j]);
    double violation;
    if (theta(j) >= box.hi[j] - margin) {
      violation = g - slack;  // need some s <= 0 in the subdifferential
    } else if (theta(j) <= box.lo[j] + margin) {
      violation = -(g + slack);  // need some s >= 0
    } else {
      violation = std::abs(g) - slack;
    }
    out.gap = std::max(out.gap, violation);
  }
  out.optimal = out.gap <= tol;
  return out;
}

// Smoothed IRLS over the free coordinates with the active ones pinned to
// their bounds; epsilon continuation 1e-2 -> 1e-10.
bool irls_minimize(const AffineData& d, const std::vector<int>& free_idx,
                   const Eigen::VectorXd& pinned, Eigen::VectorXd* theta, int* iterations) {
  const int mf = static_cast<int>(free_idx.size());
  if (mf == 0) return true;
  // pinned is zero on free coordinates, so this removes only the fixed part
  const Eigen::VectorXd target = d.targets - d.rows * pinned;
  Eigen::MatrixXd rows(d.rows.rows(), mf);
  for (int j = 0; j < mf; ++j) rows.col(j) = d.rows.col(free_idx[j]);
  Eigen::VectorXd th(mf);
  for (int j = 0; j < mf; ++j) th(j) = (*theta)(free_idx[j]);

  for (double eps = 1e-2; eps >= 0.5e-10; eps *= 0.1) {
    for (int it = 0; it < 100; ++it) {
      ++*iterations;
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(mf, mf);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(mf);
      const Eigen::VectorXd res = target - rows * th;
      for (Eigen::Index k = 0; k < res.size(); ++k) {
        const double w = d.weights(k) / std::sqrt(res(k) * res(k) + eps * eps);
        A.noalias() += w * rows.row(k).transpose() * rows.row(k);
        b.noalias() += w * target(k) * rows.row(k).transpose();
      }
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      if (ldlt.info() != Eigen::Success) return false;
      const Eigen::VectorXd next = ldlt.solve(b);
      if (!next.allFinite()) return false;
      const double step = (next - th).cwiseAbs().maxCoeff();
      th = next;
      if (step < 1e-13 * (1.0 + th.cwiseAbs().maxCoeff())) break;
    }
  }
  for (int j = 0; j < mf; ++j) (*theta)(free_idx[j]) = th(j);
  return true;
}

LadSolution solve_affine(const LadProblem& p, const AffineData& d) {
  const int m = static_cast<int>(d.rows.cols());
  const auto& box = p.model.theta_domain;

  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(box.center().data(), m);
  int iterations = 0;

  // active-set loop: solve unconstrained over the free coordinates, pin any
  // coordinate that leaves the box, re-solve; at most m pinning rounds
  std::vector<int> active(m, 0);  // 0 free, +1 at hi, -1 at lo
  for (int round = 0; round <= m; ++round) {
    std::vector<int> free_idx;
    Eigen::VectorXd pinned = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      if (active[j] == 0) {
        free_idx.push_back(j);
      } else {
        pinned(j) = active[j] > 0 ? box.hi[j] : box.lo[j];
        theta(j) = pinned(j);
      }
    }
    if (!irls_minimize(d, free_idx, pinned, &theta, &iterations)) {
      return {};  // singular normal equations: caller falls back to Nelder-Mead
    }
    bool changed = false;
    for (int j : free_idx) {
      if (theta(j) > box.hi[j]) {
        active[j] = 1;
        changed = true;
      } else if (theta(j) < box.lo[j]) {
        active[j] = -1;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<double> theta_v(theta.data(), theta.data() + m);
  theta_v = box.clamp(theta_v);
  theta = Eigen::Map<const Eigen::VectorXd>(theta_v.data(), m);

  LadSolution sol;
  sol.solver = LadSolver::ConvexL1;
  sol.iterations = iterations;
  sol.theta_hat = theta_v;
  sol.objective_value = lad_objective(p, theta_v);
  const auto check =
      subgradient_optimality(d, theta, box, 1e-6 * static_cast<double>(d.targets.size()));
  sol.subgradient_gap = check.gap;
  sol.converged = check.optimal;
  sol.boundary = !box.strictly_contains(theta_v, 1e-6);
  return sol;
}

// Bounded Nelder-Mead; candidate vertices are clamped into the box.
std::pair<std::vector<double>, double> nelder_mead(
    const std::function<double(std::span<const double>)>& f, const ThetaBox& box,
    std::vector<double> start, int max_iter, int* evals) {
  const std::size_t m = start.size();
  struct Vertex {
    std::vector<double> x;
    double fx;
  };
  auto eval = [&](std::vector<double> x) -> Vertex {
    x = box.clamp(x);
    ++*evals;
    return {x, f(x)};
  };

  std::vector<Vertex> simplex;
  simplex.push_back(eval(start));
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> v = start;
    const double span = 0.05 * (box.hi[i] - box.lo[i]);
    v[i] += (v[i] + span <= box.hi[i]) ? span : -span;
    simplex.push_back(eval(v));
  }
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; };

  for (int it = 0; it < max_iter; ++it) {
    std::sort(simplex.begin(), simplex.end(), by_value);
    const Vertex& best = simplex.front();
    const Vertex& worst = simplex.back();
    if (worst.fx - best.fx <= 1e-12 * (1.0 + std::abs(best.fx))) break;

    std::vector<double> centroid(m, 0.0);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) {
      for (std::size_t j = 0; j < m; ++j) centroid[j] += simplex[i].x[j];
    }
    for (double& c : centroid) c /= static_cast<double>(m);

    auto affine = [&](double t) {
      std::vector<double> v(m);
      for (std::size_t j = 0; j < m; ++j) v[j] = centroid[j] + t * (worst.x[j] - centroid[j]);
      return v;
    };

    Vertex reflected = eval(affine(-1.0));
    if (reflected.fx < best.fx) {
      Vertex expanded = eval(affine(-2.0));
      simplex.back() = expanded.fx < reflected.fx ? expanded : reflected;
    } else if (reflected.fx < simplex[simplex.size() - 2].fx) {
      simplex.back() = reflected;
    } else {
      Vertex contracted = eval(affine(0.5));
      if (contracted.fx < worst.fx) {
        simplex.back() = contracted;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          std::vector<double> v(m);
          for (std::size_t j = 0; j < m; ++j) v[j] = 0.5 * (simplex[i].x[j] + simplex[0].x[j]);
          simplex[i] = eval(v);
        }
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(), by_value);
  return {simplex.front().x, simplex.front().fx};
}

// One golden-section pass per coordinate around the incumbent.
void golden_polish(const std::function<double(std::span<const double>)>& f, const ThetaBox& box,
                   std::vector<double>& theta, double& ftheta, int* evals) {
  constexpr double kInvPhi = 0.6180339887498949;
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double radius = 0.05 * (box.hi[j] - box.lo[j]);
      double lo = std::max(box.lo[j], theta[j] - radius);
      double hi = std::min(box.hi[j], theta[j] + radius);
      auto fj = [&](double t) {
        std::vector<double> v = theta;
        v[j] = t;
        ++*evals;
        return f(v);
      };
      double x1 = hi - kInvPhi * (hi - lo);
      double x2 = lo + kInvPhi * (hi - lo);
      double f1 = fj(x1), f2 = fj(x2);
      while (hi - lo > 1e-10 * (1.0 + std::abs(theta[j]))) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - kInvPhi * (hi - lo);
          f1 = fj(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + kInvPhi * (hi - lo);
          f2 = fj(x2);
        }
      }
      const double cand = 0.5 * (lo + hi);
      const double fcand = fj(cand);
      if (fcand < ftheta) {
        theta[j] = cand;
        ftheta = fcand;
      }
    }
  }
}

LadSolution solve_nelder_mead(const LadProblem& p) {
  const auto& box = p.model.theta_domain;
  const std::size_t m = box.dim();
  auto objective = [&](std::span<const double> th) { return lad_objective(p, th); };

  // deterministic multistart: domain center + 4 seeded uniform draws
  std::vector<std::vector<double>> starts{box.center()};
  SplitMix64 rng(0x57AB1E1AD5EEDULL);
  for (int s = 0; s < 4; ++s) {
    std::vector<double> v(m);
    for (std::size_t j = 0; j < m; ++j) v[j] = rng.uniform(box.lo[j], box.hi[j]);
    starts.push_back(std::move(v));
  }

  LadSolution sol;
  sol.solver = LadSolver::NelderMead;
  double best = std::numeric_limits<double>::infinity();
  int evals = 0;
  for (const auto& start : starts) {
    auto [theta, ftheta] = nelder_mead(objective, box, start, 400 * static_cast<int>(m), &evals);
    if (std::isfinite(ftheta) && ftheta < best) {
      best = ftheta;
      sol.theta_hat = theta;
    }
  }
  if (!std::isfinite(best) || sol.theta_hat.empty()) {
    throw EstimationError("solve_lad: no multistart produced a finite objective");
  }
  golden_polish(objective, box, sol.theta_hat, best, &evals);
  sol.objective_value = best;
  sol.iterations = evals;
  sol.converged = true;
  sol.boundary = !box.strictly_contains(sol.theta_hat, 1e-6);
  return sol;
}

}  // namespace

LadSolution solve_lad(const LadProblem& problem) {
  problem.validate();
  if (is_affine_case(problem)) {
    const AffineData d = build_affine(problem);
    LadSolution sol = solve_affine(problem, d);
    if (!sol.theta_hat.empty()) return sol;
    // singular normal equations (e.g. a one-point path): generic route
  }
  return solve_nelder_mead(problem);
}

QDecomposition decompose(const LadProblem& problem, double alpha_for_scaling,
                         std::span<const double> theta0) {
  problem.validate();
  if (!(alpha_for_scaling > 0.0) || !(alpha_for_scaling < 2.0)) {
    throw ValidationError("decompose: alpha_for_scaling must lie in (0,2)");
  }
  const double scale = std::pow(problem.path.h(), -1.0 / alpha_for_scaling);
  const auto& x = problem.path.values;
  const double h = problem.path.h();
  const std::size_t n = x.size() - 1;

  QDecomposition d;
  d.zeta.resize(n);
  std::vector<double> f0(n), vw(n);
  for (std::size_t k = 0; k < n; ++k) {
    f0[k] = regressor_value(problem.regressor, problem.model.drift, theta0, x[k], h);
    vw[k] = weight_value(problem.model.weight_V, x[k]);
    d.zeta[k] = scale * (x[k + 1] - f0[k]) * vw[k];
  }

  d.kappa = [xs = problem.path.values, drift = problem.model.drift, kind = problem.regressor,
             scale, f0 = std::move(f0), vw = std::move(vw), h](std::span<const double> theta) {
    std::vector<double> out(xs.size() - 1);
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      const double f = regressor_value(kind, drift, theta, xs[k], h);
      out[k] = scale * (f - f0[k]) * vw[k];
    }
    return out;
  };
  return d;
}

}  // namespace stablelad
