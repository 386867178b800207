#include "damplqr/model_based.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "damplqr/errors.hpp"

namespace damplqr {

namespace {

Matrix closed_loop(const SystemModel& sys, const Matrix& K) {
  return sys.A - sys.B * K;
}

SymMatrix stage_cost(const CostWeights& w, const Matrix& K) {
  return SymMatrix::from_dense(w.Q.dense() +
                               K.transpose() * w.R.dense() * K);
}

}  // namespace

PiResult hewer_pi(const SystemModel& sys, const CostWeights& w,
                  const Matrix& K0, double eps, int max_iterations) {
  if (eps <= 0.0) throw std::invalid_argument("hewer_pi: eps must be positive");
  if (K0.rows() != sys.n_u() || K0.cols() != sys.n_x())
    throw std::invalid_argument("hewer_pi: gain dimension mismatch");
  if (!(spectral_radius(closed_loop(sys, K0)) < 1.0))
    throw std::invalid_argument("hewer_pi: unstable initial gain");

  PiResult result;
  Matrix K = K0;
  SymMatrix P_prev;
  for (int i = 0; i < max_iterations; ++i) {
    const SymMatrix P =
        solve_discrete_lyapunov(closed_loop(sys, K), stage_cost(w, K));
    const Matrix BtPB = sys.B.transpose() * P.dense() * sys.B;
    const Matrix K_next =
        (w.R.dense() + BtPB).ldlt().solve(sys.B.transpose() * P.dense() * sys.A);
    const double delta = i > 0 ? (P.dense() - P_prev.dense()).norm() : 0.0;
    result.trace.push_back({i, P, K_next, delta});
    if (i > 0 && delta < eps) {
      result.P = P;
      result.K = K_next;
      return result;
    }
    P_prev = P;
    K = K_next;
  }
  throw ConvergenceError("hewer_pi: no convergence within " +
                         std::to_string(max_iterations) + " iterations");
}

DampedPiResult damped_pi_model_based(const SystemModel& sys,
                                     const CostWeights& w, double beta_tilde,
                                     double alpha0, double frac_a,
                                     int max_iterations) {
  if (beta_tilde <= 0.0 || alpha0 <= 0.0)
    throw std::invalid_argument("damped_pi: beta_tilde and alpha0 must be positive");
  if (frac_a <= 0.0 || frac_a >= 1.0)
    throw std::invalid_argument("damped_pi: frac_a must lie in (0, 1)");
  const double rho_open = spectral_radius(sys.A);
  if (rho_open > 0.0 && beta_tilde + alpha0 >= 1.0 / rho_open)
    throw std::invalid_argument(
        "damped_pi: beta_tilde + alpha0 must stay below 1/rho(A) = " +
        std::to_string(1.0 / rho_open));

  DampedPiResult result;
  result.damping.beta_tilde = beta_tilde;
  result.damping.alphas.push_back(alpha0);
  double gamma = beta_tilde + alpha0;
  Matrix K = Matrix::Zero(sys.n_u(), sys.n_x());

  for (int j = 0; j < max_iterations; ++j) {
    const SymMatrix P = solve_discrete_lyapunov(gamma * closed_loop(sys, K),
                                                stage_cost(w, K));
    const double g2 = gamma * gamma;
    const Matrix BtPB = sys.B.transpose() * P.dense() * sys.B;
    const Matrix K_next =
        g2 * (w.R.dense() + g2 * BtPB)
                 .ldlt()
                 .solve(sys.B.transpose() * P.dense() * sys.A);

    const double rho_next = spectral_radius(closed_loop(sys, K_next));
    double alpha_next;
    if (rho_next > 0.0 && std::isfinite(1.0 / rho_next)) {
      alpha_next = frac_a * (1.0 / rho_next - gamma);
    } else {
      // Deadbeat closed loop: the headroom is unbounded, so finish the
      // homotopy in one capped step.
      alpha_next = (1.0 - gamma) + alpha0;
    }
    if (alpha_next <= 0.0)
      throw ConvergenceError("damped_pi: nonpositive damping step");

    gamma += alpha_next;
    result.damping.alphas.push_back(alpha_next);
    result.trace.push_back({j + 1, gamma, alpha_next, K_next, P, rho_next});
    K = K_next;
    if (gamma >= 1.0) {
      result.K = K;
      return result;
    }
  }
  throw ConvergenceError("damped_pi: damping sum did not reach 1 within " +
                         std::to_string(max_iterations) + " iterations");
}

double alpha_upper_bound_model_free(const SymMatrix& P_j, const Matrix& K_next,
                                    const CostWeights& w, double gamma_j) {
  if (gamma_j <= 0.0)
    throw std::invalid_argument("alpha_upper_bound: gamma must be positive");
  if (!is_positive_definite(P_j))
    throw std::invalid_argument("alpha_upper_bound: P must be positive definite");

  const SymMatrix cost = stage_cost(w, K_next);
  const SymMatrix gap = SymMatrix::from_dense(P_j.dense() - cost.dense());

  Eigen::SelfAdjointEigenSolver<Matrix> es(gap.dense(),
                                           Eigen::EigenvaluesOnly);
  const Vector eigs = es.eigenvalues();
  const double lam_max = eigs.maxCoeff();
  const double scale = std::max(1.0, eigs.cwiseAbs().maxCoeff());
  if (lam_max <= kPdTol * scale)
    return std::numeric_limits<double>::infinity();  // unconstrained

  const double smax = eigs.cwiseAbs().maxCoeff();
  const double smin = min_eigenvalue(cost);
  return gamma_j * (std::sqrt(smin / smax + 1.0) - 1.0);
}

}  // namespace damplqr
