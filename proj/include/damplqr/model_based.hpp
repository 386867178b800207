#pragma once

#include <numeric>
#include <vector>

#include "damplqr/linalg.hpp"

namespace damplqr {

// Damping bookkeeping: the base coefficient and the ordered step sizes.
// gamma() is always the base plus the sum of the stored steps.
struct DampingState {
  double beta_tilde = 0.0;
  std::vector<double> alphas;

  double gamma() const {
    return std::accumulate(alphas.begin(), alphas.end(), beta_tilde);
  }
};

struct PiIterate {
  int index = 0;
  SymMatrix P;     // value matrix evaluated at policy `index`
  Matrix K;        // improved gain derived from P
  double delta_norm = 0.0;
};

struct PiResult {
  SymMatrix P;
  Matrix K;
  std::vector<PiIterate> trace;
};

// Classical policy iteration from a stabilizing gain: alternate the
// closed-loop Lyapunov solve with the gain update
// K <- (R + B^T P B)^{-1} B^T P A until ||P - P_prev|| < eps.
PiResult hewer_pi(const SystemModel& sys, const CostWeights& w,
                  const Matrix& K0, double eps, int max_iterations = 500);

struct DampedIterate {
  int index = 0;     // gain index (1-based)
  double gamma = 0;  // running damping sum after appending alpha
  double alpha = 0;  // step appended at this iterate
  Matrix gain;
  SymMatrix P;       // damped Lyapunov solution the gain was derived from
  double rho = 0;    // spectral radius of A - B*gain
};

struct DampedPiResult {
  Matrix K;
  DampingState damping;
  std::vector<DampedIterate> trace;
};

// Damped policy iteration started from K = 0: the Lyapunov solve runs on the
// scaled closed loop gamma*(A - B K), the gain update carries the gamma^2
// factor, and each step size is frac_a times the model-based headroom
// 1/rho(A - B K_next) - gamma. Terminates once gamma >= 1, at which point
// the returned gain stabilizes the original plant.
// Requires 0 < beta_tilde + alpha0 < 1/rho(A) and frac_a in (0, 1).
DampedPiResult damped_pi_model_based(const SystemModel& sys,
                                     const CostWeights& w, double beta_tilde,
                                     double alpha0, double frac_a,
                                     int max_iterations = 500);

// Model-free upper bound for the next damping step:
//   gamma * (sqrt(smin[Q + K^T R K] / smax[P - Q - K^T R K] + 1) - 1)
// evaluated at the upcoming gain K_next. Returns +infinity when
// P - Q - K^T R K has no positive part, in which case any step keeps the
// damped loop stable (callers cap the step so the loop still terminates).
double alpha_upper_bound_model_free(const SymMatrix& P_j, const Matrix& K_next,
                                    const CostWeights& w, double gamma_j);

}  // namespace damplqr
