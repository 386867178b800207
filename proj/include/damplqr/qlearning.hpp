#pragma once

#include <vector>

#include "damplqr/data.hpp"
#include "damplqr/linalg.hpp"
#include "damplqr/offpolicy_pi.hpp"
#include "damplqr/report.hpp"

namespace damplqr {

// Action-value quadratic form [x; u]^T H [x; u] with named blocks.
struct QMatrix {
  SymMatrix H;  // dimension n_x + n_u
  int n_x = 0;

  int n_u() const { return H.dim() - n_x; }
  Matrix xx() const;
  Matrix xu() const;
  Matrix ux() const;
  Matrix uu() const;
};

// Block-diagonal stage penalty blkdiag(Q, R).
struct QbarWeights {
  SymMatrix value;
  explicit QbarWeights(const CostWeights& w);
};

// Greedy gain K = H_uu^{-1} H_ux. Throws std::invalid_argument
// ("invalid Q-matrix") when H_uu is not positive definite.
Matrix k_from_h(const QMatrix& h);

// Value matrix of policy K under H: P = [I; -K]^T H [I; -K].
SymMatrix p_from_h(const QMatrix& h, const Matrix& K);

// Rebuilds H from a value matrix with the true model:
//   [g^2 A^T P A + Q, g^2 A^T P B; g^2 B^T P A, g^2 B^T P B + R].
// Verification bridge only (oracle output, block-structure tests).
QMatrix h_from_p(const SystemModel& sys, const CostWeights& w,
                 const SymMatrix& P, double gamma = 1.0);

struct QRegressionSolution {
  QMatrix H;
  double residual = 0.0;
  double condition = 0.0;
  bool ill_conditioned = false;
};

// Least-squares solve of Theta vecs(H) = Gamma_X vecs(Qbar) with
// Theta = Gamma_X - gamma^2 Gamma_x; equivalent to the damped closed-loop
// Lyapunov equation for H. gamma = 1 gives the undamped evaluation.
QRegressionSolution solve_q_regression(const SamplePool& pool,
                                       const CostWeights& w, const Matrix& K,
                                       double gamma);
QRegressionSolution solve_q_regression(const SamplePool& pool,
                                       const Matrix& gamma_X,
                                       const CostWeights& w, const Matrix& K,
                                       double gamma);

// Same schedule as phase1_select_beta; acceptance test is H > 0, which holds
// iff the damped zero-gain loop is stable.
Phase1Result q_phase1_select_beta(const SamplePool& pool, const CostWeights& w,
                                  const AlgoConfig& cfg);

// Damped Q-learning stabilization; produces the same gain sequence as
// phase2_stabilize on the same batch.
Phase2Result q_phase2_stabilize(const SamplePool& pool, const CostWeights& w,
                                double beta, const AlgoConfig& cfg);

struct QPhase3Result {
  QMatrix H;
  Matrix K;
  std::vector<TraceRow> trace;
};

// Undamped off-policy Q-learning refinement; stops when
// ||H_i - H_{i-1}|| < eps2. The limit solves the Riccati equation through
// its H-blocks.
QPhase3Result q_phase3_optimize(const SamplePool& pool, const CostWeights& w,
                                const Matrix& K0, double eps2,
                                int max_iterations = 500);

SynthesisReport run_algorithm2(const SamplePool& pool, const CostWeights& w,
                               const AlgoConfig& cfg);

}  // namespace damplqr
