#pragma once

#include <vector>

#include "damplqr/data.hpp"
#include "damplqr/linalg.hpp"
#include "damplqr/report.hpp"

namespace damplqr {

// Unpacked least-squares solution of the off-policy evaluation system:
// P is the damped closed-loop value matrix, L1 = A^T P B, L2 = B^T P B.
struct RegressionSolution {
  SymMatrix P;
  Matrix L1;
  SymMatrix L2;
  double residual = 0.0;   // ||psi theta - phi|| / ||phi||
  double condition = 0.0;  // singular-value ratio of psi
  bool ill_conditioned = false;  // condition above 1e12
};

struct BetaSchedule {
  double beta_init = 0.9;
  double ratio = 0.5;
};

struct AlgoConfig {
  BetaSchedule beta_schedule;
  double alpha0 = 1e-4;
  double frac_a = 0.4;
  double eps1 = 1e-5;  // phase-3 stop for the value-matrix iteration
  double eps2 = 1e-5;  // phase-3 stop for the Q-matrix iteration
  int max_phase1 = 64;
  int max_phase2 = 500;
  int max_phase3 = 500;

  void validate() const;  // throws ConfigError
};

// Solves the damped evaluation system assembled from the fixed batch:
//   psi = [xi1 - (gamma^-2 - 1) xi5, -2 xi2 (K^T (x) I) - 2 xi3, -xi4 + xi6]
//   phi = gamma^-2 xi5 vecs(-Q - K^T R K)
// For noise-free data this reproduces the damped Lyapunov solution exactly.
// gamma = 1 gives the undamped evaluation used by the refinement phase.
RegressionSolution solve_phase_regression(const SamplePool& pool,
                                          const CostWeights& w,
                                          const Matrix& K, double gamma);
// Same, reusing precomputed gain-independent blocks.
RegressionSolution solve_phase_regression(const SamplePool& pool,
                                          const XiBlocks& xi,
                                          const CostWeights& w,
                                          const Matrix& K, double gamma);

struct Phase1Result {
  double beta = 0.0;
  int rejections = 0;
  std::vector<TraceRow> trace;
};

// Walks the geometric schedule beta_init * ratio^z and returns the first
// coefficient whose zero-gain evaluation is positive definite, which
// certifies beta + alpha0 < 1/rho(A) without touching the model.
Phase1Result phase1_select_beta(const SamplePool& pool, const CostWeights& w,
                                const AlgoConfig& cfg);

struct Phase2Result {
  Matrix K;
  DampingState damping;
  std::vector<TraceRow> trace;
};

// Damped off-policy iteration: evaluate at the current damping sum, update
// the gain with the gamma^2 scaling, append frac_a times the model-free step
// bound, and stop once the sum reaches 1. The returned gain stabilizes the
// plant.
Phase2Result phase2_stabilize(const SamplePool& pool, const CostWeights& w,
                              double beta, const AlgoConfig& cfg);

struct Phase3Result {
  SymMatrix P;
  Matrix K;
  std::vector<TraceRow> trace;
};

// Undamped off-policy policy iteration from a stabilizing gain; stops when
// ||P_i - P_{i-1}|| < eps1 and converges to the Riccati solution.
Phase3Result phase3_optimize(const SamplePool& pool, const CostWeights& w,
                             const Matrix& K0, double eps1,
                             int max_iterations = 500);

// Phases 1 -> 2 -> 3 on one fixed batch.
SynthesisReport run_algorithm1(const SamplePool& pool, const CostWeights& w,
                               const AlgoConfig& cfg);

}  // namespace damplqr
