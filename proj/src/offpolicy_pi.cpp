#include "damplqr/offpolicy_pi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "damplqr/errors.hpp"

namespace damplqr {

namespace {

constexpr double kConditionWarn = 1e12;

struct LeastSquares {
  Vector theta;
  double residual = 0.0;
  double condition = 0.0;
  double smallest_singular = 0.0;
};

LeastSquares solve_least_squares(const Matrix& lhs, const Vector& rhs) {
  Eigen::JacobiSVD<Matrix> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double threshold = std::max(lhs.rows(), lhs.cols()) *
                           std::numeric_limits<double>::epsilon() * sv[0];
  if (sv[sv.size() - 1] <= threshold)
    throw RankError(
        "insufficient excitation: regression matrix is rank-deficient "
        "(smallest singular value " +
        std::to_string(sv[sv.size() - 1]) + ")");
  LeastSquares out;
  out.theta = svd.solve(rhs);
  out.residual = (lhs * out.theta - rhs).norm() / std::max(rhs.norm(), 1e-300);
  out.condition = sv[0] / sv[sv.size() - 1];
  out.smallest_singular = sv[sv.size() - 1];
  return out;
}

SymMatrix stage_cost(const CostWeights& w, const Matrix& K) {
  return SymMatrix::from_dense(w.Q.dense() + K.transpose() * w.R.dense() * K);
}

}  // namespace

void AlgoConfig::validate() const {
  if (!(beta_schedule.beta_init > 0.0 && beta_schedule.beta_init < 1.0))
    throw ConfigError("AlgoConfig: beta_init must lie in (0, 1)");
  if (!(beta_schedule.ratio > 0.0 && beta_schedule.ratio < 1.0))
    throw ConfigError("AlgoConfig: beta schedule ratio must lie in (0, 1)");
  if (!(alpha0 > 0.0)) throw ConfigError("AlgoConfig: alpha0 must be positive");
  if (!(frac_a > 0.0 && frac_a < 1.0))
    throw ConfigError("AlgoConfig: frac_a must lie in (0, 1)");
  if (!(eps1 > 0.0) || !(eps2 > 0.0))
    throw ConfigError("AlgoConfig: stopping thresholds must be positive");
  if (max_phase1 < 1 || max_phase2 < 1 || max_phase3 < 1)
    throw ConfigError("AlgoConfig: iteration caps must be positive");
}

RegressionSolution solve_phase_regression(const SamplePool& pool,
                                          const CostWeights& w,
                                          const Matrix& K, double gamma) {
  return solve_phase_regression(pool, build_xi(pool), w, K, gamma);
}

RegressionSolution solve_phase_regression(const SamplePool& pool,
                                          const XiBlocks& xi,
                                          const CostWeights& w,
                                          const Matrix& K, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("solve_phase_regression: gamma must be positive");
  if (K.rows() != pool.n_u || K.cols() != pool.n_x)
    throw std::invalid_argument("solve_phase_regression: gain dimension mismatch");

  const int n_x = pool.n_x;
  const int n_u = pool.n_u;
  const int np = n_x * (n_x + 1) / 2;
  const int nl1 = n_x * n_u;
  const int nl2 = n_u * (n_u + 1) / 2;
  const double inv_g2 = 1.0 / (gamma * gamma);

  const Matrix xi6 = build_xi6(pool, K);
  Matrix psi(pool.size(), np + nl1 + nl2);
  // The middle block multiplies vec(L1); pairing vec's column stacking with
  // the x (x) x rows requires K^T (x) I here, not I (x) K^T (they coincide
  // for a single input).
  psi << xi.xi1 - (inv_g2 - 1.0) * xi.xi5,
      -2.0 * xi.xi2 * kron(K.transpose(), Matrix::Identity(n_x, n_x)) -
          2.0 * xi.xi3,
      -xi.xi4 + xi6;
  const Vector phi =
      inv_g2 * (xi.xi5 * vecs(SymMatrix::from_dense(-stage_cost(w, K).dense())));

  const LeastSquares ls = solve_least_squares(psi, phi);
  RegressionSolution sol;
  sol.P = mat_from_vecs(ls.theta.segment(0, np));
  sol.L1 = unvec(ls.theta.segment(np, nl1), n_x, n_u);
  sol.L2 = mat_from_vecs(ls.theta.segment(np + nl1, nl2));
  sol.residual = ls.residual;
  sol.condition = ls.condition;
  sol.ill_conditioned = ls.condition > kConditionWarn;
  return sol;
}

Phase1Result phase1_select_beta(const SamplePool& pool, const CostWeights& w,
                                const AlgoConfig& cfg) {
  cfg.validate();
  if (const RankCheck rc = rank_condition_pi(pool); !rc.ok)
    throw RankError("phase 1: excitation rank condition unmet (" +
                    std::to_string(pool.size()) + " samples, need rank " +
                    std::to_string(rc.required) + ")");

  const XiBlocks xi = build_xi(pool);
  const Matrix K0 = Matrix::Zero(pool.n_u, pool.n_x);
  Phase1Result result;
  double beta = cfg.beta_schedule.beta_init;
  for (int z = 0; z < cfg.max_phase1; ++z, beta *= cfg.beta_schedule.ratio) {
    TraceRow row;
    row.phase = 1;
    row.index = z;
    row.gamma = beta + cfg.alpha0;
    row.gain = K0;
    bool positive = false;
    try {
      const RegressionSolution sol =
          solve_phase_regression(pool, xi, w, K0, beta + cfg.alpha0);
      row.residual = sol.residual;
      positive = is_positive_definite(sol.P);
    } catch (const RankError&) {
      // A singular evaluation at this particular damping (eigenvalue product
      // on the unit circle) counts as a rejection, not a data failure.
    }
    row.accepted = positive;
    result.trace.push_back(row);
    if (positive) {
      result.beta = beta;
      result.rejections = z;
      return result;
    }
  }
  throw ConvergenceError("phase 1: no admissible damping found within " +
                         std::to_string(cfg.max_phase1) + " trials");
}

Phase2Result phase2_stabilize(const SamplePool& pool, const CostWeights& w,
                              double beta, const AlgoConfig& cfg) {
  cfg.validate();
  if (!(beta > 0.0))
    throw std::invalid_argument("phase 2: beta must be positive");

  const XiBlocks xi = build_xi(pool);
  const Matrix R = w.R.dense();

  Phase2Result result;
  result.damping.beta_tilde = beta;
  result.damping.alphas.push_back(cfg.alpha0);
  double gamma = beta + cfg.alpha0;
  Matrix K = Matrix::Zero(pool.n_u, pool.n_x);
  SymMatrix P_prev;

  for (int j = 0; j < cfg.max_phase2; ++j) {
    const RegressionSolution sol =
        solve_phase_regression(pool, xi, w, K, gamma);
    if (!is_positive_definite(sol.P))
      throw ConvergenceError(
          "phase 2: evaluation produced an indefinite value matrix at step " +
          std::to_string(j));
    const double g2 = gamma * gamma;
    const Matrix K_next =
        g2 * (R + g2 * sol.L2.dense()).ldlt().solve(sol.L1.transpose());

    const double bound =
        alpha_upper_bound_model_free(sol.P, K_next, w, gamma);
    const double alpha_next = std::isinf(bound)
                                  ? (1.0 - gamma) + cfg.alpha0
                                  : cfg.frac_a * bound;
    if (!(alpha_next > 0.0))
      throw ConvergenceError("phase 2: nonpositive damping step at step " +
                             std::to_string(j));

    gamma += alpha_next;
    result.damping.alphas.push_back(alpha_next);

    TraceRow row;
    row.phase = 2;
    row.index = j + 1;
    row.gamma = gamma;
    row.alpha = alpha_next;
    row.gain = K_next;
    row.delta_norm = j > 0 ? (sol.P.dense() - P_prev.dense()).norm() : 0.0;
    row.residual = sol.residual;
    result.trace.push_back(row);

    P_prev = sol.P;
    K = K_next;
    if (gamma >= 1.0) {
      result.K = K;
      return result;
    }
  }
  throw ConvergenceError("phase 2: damping sum did not reach 1 within " +
                         std::to_string(cfg.max_phase2) + " steps");
}

Phase3Result phase3_optimize(const SamplePool& pool, const CostWeights& w,
                             const Matrix& K0, double eps1,
                             int max_iterations) {
  if (!(eps1 > 0.0))
    throw std::invalid_argument("phase 3: eps must be positive");
  const XiBlocks xi = build_xi(pool);
  const Matrix R = w.R.dense();

  Phase3Result result;
  Matrix K = K0;
  SymMatrix P_prev;
  for (int i = 0; i < max_iterations; ++i) {
    const RegressionSolution sol = solve_phase_regression(pool, xi, w, K, 1.0);
    if (!is_positive_definite(sol.P))
      throw ConvergenceError(
          "phase 3: evaluation produced an indefinite value matrix "
          "(initial gain not stabilizing?)");
    const Matrix K_next =
        (R + sol.L2.dense()).ldlt().solve(sol.L1.transpose());
    const double delta =
        i > 0 ? (sol.P.dense() - P_prev.dense()).norm() : 0.0;

    TraceRow row;
    row.phase = 3;
    row.index = i;
    row.gamma = 1.0;
    row.gain = K_next;
    row.delta_norm = delta;
    row.residual = sol.residual;
    result.trace.push_back(row);

    if (i > 0 && delta < eps1) {
      result.P = sol.P;
      result.K = K_next;
      return result;
    }
    P_prev = sol.P;
    K = K_next;
  }
  throw ConvergenceError("phase 3: no convergence within " +
                         std::to_string(max_iterations) + " iterations");
}

SynthesisReport run_algorithm1(const SamplePool& pool, const CostWeights& w,
                               const AlgoConfig& cfg) {
  cfg.validate();
  if (const RankCheck rc = rank_condition_pi(pool); !rc.ok)
    throw RankError("algorithm 1: excitation rank condition unmet (need rank " +
                    std::to_string(rc.required) + ")");

  const Phase1Result ph1 = phase1_select_beta(pool, w, cfg);
  const Phase2Result ph2 = phase2_stabilize(pool, w, ph1.beta, cfg);
  const Phase3Result ph3 =
      phase3_optimize(pool, w, ph2.K, cfg.eps1, cfg.max_phase3);

  SynthesisReport report;
  report.algorithm = "pi";
  report.beta_tilde = ph1.beta;
  report.alphas = ph2.damping.alphas;
  report.gamma_final = ph2.damping.gamma();
  report.stabilizing_gain = ph2.K;
  report.K = ph3.K;
  report.P = ph3.P;
  report.phase1_rejections = ph1.rejections;
  report.phase2_steps = static_cast<int>(ph2.trace.size());
  report.phase3_steps = static_cast<int>(ph3.trace.size());
  report.final_delta = ph3.trace.back().delta_norm;
  report.final_residual = ph3.trace.back().residual;
  report.trace = ph1.trace;
  report.trace.insert(report.trace.end(), ph2.trace.begin(), ph2.trace.end());
  report.trace.insert(report.trace.end(), ph3.trace.begin(), ph3.trace.end());
  return report;
}

}  // namespace damplqr
