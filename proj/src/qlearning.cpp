#include "damplqr/qlearning.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "damplqr/errors.hpp"

namespace damplqr {

namespace {

constexpr double kConditionWarn = 1e12;

}  // namespace

Matrix QMatrix::xx() const { return H.dense().topLeftCorner(n_x, n_x); }
Matrix QMatrix::xu() const { return H.dense().topRightCorner(n_x, n_u()); }
Matrix QMatrix::ux() const { return H.dense().bottomLeftCorner(n_u(), n_x); }
Matrix QMatrix::uu() const { return H.dense().bottomRightCorner(n_u(), n_u()); }

QbarWeights::QbarWeights(const CostWeights& w) {
  const int n_x = w.Q.dim();
  const int n_u = w.R.dim();
  Matrix block = Matrix::Zero(n_x + n_u, n_x + n_u);
  block.topLeftCorner(n_x, n_x) = w.Q.dense();
  block.bottomRightCorner(n_u, n_u) = w.R.dense();
  value = SymMatrix::from_dense(block);
}

Matrix k_from_h(const QMatrix& h) {
  const Matrix uu = h.uu();
  if (!is_positive_definite(SymMatrix::from_dense(uu)))
    throw std::invalid_argument(
        "invalid Q-matrix: H_uu is not positive definite");
  return uu.ldlt().solve(h.ux());
}

SymMatrix p_from_h(const QMatrix& h, const Matrix& K) {
  if (K.rows() != h.n_u() || K.cols() != h.n_x)
    throw std::invalid_argument("p_from_h: gain dimension mismatch");
  Matrix basis(h.n_x + h.n_u(), h.n_x);
  basis << Matrix::Identity(h.n_x, h.n_x), -K;
  return SymMatrix::from_dense(basis.transpose() * h.H.dense() * basis);
}

QMatrix h_from_p(const SystemModel& sys, const CostWeights& w,
                 const SymMatrix& P, double gamma) {
  const double g2 = gamma * gamma;
  const Matrix Pd = P.dense();
  const int n_x = sys.n_x();
  const int n_u = sys.n_u();
  Matrix h(n_x + n_u, n_x + n_u);
  h.topLeftCorner(n_x, n_x) = g2 * sys.A.transpose() * Pd * sys.A + w.Q.dense();
  h.topRightCorner(n_x, n_u) = g2 * sys.A.transpose() * Pd * sys.B;
  h.bottomLeftCorner(n_u, n_x) = g2 * sys.B.transpose() * Pd * sys.A;
  h.bottomRightCorner(n_u, n_u) =
      g2 * sys.B.transpose() * Pd * sys.B + w.R.dense();
  return QMatrix{SymMatrix::from_dense(h), n_x};
}

QRegressionSolution solve_q_regression(const SamplePool& pool,
                                       const CostWeights& w, const Matrix& K,
                                       double gamma) {
  return solve_q_regression(pool, build_gamma(pool, K).X, w, K, gamma);
}

QRegressionSolution solve_q_regression(const SamplePool& pool,
                                       const Matrix& gamma_X,
                                       const CostWeights& w, const Matrix& K,
                                       double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("solve_q_regression: gamma must be positive");
  if (K.rows() != pool.n_u || K.cols() != pool.n_x)
    throw std::invalid_argument("solve_q_regression: gain dimension mismatch");

  const GammaBlocks g = build_gamma(pool, K);
  const Matrix theta_lhs = gamma_X - gamma * gamma * g.x_next;
  const Vector xi_rhs = gamma_X * vecs(QbarWeights(w).value);

  Eigen::JacobiSVD<Matrix> svd(theta_lhs,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double threshold = std::max(theta_lhs.rows(), theta_lhs.cols()) *
                           std::numeric_limits<double>::epsilon() * sv[0];
  if (sv[sv.size() - 1] <= threshold)
    throw RankError(
        "insufficient excitation: Q-regression matrix is rank-deficient");

  QRegressionSolution sol;
  const Vector theta = svd.solve(xi_rhs);
  sol.H = QMatrix{mat_from_vecs(theta), pool.n_x};
  sol.residual =
      (theta_lhs * theta - xi_rhs).norm() / std::max(xi_rhs.norm(), 1e-300);
  sol.condition = sv[0] / sv[sv.size() - 1];
  sol.ill_conditioned = sol.condition > kConditionWarn;
  return sol;
}

Phase1Result q_phase1_select_beta(const SamplePool& pool, const CostWeights& w,
                                  const AlgoConfig& cfg) {
  cfg.validate();
  if (const RankCheck rc = rank_condition_q(pool); !rc.ok)
    throw RankError("Q phase 1: excitation rank condition unmet (" +
                    std::to_string(pool.size()) + " samples, need rank " +
                    std::to_string(rc.required) + ")");

  const Matrix gamma_X = build_gamma(pool, Matrix::Zero(pool.n_u, pool.n_x)).X;
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
      const QRegressionSolution sol =
          solve_q_regression(pool, gamma_X, w, K0, beta + cfg.alpha0);
      row.residual = sol.residual;
      positive = is_positive_definite(sol.H.H);
    } catch (const RankError&) {
      // Boundary damping can make the evaluation singular; treat as rejection.
    }
    row.accepted = positive;
    result.trace.push_back(row);
    if (positive) {
      result.beta = beta;
      result.rejections = z;
      return result;
    }
  }
  throw ConvergenceError("Q phase 1: no admissible damping found within " +
                         std::to_string(cfg.max_phase1) + " trials");
}

Phase2Result q_phase2_stabilize(const SamplePool& pool, const CostWeights& w,
                                double beta, const AlgoConfig& cfg) {
  cfg.validate();
  if (!(beta > 0.0))
    throw std::invalid_argument("Q phase 2: beta must be positive");

  const Matrix gamma_X = build_gamma(pool, Matrix::Zero(pool.n_u, pool.n_x)).X;

  Phase2Result result;
  result.damping.beta_tilde = beta;
  result.damping.alphas.push_back(cfg.alpha0);
  double gamma = beta + cfg.alpha0;
  Matrix K = Matrix::Zero(pool.n_u, pool.n_x);
  SymMatrix H_prev;

  for (int j = 0; j < cfg.max_phase2; ++j) {
    const QRegressionSolution sol =
        solve_q_regression(pool, gamma_X, w, K, gamma);
    if (!is_positive_definite(sol.H.H))
      throw ConvergenceError(
          "Q phase 2: evaluation produced an indefinite Q-matrix at step " +
          std::to_string(j));
    const Matrix K_next = k_from_h(sol.H);
    const SymMatrix P_j = p_from_h(sol.H, K);

    const double bound = alpha_upper_bound_model_free(P_j, K_next, w, gamma);
    const double alpha_next = std::isinf(bound)
                                  ? (1.0 - gamma) + cfg.alpha0
                                  : cfg.frac_a * bound;
    if (!(alpha_next > 0.0))
      throw ConvergenceError("Q phase 2: nonpositive damping step at step " +
                             std::to_string(j));

    gamma += alpha_next;
    result.damping.alphas.push_back(alpha_next);

    TraceRow row;
    row.phase = 2;
    row.index = j + 1;
    row.gamma = gamma;
    row.alpha = alpha_next;
    row.gain = K_next;
    row.delta_norm = j > 0 ? (sol.H.H.dense() - H_prev.dense()).norm() : 0.0;
    row.residual = sol.residual;
    result.trace.push_back(row);

    H_prev = sol.H.H;
    K = K_next;
    if (gamma >= 1.0) {
      result.K = K;
      return result;
    }
  }
  throw ConvergenceError("Q phase 2: damping sum did not reach 1 within " +
                         std::to_string(cfg.max_phase2) + " steps");
}

QPhase3Result q_phase3_optimize(const SamplePool& pool, const CostWeights& w,
                                const Matrix& K0, double eps2,
                                int max_iterations) {
  if (!(eps2 > 0.0))
    throw std::invalid_argument("Q phase 3: eps must be positive");
  const Matrix gamma_X = build_gamma(pool, Matrix::Zero(pool.n_u, pool.n_x)).X;

  QPhase3Result result;
  Matrix K = K0;
  SymMatrix H_prev;
  for (int i = 0; i < max_iterations; ++i) {
    const QRegressionSolution sol = solve_q_regression(pool, gamma_X, w, K, 1.0);
    if (!is_positive_definite(sol.H.H))
      throw ConvergenceError(
          "Q phase 3: evaluation produced an indefinite Q-matrix "
          "(initial gain not stabilizing?)");
    const Matrix K_next = k_from_h(sol.H);
    const double delta =
        i > 0 ? (sol.H.H.dense() - H_prev.dense()).norm() : 0.0;

    TraceRow row;
    row.phase = 3;
    row.index = i;
    row.gamma = 1.0;
    row.gain = K_next;
    row.delta_norm = delta;
    row.residual = sol.residual;
    result.trace.push_back(row);

    if (i > 0 && delta < eps2) {
      result.H = sol.H;
      result.K = K_next;
      return result;
    }
    H_prev = sol.H.H;
    K = K_next;
  }
  throw ConvergenceError("Q phase 3: no convergence within " +
                         std::to_string(max_iterations) + " iterations");
}

SynthesisReport run_algorithm2(const SamplePool& pool, const CostWeights& w,
                               const AlgoConfig& cfg) {
  cfg.validate();
  if (const RankCheck rc = rank_condition_q(pool); !rc.ok)
    throw RankError("algorithm 2: excitation rank condition unmet (need rank " +
                    std::to_string(rc.required) + ")");

  const Phase1Result ph1 = q_phase1_select_beta(pool, w, cfg);
  const Phase2Result ph2 = q_phase2_stabilize(pool, w, ph1.beta, cfg);
  const QPhase3Result ph3 =
      q_phase3_optimize(pool, w, ph2.K, cfg.eps2, cfg.max_phase3);

  SynthesisReport report;
  report.algorithm = "qlearn";
  report.beta_tilde = ph1.beta;
  report.alphas = ph2.damping.alphas;
  report.gamma_final = ph2.damping.gamma();
  report.stabilizing_gain = ph2.K;
  report.K = ph3.K;
  report.H = ph3.H.H;
  report.P = p_from_h(ph3.H, ph3.K);
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
