#pragma once

#include <Eigen/Dense>

namespace damplqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative eigenvalue floor for positive-definiteness checks.
inline constexpr double kPdTol = 1e-10;
// Relative residual bound for the discrete Lyapunov solve.
inline constexpr double kLyapTol = 1e-10;

// Symmetric matrix stored as the packed upper triangle (row-major), so
// symmetry holds exactly by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n);

  // Averages m and m^T; m must be square.
  static SymMatrix from_dense(const Matrix& m);
  static SymMatrix identity(int n);

  int dim() const { return n_; }
  double operator()(int i, int j) const { return packed_[index(i, j)]; }
  double& at(int i, int j) { return packed_[index(i, j)]; }

  Matrix dense() const;
  double norm() const;  // Frobenius

 private:
  int index(int i, int j) const;

  int n_ = 0;
  Vector packed_;
};

// vecs(M) = [M11, 2M12, ..., 2M1n, M22, 2M23, ..., Mnn]. mat_from_vecs
// inverts it exactly.
Vector vecs(const SymMatrix& m);
SymMatrix mat_from_vecs(const Vector& v);

// vecv(x) = [x1^2, x1 x2, ..., x1 xn, x2^2, ..., xn^2]. Satisfies
// x^T M x = vecv(x) . vecs(M) for every symmetric M.
Vector vecv(const Vector& x);

// Column-stacking vectorization and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, int rows, int cols);

Matrix kron(const Matrix& a, const Matrix& b);

double spectral_radius(const Matrix& m);

double min_eigenvalue(const SymMatrix& m);
double max_eigenvalue(const SymMatrix& m);

// True iff the smallest eigenvalue exceeds tol * max(1, ||m||_2).
bool is_positive_definite(const SymMatrix& m, double tol = kPdTol);

// Solves F^T P F - P = -W for Schur-stable F by Kronecker vectorization:
// (I - F^T (x) F^T) vec(P) = vec(W). Intended for small dense problems.
// Throws std::invalid_argument when rho(F) >= 1 and ConvergenceError when
// the residual exceeds tol * ||W||.
SymMatrix solve_discrete_lyapunov(const Matrix& f, const SymMatrix& w,
                                  double tol = kLyapTol);

// True plant matrices. Used by the simulator and the verification oracles
// only; the learning pipeline never reads them.
struct SystemModel {
  Matrix A;
  Matrix B;
  int n_x() const { return static_cast<int>(A.rows()); }
  int n_u() const { return static_cast<int>(B.cols()); }
};

struct CostWeights {
  SymMatrix Q;
  SymMatrix R;
  // Validates squareness and positive definiteness.
  static CostWeights checked(const Matrix& q, const Matrix& r);
};

struct DareSolution {
  SymMatrix P;
  Matrix K;
  int iterations = 0;
  double residual = 0.0;
};

// Riccati fixed-point iteration started from P = Q. Serves as the
// verification oracle for the data-driven pipeline; needs no initial
// stabilizing gain. tol is relative to max(1, ||P||). Throws
// ConvergenceError when no solution is reached within max_iterations.
DareSolution solve_dare(const SystemModel& sys, const CostWeights& w,
                        double tol = 1e-12, int max_iterations = 10000);

}  // namespace damplqr
