#include "damplqr/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "damplqr/errors.hpp"

namespace damplqr {

SymMatrix::SymMatrix(int n) : n_(n), packed_(Vector::Zero(n * (n + 1) / 2)) {
  if (n <= 0) throw std::invalid_argument("SymMatrix: dimension must be positive");
}

int SymMatrix::index(int i, int j) const {
  if (i > j) std::swap(i, j);
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

SymMatrix SymMatrix::from_dense(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("SymMatrix::from_dense: matrix must be square");
  SymMatrix s(static_cast<int>(m.rows()));
  for (int i = 0; i < s.n_; ++i)
    for (int j = i; j < s.n_; ++j) s.at(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix s(n);
  for (int i = 0; i < n; ++i) s.at(i, i) = 1.0;
  return s;
}

Matrix SymMatrix::dense() const {
  Matrix m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

double SymMatrix::norm() const { return dense().norm(); }

Vector vecs(const SymMatrix& m) {
  const int n = m.dim();
  Vector v(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) v[k++] = (i == j) ? m(i, j) : 2.0 * m(i, j);
  return v;
}

SymMatrix mat_from_vecs(const Vector& v) {
  const auto len = static_cast<int>(v.size());
  const int n = static_cast<int>((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0 + 0.5);
  if (n * (n + 1) / 2 != len)
    throw std::invalid_argument("mat_from_vecs: length is not n(n+1)/2");
  SymMatrix m(n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.at(i, j) = (i == j) ? v[k++] : 0.5 * v[k++];
  return m;
}

Vector vecv(const Vector& x) {
  const auto n = static_cast<int>(x.size());
  Vector v(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) v[k++] = x[i] * x[j];
  return v;
}

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, int rows, int cols) {
  if (static_cast<int>(v.size()) != rows * cols)
    throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("spectral_radius: matrix must be square");
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_radius: eigenvalue solver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.dense(),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.dense(),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_positive_definite(const SymMatrix& m, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("is_positive_definite: tol must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.dense(),
                                           Eigen::EigenvaluesOnly);
  const Vector eigs = es.eigenvalues();
  const double scale = std::max(1.0, eigs.cwiseAbs().maxCoeff());
  return eigs.minCoeff() > tol * scale;
}

SymMatrix solve_discrete_lyapunov(const Matrix& f, const SymMatrix& w,
                                  double tol) {
  if (f.rows() != f.cols() || f.rows() != w.dim())
    throw std::invalid_argument("solve_discrete_lyapunov: dimension mismatch");
  const double rho = spectral_radius(f);
  if (!(rho < 1.0))
    throw std::invalid_argument(
        "solve_discrete_lyapunov: unstable argument (spectral radius " +
        std::to_string(rho) + ")");

  const auto n = f.rows();
  const Matrix ft = f.transpose();
  const Matrix lhs = Matrix::Identity(n * n, n * n) - kron(ft, ft);
  const Vector rhs = vec(w.dense());
  const Vector p_vec = lhs.colPivHouseholderQr().solve(rhs);
  const SymMatrix p =
      SymMatrix::from_dense(unvec(p_vec, static_cast<int>(n), static_cast<int>(n)));

  const Matrix pd = p.dense();
  const double residual = (ft * pd * f - pd + w.dense()).norm();
  if (residual > tol * std::max(1.0, w.norm()))
    throw ConvergenceError("solve_discrete_lyapunov: residual " +
                           std::to_string(residual) + " exceeds tolerance");
  return p;
}

CostWeights CostWeights::checked(const Matrix& q, const Matrix& r) {
  CostWeights w{SymMatrix::from_dense(q), SymMatrix::from_dense(r)};
  if (!is_positive_definite(w.Q))
    throw std::invalid_argument("CostWeights: Q must be positive definite");
  if (!is_positive_definite(w.R))
    throw std::invalid_argument("CostWeights: R must be positive definite");
  return w;
}

DareSolution solve_dare(const SystemModel& sys, const CostWeights& w,
                        double tol, int max_iterations) {
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw std::invalid_argument("solve_dare: dimension mismatch");
  const Matrix Q = w.Q.dense();
  const Matrix R = w.R.dense();

  Matrix P = Q;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    const Matrix BtPA = B.transpose() * P * A;
    const Matrix K = (R + B.transpose() * P * B).ldlt().solve(BtPA);
    const Matrix next = A.transpose() * P * A + Q - BtPA.transpose() * K;
    P = 0.5 * (next + next.transpose());

    const Matrix BtPA2 = B.transpose() * P * A;
    const Matrix K2 = (R + B.transpose() * P * B).ldlt().solve(BtPA2);
    const double residual =
        (A.transpose() * P * A - P - BtPA2.transpose() * K2 + Q).norm();
    if (residual <= tol * std::max(1.0, P.norm()))
      return DareSolution{SymMatrix::from_dense(P), K2, iter, residual};
  }
  throw ConvergenceError(
      "solve_dare: no convergence; not stabilizable or tol too tight");
}

}  // namespace damplqr
