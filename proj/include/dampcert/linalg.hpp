#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace dampcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Weighted inner product <x, y> = x^T W y on R^n.
///
/// W must be symmetric (to 1e-12, relative to its largest entry) and positive
/// definite. Operators that are self-adjoint for this product are handled
/// through their Gram form G = W P, so that <P z, z> = z^T G z.
class InnerProduct {
 public:
  explicit InnerProduct(Matrix weight);

  static InnerProduct identity(Eigen::Index n);
  static InnerProduct scaled(Eigen::Index n, double w);

  Eigen::Index dim() const { return weight_.rows(); }
  const Matrix& weight() const { return weight_; }
  bool is_identity() const { return identity_; }

  double dot(const Vector& x, const Vector& y) const;
  double norm(const Vector& x) const;

  /// Eigenvalues (ascending) of the pencil S v = lambda W v, S symmetric.
  Vector generalized_eigenvalues(const Matrix& S) const;
  /// Largest eigenvalue of the pencil together with its W-normalized vector.
  double generalized_max_eigen(const Matrix& S, Vector* vec = nullptr) const;

 private:
  Matrix weight_;
  Eigen::LLT<Matrix> llt_;
  bool identity_ = false;
};

/// Solves Atilde^T P + P Atilde = -Q for symmetric positive definite P.
///
/// Complex-Schur Bartels-Stewart with one step of iterative refinement.
/// Throws NotHurwitz if some eigenvalue of Atilde has real part >= -1e-12 and
/// SingularSystem if the triangular solve breaks down.
Matrix solve_lyapunov(const Matrix& Atilde, const Matrix& Q);

/// e^{tA} by Pade scaling and squaring. Throws Overflow on non-finite output.
Matrix matrix_exponential(const Matrix& A, double t);

/// Gram form of int_0^T (e^{sA})^* e^{sA} ds + alpha I, with T doubled until
/// ||e^{TA}||^2 / (2 |max Re lambda(A)|) <= tol. Adjoint and identity are
/// taken with respect to `ip` (Euclidean in the first overload).
Matrix gramian_quadrature(const Matrix& A, double alpha, double tol);
Matrix gramian_quadrature(const Matrix& A, double alpha, double tol,
                          const InnerProduct& ip);

/// max over unit z of <Az, z> + <z, Az>. Exact (largest eigenvalue of the
/// symmetrized weighted pencil) for n <= 2000, sampled beyond.
double dissipativity_margin(const Matrix& A, const InnerProduct& ip,
                            int samples);

double spectral_abscissa(const Matrix& A);
bool is_hurwitz(const Matrix& A, double margin = 1e-12);

/// Norm of X viewed as a map (R^n, in) -> (R^m, out).
double operator_norm(const Matrix& X, const InnerProduct& in,
                     const InnerProduct& out);

struct FormBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Extreme eigenvalues of the ip-self-adjoint operator with Gram form `gram`.
FormBounds form_bounds(const Matrix& gram, const InnerProduct& ip);

}  // namespace dampcert
