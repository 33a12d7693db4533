#include "dampcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "dampcert/errors.hpp"

namespace dampcert {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;

void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " must be a nonempty square matrix");
  }
}

// Solves T^* X + X T = -F for upper-triangular T.
ComplexMatrix triangular_lyapunov(const ComplexMatrix& T,
                                  const ComplexMatrix& F, double scale) {
  const Eigen::Index n = T.rows();
  ComplexMatrix X = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::complex<double> acc = -F(i, j);
      for (Eigen::Index k = 0; k < i; ++k) acc -= std::conj(T(k, i)) * X(k, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= X(i, k) * T(k, j);
      const std::complex<double> denom = std::conj(T(i, i)) + T(j, j);
      if (std::abs(denom) <= 1e-14 * scale) {
        throw Error(ErrorCode::SingularSystem,
                    "Lyapunov operator is numerically singular");
      }
      X(i, j) = acc / denom;
    }
  }
  return X;
}

}  // namespace

InnerProduct::InnerProduct(Matrix weight) : weight_(std::move(weight)) {
  require_square(weight_, "inner-product weight");
  if (!weight_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "inner-product weight not finite");
  }
  const double scale = std::max(weight_.cwiseAbs().maxCoeff(), 1e-300);
  if ((weight_ - weight_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, "inner-product weight not symmetric");
  }
  weight_ = 0.5 * (weight_ + weight_.transpose());
  llt_.compute(weight_);
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument,
                "inner-product weight not positive definite");
  }
  identity_ = weight_.isIdentity(0.0);
}

InnerProduct InnerProduct::identity(Eigen::Index n) {
  return InnerProduct(Matrix::Identity(n, n));
}

InnerProduct InnerProduct::scaled(Eigen::Index n, double w) {
  return InnerProduct(w * Matrix::Identity(n, n));
}

double InnerProduct::dot(const Vector& x, const Vector& y) const {
  if (identity_) return x.dot(y);
  return x.dot(weight_ * y);
}

double InnerProduct::norm(const Vector& x) const {
  return std::sqrt(std::max(dot(x, x), 0.0));
}

Vector InnerProduct::generalized_eigenvalues(const Matrix& S) const {
  if (identity_) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }
  // C = L^{-1} S L^{-T}
  const auto& L = llt_.matrixL();
  Matrix C = L.solve(S);
  C = L.solve(C.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (C + C.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double InnerProduct::generalized_max_eigen(const Matrix& S, Vector* vec) const {
  if (vec == nullptr) return generalized_eigenvalues(S).maxCoeff();
  const auto& L = llt_.matrixL();
  Matrix C = L.solve(S);
  C = L.solve(C.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (C + C.transpose()));
  const Eigen::Index last = es.eigenvalues().size() - 1;
  // v = L^{-T} y has <v, v>_W = |y|^2 = 1.
  *vec = llt_.matrixU().solve(es.eigenvectors().col(last));
  return es.eigenvalues()(last);
}

Matrix solve_lyapunov(const Matrix& Atilde, const Matrix& Q) {
  require_square(Atilde, "Atilde");
  if (Q.rows() != Atilde.rows() || Q.cols() != Atilde.cols()) {
    throw Error(ErrorCode::InvalidArgument, "Q dimension mismatch");
  }
  const double qscale = std::max(Q.cwiseAbs().maxCoeff(), 1e-300);
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * qscale) {
    throw Error(ErrorCode::InvalidArgument, "Q not symmetric");
  }
  Eigen::ComplexSchur<Matrix> schur(Atilde);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "Schur decomposition failed");
  }
  const ComplexMatrix& T = schur.matrixT();
  const ComplexMatrix& U = schur.matrixU();
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    if (T(i, i).real() >= -1e-12) {
      throw Error(ErrorCode::NotHurwitz,
                  "eigenvalue with real part " + std::to_string(T(i, i).real()));
    }
  }
  const double scale = std::max(T.cwiseAbs().maxCoeff(), 1e-300);
  auto solve = [&](const Matrix& rhs) {
    const ComplexMatrix F = U.adjoint() * rhs.cast<std::complex<double>>() * U;
    const ComplexMatrix X = triangular_lyapunov(T, F, scale);
    Matrix P = (U * X * U.adjoint()).real();
    return Matrix(0.5 * (P + P.transpose()));
  };
  Matrix P = solve(Q);
  const Matrix residual = Atilde.transpose() * P + P * Atilde + Q;
  P += solve(residual);
  P = 0.5 * (P + P.transpose());
  if (!P.allFinite()) {
    throw Error(ErrorCode::SingularSystem, "Lyapunov solution not finite");
  }
  return P;
}

Matrix matrix_exponential(const Matrix& A, double t) {
  require_square(A, "A");
  if (!std::isfinite(t)) {
    throw Error(ErrorCode::InvalidArgument, "t must be finite");
  }
  const Matrix scaled = t * A;
  if (!scaled.allFinite()) {
    throw Error(ErrorCode::Overflow, "t*A not representable");
  }
  Matrix E = scaled.exp();
  if (!E.allFinite()) {
    throw Error(ErrorCode::Overflow, "matrix exponential overflowed");
  }
  return E;
}

Matrix gramian_quadrature(const Matrix& A, double alpha, double tol) {
  return gramian_quadrature(A, alpha, tol, InnerProduct::identity(A.rows()));
}

Matrix gramian_quadrature(const Matrix& A, double alpha, double tol,
                          const InnerProduct& ip) {
  require_square(A, "A");
  if (ip.dim() != A.rows()) {
    throw Error(ErrorCode::InvalidArgument, "inner product dimension mismatch");
  }
  if (!(tol > 0.0) || alpha < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "need tol > 0 and alpha >= 0");
  }
  const double abscissa = spectral_abscissa(A);
  if (abscissa >= -1e-12) {
    throw Error(ErrorCode::NotHurwitz, "Gramian requires a Hurwitz matrix");
  }
  const Matrix& W = ip.weight();

  // Base panel [0, h0] by 10-point Gauss-Legendre; ||h0 A|| <= 1/4.
  const double anorm = A.cwiseAbs().colwise().sum().maxCoeff();
  const double h0 = std::min(1.0, 0.25 / std::max(anorm, 1e-300));
  using Rule = boost::math::quadrature::gauss<double, 10>;
  Matrix Q = Matrix::Zero(A.rows(), A.cols());
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    const double x = Rule::abscissa()[i];
    const double w = Rule::weights()[i];
    for (double sign : {-1.0, 1.0}) {
      const double s = 0.5 * h0 * (1.0 + sign * x);
      const Matrix E = matrix_exponential(A, s);
      Q += (0.5 * h0 * w) * (E.transpose() * W * E);
    }
  }

  // int_0^{2T} = int_0^T + e^{TA^T} (int_0^T) e^{TA}
  Matrix E = matrix_exponential(A, h0);
  double T = h0;
  constexpr double kTMax = 1e8;
  for (;;) {
    const double enorm = operator_norm(E, ip, ip);
    if (!std::isfinite(enorm)) {
      throw Error(ErrorCode::TailNotConvergent, "e^{TA} not finite");
    }
    if (enorm * enorm / (2.0 * std::abs(abscissa)) <= tol) break;
    if (T > kTMax) {
      throw Error(ErrorCode::TailNotConvergent,
                  "Gramian tail did not decay before T_max");
    }
    Q += E.transpose() * Q * E;
    E = E * E;
    T *= 2.0;
  }
  Q += alpha * W;
  return 0.5 * (Q + Q.transpose());
}

double dissipativity_margin(const Matrix& A, const InnerProduct& ip,
                            int samples) {
  require_square(A, "A");
  if (samples < 1) {
    throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  }
  const Matrix& W = ip.weight();
  const Matrix S = A.transpose() * W + W * A;
  double best = -std::numeric_limits<double>::infinity();
  if (A.rows() <= 2000) best = ip.generalized_eigenvalues(S).maxCoeff();

  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  Vector z(A.rows());
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const double nz = ip.norm(z);
    if (nz == 0.0) continue;
    z /= nz;
    best = std::max(best, z.dot(S * z));
  }
  return best;
}

double spectral_abscissa(const Matrix& A) {
  require_square(A, "A");
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "eigenvalue computation failed");
  }
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& A, double margin) {
  return spectral_abscissa(A) < -margin;
}

double operator_norm(const Matrix& X, const InnerProduct& in,
                     const InnerProduct& out) {
  if (X.cols() != in.dim() || X.rows() != out.dim()) {
    throw Error(ErrorCode::InvalidArgument, "operator_norm dimension mismatch");
  }
  const Matrix S = X.transpose() * out.weight() * X;
  return std::sqrt(std::max(in.generalized_eigenvalues(S).maxCoeff(), 0.0));
}

FormBounds form_bounds(const Matrix& gram, const InnerProduct& ip) {
  const Vector ev = ip.generalized_eigenvalues(0.5 * (gram + gram.transpose()));
  return {ev.minCoeff(), ev.maxCoeff()};
}

}  // namespace dampcert
