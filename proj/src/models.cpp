#include "dampcert/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "dampcert/errors.hpp"

namespace dampcert {

namespace {

// Roundoff allowance for the dissipativity postcondition on large stencils.
double dissipativity_tolerance(const Matrix& A) {
  return std::max(1e-10, 1e-13 * A.cwiseAbs().maxCoeff());
}

void require_dissipative(const Matrix& A, const InnerProduct& ip, ErrorCode code) {
  const double margin = dissipativity_margin(A, ip, 64);
  if (margin > dissipativity_tolerance(A)) {
    throw Error(code, "dissipativity margin " + std::to_string(margin) + " > 0");
  }
}

Vector sample_profile(const std::function<double(double)>& a, int N, double dx) {
  Vector v(N);
  for (int j = 0; j < N; ++j) {
    const double x = (j + 1) * dx;
    v(j) = a(x);
    if (!std::isfinite(v(j)) || v(j) < 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "damping profile must be finite and nonnegative");
    }
  }
  return v;
}

}  // namespace

double AProfile::operator()(double x) const {
  if (form == Form::constant) return value;
  return (x > lo && x < hi) ? value : 0.0;
}

SemiDiscreteSystem::SemiDiscreteSystem(std::string name, Matrix A, Matrix B,
                                       double k, InnerProduct H, InnerProduct U,
                                       NormChoice S, std::optional<Grid> grid,
                                       Vector a_profile)
    : name_(std::move(name)),
      A_(std::move(A)),
      B_(std::move(B)),
      k_(k),
      H_(std::move(H)),
      U_(std::move(U)),
      S_(S),
      grid_(grid),
      a_profile_(std::move(a_profile)) {
  if (A_.rows() != A_.cols() || A_.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "A must be nonempty and square");
  }
  if (B_.rows() != A_.rows() || B_.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "B must have as many rows as A");
  }
  if (H_.dim() != A_.rows() || U_.dim() != B_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "inner product dimension mismatch");
  }
  if (!(k_ > 0.0) || !std::isfinite(k_)) {
    throw Error(ErrorCode::InvalidArgument, "k must be positive");
  }
  if (!A_.allFinite() || !B_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "A and B must be finite");
  }
  if (a_profile_.size() > 0 && (a_profile_.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "a_profile must be nonnegative");
  }
  const Matrix WB = H_.weight() * B_;
  Eigen::LLT<Matrix> llt(U_.weight());
  B_adj_ = llt.solve(WB.transpose());
  B_adj_norm_ = operator_norm(B_adj_, H_, U_);
}

Matrix SemiDiscreteSystem::closed_loop(double gain) const {
  return A_ - (gain * k_) * (B_ * B_adj_);
}

double SemiDiscreteSystem::norm_DA(const Vector& z) const {
  return H_.norm(z) + H_.norm(A_ * z);
}

double SemiDiscreteSystem::norm_S(const Vector& s) const {
  if (s.size() == 0) return 0.0;
  if (S_ == NormChoice::S_sup) return s.cwiseAbs().maxCoeff();
  return U_.norm(s);
}

void StabilityHypothesis::validate() const {
  if (tag == Tag::polynomial && !(gamma && *gamma > 0.5)) {
    throw Error(ErrorCode::InvalidArgument,
                "polynomial hypothesis requires gamma > 1/2");
  }
}

bool kalman_controllable(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Matrix K(n, n * m);
  Matrix block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    K.middleCols(i * m, m) = block;
    block = A * block;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(K);
  qr.setThreshold(1e-10);
  return qr.rank() == n;
}

SemiDiscreteSystem make_finite_dim(const Matrix& A, const Matrix& B, double k,
                                   bool require_controllable) {
  if (A.rows() != A.cols() || A.rows() == 0 || B.rows() != A.rows() ||
      B.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "A must be n x n and B n x m");
  }
  const auto H = InnerProduct::identity(A.rows());
  require_dissipative(A, H, ErrorCode::NotDissipative);
  if (require_controllable && !kalman_controllable(A, B)) {
    throw Error(ErrorCode::NotControllable, "(A, B) fails the Kalman rank test");
  }
  SemiDiscreteSystem sys("finite_dim", A, B, k, H,
                         InnerProduct::identity(B.cols()), NormChoice::U_euclidean);
  if (!is_hurwitz(sys.closed_loop(1.0))) {
    throw Error(ErrorCode::NotStabilized, "A - k B B^T is not Hurwitz");
  }
  return sys;
}

SemiDiscreteSystem discretize_kdv(double L, int N,
                                  const std::function<double(double)>& a,
                                  double k, NormChoice S) {
  if (!(L > 0.0) || N < 16) {
    throw Error(ErrorCode::InvalidArgument, "KdV needs L > 0 and N >= 16");
  }
  const double dx = L / (N + 1);
  const double d1 = 1.0 / dx;
  const double d3 = 1.0 / (dx * dx * dx);

  // Unknowns z_1..z_N; z_0 = z_{N+1} = 0 and the ghost z_{N+2} = z_N
  // realizes z_x(L) = 0.
  Matrix A = Matrix::Zero(N, N);
  auto add = [&](int row, int col, double v) {
    if (col >= 0 && col < N) A(row, col) += v;
  };
  for (int i = 0; i < N; ++i) {
    // upwind first derivative
    add(i, i, -d1);
    add(i, i - 1, d1);
    // (z_{j+2} - 3 z_{j+1} + 3 z_j - z_{j-1}) / dx^3
    add(i, i + 2, -d3);
    add(i, i + 1, 3.0 * d3);
    add(i, i, -3.0 * d3);
    add(i, i - 1, d3);
  }
  add(N - 1, N - 1, -d3);  // ghost point

  const Vector av = sample_profile(a, N, dx);
  const Matrix B = av.cwiseSqrt().asDiagonal();
  auto H = InnerProduct::scaled(N, dx);
  require_dissipative(A, H, ErrorCode::NotDissipativeDiscretization);
  return SemiDiscreteSystem("kdv", std::move(A), B, k, H,
                            InnerProduct::scaled(N, dx), S, Grid{L, N, dx}, av);
}

SemiDiscreteSystem discretize_wave(int N, const std::function<double(double)>& a,
                                   double k, NormChoice S) {
  if (N < 16) throw Error(ErrorCode::InvalidArgument, "wave needs N >= 16");
  const double h = 1.0 / (N + 1);

  // Stiffness K = -h Lap_h, so that blockdiag(K, h I) A is exactly skew.
  Matrix K = Matrix::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    K(i, i) = 2.0 / h;
    if (i > 0) K(i, i - 1) = -1.0 / h;
    if (i + 1 < N) K(i, i + 1) = -1.0 / h;
  }
  const Matrix lap = -K / h;

  Matrix A = Matrix::Zero(2 * N, 2 * N);
  A.topRightCorner(N, N).setIdentity();
  A.bottomLeftCorner(N, N) = lap;

  Matrix W = Matrix::Zero(2 * N, 2 * N);
  W.topLeftCorner(N, N) = K;
  W.bottomRightCorner(N, N) = h * Matrix::Identity(N, N);

  const Vector av = sample_profile(a, N, h);
  Matrix B = Matrix::Zero(2 * N, N);
  B.bottomRows(N) = av.cwiseSqrt().asDiagonal();

  InnerProduct H{W};
  require_dissipative(A, H, ErrorCode::NotDissipativeDiscretization);
  return SemiDiscreteSystem("wave", std::move(A), std::move(B), k, std::move(H),
                            InnerProduct::scaled(N, h), S, Grid{1.0, N, h}, av);
}

double estimate_cS(const SemiDiscreteSystem& system, int trials,
                   std::uint64_t seed) {
  if (system.S_choice() != NormChoice::S_sup) {
    throw Error(ErrorCode::WrongNormChoice, "c_S requires the sup-norm choice");
  }
  if (trials < 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 0");
  const Matrix& Bs = system.B_adjoint();
  if (Bs.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  double best = 0.0;
  auto probe = [&](const Vector& s) {
    const double d = system.norm_DA(s);
    if (!(d > 0.0) || !std::isfinite(d)) return;
    best = std::max(best, system.norm_S(Bs * s) / d);
  };

  const Eigen::Index n = system.dim();
  Eigen::EigenSolver<Matrix> es(system.closed_loop(1.0));
  if (es.info() == Eigen::Success) {
    for (Eigen::Index j = 0; j < n; ++j) {
      probe(es.eigenvectors().col(j).real());
      probe(es.eigenvectors().col(j).imag());
    }
  }

  // Low sine modes on each N-block of the state.
  if (const auto& g = system.grid()) {
    const int N = g->N;
    const Eigen::Index blocks = n / N;
    for (Eigen::Index b = 0; b < blocks; ++b) {
      for (int m = 1; m <= std::min(N, 32); ++m) {
        Vector s = Vector::Zero(n);
        for (int j = 0; j < N; ++j) {
          s(b * N + j) = std::sin(M_PI * m * (j + 1) / (N + 1));
        }
        probe(s);
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector s(n);
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) s(i) = normal(rng);
    probe(s);
  }
  return best;
}

}  // namespace dampcert
