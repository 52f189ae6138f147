#pragma once

// Hermitian PSD helpers and the Kronecker-structured MIMO covariance pair.
//
// Conventions: H is n_r x n_t. V = vec(H^dagger) stacks the conjugated rows
// of H, so V is made of n_r blocks of length n_t (block j = receive antenna j,
// entries within a block = transmit antennas). Psi = E[V V^dagger] and the
// rate derivative is tr(H Sigma H^dagger) = V^dagger (I_{n_r} (x) Sigma) V.

#include <wbo/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace wbo {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPsdRelativeTolerance = 1e-10;
inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-10;

struct HermitianEigen {
  RVector values;   // ascending, negatives within tolerance clamped to 0
  CMatrix vectors;  // columns
};

inline bool is_hermitian(const CMatrix& a, double tol = kHermitianTolerance) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Eigendecomposition of a Hermitian PSD matrix. Eigenvalues at or above
/// -1e-10 * mu_max are clamped to zero; anything lower is rejected.
inline HermitianEigen psd_eigen(const CMatrix& a, const std::string& what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw InvalidArgument(what + " must be a non-empty square matrix");
  }
  if (!is_hermitian(a)) throw InvalidArgument(what + " is not Hermitian");
  const CMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw InvalidArgument(what + ": eigendecomposition failed");
  }
  RVector values = solver.eigenvalues();
  const double mu_max = std::max(values.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < 0.0) {
      if (values(i) < -kPsdRelativeTolerance * mu_max || mu_max == 0.0) {
        throw InvalidArgument(what + " is not positive semi-definite (eigenvalue " +
                              std::to_string(values(i)) + ")");
      }
      values(i) = 0.0;
    }
  }
  return {std::move(values), solver.eigenvectors()};
}

inline CMatrix psd_sqrt(const HermitianEigen& e) {
  return e.vectors * e.values.cwiseSqrt().asDiagonal() * e.vectors.adjoint();
}

/// I_{n_r} (x) sigma.
inline CMatrix kron_identity(int n_r, const CMatrix& sigma) {
  const auto n_t = sigma.rows();
  CMatrix out = CMatrix::Zero(n_r * n_t, n_r * n_t);
  for (int j = 0; j < n_r; ++j) out.block(j * n_t, j * n_t, n_t, n_t) = sigma;
  return out;
}

/// Sum of the n_r diagonal n_t x n_t blocks. tr((I (x) Sigma) Psi) = tr(Sigma P).
inline CMatrix receive_partial_trace(const CMatrix& psi, int n_t, int n_r) {
  CMatrix out = CMatrix::Zero(n_t, n_t);
  for (int j = 0; j < n_r; ++j) out += psi.block(j * n_t, j * n_t, n_t, n_t);
  return out;
}

/// Input covariance Sigma (trace 1) and spatial correlation Psi of vec(H^dagger).
class CovarianceSpec {
 public:
  CovarianceSpec(CMatrix sigma, CMatrix psi, int n_t, int n_r)
      : sigma_(std::move(sigma)), psi_(std::move(psi)), n_t_(n_t), n_r_(n_r) {
    if (n_t < 1 || n_r < 1) throw InvalidArgument("n_t and n_r must be >= 1");
    if (sigma_.rows() != n_t || sigma_.cols() != n_t) {
      throw InvalidArgument("sigma must be n_t x n_t");
    }
    if (psi_.rows() != n_t * n_r || psi_.cols() != n_t * n_r) {
      throw InvalidArgument("psi must be (n_t*n_r) x (n_t*n_r)");
    }
    validate_sigma(sigma_);
    validate_psi(psi_);
    psi_eigen_ = psd_eigen(psi_, "psi");
    psi_sqrt_ = psd_sqrt(psi_eigen_);
    // Spectrum of (I (x) Sigma) Psi, via the Hermitian Psi^{1/2} (I (x) Sigma) Psi^{1/2}.
    const CMatrix product = psi_sqrt_ * kron_identity(n_r_, sigma_) * psi_sqrt_;
    modes_ = psd_eigen(0.5 * (product + product.adjoint()), "(I (x) Sigma) Psi").values;
    mean_ = (sigma_ * receive_partial_trace(psi_, n_t_, n_r_)).trace().real();
  }

  static void validate_sigma(const CMatrix& sigma) {
    psd_eigen(sigma, "sigma");
    const double trace = sigma.trace().real();
    if (std::abs(trace - 1.0) > kTraceTolerance) {
      throw InvalidArgument("sigma must have unit trace (got " + std::to_string(trace) + ")");
    }
  }

  static void validate_psi(const CMatrix& psi) {
    psd_eigen(psi, "psi");
    for (Eigen::Index i = 0; i < psi.rows(); ++i) {
      if (std::abs(psi(i, i) - Complex(1.0, 0.0)) > 1e-10) {
        throw InvalidArgument("psi must have unit diagonal (entry " + std::to_string(i) + ")");
      }
    }
  }

  const CMatrix& sigma() const noexcept { return sigma_; }
  const CMatrix& psi() const noexcept { return psi_; }
  const CMatrix& psi_sqrt() const noexcept { return psi_sqrt_; }
  int n_t() const noexcept { return n_t_; }
  int n_r() const noexcept { return n_r_; }

  /// Eigenvalues mu_i of (I (x) Sigma) Psi, all >= 0.
  const RVector& modes() const noexcept { return modes_; }
  /// tr((I (x) Sigma) Psi) = tr(Sigma P), P the receive partial trace of Psi.
  double mean_rate_derivative() const noexcept { return mean_; }
  double mu_max() const { return modes_.maxCoeff(); }
  double psi_mu_max() const { return psi_eigen_.values.maxCoeff(); }

 private:
  CMatrix sigma_;
  CMatrix psi_;
  int n_t_;
  int n_r_;
  HermitianEigen psi_eigen_;
  CMatrix psi_sqrt_;
  RVector modes_;
  double mean_ = 0.0;
};

}  // namespace wbo
