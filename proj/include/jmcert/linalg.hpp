#pragma once

// Real-symplectic and complex-Hermitian primitives. Every "matrix >= 0"
// criterion in the toolkit funnels through min_eigenvalue().

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "jmcert/errors.hpp"

namespace jmcert::linalg {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdRelativeSlack = 1e-9;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(std::abs(m(i, j)))) return false;
    }
  }
  return true;
}

inline bool is_symmetric(const RealMatrix& a, double tol = kSymmetryTolerance) {
  return a.rows() == a.cols() && (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_antisymmetric(const RealMatrix& b, double tol = kSymmetryTolerance) {
  return b.rows() == b.cols() && (b + b.transpose()).cwiseAbs().maxCoeff() <= tol;
}

/// Max absolute row sum.
template <typename Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Direct sum of M copies of [[0, 1], [-1, 0]].
inline RealMatrix symplectic_form(int modes) {
  if (modes < 1) {
    throw DimensionError("symplectic_form: mode count must be positive, got " +
                         std::to_string(modes));
  }
  RealMatrix omega = RealMatrix::Zero(2 * modes, 2 * modes);
  for (int j = 0; j < modes; ++j) {
    omega(2 * j, 2 * j + 1) = 1.0;
    omega(2 * j + 1, 2 * j) = -1.0;
  }
  return omega;
}

/// Pauli Z, diag(1, -1).
inline RealMatrix pauli_z() {
  RealMatrix z = RealMatrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return z;
}

/// A complex matrix equal to its conjugate transpose within 1e-12.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(ComplexMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
      throw DimensionError("HermitianMatrix: expected a non-empty square matrix");
    }
    if (!all_finite(m_)) throw DomainError("HermitianMatrix: non-finite entry");
    const double asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance) {
      throw DomainError("HermitianMatrix: not Hermitian (max |H - H^dag| = " +
                        std::to_string(asym) + ")");
    }
    // Exact Hermitian storage from here on.
    m_ = (0.5 * (m_ + m_.adjoint())).eval();
  }

  Eigen::Index dim() const { return m_.rows(); }
  const ComplexMatrix& matrix() const { return m_; }
  double norm_inf() const { return inf_norm(m_); }

  HermitianMatrix shifted(double c) const {
    ComplexMatrix m = m_;
    m.diagonal().array() += c;
    return HermitianMatrix(std::move(m));
  }

 private:
  ComplexMatrix m_;
};

/// Builds A + iB from a symmetric A and an antisymmetric B.
inline HermitianMatrix hermitian_combine(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionError("hermitian_combine: A and B must be square of equal size");
  }
  if (!all_finite(a) || !all_finite(b)) {
    throw DomainError("hermitian_combine: non-finite entry");
  }
  if (!is_symmetric(a)) throw DomainError("hermitian_combine: A is not symmetric");
  if (!is_antisymmetric(b)) throw DomainError("hermitian_combine: B is not antisymmetric");
  ComplexMatrix h(a.rows(), a.cols());
  h.real() = a;
  h.imag() = b;
  return HermitianMatrix(std::move(h));
}

/// Scale-aware slack: 1e-9 * max(1, ||H||_inf).
inline double psd_tolerance(const HermitianMatrix& h) {
  return kPsdRelativeSlack * std::max(1.0, h.norm_inf());
}

struct PsdReport {
  double min_eigenvalue = 0.0;
  bool is_psd = false;
  ComplexVector witness;  // unit-norm eigenvector for min_eigenvalue
  double tolerance = 0.0;
};

inline PsdReport min_eigenvalue(const HermitianMatrix& h, double tol) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("min_eigenvalue: Hermitian eigensolver failed");
  }
  PsdReport report;
  // Eigenvalues come back in ascending order.
  report.min_eigenvalue = solver.eigenvalues()(0);
  report.witness = solver.eigenvectors().col(0).normalized();
  report.tolerance = tol;
  report.is_psd = report.min_eigenvalue >= -tol;
  return report;
}

inline PsdReport min_eigenvalue(const HermitianMatrix& h) {
  return min_eigenvalue(h, psd_tolerance(h));
}

inline double max_eigenvalue(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("max_eigenvalue: Hermitian eigensolver failed");
  }
  return solver.eigenvalues()(h.dim() - 1);
}

/// Block-diagonal direct sum of two real matrices.
inline RealMatrix direct_sum(const RealMatrix& a, const RealMatrix& b) {
  RealMatrix out = RealMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace jmcert::linalg
