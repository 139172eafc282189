#pragma once

// Truncated single-mode Fock-space numerics: displacement operators from the
// associated-Laguerre closed form, the ordered kernels Delta^(s)(z), catalogue
// POVM elements as matrices, and characteristic-function quadrature for
// s-ordered quasiprobabilities. Phase-space points map to amplitudes through
// alpha = (z1 + i z2) / sqrt(2), so that |z|^2 = 2 |alpha|^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "jmcert/errors.hpp"
#include "jmcert/linalg.hpp"
#include "jmcert/measurements.hpp"

namespace jmcert::fock {

using linalg::Complex;
using linalg::ComplexMatrix;
using linalg::ComplexVector;
using linalg::RealMatrix;
using linalg::RealVector;
using measurements::Vec2;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr int kAutoPadding = -1;
/// Top Fock levels excluded from every Frobenius comparison.
inline constexpr int kEdgeLevels = 5;

/// Operator c I + F with F a finite D x D matrix.
///
/// Keeping the identity component separate lets complements such as I - |0><0|
/// be represented exactly; a truncated identity has a characteristic function
/// that only approximates the delta distribution.
class FockOperator {
 public:
  explicit FockOperator(ComplexMatrix finite, bool hermitian = false, double identity = 0.0)
      : finite_(std::move(finite)), identity_(identity), hermitian_(hermitian) {
    if (finite_.rows() != finite_.cols() || finite_.rows() < 1) {
      throw DimensionError("FockOperator: expected a non-empty square matrix");
    }
    if (!linalg::all_finite(finite_) || !std::isfinite(identity_)) {
      throw DomainError("FockOperator: non-finite entry");
    }
    if (hermitian_) {
      const double asym = (finite_ - finite_.adjoint()).cwiseAbs().maxCoeff();
      if (asym > 1e-10 * std::max(1.0, linalg::inf_norm(finite_))) {
        throw DomainError("FockOperator: claimed Hermitian but max |F - F^dag| = " +
                          std::to_string(asym));
      }
      finite_ = (0.5 * (finite_ + finite_.adjoint())).eval();
    }
  }

  /// Exact identity: no finite part.
  static FockOperator identity(int cutoff) {
    return FockOperator(ComplexMatrix::Zero(cutoff, cutoff), true, 1.0);
  }
  /// The D x D identity matrix with no identity component.
  static FockOperator truncated_identity(int cutoff) {
    return FockOperator(ComplexMatrix::Identity(cutoff, cutoff), true);
  }
  static FockOperator projector(const ComplexVector& v) {
    return FockOperator(v * v.adjoint(), true);
  }

  int cutoff() const { return static_cast<int>(finite_.rows()); }
  const ComplexMatrix& finite() const { return finite_; }
  double identity_part() const { return identity_; }
  bool hermitian() const { return hermitian_; }

  ComplexMatrix dense() const {
    ComplexMatrix m = finite_;
    m.diagonal().array() += identity_;
    return m;
  }

  FockOperator scaled(double a) const { return FockOperator(a * finite_, hermitian_, a * identity_); }

  /// Tr[rho X] for a finite (trace-class) rho of the same cutoff.
  Complex expectation(const ComplexMatrix& rho) const {
    if (rho.rows() != finite_.rows() || rho.cols() != finite_.cols()) {
      throw DimensionError("FockOperator::expectation: cutoff mismatch");
    }
    return (rho * finite_).trace() + identity_ * rho.trace();
  }

 private:
  ComplexMatrix finite_;
  double identity_ = 0.0;
  bool hermitian_ = false;
};

inline Complex alpha_from_z(const Vec2& z) {
  return Complex(z(0), z(1)) / std::numbers::sqrt2;
}

inline void require_cutoff(int cutoff, int minimum, const char* where) {
  if (cutoff < minimum) {
    throw DomainError(std::string(where) + ": cutoff must be >= " + std::to_string(minimum) +
                      ", got " + std::to_string(cutoff));
  }
}

namespace detail {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

class ComplexCompensatedSum {
 public:
  void add(Complex v) {
    re_.add(v.real());
    im_.add(v.imag());
  }
  Complex value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

/// Visits every matrix element of D(alpha) on a dim x dim truncation.
///
/// For k = m - n >= 0,
///   <m|D|n>   = sqrt(n!/m!) alpha^k e^{-|alpha|^2/2} L_n^(k)(|alpha|^2),
///   <n|D|m>   = sqrt(n!/m!) (-alpha*)^k e^{-|alpha|^2/2} L_n^(k)(|alpha|^2).
/// The visitor receives (row, col, value) for both triangles, restricted to
/// rows below `rows`.
template <typename Visitor>
void for_each_displacement_element(Complex alpha, int dim, int rows, Visitor&& visit) {
  const double x = std::norm(alpha);
  const double r = std::abs(alpha);
  const double theta = std::arg(alpha);
  const double log_r = r > 0.0 ? std::log(r) : 0.0;
  for (int k = 0; k < dim; ++k) {
    // Scale at n = 0: |alpha|^k e^{-x/2} / sqrt(k!).
    double scale;
    if (k == 0) {
      scale = std::exp(-0.5 * x);
    } else if (r == 0.0) {
      break;  // every off-diagonal element of D(0) vanishes
    } else {
      scale = std::exp(-0.5 * x + k * log_r - 0.5 * std::lgamma(k + 1.0));
    }
    const Complex lower_phase = std::polar(1.0, k * theta);
    // (-conj(alpha))^k has phase k (pi - theta).
    const Complex upper_phase = std::polar(1.0, k * (std::numbers::pi - theta));
    double l_prev = 0.0;
    double l_cur = 1.0;  // L_0^(k)
    const int n_end = std::min(dim - k, rows);
    for (int n = 0; n < n_end; ++n) {
      if (n > 0) {
        // L_n = ((2n - 1 + k - x) L_{n-1} - (n - 1 + k) L_{n-2}) / n
        const double l_next = ((2.0 * n - 1.0 + k - x) * l_cur - (n - 1.0 + k) * l_prev) / n;
        l_prev = l_cur;
        l_cur = l_next;
        scale *= std::sqrt(static_cast<double>(n) / (n + k));
      }
      const double mag = scale * l_cur;
      if (n + k < rows) visit(n + k, n, mag * lower_phase);
      if (k > 0) visit(n, n + k, mag * upper_phase);
    }
  }
}

/// e^{-x/2} L_n(x) for n < dim: the diagonal of D(alpha) with x = |alpha|^2.
inline RealVector displacement_diagonal(double x, int dim) {
  RealVector out(dim);
  const double e = std::exp(-0.5 * x);
  double l_prev = 0.0;
  double l_cur = 1.0;
  for (int n = 0; n < dim; ++n) {
    if (n > 0) {
      const double l_next = ((2.0 * n - 1.0 - x) * l_cur - (n - 1.0) * l_prev) / n;
      l_prev = l_cur;
      l_cur = l_next;
    }
    out(n) = e * l_cur;
  }
  return out;
}

inline bool is_diagonal(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

}  // namespace detail

/// D(alpha) on a cutoff x cutoff truncation; every element is exact, only the
/// matrix as a whole fails to be unitary.
inline ComplexMatrix displacement_matrix(Complex alpha, int cutoff) {
  require_cutoff(cutoff, 1, "displacement");
  ComplexMatrix out = ComplexMatrix::Zero(cutoff, cutoff);
  detail::for_each_displacement_element(alpha, cutoff, cutoff,
                                        [&](int m, int n, Complex v) { out(m, n) = v; });
  return out;
}

/// The first `rows` rows of D(alpha) on a `dim`-level truncation.
inline ComplexMatrix displacement_rows(Complex alpha, int rows, int dim) {
  require_cutoff(dim, 1, "displacement");
  if (rows < 1 || rows > dim) throw DomainError("displacement_rows: need 1 <= rows <= dim");
  ComplexMatrix out = ComplexMatrix::Zero(rows, dim);
  detail::for_each_displacement_element(alpha, dim, rows,
                                        [&](int m, int n, Complex v) { out(m, n) = v; });
  return out;
}

/// Extra Fock levels so that rows below `cutoff` of D(alpha) keep all their
/// weight: D(alpha)|n> spreads over roughly n +- 2|alpha| sqrt(n).
inline int auto_padding(Complex alpha, int cutoff) {
  return 20 + static_cast<int>(std::ceil(5.0 * std::abs(alpha) * std::sqrt(static_cast<double>(cutoff))));
}

inline FockOperator displacement(Complex alpha, int cutoff) {
  require_cutoff(cutoff, 2, "displacement");
  return FockOperator(displacement_matrix(alpha, cutoff));
}

/// Tr[M D(alpha)] for the finite matrix M without materialising D(alpha).
inline Complex trace_with_displacement(const ComplexMatrix& m, Complex alpha) {
  Complex acc(0.0, 0.0);
  const int dim = static_cast<int>(m.rows());
  detail::for_each_displacement_element(alpha, dim, dim,
                                        [&](int row, int col, Complex v) { acc += m(col, row) * v; });
  return acc;
}

/// Coherent-state amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!).
inline ComplexVector coherent_state(Complex alpha, int cutoff) {
  require_cutoff(cutoff, 1, "coherent_state");
  ComplexVector v = ComplexVector::Zero(cutoff);
  const double r = std::abs(alpha);
  if (r == 0.0) {
    v(0) = 1.0;
    return v;
  }
  const double log_r = std::log(r);
  const double theta = std::arg(alpha);
  for (int n = 0; n < cutoff; ++n) {
    v(n) = std::polar(std::exp(-0.5 * r * r + n * log_r - 0.5 * std::lgamma(n + 1.0)), n * theta);
  }
  return v;
}

namespace detail {

/// (1/2pi) (2/(1-s)) D(alpha) q^n D(alpha)^dag with q = (s+1)/(s-1), built at
/// cutoff + padding and cropped. Valid for s <= 0; at s = 0 the series is the
/// parity operator and only the padded crop is meaningful. A negative padding
/// selects auto_padding().
inline ComplexMatrix ordered_kernel(const Vec2& z, double s, int cutoff, int padding) {
  const Complex alpha = alpha_from_z(z);
  const int work = cutoff + (padding < 0 ? auto_padding(alpha, cutoff) : padding);
  const ComplexMatrix top = displacement_rows(alpha, cutoff, work);
  const double q = (s + 1.0) / (s - 1.0);
  ComplexVector weights(work);
  double qn = 1.0;
  for (int n = 0; n < work; ++n) {
    weights(n) = qn;
    qn *= q;
  }
  ComplexMatrix out = top * weights.asDiagonal() * top.adjoint();
  out *= (1.0 / kTwoPi) * (2.0 / (1.0 - s));
  return (0.5 * (out + out.adjoint())).eval();
}

}  // namespace detail

/// Delta^(s)(z) for s < 0, where the Fock series converges in operator norm.
inline FockOperator delta_s(const Vec2& z, double s, int cutoff, int padding = kAutoPadding) {
  require_cutoff(cutoff, 2, "delta_s");
  if (!std::isfinite(s) || !(s < 0.0)) {
    throw DomainError("delta_s: the Fock series needs s < 0 (got s = " + std::to_string(s) +
                      "); use spqd_numeric for 0 <= s < 1");
  }
  return FockOperator(detail::ordered_kernel(z, s, cutoff, padding), true);
}

/// Delta^(0)(z) = (1/pi) D(alpha) (-1)^n D(alpha)^dag, cropped from a padded build.
inline FockOperator parity_kernel(const Vec2& z, int cutoff, int padding = kAutoPadding) {
  require_cutoff(cutoff, 2, "parity_kernel");
  return FockOperator(detail::ordered_kernel(z, 0.0, cutoff, padding), true);
}

inline double thermal_tail_mass(double nbar, int cutoff) {
  return nbar == 0.0 ? 0.0 : std::pow(nbar / (nbar + 1.0), cutoff);
}

/// Diagonal Boltzmann state with mean photon number nbar.
inline FockOperator thermal_state(double nbar, int cutoff) {
  require_cutoff(cutoff, 1, "thermal_state");
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
    throw DomainError("thermal_state: nbar must be finite and >= 0");
  }
  const double tail = thermal_tail_mass(nbar, cutoff);
  if (tail > 1e-12) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "thermal_state: tail mass %.3g above 1e-12 at cutoff %d for nbar = %g",
                  tail, cutoff, nbar);
    throw DomainError(buf);
  }
  ComplexMatrix m = ComplexMatrix::Zero(cutoff, cutoff);
  const double ratio = nbar / (nbar + 1.0);
  double p = 1.0 / (nbar + 1.0);
  for (int n = 0; n < cutoff; ++n) {
    m(n, n) = p;
    p *= ratio;
  }
  return FockOperator(std::move(m), true);
}

/// Dual of the pure-loss channel in Kraus form,
///   E*(M)_{mn} = sum_k c_{m,k} c_{n,k} M_{m-k, n-k},
///   c_{n,k} = sqrt(C(n,k) tau^{n-k} (1 - tau)^k).
/// Only lower Fock indices of M enter, so the truncated result is exact
/// element by element; the identity component maps to itself.
inline FockOperator loss_dual(const FockOperator& m, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw DomainError("loss_dual: tau must lie in (0, 1], got " + std::to_string(tau));
  }
  const int dim = m.cutoff();
  if (tau == 1.0) return m;
  RealMatrix c = RealMatrix::Zero(dim, dim);
  const double lt = std::log(tau);
  const double l1 = std::log1p(-tau);
  for (int n = 0; n < dim; ++n) {
    for (int k = 0; k <= n; ++k) {
      const double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      c(n, k) = std::exp(0.5 * (log_binom + (n - k) * lt + k * l1));
    }
  }
  const ComplexMatrix& f = m.finite();
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    for (int row = 0; row < dim; ++row) {
      Complex acc(0.0, 0.0);
      const int kmax = std::min(row, col);
      for (int k = 0; k <= kmax; ++k) acc += c(row, k) * c(col, k) * f(row - k, col - k);
      out(row, col) = acc;
    }
  }
  return FockOperator(std::move(out), m.hermitian(), m.identity_part());
}

/// Zero-mean Gaussian state with covariance sigma (vacuum = I): a thermal
/// state with nu = sqrt(det sigma), squeezed by r = ln(l2/l1)/4 along x and
/// rotated so the small-variance axis follows sigma's leading eigenvector.
/// Built at cutoff + work_padding and cropped.
inline FockOperator squeezed_thermal_state(const RealMatrix& sigma, int cutoff, int work_padding = 60) {
  require_cutoff(cutoff, 2, "squeezed_thermal_state");
  if (sigma.rows() != 2 || sigma.cols() != 2 || !linalg::is_symmetric(sigma)) {
    throw DimensionError("squeezed_thermal_state: sigma must be a symmetric 2x2 matrix");
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sigma);
  const double l1 = es.eigenvalues()(0);
  const double l2 = es.eigenvalues()(1);
  const double nu = std::sqrt(l1 * l2);
  if (!(l1 > 0.0) || !(nu >= 1.0 - 1e-12)) {
    throw DomainError("squeezed_thermal_state: sigma is not a valid covariance matrix");
  }
  const double nbar = std::max(0.0, 0.5 * (nu - 1.0));
  const double r = 0.25 * std::log(l2 / l1);
  const double theta = std::atan2(es.eigenvectors()(1, 0), es.eigenvectors()(0, 0));
  const int work = cutoff + work_padding;

  ComplexMatrix rho = thermal_state(nbar, work).finite();
  if (r != 0.0) {
    // S(r) = exp(r/2 (a^2 - a^dag^2)) = exp(-i r H), H = i (a^2 - a^dag^2) / 2.
    ComplexMatrix a2 = ComplexMatrix::Zero(work, work);
    for (int n = 2; n < work; ++n) a2(n - 2, n) = std::sqrt(static_cast<double>(n) * (n - 1));
    const ComplexMatrix h = Complex(0.0, 0.5) * (a2 - a2.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> hs(h);
    ComplexVector phases(work);
    for (int j = 0; j < work; ++j) phases(j) = std::polar(1.0, -r * hs.eigenvalues()(j));
    const ComplexMatrix s = hs.eigenvectors() * phases.asDiagonal() * hs.eigenvectors().adjoint();
    rho = s * rho * s.adjoint();
  }
  ComplexVector rot(work);
  for (int n = 0; n < work; ++n) rot(n) = std::polar(1.0, theta * n);
  rho = rot.asDiagonal() * rho * rot.conjugate().asDiagonal();
  return FockOperator(rho.topLeftCorner(cutoff, cutoff), true);
}

/// The catalogue POVM element for `outcome` as a Fock operator.
///
/// Homodyne elements are not trace class and have no finite representation.
inline FockOperator povm_element(const measurements::MeasurementModel& m,
                                 const measurements::Outcome& outcome, int cutoff) {
  using namespace measurements;
  require_cutoff(cutoff, 2, "povm_element");
  const ModelVariant& v = m.variant();
  if (m.is_binary()) {
    const auto* b = std::get_if<BinaryOutcome>(&outcome);
    if (b == nullptr) throw DomainError("povm_element: " + m.label() + " expects a binary outcome");
    FockOperator primary = [&] {
      if (const auto* t = std::get_if<ThermalPD>(&v)) return thermal_state(0.5 * (t->nu - 1.0), cutoff);
      const double weight =
          std::holds_alternative<RealisticPD>(v) ? 1.0 - std::get<RealisticPD>(v).p_dark : 1.0;
      ComplexMatrix p = ComplexMatrix::Zero(cutoff, cutoff);
      p(0, 0) = weight;
      return FockOperator(std::move(p), true);
    }();
    if (*b == BinaryOutcome::Primary) return primary;
    return FockOperator(-primary.finite(), true, 1.0);
  }
  if (std::holds_alternative<Homodyne>(v)) {
    throw DomainError("povm_element: homodyne elements are not trace class");
  }
  const auto* a = std::get_if<Vec2>(&outcome);
  if (a == nullptr) throw DomainError("povm_element: " + m.label() + " expects a phase-space outcome");
  const RealMatrix sigma = std::holds_alternative<Gaussian>(v) ? std::get<Gaussian>(v).sigma
                                                                : RealMatrix::Identity(2, 2);
  // Build the displaced seed with room above the cutoff, then crop.
  const Complex alpha = alpha_from_z(*a);
  const int work = cutoff + auto_padding(alpha, cutoff);
  const ComplexMatrix seed = squeezed_thermal_state(sigma, work).finite();
  const ComplexMatrix d = displacement_rows(alpha, cutoff, work);
  return FockOperator((d * seed * d.adjoint()) / kTwoPi, true);
}

// ---------------------------------------------------------------------------
// Phase-space quadrature

/// Symmetric trapezoid grid on [-half_width, half_width] per axis.
class PhaseGrid {
 public:
  PhaseGrid(double half_width, int points) : half_width_(half_width), points_(points) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
      throw DomainError("PhaseGrid: half_width must be positive");
    }
    if (points < 3 || points % 2 == 0) {
      throw DomainError("PhaseGrid: points per axis must be odd and >= 3, got " +
                        std::to_string(points));
    }
    step_ = 2.0 * half_width / (points - 1);
    const int mid = points / 2;
    nodes_.resize(points);
    weights_.resize(points);
    for (int i = 0; i < points; ++i) {
      nodes_(i) = (i - mid) * step_;
      weights_(i) = (i == 0 || i == points - 1) ? 0.5 * step_ : step_;
    }
  }

  /// y-integration default: Gaussian tails below 1e-12 at the edge.
  static PhaseGrid characteristic_default() { return {12.0, 241}; }
  /// z grid used for non-negativity scans.
  static PhaseGrid standard() { return {5.0, 101}; }

  double half_width() const { return half_width_; }
  int points() const { return points_; }
  double step() const { return step_; }
  const RealVector& nodes() const { return nodes_; }
  const RealVector& weights() const { return weights_; }
  double weight(int i, int j) const { return weights_(i) * weights_(j); }

 private:
  double half_width_;
  int points_;
  double step_;
  RealVector nodes_;
  RealVector weights_;
};

/// Relative rim magnitude above which a y-integral is declared divergent.
inline constexpr double kTailThreshold = 1e-4;
inline constexpr double kImagResidueLimit = 1e-9;

/// Tr[F D(y)] for the finite part F on the disc |y| <= half_width of a grid.
struct CharacteristicSamples {
  const PhaseGrid* grid = nullptr;
  ComplexMatrix chi;  // chi(i, j) at y = (nodes(i), nodes(j)); zero outside the disc
  double identity_part = 0.0;
  bool hermitian = false;
};

inline bool in_disc(const PhaseGrid& g, int i, int j) {
  const double r2 = g.nodes()(i) * g.nodes()(i) + g.nodes()(j) * g.nodes()(j);
  const double hw = g.half_width() * (1.0 + 1e-12);
  return r2 <= hw * hw;
}

inline CharacteristicSamples sample_characteristic(const FockOperator& m, const PhaseGrid& grid) {
  CharacteristicSamples out;
  out.grid = &grid;
  out.identity_part = m.identity_part();
  out.hermitian = m.hermitian();
  const int n = grid.points();
  out.chi = ComplexMatrix::Zero(n, n);
  const ComplexMatrix& f = m.finite();
  const bool diagonal = detail::is_diagonal(f);
  const bool zero = f.cwiseAbs().maxCoeff() == 0.0;
  if (zero) return out;
  const RealVector diag = f.diagonal().real();
  const RealVector diag_im = f.diagonal().imag();
  const RealVector& y = grid.nodes();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!in_disc(grid, i, j)) continue;
      const Vec2 yy(y(i), y(j));
      if (diagonal) {
        // Diagonal operators have radially symmetric characteristic functions.
        const RealVector d = detail::displacement_diagonal(0.5 * yy.squaredNorm(), m.cutoff());
        out.chi(i, j) = Complex(diag.dot(d), diag_im.dot(d));
      } else {
        out.chi(i, j) = trace_with_displacement(f, alpha_from_z(yy));
      }
    }
  }
  return out;
}

struct SpqdEvaluation {
  double value = 0.0;
  double imag_residue = 0.0;
  double tail_ratio = 0.0;
};

namespace detail {

/// chi(y) e^{s|y|^2/4} w(y) on the disc, after the tail check.
inline ComplexMatrix weighted_integrand(const CharacteristicSamples& cs, double s, double* tail_ratio) {
  const PhaseGrid& g = *cs.grid;
  const int n = g.points();
  const RealVector& y = g.nodes();
  const double rim = g.half_width() - 2.0 * g.step();
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  double peak = 0.0;
  double rim_peak = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (cs.chi(i, j) == Complex(0.0, 0.0)) continue;
      const double r2 = y(i) * y(i) + y(j) * y(j);
      const Complex v = cs.chi(i, j) * std::exp(0.25 * s * r2);
      const double mag = std::abs(v);
      peak = std::max(peak, mag);
      if (r2 >= rim * rim) rim_peak = std::max(rim_peak, mag);
      a(i, j) = v * g.weight(i, j);
    }
  }
  *tail_ratio = peak > 0.0 ? rim_peak / peak : 0.0;
  if (*tail_ratio > kTailThreshold) {
    throw ConvergenceError("spqd_numeric: integrand has not decayed at the grid rim (relative "
                           "magnitude " + std::to_string(*tail_ratio) + " at |y| = " +
                           std::to_string(g.half_width()) + ", s = " + std::to_string(s) + ")");
  }
  return a;
}

inline void check_ordering(double s) {
  if (!std::isfinite(s) || !(s < 1.0)) {
    throw DomainError("spqd_numeric: s must be finite and < 1, got " + std::to_string(s));
  }
}

inline void check_residue(const CharacteristicSamples& cs, double residue) {
  if (cs.hermitian && residue > kImagResidueLimit) {
    throw ConvergenceError("spqd_numeric: imaginary residue " + std::to_string(residue) +
                           " exceeds 1e-9 for a Hermitian operator");
  }
}

}  // namespace detail

/// W^(s)(z) = Tr[M Delta^(s)(z)] from
///   (1/(2pi)^2) sum w(y) chi(y) e^{s|y|^2/4} e^{-i z Omega y^T},
/// with z Omega y^T = z1 y2 - z2 y1, restricted to the disc |y| <= half_width.
/// The identity component contributes exactly c / (2pi).
inline SpqdEvaluation spqd_numeric_detailed(const CharacteristicSamples& cs, double s, const Vec2& z) {
  detail::check_ordering(s);
  SpqdEvaluation ev;
  const ComplexMatrix a = detail::weighted_integrand(cs, s, &ev.tail_ratio);
  const RealVector& y = cs.grid->nodes();
  detail::ComplexCompensatedSum acc;
  const int n = cs.grid->points();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (a(i, j) == Complex(0.0, 0.0)) continue;
      acc.add(a(i, j) * std::polar(1.0, -(z(0) * y(j) - z(1) * y(i))));
    }
  }
  const Complex w = acc.value() / (kTwoPi * kTwoPi);
  ev.value = w.real() + cs.identity_part / kTwoPi;
  ev.imag_residue = std::abs(w.imag());
  detail::check_residue(cs, ev.imag_residue);
  return ev;
}

inline double spqd_numeric(const FockOperator& m, double s, const Vec2& z,
                           const PhaseGrid& y_grid = PhaseGrid::characteristic_default()) {
  detail::check_ordering(s);
  return spqd_numeric_detailed(sample_characteristic(m, y_grid), s, z).value;
}

/// W^(s) on every node of z_grid; result(p, q) is at z = (nodes(p), nodes(q)).
///
/// The phase factor separates as e^{i z2 y1} e^{-i z1 y2}, so the whole grid
/// costs two dense products.
inline RealMatrix spqd_numeric_grid(const CharacteristicSamples& cs, double s, const PhaseGrid& z_grid) {
  detail::check_ordering(s);
  double tail = 0.0;
  const ComplexMatrix a = detail::weighted_integrand(cs, s, &tail);
  const RealVector& y = cs.grid->nodes();
  const RealVector& zz = z_grid.nodes();
  const Eigen::Index nz = zz.size();
  const Eigen::Index ny = y.size();
  ComplexMatrix f(nz, ny);  // e^{-i z1 y2}
  ComplexMatrix g(nz, ny);  // e^{+i z2 y1}
  for (Eigen::Index p = 0; p < nz; ++p) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      f(p, j) = std::polar(1.0, -zz(p) * y(j));
      g(p, j) = std::polar(1.0, zz(p) * y(j));
    }
  }
  const ComplexMatrix w = (f * a.transpose() * g.transpose()) / (kTwoPi * kTwoPi);
  detail::check_residue(cs, w.imag().cwiseAbs().maxCoeff());
  RealMatrix out = w.real();
  out.array() += cs.identity_part / kTwoPi;
  return out;
}

// ---------------------------------------------------------------------------
// Oracle comparisons

struct OracleReport {
  std::string quantity;
  double numeric = 0.0;
  double reference = 0.0;
  double abs_error = 0.0;

  static OracleReport make(std::string quantity, double numeric, double reference) {
    return {std::move(quantity), numeric, reference, std::abs(numeric - reference)};
  }
};

/// Frobenius norm of the leading (D - 5) x (D - 5) block.
inline double central_block_error(const ComplexMatrix& a, const ComplexMatrix& b) {
  const Eigen::Index block = std::max<Eigen::Index>(1, a.rows() - kEdgeLevels);
  return (a - b).topLeftCorner(block, block).norm();
}

/// ||D D^dag - I|| on the central block; D is built with padding so the
/// product's central block sees every index it needs.
inline OracleReport displacement_unitarity(Complex alpha, int cutoff, int padding = kAutoPadding) {
  require_cutoff(cutoff, 2, "displacement_unitarity");
  const int work = cutoff + (padding < 0 ? auto_padding(alpha, cutoff) : padding);
  const ComplexMatrix d = displacement_rows(alpha, cutoff, work);
  const ComplexMatrix prod = d * d.adjoint();
  return OracleReport::make("unitarity |alpha|=" + std::to_string(std::abs(alpha)),
                            central_block_error(prod, ComplexMatrix::Identity(cutoff, cutoff)), 0.0);
}

/// ||Delta^(-1)(z) - |z><z|/(2pi)|| on the central block.
inline OracleReport heterodyne_identity(const Vec2& z, int cutoff) {
  const ComplexMatrix kernel = delta_s(z, -1.0, cutoff).finite();
  const ComplexVector c = coherent_state(alpha_from_z(z), cutoff);
  return OracleReport::make("heterodyne identity", central_block_error(kernel, c * c.adjoint() / kTwoPi),
                            0.0);
}

/// E*(D(y)) for pure loss, the Gaussian-channel action on displacements.
inline ComplexMatrix loss_dual_displacement(const Vec2& y, double tau, int cutoff) {
  return displacement_matrix(alpha_from_z(std::sqrt(tau) * y), cutoff) *
         std::exp(-0.25 * (1.0 - tau) * y.squaredNorm());
}

/// E*_loss(Delta^(1-2tau)(z)) for any tau in (0, 1]. Non-positive orderings
/// go through the Fock kernel and the Kraus dual; positive orderings (tau <
/// 1/2) integrate the dual displacement against e^{s|y|^2/4} e^{-i z Omega y}.
inline FockOperator loss_transformed_kernel(double tau, const Vec2& z, int cutoff) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw DomainError("loss_transformed_kernel: tau must lie in (0, 1], got " + std::to_string(tau));
  }
  const double s = 1.0 - 2.0 * tau;
  if (s < 0.0) return loss_dual(delta_s(z, s, cutoff), tau);
  if (s == 0.0) return loss_dual(parity_kernel(z, cutoff), tau);
  // Integrand decays like e^{-tau |y|^2 / 4}.
  const double hw = std::sqrt(120.0 / tau);
  int points = static_cast<int>(std::ceil(2.0 * hw / 0.2)) + 1;
  if (points % 2 == 0) ++points;
  const PhaseGrid grid(hw, points);
  const RealVector& y = grid.nodes();
  ComplexMatrix acc = ComplexMatrix::Zero(cutoff, cutoff);
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      if (!in_disc(grid, i, j)) continue;
      const Vec2 yy(y(i), y(j));
      const double damp = std::exp(-0.25 * tau * yy.squaredNorm());
      if (damp < 1e-300) continue;
      const Complex phase = std::polar(grid.weight(i, j) * damp, -(z(0) * yy(1) - z(1) * yy(0)));
      acc += phase * displacement_matrix(alpha_from_z(std::sqrt(tau) * yy), cutoff);
    }
  }
  acc /= kTwoPi * kTwoPi;
  return FockOperator((0.5 * (acc + acc.adjoint())).eval(), true);
}

/// ||E*(Delta^(1-2tau)(z)) - (1/tau) |z/sqrt(tau)><z/sqrt(tau)| / (2pi)||.
inline OracleReport mother_heterodyne_check(double tau, const Vec2& z, int cutoff) {
  const ComplexMatrix lhs = loss_transformed_kernel(tau, z, cutoff).finite();
  const ComplexVector c = coherent_state(alpha_from_z(z / std::sqrt(tau)), cutoff);
  const ComplexMatrix rhs = c * c.adjoint() / (kTwoPi * tau);
  char label[96];
  std::snprintf(label, sizeof label, "mother tau=%.3g z=(%.3g,%.3g)", tau, z(0), z(1));
  return OracleReport::make(label, central_block_error(lhs, rhs), 0.0);
}

/// Minimum eigenvalue of the central block of E*_loss(Delta^(s)(z)), s <= 0.
inline double transferred_min_eigenvalue(double tau, double s, const Vec2& z, int cutoff) {
  const FockOperator kernel = s == 0.0 ? parity_kernel(z, cutoff) : delta_s(z, s, cutoff);
  const ComplexMatrix out = loss_dual(kernel, tau).finite();
  const Eigen::Index block = std::max<Eigen::Index>(1, cutoff - kEdgeLevels);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out.topLeftCorner(block, block),
                                                  Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Tr[rho M] against (2pi) sum_z w(z) W^(-s)(z|rho) W^(s)(outcome|m, z).
inline OracleReport born_pairing(const FockOperator& rho, const measurements::MeasurementModel& m,
                                 const measurements::Outcome& outcome, double s,
                                 const PhaseGrid& z_grid,
                                 const PhaseGrid& y_grid = PhaseGrid::characteristic_default()) {
  const FockOperator elem = povm_element(m, outcome, rho.cutoff());
  const double direct = elem.expectation(rho.dense()).real();

  const CharacteristicSamples cs = sample_characteristic(rho, y_grid);
  const RealMatrix w_rho = spqd_numeric_grid(cs, -s, z_grid);
  const int n = z_grid.points();
  const RealVector& zz = z_grid.nodes();
  RealMatrix integrand(n, n);
  double peak = 0.0;
  double edge = 0.0;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      integrand(p, q) = w_rho(p, q) * measurements::spqd(m, outcome, s, Vec2(zz(p), zz(q)));
      const double v = std::abs(integrand(p, q));
      peak = std::max(peak, v);
      if (p == 0 || q == 0 || p == n - 1 || q == n - 1) edge = std::max(edge, v);
    }
  }
  // The product must have left the z grid.
  if (peak > 0.0 && edge / peak > 1e-8) {
    throw ConvergenceError("born_pairing: integrand has not decayed at the z-grid edge (" +
                           std::to_string(edge / peak) + " relative)");
  }
  detail::CompensatedSum acc;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) acc.add(z_grid.weight(p, q) * integrand(p, q));
  }
  return OracleReport::make("born pairing " + m.label(), kTwoPi * acc.value(), direct);
}

/// Rebuilds the POVM element from its s-PQD,
///   M = (2pi) int d^2z W^(s)(z) Delta^(-s)(z),
/// and reports the central-block Frobenius distance to povm_element().
/// s >= 0 uses the Fock kernels directly; s < 0 goes through the Fourier form
///   M = (1/2pi) int d^2y e^{-s|y|^2/4} [int d^2z W(z) e^{i z Omega y}] D(-y).
/// Only the finite part is rebuilt: the identity component is exact.
inline OracleReport reconstruct(const measurements::MeasurementModel& m,
                                const measurements::Outcome& outcome, double s,
                                const PhaseGrid& z_grid, int cutoff,
                                const PhaseGrid& y_grid = PhaseGrid::characteristic_default()) {
  if (!std::isfinite(s) || !(s < 1.0)) {
    throw DomainError("reconstruct: s must be finite and < 1");
  }
  const FockOperator target = povm_element(m, outcome, cutoff);
  const double c = target.identity_part();
  const RealVector& zz = z_grid.nodes();
  const int nz = z_grid.points();
  RealMatrix wf(nz, nz);
  double wmax = 0.0;
  for (int p = 0; p < nz; ++p) {
    for (int q = 0; q < nz; ++q) {
      wf(p, q) = measurements::spqd(m, outcome, s, Vec2(zz(p), zz(q))) - c / kTwoPi;
      wmax = std::max(wmax, std::abs(wf(p, q)));
    }
  }
  ComplexMatrix rebuilt = ComplexMatrix::Zero(cutoff, cutoff);
  if (s >= 0.0) {
    for (int p = 0; p < nz; ++p) {
      for (int q = 0; q < nz; ++q) {
        if (std::abs(wf(p, q)) <= 1e-18 * wmax) continue;
        const Vec2 z(zz(p), zz(q));
        const FockOperator kernel = s == 0.0 ? parity_kernel(z, cutoff) : delta_s(z, -s, cutoff);
        rebuilt += (kTwoPi * z_grid.weight(p, q) * wf(p, q)) * kernel.finite();
      }
    }
  } else {
    // What(y) = sum_z w W(z) e^{i (z1 y2 - z2 y1)}: separable like spqd_numeric_grid.
    const RealVector& y = y_grid.nodes();
    const int ny = y_grid.points();
    ComplexMatrix e1(ny, nz);  // e^{-i z2 y1}
    ComplexMatrix e2(ny, nz);  // e^{+i z1 y2}
    for (int i = 0; i < ny; ++i) {
      for (int p = 0; p < nz; ++p) {
        e1(i, p) = std::polar(z_grid.weights()(p), -zz(p) * y(i));
        e2(i, p) = std::polar(z_grid.weights()(p), zz(p) * y(i));
      }
    }
    // hat(i, j) at y = (y_i, y_j): sum_{p,q} W(p,q) e^{i z_p y_j} e^{-i z_q y_i}.
    const ComplexMatrix hat = e1 * wf.transpose().cast<Complex>() * e2.transpose();
    for (int i = 0; i < ny; ++i) {
      for (int j = 0; j < ny; ++j) {
        if (!in_disc(y_grid, i, j)) continue;
        const Vec2 yy(y(i), y(j));
        const Complex coeff = hat(i, j) * std::exp(-0.25 * s * yy.squaredNorm()) * y_grid.weight(i, j);
        if (std::abs(coeff) < 1e-300) continue;
        rebuilt += coeff * displacement_matrix(alpha_from_z(-yy), cutoff);
      }
    }
    rebuilt /= kTwoPi;
  }
  char label[96];
  std::snprintf(label, sizeof label, "reconstruct %s s=%.3g", m.label().c_str(), s);
  return OracleReport::make(label, central_block_error(rebuilt, target.finite()), 0.0);
}

/// ||sum_z w(z) |z><z| / (2pi) - I|| on the central block.
inline OracleReport coherent_resolution(int cutoff, const PhaseGrid& z_grid) {
  const RealVector& zz = z_grid.nodes();
  ComplexMatrix acc = ComplexMatrix::Zero(cutoff, cutoff);
  for (int p = 0; p < z_grid.points(); ++p) {
    for (int q = 0; q < z_grid.points(); ++q) {
      const ComplexVector c = coherent_state(alpha_from_z(Vec2(zz(p), zz(q))), cutoff);
      acc += (z_grid.weight(p, q) / kTwoPi) * (c * c.adjoint());
    }
  }
  return OracleReport::make("coherent resolution",
                            central_block_error(acc, ComplexMatrix::Identity(cutoff, cutoff)), 0.0);
}

/// Max deviation between W^(s) and the Gaussian smoothing of W^(s_big),
///   (K * W^(s_big))(z), K(u) = e^{-|u|^2/c} / (pi c), c = s_big - s,
/// over the inner half of the grid (|z_i| <= half_width / 2).
inline OracleReport convolution_check(double s, double s_big, const PhaseGrid& z_grid,
                                      const measurements::MeasurementModel& m,
                                      const measurements::Outcome& outcome) {
  if (!(s <= s_big)) throw DomainError("convolution_check: needs s <= s_big");
  const double c = s_big - s;
  const double inner = 0.5 * z_grid.half_width();
  if (c > 0.0 && inner * inner < 27.7 * c) {
    throw ConvergenceError("convolution_check: kernel width " + std::to_string(std::sqrt(c)) +
                           " too wide for a grid of half-width " +
                           std::to_string(z_grid.half_width()));
  }
  const RealVector& zz = z_grid.nodes();
  const int n = z_grid.points();
  RealMatrix big(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) big(p, q) = measurements::spqd(m, outcome, s_big, Vec2(zz(p), zz(q)));
  }
  RealMatrix smoothed = big;
  if (c > 0.0) {
    // The kernel factorises per axis.
    RealMatrix k(n, n);
    for (int p = 0; p < n; ++p) {
      for (int r = 0; r < n; ++r) {
        const double u = zz(p) - zz(r);
        k(p, r) = std::exp(-u * u / c) / std::sqrt(std::numbers::pi * c) * z_grid.weights()(r);
      }
    }
    smoothed = k * big * k.transpose();
  }
  double worst = 0.0;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (std::abs(zz(p)) > inner * (1.0 + 1e-12) || std::abs(zz(q)) > inner * (1.0 + 1e-12)) continue;
      const double direct = measurements::spqd(m, outcome, s, Vec2(zz(p), zz(q)));
      worst = std::max(worst, std::abs(direct - smoothed(p, q)));
    }
  }
  char label[96];
  std::snprintf(label, sizeof label, "convolution %s s=%.3g<-%.3g", m.label().c_str(), s, s_big);
  return OracleReport::make(label, worst, 0.0);
}

}  // namespace jmcert::fock
