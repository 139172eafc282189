#pragma once

// Bosonic Gaussian channels described by their dual action on displacement
// operators, E*(D(y)) = D(yT) exp(-y N y^T / 4 - i d Omega y^T).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jmcert/errors.hpp"
#include "jmcert/linalg.hpp"

namespace jmcert::channels {

using linalg::HermitianMatrix;
using linalg::PsdReport;
using linalg::RealMatrix;
using linalg::RealVector;

/// Thrown by make_channel when N + i Omega - i T Omega T^T is not PSD.
class CpViolation : public Error {
 public:
  CpViolation(const std::string& what, PsdReport report)
      : Error(what), report_(std::move(report)) {}
  const PsdReport& report() const { return report_; }

 private:
  PsdReport report_;
};

class GaussianChannel {
 public:
  int modes() const { return modes_; }
  const RealMatrix& T() const { return t_; }
  const RealMatrix& N() const { return n_; }
  /// Inert for every certification criterion; carried for composition only.
  const RealVector& d() const { return d_; }

  /// N + i Omega - i T Omega T^T.
  HermitianMatrix cp_matrix() const {
    const RealMatrix omega = linalg::symplectic_form(modes_);
    return linalg::hermitian_combine(n_, omega - t_ * omega * t_.transpose());
  }

  friend GaussianChannel make_channel(int modes, RealMatrix t, RealMatrix n, RealVector d);

 private:
  GaussianChannel(int modes, RealMatrix t, RealMatrix n, RealVector d)
      : modes_(modes), t_(std::move(t)), n_(std::move(n)), d_(std::move(d)) {}

  int modes_;
  RealMatrix t_;
  RealMatrix n_;
  RealVector d_;
};

inline GaussianChannel make_channel(int modes, RealMatrix t, RealMatrix n, RealVector d) {
  if (modes < 1) throw DimensionError("make_channel: mode count must be positive");
  const Eigen::Index dim = 2 * modes;
  if (t.rows() != dim || t.cols() != dim || n.rows() != dim || n.cols() != dim ||
      d.size() != dim) {
    throw DimensionError("make_channel: T and N must be " + std::to_string(dim) + "x" +
                         std::to_string(dim) + " and d of length " + std::to_string(dim));
  }
  if (!linalg::all_finite(t) || !linalg::all_finite(n) || !linalg::all_finite(d)) {
    throw DomainError("make_channel: non-finite entry");
  }
  if (!linalg::is_symmetric(n)) throw DomainError("make_channel: N is not symmetric");
  n = (0.5 * (n + n.transpose())).eval();
  GaussianChannel ch(modes, std::move(t), std::move(n), std::move(d));
  PsdReport cp = linalg::min_eigenvalue(ch.cp_matrix());
  if (!cp.is_psd) {
    throw CpViolation("make_channel: not completely positive (min eigenvalue of "
                      "N + i Omega - i T Omega T^T is " +
                          std::to_string(cp.min_eigenvalue) + ")",
                      std::move(cp));
  }
  return ch;
}

inline GaussianChannel identity_channel(int modes) {
  const Eigen::Index dim = 2 * modes;
  return make_channel(modes, RealMatrix::Identity(dim, dim), RealMatrix::Zero(dim, dim),
                      RealVector::Zero(dim));
}

// ---------------------------------------------------------------------------
// Single-mode catalogue

enum class ChannelTag { A1, A2, B1, B2, B2_Id, C_loss, C_amp, D };

inline constexpr std::array<ChannelTag, 8> kAllTags = {
    ChannelTag::A1,    ChannelTag::A2,     ChannelTag::B1,    ChannelTag::B2,
    ChannelTag::B2_Id, ChannelTag::C_loss, ChannelTag::C_amp, ChannelTag::D};

inline std::string_view tag_name(ChannelTag tag) {
  switch (tag) {
    case ChannelTag::A1: return "A1";
    case ChannelTag::A2: return "A2";
    case ChannelTag::B1: return "B1";
    case ChannelTag::B2: return "B2";
    case ChannelTag::B2_Id: return "B2_Id";
    case ChannelTag::C_loss: return "C_loss";
    case ChannelTag::C_amp: return "C_amp";
    case ChannelTag::D: return "D";
  }
  return "?";
}

inline std::optional<ChannelTag> parse_tag(std::string_view name) {
  for (ChannelTag tag : kAllTags) {
    if (tag_name(tag) == name) return tag;
  }
  return std::nullopt;
}

/// Fixed transmissivity of the classes whose tau is pinned by definition.
inline std::optional<double> fixed_tau(ChannelTag tag) {
  switch (tag) {
    case ChannelTag::A1:
    case ChannelTag::A2: return 0.0;
    case ChannelTag::B1:
    case ChannelTag::B2:
    case ChannelTag::B2_Id: return 1.0;
    default: return std::nullopt;
  }
}

inline bool tau_in_range(ChannelTag tag, double tau) {
  if (!std::isfinite(tau)) return false;
  switch (tag) {
    case ChannelTag::A1:
    case ChannelTag::A2: return tau == 0.0;
    case ChannelTag::B1:
    case ChannelTag::B2:
    case ChannelTag::B2_Id: return tau == 1.0;
    case ChannelTag::C_loss: return tau > 0.0 && tau < 1.0;
    case ChannelTag::C_amp: return tau >= 1.0;
    case ChannelTag::D: return tau <= 0.0;
  }
  return false;
}

struct ChannelClass {
  ChannelTag tag = ChannelTag::B2_Id;
  double tau = 1.0;
  double nbar = 0.0;
};

inline void validate(const ChannelClass& c) {
  if (!tau_in_range(c.tag, c.tau)) {
    throw DomainError("channel class " + std::string(tag_name(c.tag)) +
                      ": tau = " + std::to_string(c.tau) + " outside the class range");
  }
  if (!(c.nbar >= 0.0) || !std::isfinite(c.nbar)) {
    throw DomainError("channel class " + std::string(tag_name(c.tag)) +
                      ": nbar must be finite and >= 0");
  }
}

/// Catalogue channel with (T, N) as tabulated; d = 0.
inline GaussianChannel from_class(const ChannelClass& c,
                                  std::vector<std::string>* warnings = nullptr) {
  validate(c);
  const RealMatrix id = RealMatrix::Identity(2, 2);
  const RealMatrix z = linalg::pauli_z();
  const double thermal = 2.0 * c.nbar + 1.0;
  RealMatrix t;
  RealMatrix n;
  switch (c.tag) {
    case ChannelTag::A1:
      t = RealMatrix::Zero(2, 2);
      n = thermal * id;
      break;
    case ChannelTag::A2:
      t = 0.5 * (z + id);
      n = thermal * id;
      break;
    case ChannelTag::B1:
      if (c.nbar != 0.0 && warnings != nullptr) {
        warnings->push_back("B1: nbar is ignored (N = (I - Z)/2 does not depend on it)");
      }
      t = id;
      n = 0.5 * (id - z);
      break;
    case ChannelTag::B2:
      t = id;
      n = c.nbar * id;
      break;
    case ChannelTag::B2_Id:
      t = id;
      n = RealMatrix::Zero(2, 2);
      break;
    case ChannelTag::C_loss:
      t = std::sqrt(c.tau) * id;
      n = (1.0 - c.tau) * thermal * id;
      break;
    case ChannelTag::C_amp:
      t = std::sqrt(c.tau) * id;
      n = (c.tau - 1.0) * thermal * id;
      break;
    case ChannelTag::D:
      t = std::sqrt(-c.tau) * z;
      n = (1.0 - c.tau) * thermal * id;
      break;
  }
  return make_channel(1, std::move(t), std::move(n), RealVector::Zero(2));
}

/// Attenuator with excess noise: T = sqrt(tau) I, N = (1 - tau + 2 eps) I.
inline GaussianChannel loss_with_excess(double tau, double epsilon) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw DomainError("loss_with_excess: tau must lie in (0, 1], got " + std::to_string(tau));
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("loss_with_excess: epsilon must be >= 0, got " + std::to_string(epsilon));
  }
  const RealMatrix id = RealMatrix::Identity(2, 2);
  return make_channel(1, std::sqrt(tau) * id, (1.0 - tau + 2.0 * epsilon) * id,
                      RealVector::Zero(2));
}

/// Schroedinger-order composition `second` after `first`.
///
/// The duals chain as E1*(E2*(D(y))), giving T = T2 T1 and
/// N = N2 + T2 N1 T2^T. The displacement picks up d1 Omega T2^T Omega^{-1}
/// so that the phase exp(-i d Omega y^T) chains exactly.
inline GaussianChannel compose(const GaussianChannel& first, const GaussianChannel& second) {
  if (first.modes() != second.modes()) {
    throw DimensionError("compose: mode counts differ (" + std::to_string(first.modes()) +
                         " vs " + std::to_string(second.modes()) + ")");
  }
  const RealMatrix omega = linalg::symplectic_form(first.modes());
  const RealMatrix& t2 = second.T();
  RealMatrix t = t2 * first.T();
  RealMatrix n = second.N() + t2 * first.N() * t2.transpose();
  // Omega^{-1} = -Omega.
  RealVector d = second.d() + (first.d().transpose() * omega * t2.transpose() * (-omega))
                                  .transpose();
  return make_channel(first.modes(), std::move(t), std::move(n), std::move(d));
}

// ---------------------------------------------------------------------------
// Entanglement breaking

/// Sufficient condition N - I - i T Omega T^T >= 0.
inline bool eb_sufficient(const GaussianChannel& ch) {
  const Eigen::Index dim = 2 * ch.modes();
  const RealMatrix omega = linalg::symplectic_form(ch.modes());
  const HermitianMatrix h = linalg::hermitian_combine(
      ch.N() - RealMatrix::Identity(dim, dim), -(ch.T() * omega * ch.T().transpose()));
  return linalg::min_eigenvalue(h).is_psd;
}

/// Two-mode squeezed vacuum covariance [[nu I, c Z], [c Z, nu I]], c = sqrt(nu^2 - 1).
inline RealMatrix tms_covariance(double nu) {
  if (!(nu >= 1.0) || !std::isfinite(nu)) {
    throw DomainError("tms_covariance: nu must be >= 1, got " + std::to_string(nu));
  }
  const double c = std::sqrt(nu * nu - 1.0);
  RealMatrix sigma = RealMatrix::Zero(4, 4);
  sigma.topLeftCorner(2, 2) = nu * RealMatrix::Identity(2, 2);
  sigma.bottomRightCorner(2, 2) = nu * RealMatrix::Identity(2, 2);
  sigma.topRightCorner(2, 2) = c * linalg::pauli_z();
  sigma.bottomLeftCorner(2, 2) = c * linalg::pauli_z();
  return sigma;
}

/// TMS covariance after the noisy attenuator acts on mode A.
inline RealMatrix tms_after_channel(double nu, double tau, double epsilon) {
  if (!(nu >= 1.0) || !std::isfinite(nu)) {
    throw DomainError("tms_after_channel: nu must be >= 1");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("tms_after_channel: tau must lie in (0, 1]");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("tms_after_channel: epsilon must be >= 0");
  }
  const double k = 1.0 + 2.0 * epsilon + tau * (nu - 1.0);
  const double c = std::sqrt(tau * (nu * nu - 1.0));
  RealMatrix sigma = RealMatrix::Zero(4, 4);
  sigma.topLeftCorner(2, 2) = k * RealMatrix::Identity(2, 2);
  sigma.bottomRightCorner(2, 2) = nu * RealMatrix::Identity(2, 2);
  sigma.topRightCorner(2, 2) = c * linalg::pauli_z();
  sigma.bottomLeftCorner(2, 2) = c * linalg::pauli_z();
  return sigma;
}

/// Smallest eigenvalue of L sigma L + i Omega, L = diag(1, 1, 1, -1).
/// Non-negative iff the two-mode Gaussian state is separable.
inline double partial_transpose_min_eigenvalue(const RealMatrix& sigma) {
  if (sigma.rows() != 4 || sigma.cols() != 4) {
    throw DimensionError("partial_transpose_min_eigenvalue: expected a 4x4 covariance");
  }
  const RealVector l = (RealVector(4) << 1.0, 1.0, 1.0, -1.0).finished();
  const RealMatrix flipped = l.asDiagonal() * sigma * l.asDiagonal();
  return linalg::min_eigenvalue(linalg::hermitian_combine(flipped, linalg::symplectic_form(2)))
      .min_eigenvalue;
}

struct EbReport {
  bool sufficient_condition_psd = false;
  double tms_min_eigenvalue = 0.0;
  double nu_at_minimum = 1.0;
  double scan_nu_min = 1.0;
  double scan_nu_max = 1.0;
  bool separable = false;  // tms_min_eigenvalue >= -tolerance
  double tolerance = 0.0;
};

/// `points` logarithmically spaced values in [1, nu_max].
inline std::vector<double> log_nu_grid(double nu_max = 10.0, int points = 50) {
  if (!(nu_max >= 1.0) || points < 1) throw DomainError("log_nu_grid: need nu_max >= 1, points >= 1");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  if (points == 1) {
    grid.push_back(1.0);
    return grid;
  }
  const double top = std::log(nu_max);
  for (int i = 0; i < points; ++i) {
    grid.push_back(i + 1 == points ? nu_max : std::exp(top * i / (points - 1)));
  }
  return grid;
}

inline EbReport eb_tms_scan(double tau, double epsilon, std::span<const double> nu_grid) {
  if (nu_grid.empty()) throw DomainError("eb_tms_scan: empty nu grid");
  EbReport report;
  report.sufficient_condition_psd = eb_sufficient(loss_with_excess(tau, epsilon));
  report.tms_min_eigenvalue = std::numeric_limits<double>::infinity();
  report.scan_nu_min = std::numeric_limits<double>::infinity();
  report.scan_nu_max = -std::numeric_limits<double>::infinity();
  for (double nu : nu_grid) {
    if (!(nu >= 1.0)) throw DomainError("eb_tms_scan: nu grid values must be >= 1");
    const double lam = partial_transpose_min_eigenvalue(tms_after_channel(nu, tau, epsilon));
    if (lam < report.tms_min_eigenvalue) {
      report.tms_min_eigenvalue = lam;
      report.nu_at_minimum = nu;
    }
    report.scan_nu_min = std::min(report.scan_nu_min, nu);
    report.scan_nu_max = std::max(report.scan_nu_max, nu);
  }
  report.tolerance = linalg::kPsdRelativeSlack * std::max(1.0, 2.0 * report.scan_nu_max + 2.0);
  report.separable = report.tms_min_eigenvalue >= -report.tolerance;
  return report;
}

}  // namespace jmcert::channels
