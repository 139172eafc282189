#pragma once

// Incompatibility-breaking certification for Gaussian channels.
//
// A channel (T, N, d) maps the ordering kernels Delta^(-S)(z) onto a Gaussian
// POVM whenever N + S - i T Omega T^T >= 0. A measurement set whose s-PQDs are
// non-negative at S then becomes jointly measurable: the transformed kernels
// are the mother measurement, (2 pi)^M W^(S)(a|x, z) the post-processing.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "jmcert/channels.hpp"
#include "jmcert/errors.hpp"
#include "jmcert/linalg.hpp"
#include "jmcert/measurements.hpp"

namespace jmcert::certifier {

using channels::ChannelClass;
using channels::ChannelTag;
using channels::GaussianChannel;
using linalg::PsdReport;
using linalg::RealMatrix;
using linalg::RealVector;
using measurements::MeasurementModel;

/// One member of a set: a tensor product of single-mode catalogue models.
struct ProductMeasurement {
  std::vector<MeasurementModel> factors;

  int modes() const { return static_cast<int>(factors.size()); }
  /// The isotropic ordering s I bounds each factor, so the product's s_bar
  /// is the smallest factor s_bar.
  double s_bar() const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& f : factors) s = std::min(s, measurements::max_nonneg_ordering(f).s_bar);
    return s;
  }
  std::string label() const {
    std::string out;
    for (const auto& f : factors) {
      if (!out.empty()) out += " x ";
      out += f.label();
    }
    return out;
  }
};

class MeasurementSet {
 public:
  explicit MeasurementSet(std::vector<ProductMeasurement> members) : members_(std::move(members)) {
    if (members_.empty()) throw DomainError("MeasurementSet: at least one member is required");
    modes_ = members_.front().modes();
    if (modes_ < 1) throw DimensionError("MeasurementSet: members must act on >= 1 mode");
    for (const auto& m : members_) {
      if (m.modes() != modes_) {
        throw DimensionError("MeasurementSet: members act on different mode counts");
      }
    }
  }

  /// Single-mode set.
  static MeasurementSet of(std::vector<MeasurementModel> models) {
    std::vector<ProductMeasurement> members;
    members.reserve(models.size());
    for (auto& m : models) members.push_back(ProductMeasurement{{std::move(m)}});
    return MeasurementSet(std::move(members));
  }

  const std::vector<ProductMeasurement>& members() const { return members_; }
  int modes() const { return modes_; }
  std::size_t size() const { return members_.size(); }

  double s_bar() const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& m : members_) s = std::min(s, m.s_bar());
    return s;
  }

 private:
  std::vector<ProductMeasurement> members_;
  int modes_ = 1;
};

/// Least s with N + s I - i T Omega T^T >= 0, i.e. lambda_max(i T Omega T^T - N).
inline double s_min_isotropic(const GaussianChannel& ch) {
  const RealMatrix omega = linalg::symplectic_form(ch.modes());
  return linalg::max_eigenvalue(
      linalg::hermitian_combine(-ch.N(), ch.T() * omega * ch.T().transpose()));
}

/// PSD report of N + S - i T Omega T^T for a symmetric ordering matrix S.
inline PsdReport breaking_test(const GaussianChannel& ch, const RealMatrix& s) {
  const Eigen::Index dim = 2 * ch.modes();
  if (s.rows() != dim || s.cols() != dim) {
    throw DimensionError("breaking_test: ordering matrix must be " + std::to_string(dim) + "x" +
                         std::to_string(dim));
  }
  if (!linalg::is_symmetric(s)) throw DomainError("breaking_test: ordering matrix not symmetric");
  const RealMatrix omega = linalg::symplectic_form(ch.modes());
  return linalg::min_eigenvalue(
      linalg::hermitian_combine(ch.N() + s, -(ch.T() * omega * ch.T().transpose())));
}

// ---------------------------------------------------------------------------
// Single-mode catalogue closed forms

struct ClosedForm {
  enum class Kind { Value, All, None };
  Kind kind = Kind::Value;
  double value = 0.0;  // meaningful for Kind::Value

  static ClosedForm all() { return {Kind::All, -1.0}; }
  static ClosedForm none() { return {Kind::None, 1.0}; }
  static ClosedForm of(double v) { return {Kind::Value, v}; }
};

inline ClosedForm table1_closed_form(const ChannelClass& c) {
  channels::validate(c);
  const double n = c.nbar;
  const double t = c.tau;
  switch (c.tag) {
    case ChannelTag::A1:
    case ChannelTag::A2: return ClosedForm::all();
    case ChannelTag::B1: return ClosedForm::of((std::sqrt(5.0) - 1.0) / 2.0);
    case ChannelTag::B2: return ClosedForm::of(1.0 - n);
    case ChannelTag::B2_Id: return ClosedForm::none();
    case ChannelTag::C_loss: return ClosedForm::of(t * (2.0 * n + 2.0) - (2.0 * n + 1.0));
    case ChannelTag::C_amp: return ClosedForm::of(2.0 * n * (1.0 - t) + 1.0);
    case ChannelTag::D: return ClosedForm::of(2.0 * t * n - (2.0 * n + 1.0));
  }
  return ClosedForm::none();
}

/// |s_min - closed form|; "all" means s_min <= -1, "none" means s_min = 1.
inline double closed_form_discrepancy(double s_min, const ClosedForm& cf) {
  switch (cf.kind) {
    case ClosedForm::Kind::All: return std::max(0.0, s_min + 1.0);
    case ClosedForm::Kind::None: return std::abs(s_min - 1.0);
    case ClosedForm::Kind::Value: return std::abs(s_min - cf.value);
  }
  return 0.0;
}

struct Table1Row {
  ChannelClass cls;
  double s_min_eigen = 0.0;
  ClosedForm closed;
  double abs_diff = 0.0;
};

struct Table1Grid {
  int tau_points = 21;
  std::vector<double> nbar_values = {0.0, 0.5, 1.0, 2.0};
  double amp_tau_max = 3.0;     // C_amp scans [1, amp_tau_max]
  double conj_tau_min = -2.0;   // D scans [conj_tau_min, 0]
  std::optional<ChannelTag> only;
};

/// Parameter points of one class on the grid, in deterministic order.
inline std::vector<ChannelClass> grid_points(ChannelTag tag, const Table1Grid& g) {
  std::vector<double> taus;
  const int k = g.tau_points;
  switch (tag) {
    case ChannelTag::A1:
    case ChannelTag::A2: taus = {0.0}; break;
    case ChannelTag::B1:
    case ChannelTag::B2:
    case ChannelTag::B2_Id: taus = {1.0}; break;
    case ChannelTag::C_loss:
      // Open interval (0, 1).
      for (int i = 1; i <= k; ++i) taus.push_back(static_cast<double>(i) / (k + 1));
      break;
    case ChannelTag::C_amp:
      for (int i = 0; i < k; ++i) {
        taus.push_back(k == 1 ? 1.0 : 1.0 + (g.amp_tau_max - 1.0) * i / (k - 1));
      }
      break;
    case ChannelTag::D:
      for (int i = 0; i < k; ++i) {
        taus.push_back(k == 1 ? 0.0 : g.conj_tau_min * (1.0 - static_cast<double>(i) / (k - 1)));
      }
      break;
  }
  // B1 and the identity do not depend on nbar.
  const bool nbar_free = tag == ChannelTag::B1 || tag == ChannelTag::B2_Id;
  const std::vector<double> nbars = nbar_free ? std::vector<double>{0.0} : g.nbar_values;
  std::vector<ChannelClass> out;
  for (double tau : taus) {
    for (double nbar : nbars) out.push_back({tag, tau, nbar});
  }
  return out;
}

inline std::vector<Table1Row> reproduce_table1(const Table1Grid& grid = {}) {
  std::vector<Table1Row> rows;
  for (ChannelTag tag : channels::kAllTags) {
    if (grid.only && *grid.only != tag) continue;
    for (const ChannelClass& c : grid_points(tag, grid)) {
      Table1Row row;
      row.cls = c;
      row.s_min_eigen = s_min_isotropic(channels::from_class(c));
      row.closed = table1_closed_form(c);
      row.abs_diff = closed_form_discrepancy(row.s_min_eigen, row.closed);
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Certificates

struct MotherMeasurement {
  RealMatrix T;
  RealMatrix noise;  // N + S
  RealVector shift;  // d
  std::optional<std::string> special_case;
};

struct OrderingCertificate {
  bool broken = false;
  RealMatrix s_used;  // ordering matrix S = s_bar_set I
  double s_min_channel = 0.0;
  double s_bar_set = 0.0;
  MotherMeasurement mother;
  std::string post_processing;
  std::string note;
  PsdReport test;  // PSD report of N + S - i T Omega T^T
};

inline constexpr const char* kSufficientOnlyNote =
    "sufficient condition only; incompatibility not necessarily preserved";

inline OrderingCertificate certify(const MeasurementSet& set, const GaussianChannel& ch) {
  if (set.modes() != ch.modes()) {
    throw DimensionError("certify: set acts on " + std::to_string(set.modes()) +
                         " modes, channel on " + std::to_string(ch.modes()));
  }
  const Eigen::Index dim = 2 * ch.modes();
  OrderingCertificate cert;
  cert.s_bar_set = set.s_bar();
  cert.s_min_channel = s_min_isotropic(ch);
  cert.s_used = cert.s_bar_set * RealMatrix::Identity(dim, dim);
  cert.test = breaking_test(ch, cert.s_used);
  cert.broken = cert.test.is_psd;

  cert.mother.T = ch.T();
  cert.mother.noise = ch.N() + cert.s_used;
  cert.mother.shift = ch.d();
  // With noise = T T^T and T invertible, substituting u = yT turns the
  // transformed kernel into a rescaled coherent-state projector.
  const RealMatrix ttt = ch.T() * ch.T().transpose();
  const bool invertible = std::abs(ch.T().determinant()) > 1e-12;
  if (cert.broken && invertible &&
      (cert.mother.noise - ttt).cwiseAbs().maxCoeff() <=
          linalg::kPsdRelativeSlack * std::max(1.0, linalg::inf_norm(ttt))) {
    cert.mother.special_case = "heterodyne_rescaled";
  }

  char buf[160];
  std::snprintf(buf, sizeof buf, "(2*pi)^%d * W^(s)(a|x,z) at s = %.17g", ch.modes(),
                cert.s_bar_set);
  cert.post_processing = buf;

  if (cert.broken) {
    cert.note = set.size() == 1
                    ? "certified jointly measurable; a single measurement is trivially "
                      "jointly measurable with itself"
                    : "certified jointly measurable";
  } else {
    cert.note = kSufficientOnlyNote;
    if (set.size() == 1) cert.note += "; a single measurement is trivially jointly measurable";
  }
  return cert;
}

/// Same engine as certify(); the named entry point for heterogeneous sets,
/// whose threshold is governed by the smallest member s_bar.
inline OrderingCertificate mixed_compatibility(const MeasurementSet& set,
                                               const GaussianChannel& ch) {
  return certify(set, ch);
}

}  // namespace jmcert::certifier
