#pragma once

// Single-mode measurement catalogue with closed-form s-ordered
// quasiprobability distributions W^(s)(a|x, z) and the maximal ordering
// s_bar at which every outcome's distribution is non-negative.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "jmcert/errors.hpp"
#include "jmcert/linalg.hpp"

namespace jmcert::measurements {

using linalg::RealMatrix;
using Vec2 = Eigen::Vector2d;

inline constexpr double kInvTwoPi = 0.5 * std::numbers::inv_pi;

struct Gaussian {
  RealMatrix sigma;  // 2x2 seed covariance, sigma + i Omega >= 0
};
struct Heterodyne {};
struct Homodyne {
  double theta = 0.0;  // measured quadrature x cos(theta) + p sin(theta)
};
struct IdealPD {};
struct RealisticPD {
  double p_dark = 0.0;
};
struct ThermalPD {
  double nu = 1.0;
};

using ModelVariant = std::variant<Gaussian, Heterodyne, Homodyne, IdealPD, RealisticPD, ThermalPD>;

/// Binary detectors have a "primary" element (no-click, or the thermal
/// projector T) and its complement I - primary.
enum class BinaryOutcome { Primary, Complement };

/// Outcome label: binary for detectors, a real quadrature value for homodyne,
/// a phase-space point for Gaussian/heterodyne.
using Outcome = std::variant<BinaryOutcome, double, Vec2>;

class MeasurementModel {
 public:
  explicit MeasurementModel(ModelVariant v, std::string label = {})
      : v_(std::move(v)), label_(std::move(label)) {
    validate();
    if (label_.empty()) label_ = std::string(kind_name());
  }

  const ModelVariant& variant() const { return v_; }
  const std::string& label() const { return label_; }

  std::string_view kind_name() const {
    return std::visit(
        [](const auto& m) -> std::string_view {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
          else if constexpr (std::is_same_v<T, Heterodyne>) return "heterodyne";
          else if constexpr (std::is_same_v<T, Homodyne>) return "homodyne";
          else if constexpr (std::is_same_v<T, IdealPD>) return "ideal_pd";
          else if constexpr (std::is_same_v<T, RealisticPD>) return "realistic_pd";
          else return "thermal_pd";
        },
        v_);
  }

  bool is_binary() const {
    return std::holds_alternative<IdealPD>(v_) || std::holds_alternative<RealisticPD>(v_) ||
           std::holds_alternative<ThermalPD>(v_);
  }

 private:
  void validate() {
    if (auto* g = std::get_if<Gaussian>(&v_)) {
      if (g->sigma.rows() != 2 || g->sigma.cols() != 2) {
        throw DimensionError("gaussian measurement: sigma must be 2x2");
      }
      if (!linalg::all_finite(g->sigma) || !linalg::is_symmetric(g->sigma)) {
        throw DomainError("gaussian measurement: sigma must be finite and symmetric");
      }
      g->sigma = (0.5 * (g->sigma + g->sigma.transpose())).eval();
      const auto report = linalg::min_eigenvalue(
          linalg::hermitian_combine(g->sigma, linalg::symplectic_form(1)));
      if (!report.is_psd) {
        throw DomainError("gaussian measurement: sigma violates the uncertainty relation "
                          "sigma + i Omega >= 0 (min eigenvalue " +
                          std::to_string(report.min_eigenvalue) + ")");
      }
    } else if (auto* r = std::get_if<RealisticPD>(&v_)) {
      if (!(r->p_dark >= 0.0 && r->p_dark <= 1.0)) {
        throw DomainError("realistic_pd: p_dark must lie in [0, 1]");
      }
    } else if (auto* t = std::get_if<ThermalPD>(&v_)) {
      if (!(t->nu >= 1.0) || !std::isfinite(t->nu)) {
        throw DomainError("thermal_pd: nu must be >= 1");
      }
    } else if (auto* h = std::get_if<Homodyne>(&v_)) {
      if (!std::isfinite(h->theta)) throw DomainError("homodyne: theta must be finite");
    }
  }

  ModelVariant v_;
  std::string label_;
};

inline MeasurementModel heterodyne() { return MeasurementModel(Heterodyne{}); }
inline MeasurementModel homodyne(double theta = 0.0) { return MeasurementModel(Homodyne{theta}); }
inline MeasurementModel ideal_pd() { return MeasurementModel(IdealPD{}); }
inline MeasurementModel realistic_pd(double p_dark) {
  return MeasurementModel(RealisticPD{p_dark});
}
inline MeasurementModel thermal_pd(double nu) { return MeasurementModel(ThermalPD{nu}); }
inline MeasurementModel gaussian(RealMatrix sigma) {
  return MeasurementModel(Gaussian{std::move(sigma)});
}

struct OrderingBound {
  double s_bar = -1.0;
  bool attained = true;
};

/// Largest s with every outcome's W^(s) non-negative.
///
/// Homodyne (s_bar = 0) and heterodyne (s_bar = 1) are attained as
/// non-negative measures; the density itself degenerates to a delta there.
inline OrderingBound max_nonneg_ordering(const MeasurementModel& m) {
  return std::visit(
      [](const auto& v) -> OrderingBound {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          Eigen::SelfAdjointEigenSolver<RealMatrix> es(v.sigma, Eigen::EigenvaluesOnly);
          return {es.eigenvalues()(0), true};
        } else if constexpr (std::is_same_v<T, Heterodyne>) {
          return {1.0, true};
        } else if constexpr (std::is_same_v<T, Homodyne>) {
          return {0.0, true};
        } else if constexpr (std::is_same_v<T, IdealPD>) {
          return {-1.0, true};
        } else if constexpr (std::is_same_v<T, RealisticPD>) {
          return {1.0 - 2.0 * (1.0 - v.p_dark), true};
        } else {
          return {v.nu - 2.0, true};
        }
      },
      m.variant());
}

namespace detail {

// exp(-|z|^2 / width) / (pi width): the s-PQD of a thermal-like element.
inline double radial_gaussian(double width, const Vec2& z) {
  return std::exp(-z.squaredNorm() / width) / (std::numbers::pi * width);
}

inline double binary_primary(const ModelVariant& v, double s, const Vec2& z) {
  if (auto* t = std::get_if<ThermalPD>(&v)) {
    if (!(s < t->nu)) {
      throw DivergenceError("thermal_pd: W^(s) diverges for s >= nu (s = " + std::to_string(s) +
                            ", nu = " + std::to_string(t->nu) + ")");
    }
    return radial_gaussian(t->nu - s, z);
  }
  if (!(s < 1.0)) {
    throw DivergenceError("photo-detection: W^(s) diverges for s >= 1 (s = " +
                          std::to_string(s) + ")");
  }
  const double weight = std::holds_alternative<RealisticPD>(v)
                            ? 1.0 - std::get<RealisticPD>(v).p_dark
                            : 1.0;
  return weight * radial_gaussian(1.0 - s, z);
}

inline double gaussian_density(const RealMatrix& sigma, double s, const Vec2& w) {
  RealMatrix cov = 0.5 * (sigma - s * RealMatrix::Identity(2, 2));
  const double det = cov.determinant();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(cov, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0.0)) {
    throw DivergenceError("gaussian measurement: W^(s) is not a density for s >= lambda_min(sigma)"
                          " (s = " + std::to_string(s) + ")");
  }
  const Vec2 u = cov.ldlt().solve(w);
  return std::exp(-0.5 * w.dot(u)) / (2.0 * std::numbers::pi * std::sqrt(det));
}

}  // namespace detail

/// W^(s)(outcome | m, z), per unit phase-space area.
inline double spqd(const MeasurementModel& m, const Outcome& outcome, double s, const Vec2& z) {
  if (!std::isfinite(s)) throw DomainError("spqd: s must be finite");
  const ModelVariant& v = m.variant();
  if (m.is_binary()) {
    const auto* b = std::get_if<BinaryOutcome>(&outcome);
    if (b == nullptr) throw DomainError("spqd: " + m.label() + " expects a binary outcome");
    const double primary = detail::binary_primary(v, s, z);
    return *b == BinaryOutcome::Primary ? primary : kInvTwoPi - primary;
  }
  if (auto* h = std::get_if<Homodyne>(&v)) {
    const auto* x = std::get_if<double>(&outcome);
    if (x == nullptr) throw DomainError("spqd: homodyne expects a real quadrature outcome");
    if (!(s < 0.0)) {
      throw DivergenceError("homodyne: W^(s) is a density only for s < 0 (s = " +
                            std::to_string(s) + ")");
    }
    const double var = -0.5 * s;
    const double q = z(0) * std::cos(h->theta) + z(1) * std::sin(h->theta) - *x;
    return kInvTwoPi * std::exp(-0.5 * q * q / var) / std::sqrt(2.0 * std::numbers::pi * var);
  }
  const auto* a = std::get_if<Vec2>(&outcome);
  if (a == nullptr) throw DomainError("spqd: " + m.label() + " expects a phase-space outcome");
  const RealMatrix sigma = std::holds_alternative<Gaussian>(v) ? std::get<Gaussian>(v).sigma
                                                                : RealMatrix::Identity(2, 2);
  return kInvTwoPi * detail::gaussian_density(sigma, s, z - *a);
}

/// Outcomes used when scanning a model on a grid: both binary outcomes, or
/// the outcome at the origin for continuous models.
inline std::vector<Outcome> representative_outcomes(const MeasurementModel& m) {
  if (m.is_binary()) return {BinaryOutcome::Primary, BinaryOutcome::Complement};
  if (std::holds_alternative<Homodyne>(m.variant())) return {0.0};
  return {Vec2(0.0, 0.0)};
}

inline std::string outcome_name(const MeasurementModel& m, const Outcome& o) {
  if (const auto* b = std::get_if<BinaryOutcome>(&o)) {
    const bool thermal = std::holds_alternative<ThermalPD>(m.variant());
    if (*b == BinaryOutcome::Primary) return thermal ? "T" : "no_click";
    return thermal ? "not_T" : "click";
  }
  char buf[64];
  if (const auto* x = std::get_if<double>(&o)) {
    std::snprintf(buf, sizeof buf, "x=%.9g", *x);
  } else {
    const Vec2& a = std::get<Vec2>(o);
    std::snprintf(buf, sizeof buf, "a=(%.9g;%.9g)", a(0), a(1));
  }
  return buf;
}

struct IncompatibilityDegree {
  double value = 0.0;
  // False when s_bar lies outside [0, 1]; the value is then only an upper bound.
  bool gaussian_regime = true;
};

inline IncompatibilityDegree degree_of_incompatibility(double s_bar) {
  return {(1.0 - s_bar) / 2.0, s_bar >= 0.0 && s_bar <= 1.0};
}

/// Largest attenuator transmissivity certified to break a set with ordering
/// s_bar, (s_bar + 2 eps + 1) / 2 clamped to [0, 1].
inline double loss_breaking_threshold(double s_bar, double epsilon) {
  if (!(epsilon >= 0.0)) throw DomainError("loss_breaking_threshold: epsilon must be >= 0");
  return std::clamp((s_bar + 2.0 * epsilon + 1.0) / 2.0, 0.0, 1.0);
}

/// Non-negative P function.
inline bool classicality(const MeasurementModel& m) {
  return max_nonneg_ordering(m).s_bar >= 1.0;
}

}  // namespace jmcert::measurements
