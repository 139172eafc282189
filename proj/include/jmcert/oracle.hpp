#pragma once

// The oracle battery: every Fock-space cross-check of the closed forms,
// grouped into named items with pinned tolerances. Shared by the
// `oracle-validate` command and the test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jmcert/channels.hpp"
#include "jmcert/errors.hpp"
#include "jmcert/fock.hpp"
#include "jmcert/measurements.hpp"

namespace jmcert::oracle {

using fock::FockOperator;
using linalg::Complex;
using linalg::RealMatrix;
using fock::OracleReport;
using fock::PhaseGrid;
using measurements::BinaryOutcome;
using measurements::MeasurementModel;
using measurements::Outcome;
using measurements::Vec2;

struct BatteryConfig {
  int cutoff = 40;
  std::optional<std::string> item;  // run only this item
};

struct ItemResult {
  std::string name;
  double tolerance = 0.0;
  bool passed = false;
  double max_error = 0.0;
  std::vector<OracleReport> reports;
  std::string failure;  // exception text when the item could not be evaluated
};

/// Probe points with |z| <= radius: the origin, axis points and diagonals.
inline std::vector<Vec2> probe_points(double radius) {
  std::vector<Vec2> pts = {Vec2(0.0, 0.0)};
  for (double r : {0.5 * radius, radius}) {
    const double d = r / std::numbers::sqrt2;
    pts.insert(pts.end(), {Vec2(r, 0.0), Vec2(0.0, -r), Vec2(d, d), Vec2(-d, 0.6 * d)});
  }
  return pts;
}

/// Catalogue models with a finite Fock representation, each paired with the
/// outcomes to check and the orderings at which W^(s) is a density.
struct CatalogueCase {
  MeasurementModel model;
  std::vector<Outcome> outcomes;
  double s_limit;  // W^(s) exists for s < s_limit
};

inline std::vector<CatalogueCase> fock_catalogue() {
  const std::vector<Outcome> binary = {BinaryOutcome::Primary, BinaryOutcome::Complement};
  RealMatrix sigma = RealMatrix::Zero(2, 2);
  sigma(0, 0) = 0.5;
  sigma(1, 1) = 2.0;
  std::vector<CatalogueCase> cases;
  cases.push_back({measurements::ideal_pd(), binary, 1.0});
  cases.push_back({measurements::realistic_pd(0.25), binary, 1.0});
  for (double nu : {1.0, 2.0, 3.0}) cases.push_back({measurements::thermal_pd(nu), binary, nu});
  cases.push_back({measurements::heterodyne(), {Vec2(0.5, -0.3)}, 1.0});
  cases.push_back({measurements::gaussian(sigma), {Vec2(0.0, 0.0), Vec2(-0.4, 0.8)}, 0.5});
  return cases;
}

inline const std::vector<double>& standard_orderings() {
  static const std::vector<double> s = {-1.0, -0.5, 0.0, 0.5};
  return s;
}

/// Max |spqd_numeric - spqd| over |z| <= 3 on a 0.5-spaced lattice.
inline std::vector<OracleReport> closed_form_reports(const CatalogueCase& c, int cutoff,
                                                     const std::vector<double>& orderings) {
  const PhaseGrid y_grid = PhaseGrid::characteristic_default();
  const PhaseGrid z_grid(3.0, 13);
  std::vector<OracleReport> out;
  for (const Outcome& o : c.outcomes) {
    const auto cs = fock::sample_characteristic(fock::povm_element(c.model, o, cutoff), y_grid);
    for (double s : orderings) {
      if (!(s < c.s_limit)) continue;
      const RealMatrix numeric = fock::spqd_numeric_grid(cs, s, z_grid);
      double worst = 0.0;
      for (int p = 0; p < z_grid.points(); ++p) {
        for (int q = 0; q < z_grid.points(); ++q) {
          const Vec2 z(z_grid.nodes()(p), z_grid.nodes()(q));
          if (z.norm() > 3.0 + 1e-12) continue;
          worst = std::max(worst, std::abs(numeric(p, q) - measurements::spqd(c.model, o, s, z)));
        }
      }
      char label[128];
      std::snprintf(label, sizeof label, "%s %s s=%g", c.model.label().c_str(),
                    measurements::outcome_name(c.model, o).c_str(), s);
      out.push_back(OracleReport::make(label, worst, 0.0));
    }
  }
  return out;
}

/// z grid reaching |alpha|^2 ~ D + 6 sqrt(D) + 10 at spacing ~0.1, enough for
/// coherent states to cover the central block.
inline PhaseGrid resolution_grid(int cutoff) {
  const double hw = std::sqrt(2.0 * (cutoff + 6.0 * std::sqrt(static_cast<double>(cutoff)) + 10.0));
  int points = static_cast<int>(std::ceil(2.0 * hw / 0.1)) + 1;
  if (points % 2 == 0) ++points;
  return {hw, points};
}

struct BatteryItem {
  std::string name;
  double tolerance;
  std::function<std::vector<OracleReport>(int cutoff)> run;
};

inline std::vector<BatteryItem> battery_items() {
  std::vector<BatteryItem> items;

  items.push_back({"displacement", 1e-8, [](int d) {
    std::vector<OracleReport> r;
    for (double mag : {0.5, 1.0, 2.0}) {
      for (double phase : {0.0, 1.1, -2.3}) {
        const Complex a = std::polar(mag, phase);
        r.push_back(fock::displacement_unitarity(a, d));
        r.push_back(OracleReport::make("<0|D|0> |alpha|=" + std::to_string(mag),
                                       fock::displacement_matrix(a, d)(0, 0).real(),
                                       std::exp(-0.5 * mag * mag)));
      }
    }
    return r;
  }});

  items.push_back({"trace-identity", 1e-10, [](int d) {
    const double tr = fock::delta_s(Vec2(0.0, 0.0), -0.5, d).finite().trace().real();
    return std::vector<OracleReport>{OracleReport::make("Tr Delta^(-0.5)(0)", tr, 1.0 / fock::kTwoPi)};
  }});

  items.push_back({"heterodyne-identity", 1e-8, [](int d) {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> mag(0.0, 2.0);
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    std::vector<OracleReport> r;
    for (int i = 0; i < 20; ++i) {
      const Complex a = std::polar(mag(rng), phase(rng));
      r.push_back(fock::heterodyne_identity(Vec2(std::numbers::sqrt2 * a.real(),
                                                 std::numbers::sqrt2 * a.imag()), d));
    }
    return r;
  }});

  items.push_back({"closed-form", 1e-6, [](int d) {
    std::vector<OracleReport> r;
    for (const auto& c : fock_catalogue()) {
      auto part = closed_form_reports(c, d, standard_orderings());
      r.insert(r.end(), part.begin(), part.end());
    }
    return r;
  }});

  items.push_back({"normalization", 1e-6, [](int d) {
    const PhaseGrid y_grid = PhaseGrid::characteristic_default();
    std::vector<OracleReport> r;
    const auto exact = fock::sample_characteristic(FockOperator::identity(d), y_grid);
    const auto truncated = fock::sample_characteristic(FockOperator::truncated_identity(d), y_grid);
    for (const Vec2& z : probe_points(3.0)) {
      for (double s : standard_orderings()) {
        r.push_back(OracleReport::make("identity s=" + std::to_string(s),
                                       fock::spqd_numeric_detailed(exact, s, z).value,
                                       1.0 / fock::kTwoPi));
      }
      // A truncated identity converges only where e^{s|y|^2/4} damps the tail.
      for (double s : {-1.0, -0.5}) {
        r.push_back(OracleReport::make("truncated identity s=" + std::to_string(s),
                                       fock::spqd_numeric_detailed(truncated, s, z).value,
                                       1.0 / fock::kTwoPi));
      }
    }
    return r;
  }});

  items.push_back({"born-pairing", 1e-6, [](int d) {
    const PhaseGrid z_grid(10.0, 201);
    std::vector<OracleReport> r;
    const std::vector<MeasurementModel> models = {measurements::ideal_pd(),
                                                  measurements::realistic_pd(0.25)};
    // Truncation noise in W^(-s)(z|rho) is amplified by e^{-s|y|^2/4}; the
    // states get half again the operator cutoff.
    const int state_cutoff = d + d / 2;
    for (double nbar : {0.0, 1.0}) {
      const FockOperator rho = fock::thermal_state(nbar, state_cutoff);
      for (const auto& m : models) {
        for (double s : {-0.5, 0.0}) {
          for (Outcome o : {Outcome(BinaryOutcome::Primary), Outcome(BinaryOutcome::Complement)}) {
            r.push_back(fock::born_pairing(rho, m, o, s, z_grid));
          }
        }
      }
      r.push_back(OracleReport::make(
          "thermal no-click anchor nbar=" + std::to_string(nbar),
          fock::povm_element(models[1], BinaryOutcome::Primary, state_cutoff)
              .expectation(rho.dense())
              .real(),
          0.75 / (nbar + 1.0)));
    }
    const FockOperator coherent =
        FockOperator::projector(fock::coherent_state(Complex(1.0, 0.0), state_cutoff));
    r.push_back(fock::born_pairing(coherent, models[0], BinaryOutcome::Primary, 0.0, z_grid));
    r.back().reference = std::exp(-1.0);
    r.back().abs_error = std::abs(r.back().numeric - r.back().reference);
    return r;
  }});

  items.push_back({"reconstruction", 1e-3, [](int d) {
    const PhaseGrid z_grid(8.0, 161);
    return std::vector<OracleReport>{
        fock::reconstruct(measurements::ideal_pd(), BinaryOutcome::Primary, 0.5, z_grid, d),
        fock::reconstruct(measurements::realistic_pd(0.25), BinaryOutcome::Complement, -0.5, z_grid, d)};
  }});

  items.push_back({"coherent-resolution", 1e-3, [](int d) {
    return std::vector<OracleReport>{fock::coherent_resolution(d, resolution_grid(d))};
  }});

  items.push_back({"mother-measurement", 1e-6, [](int d) {
    std::vector<OracleReport> r;
    for (double tau : {0.5, 0.7}) {
      for (const Vec2& z : probe_points(2.0)) r.push_back(fock::mother_heterodyne_check(tau, z, d));
    }
    r.push_back(fock::mother_heterodyne_check(1.0, Vec2(0.0, 0.0), d));
    return r;
  }});

  items.push_back({"positivity-transfer", 1e-8, [](int d) {
    std::vector<OracleReport> r;
    for (double tau : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      for (const Vec2& z : probe_points(2.0)) {
        const double lmin = fock::transferred_min_eigenvalue(tau, 2.0 * tau - 1.0, z, d);
        r.push_back(OracleReport::make("negativity tau=" + std::to_string(tau),
                                       std::max(0.0, -lmin), 0.0));
      }
    }
    return r;
  }});

  items.push_back({"convolution", 1e-6, [](int) {
    const PhaseGrid z_grid = PhaseGrid::characteristic_default();
    return std::vector<OracleReport>{
        fock::convolution_check(-0.5, 0.0, z_grid, measurements::ideal_pd(), BinaryOutcome::Primary),
        fock::convolution_check(0.0, 0.0, z_grid, measurements::ideal_pd(), BinaryOutcome::Primary),
        fock::convolution_check(-1.0, 0.0, z_grid, measurements::thermal_pd(2.0),
                                BinaryOutcome::Primary)};
  }});

  items.push_back({"eb-scan", 1e-10, [](int) {
    std::vector<OracleReport> r;
    const auto grid = channels::log_nu_grid();
    for (int k = 1; k <= 9; ++k) {
      const double tau = 0.1 * k;
      const auto rep = channels::eb_tms_scan(tau, tau, grid);
      r.push_back(OracleReport::make("tms negativity tau=eps=" + std::to_string(tau),
                                     std::max(0.0, -rep.tms_min_eigenvalue), 0.0));
    }
    return r;
  }});

  return items;
}

inline std::vector<std::string> item_names() {
  std::vector<std::string> names;
  for (const auto& it : battery_items()) names.push_back(it.name);
  return names;
}

inline ItemResult run_item(const BatteryItem& item, int cutoff) {
  ItemResult res;
  res.name = item.name;
  res.tolerance = item.tolerance;
  try {
    res.reports = item.run(cutoff);
    for (const auto& rep : res.reports) res.max_error = std::max(res.max_error, rep.abs_error);
    res.passed = std::isfinite(res.max_error) && res.max_error <= item.tolerance;
  } catch (const Error& e) {
    res.passed = false;
    res.failure = e.what();
  }
  return res;
}

inline std::vector<ItemResult> run_battery(const BatteryConfig& cfg) {
  fock::require_cutoff(cfg.cutoff, 2, "oracle battery");
  std::vector<ItemResult> results;
  bool matched = false;
  for (const auto& item : battery_items()) {
    if (cfg.item && *cfg.item != item.name) continue;
    matched = true;
    results.push_back(run_item(item, cfg.cutoff));
  }
  if (cfg.item && !matched) throw DomainError("unknown oracle item '" + *cfg.item + "'");
  return results;
}

}  // namespace jmcert::oracle
