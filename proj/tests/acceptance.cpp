// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "jmcert/jmcert.hpp"
#include "support.hpp"

using namespace jmcert;
using certifier::MeasurementSet;
using channels::ChannelTag;
using fock::PhaseGrid;
using linalg::RealMatrix;
using measurements::BinaryOutcome;
using measurements::MeasurementModel;
using measurements::Vec2;
namespace ms = jmcert::measurements;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Minimum of W^(s) over the standard grid, all representative outcomes.
double standard_grid_minimum(const MeasurementModel& m, double s) {
  const PhaseGrid g = PhaseGrid::standard();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& o : ms::representative_outcomes(m)) {
    for (int p = 0; p < g.points(); ++p) {
      for (int q = 0; q < g.points(); ++q) {
        lo = std::min(lo, ms::spqd(m, o, s, Vec2(g.nodes()(p), g.nodes()(q))));
      }
    }
  }
  return lo;
}

double max_error(const std::vector<fock::OracleReport>& reports) {
  double worst = 0.0;
  for (const auto& r : reports) worst = std::max(worst, r.abs_error);
  return worst;
}

const oracle::BatteryItem& battery_item(const std::string& name) {
  static const auto items = oracle::battery_items();
  for (const auto& it : items) {
    if (it.name == name) return it;
  }
  throw DomainError("no battery item " + name);
}

// ---------------------------------------------------------------------------

Verdict ac1_table() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = certifier::reproduce_table1();
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::size_t sections = 0;
  std::optional<ChannelTag> last;
  double b1 = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    worst = std::max(worst, r.abs_diff);
    if (!last || *last != r.cls.tag) ++sections;
    last = r.cls.tag;
    if (r.cls.tag == ChannelTag::B1) b1 = r.s_min_eigen;
  }
  v.require(sections == 8, "expected 8 class sections, got " + std::to_string(sections));
  v.require(worst <= 1e-9, "max diff " + num(worst));
  v.require(std::abs(b1 - 0.6180339887) <= 1e-9, "B1 s_min " + num(b1));
  v.require(elapsed < 1.0, "runtime " + num(elapsed) + " s");
  v.detail = v.pass ? std::to_string(rows.size()) + " rows, max diff " + num(worst) + ", " +
                          num(elapsed) + " s"
                    : v.detail;
  return v;
}

Verdict ac2_pure_loss() {
  Verdict v;
  double worst = 0.0;
  const auto zero_set = MeasurementSet::of({ms::gaussian(RealMatrix::Identity(2, 2)), ms::homodyne(0.0),
                                            ms::homodyne(std::numbers::pi / 2)});
  RealMatrix squeezed = RealMatrix::Zero(2, 2);
  squeezed(0, 0) = 0.5;
  squeezed(1, 1) = 2.0;
  const auto positive_set = MeasurementSet::of({ms::gaussian(squeezed), ms::heterodyne()});
  for (int k = 1; k <= 9; ++k) {
    const double tau = 0.1 * k;
    const auto ch = channels::from_class({ChannelTag::C_loss, tau, 0.0});
    worst = std::max(worst, std::abs(certifier::s_min_isotropic(ch) - (2.0 * tau - 1.0)));
    const bool broken = certifier::certify(zero_set, ch).broken;
    v.require(broken == (tau <= 0.5 + 1e-12), "s_bar=0 set at tau=" + num(tau));
    if (tau <= 0.5 + 1e-12) {
      v.require(certifier::certify(positive_set, ch).broken, "s_bar>0 set at tau=" + num(tau));
    }
  }
  v.require(certifier::certify(zero_set, channels::from_class({ChannelTag::C_loss, 0.5, 0.0})).broken,
            "boundary tau=1/2");
  v.require(!certifier::certify(zero_set, channels::from_class({ChannelTag::C_loss, 0.5 + 1e-6, 0.0})).broken,
            "just above 1/2");
  v.require(worst <= 1e-12, "s_min deviation " + num(worst));
  if (v.pass) v.detail = "max |s_min - (2 tau - 1)| = " + num(worst);
  return v;
}

/// Oracle match for one catalogue model plus the sharpness of s_bar.
void photo_detection_checks(Verdict& v, const MeasurementModel& m, double s_limit, double& worst) {
  const oracle::CatalogueCase c{m, {BinaryOutcome::Primary, BinaryOutcome::Complement}, s_limit};
  const auto reports = oracle::closed_form_reports(c, 40, oracle::standard_orderings());
  worst = std::max(worst, max_error(reports));
  const double s_bar = ms::max_nonneg_ordering(m).s_bar;
  const double at = standard_grid_minimum(m, s_bar);
  v.require(at >= -1e-12, m.label() + " negative at s_bar (" + num(at) + ")");
  if (s_bar + 0.05 < s_limit) {
    const double above = standard_grid_minimum(m, s_bar + 0.05);
    v.require(above < -1e-6, m.label() + " still non-negative above s_bar (" + num(above) + ")");
  }
}

Verdict ac3_realistic_pd() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double pd : {0.25, 0.1}) {
    const auto m = ms::realistic_pd(pd);
    v.require(std::abs(ms::max_nonneg_ordering(m).s_bar - (1.0 - 2.0 * (1.0 - pd))) < 1e-15,
              "s_bar formula");
    photo_detection_checks(v, m, 1.0, worst);
  }
  const double elapsed = seconds_since(t0);
  v.require(worst <= 1e-6, "oracle mismatch " + num(worst));
  v.require(elapsed < 30.0, "runtime " + num(elapsed) + " s");
  if (v.pass) v.detail = "max |numeric - closed| = " + num(worst) + ", " + num(elapsed) + " s";
  return v;
}

Verdict ac4_thermal_pd() {
  Verdict v;
  double worst = 0.0;
  for (double nu : {1.0, 2.0, 3.0}) {
    const auto m = ms::thermal_pd(nu);
    v.require(ms::max_nonneg_ordering(m).s_bar == nu - 2.0, "s_bar formula at nu=" + num(nu));
    photo_detection_checks(v, m, nu, worst);
  }
  v.require(worst <= 1e-6, "oracle mismatch " + num(worst));
  int cases = 0;
  for (double nu : {1.5, 2.0, 3.0}) {
    for (double eps : {0.0, 0.2}) {
      const auto set = MeasurementSet::of({ms::thermal_pd(nu), ms::homodyne(0.0)});
      const double threshold = std::min((1.0 + 2.0 * eps) / 2.0, (nu - 1.0 + 2.0 * eps) / 2.0);
      const bool at = certifier::mixed_compatibility(set, channels::loss_with_excess(threshold, eps)).broken;
      const bool above = threshold + 1e-6 <= 1.0 &&
                         certifier::mixed_compatibility(set, channels::loss_with_excess(threshold + 1e-6, eps)).broken;
      v.require(at && !above, "threshold at nu=" + num(nu) + " eps=" + num(eps));
      ++cases;
    }
  }
  if (v.pass) v.detail = "max |numeric - closed| = " + num(worst) + ", " + std::to_string(cases) + " thresholds";
  return v;
}

Verdict battery_criterion(const std::string& item, int cutoff, double tol) {
  Verdict v;
  const auto r = oracle::run_item(battery_item(item), cutoff);
  v.require(r.failure.empty(), r.failure);
  v.require(r.max_error <= tol, "max error " + num(r.max_error) + " > " + num(tol));
  if (v.pass) v.detail = item + " at D=" + std::to_string(cutoff) + ": max error " + num(r.max_error);
  return v;
}

Verdict ac7_born_pairing() {
  Verdict v = battery_criterion("born-pairing", 40, 1e-6);
  // The analytic anchor at nbar = 1, P_D = 0.25.
  const auto rho = fock::thermal_state(1.0, 60);
  const auto r = fock::born_pairing(rho, ms::realistic_pd(0.25), BinaryOutcome::Primary, -0.5,
                                    PhaseGrid(10.0, 201));
  v.require(std::abs(r.numeric - 0.375) <= 1e-6, "anchor 0.375 vs " + num(r.numeric));
  return v;
}

Verdict ac8_reconstruction() {
  Verdict v;
  const auto r = fock::reconstruct(ms::ideal_pd(), BinaryOutcome::Primary, 0.5, PhaseGrid(8.0, 161), 30);
  v.require(r.abs_error <= 1e-3, "error " + num(r.abs_error));
  if (v.pass) v.detail = "central-block error " + num(r.abs_error);
  return v;
}

Verdict ac9_convolution() {
  Verdict v;
  const PhaseGrid g = PhaseGrid::characteristic_default();
  const double a = fock::convolution_check(-0.5, 0.0, g, ms::ideal_pd(), BinaryOutcome::Primary).abs_error;
  const double b = fock::convolution_check(-1.0, 0.0, g, ms::thermal_pd(2.0), BinaryOutcome::Primary).abs_error;
  v.require(a <= 1e-6 && b <= 1e-6, "convolution " + num(a) + ", " + num(b));
  RealMatrix sigma(2, 2);
  sigma << 1.5, 0.4, 0.4, 1.0;
  const std::vector<MeasurementModel> models = {ms::ideal_pd(), ms::realistic_pd(0.25), ms::thermal_pd(1.5),
                                                ms::thermal_pd(3.0), ms::heterodyne(), ms::gaussian(sigma),
                                                ms::homodyne(0.4)};
  const std::vector<double> ladder = {-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 0.95};
  for (const auto& m : models) {
    bool lost = false;
    for (double s : ladder) {
      double lo = 0.0;
      try {
        lo = standard_grid_minimum(m, s);
      } catch (const DivergenceError&) {
        break;
      }
      const bool nonneg = lo >= -1e-12;
      v.require(!(lost && nonneg), m.label() + " regains positivity at s=" + num(s));
      lost = lost || !nonneg;
    }
  }
  if (v.pass) v.detail = "deviations " + num(a) + ", " + num(b) + "; monotone for " + std::to_string(models.size()) + " models";
  return v;
}

Verdict ac10_entanglement_breaking() {
  Verdict v;
  const auto grid = channels::log_nu_grid(10.0, 50);
  double lowest = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 9; ++k) {
    const double tau = 0.1 * k;
    v.require(channels::eb_sufficient(channels::loss_with_excess(tau, tau)), "eb_sufficient tau=" + num(tau));
    lowest = std::min(lowest, channels::eb_tms_scan(tau, tau, grid).tms_min_eigenvalue);
  }
  v.require(lowest >= -1e-10, "tms minimum " + num(lowest));
  v.require(!channels::eb_sufficient(channels::identity_channel(1)), "identity reported EB");
  std::mt19937_64 rng(20240611);
  int eb = 0;
  for (int i = 0; i < 100; ++i) {
    const auto ch = fixtures::random_cp_channel(rng, 1 + i % 2, 4.0);
    if (!channels::eb_sufficient(ch)) continue;
    ++eb;
    v.require(certifier::s_min_isotropic(ch) <= -1.0 + 1e-9, "EB channel with s_min > -1");
  }
  if (v.pass) v.detail = "tms minimum " + num(lowest) + ", " + std::to_string(eb) + "/100 random channels EB";
  return v;
}

Verdict ac11_properties() {
  Verdict v;
  std::mt19937_64 rng(77);
  // Linear algebra: rigid shift and monotonicity under PSD additions.
  for (int i = 0; i < 50; ++i) {
    const RealMatrix a = fixtures::random_matrix(rng, 4, 4);
    const RealMatrix b = fixtures::random_matrix(rng, 4, 4);
    const auto h = linalg::hermitian_combine(0.5 * (a + a.transpose()), 0.5 * (b - b.transpose()));
    const double base = linalg::min_eigenvalue(h).min_eigenvalue;
    v.require(std::abs(linalg::min_eigenvalue(h.shifted(0.7)).min_eigenvalue - base - 0.7) < 1e-12, "shift");
    const RealMatrix c = fixtures::random_matrix(rng, 4, 4);
    const RealMatrix psd = c * c.transpose();
    const auto hp = linalg::hermitian_combine(0.5 * (a + a.transpose()) + 0.5 * (psd + psd.transpose()),
                                              0.5 * (b - b.transpose()));
    v.require(linalg::min_eigenvalue(hp).min_eigenvalue >= base - 1e-12, "monotonicity");
  }
  // Composition.
  for (int i = 0; i < 20; ++i) {
    const auto x = fixtures::random_cp_channel(rng, 1);
    const auto y = fixtures::random_cp_channel(rng, 1);
    const auto z = fixtures::random_cp_channel(rng, 1);
    const auto l = channels::compose(channels::compose(x, y), z);
    const auto r = channels::compose(x, channels::compose(y, z));
    const double dev = std::max({(l.T() - r.T()).cwiseAbs().maxCoeff(), (l.N() - r.N()).cwiseAbs().maxCoeff(),
                                 (l.d() - r.d()).cwiseAbs().maxCoeff()});
    v.require(dev <= 1e-12 * std::max(1.0, l.N().cwiseAbs().maxCoeff()), "associativity");
  }
  const auto ll = channels::compose(channels::from_class({ChannelTag::C_loss, 0.6, 0.0}),
                                    channels::from_class({ChannelTag::C_loss, 0.5, 0.0}));
  v.require(ll.N().isApprox(0.7 * RealMatrix::Identity(2, 2), 1e-14), "loss o loss");
  // Completeness: outcome sums and the exact identity.
  for (const auto& m : {ms::ideal_pd(), ms::realistic_pd(0.3), ms::thermal_pd(2.5)}) {
    const Vec2 z(0.3, -0.9);
    const double total = ms::spqd(m, BinaryOutcome::Primary, -0.3, z) + ms::spqd(m, BinaryOutcome::Complement, -0.3, z);
    v.require(std::abs(total - 0.5 / std::numbers::pi) < 1e-15, "binary completeness " + m.label());
  }
  const double id = fock::spqd_numeric(fock::FockOperator::truncated_identity(40), -0.5, Vec2(0.4, 0.1));
  v.require(std::abs(id - 0.5 / std::numbers::pi) < 1e-6, "truncated identity " + num(id));
  // Certificate soundness.
  const auto set = MeasurementSet::of({ms::realistic_pd(0.3), ms::thermal_pd(2.4), ms::homodyne(0.2)});
  const RealMatrix omega = linalg::symplectic_form(1);
  for (int i = 0; i < 100; ++i) {
    const auto cert = certifier::certify(set, fixtures::random_cp_channel(rng, 1, 2.5));
    if (!cert.broken) continue;
    const auto recheck = linalg::min_eigenvalue(
        linalg::hermitian_combine(cert.mother.noise, -(cert.mother.T * omega * cert.mother.T.transpose())));
    v.require(recheck.is_psd, "unsound certificate");
    v.require(cert.s_bar_set <= set.s_bar(), "ordering above set s_bar");
  }
  if (v.pass) v.detail = "shift, monotonicity, associativity, loss law, completeness, soundness";
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "table1-reproduction", ac1_table},
      {"AC2", "pure-loss-threshold", ac2_pure_loss},
      {"AC3", "realistic-photodetection", ac3_realistic_pd},
      {"AC4", "thermal-photodetection", ac4_thermal_pd},
      {"AC5", "heterodyne-identity", [] { return battery_criterion("heterodyne-identity", 30, 1e-8); }},
      {"AC6", "mother-measurement", [] { return battery_criterion("mother-measurement", 30, 1e-6); }},
      {"AC7", "born-pairing", ac7_born_pairing},
      {"AC8", "reconstruction", ac8_reconstruction},
      {"AC9", "convolution-monotonicity", ac9_convolution},
      {"AC10", "entanglement-breaking", ac10_entanglement_breaking},
      {"AC11", "property-suite", ac11_properties},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    std::printf("%-4s %-26s %s  %s\n", c.id, c.name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
