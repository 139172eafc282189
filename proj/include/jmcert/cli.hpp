#pragma once

// The `jmcert` command line. Each subcommand is a run_* function over a plain
// config struct so it can be driven in-process; `run()` wires them to CLI11.
//
// Exit codes: 0 success, 1 a check failed, 2 malformed input or an ordering
// outside the convergence range, 3 not broken under --fail-if-not-broken.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jmcert/certifier.hpp"
#include "jmcert/channels.hpp"
#include "jmcert/errors.hpp"
#include "jmcert/fock.hpp"
#include "jmcert/io.hpp"
#include "jmcert/measurements.hpp"
#include "jmcert/oracle.hpp"

namespace jmcert::cli {

using io::Json;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kBadInput = 2, kNotBroken = 3 };

inline constexpr double kTable1Tolerance = 1e-9;

/// Fixed 9 significant digits for human-readable tables.
inline std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// 17 significant digits for CSV: exact round trip.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// A JSON field that is either inline or the path of a JSON file.
inline Json resolve_document(const Json& v) {
  return v.is_string() ? io::read_json_file(v.get<std::string>()) : v;
}

inline void write_text(const std::optional<std::string>& path, const std::string& body,
                       std::ostream& out) {
  if (!path) {
    out << body;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw io::InputError(*path + ": cannot open for writing");
  f << body;
}

/// Runs `body`, mapping input-side failures to exit code 2.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kBadInput;
}

// ---------------------------------------------------------------------------
// certify

struct CertifyConfig {
  Json channel;       // channel object or file path
  Json measurements;  // list, {"measurements": [...]}, or file path
  bool fail_if_not_broken = false;
  std::optional<std::string> out;
};

inline int run_certify(const CertifyConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.channel.is_null()) throw io::InputError("channel: required (--channel)");
    if (cfg.measurements.is_null()) throw io::InputError("measurements: required (--measurements)");
    std::vector<std::string> warnings;
    const auto ch = io::parse_channel(resolve_document(cfg.channel), "channel", &warnings);
    const auto set = io::parse_measurement_set(resolve_document(cfg.measurements));
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    const auto cert = certifier::certify(set, ch);
    write_text(cfg.out, io::to_json(cert).dump(2) + "\n", out);
    return cfg.fail_if_not_broken && !cert.broken ? kNotBroken : kOk;
  });
}

// ---------------------------------------------------------------------------
// smin

struct SminConfig {
  Json channel;
  std::string format = "text";
};

inline int run_smin(const SminConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.channel.is_null()) throw io::InputError("channel: required (--channel)");
    std::vector<std::string> warnings;
    const auto ch = io::parse_channel(resolve_document(cfg.channel), "channel", &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    const double s = certifier::s_min_isotropic(ch);
    if (cfg.format == "json") {
      Json j;
      j["s_min"] = s;
      j["breaks_all"] = s <= -1.0;
      out << j.dump(2) << "\n";
    } else {
      out << "s_min = " << fmt9(s) << "\n";
    }
    return kOk;
  });
}

// ---------------------------------------------------------------------------
// table1

struct Table1Config {
  std::optional<std::string> cls;
  std::optional<std::string> csv;
  std::string format = "text";  // text | csv | json
};

inline std::string closed_text(const certifier::ClosedForm& cf, bool csv) {
  switch (cf.kind) {
    case certifier::ClosedForm::Kind::All: return "all";
    case certifier::ClosedForm::Kind::None: return "none";
    case certifier::ClosedForm::Kind::Value: return csv ? fmt17(cf.value) : fmt9(cf.value);
  }
  return "";
}

inline std::string table1_csv(const std::vector<certifier::Table1Row>& rows) {
  std::string s = "class,tau,nbar,s_min_eigen,s_min_closed,abs_diff\n";
  for (const auto& r : rows) {
    s += std::string(channels::tag_name(r.cls.tag)) + "," + fmt17(r.cls.tau) + "," +
         fmt17(r.cls.nbar) + "," + fmt17(r.s_min_eigen) + "," + closed_text(r.closed, true) + "," +
         fmt17(r.abs_diff) + "\n";
  }
  return s;
}

inline std::string table1_text(const std::vector<certifier::Table1Row>& rows) {
  std::string s;
  char line[160];
  std::optional<channels::ChannelTag> current;
  for (const auto& r : rows) {
    if (!current || *current != r.cls.tag) {
      current = r.cls.tag;
      s += "\n[" + std::string(channels::tag_name(r.cls.tag)) + "]\n";
      std::snprintf(line, sizeof line, "%16s %16s %16s %16s %16s\n", "tau", "nbar", "s_min_eigen",
                    "s_min_closed", "abs_diff");
      s += line;
    }
    std::snprintf(line, sizeof line, "%16s %16s %16s %16s %16s\n", fmt9(r.cls.tau).c_str(),
                  fmt9(r.cls.nbar).c_str(), fmt9(r.s_min_eigen).c_str(),
                  closed_text(r.closed, false).c_str(), fmt9(r.abs_diff).c_str());
    s += line;
  }
  return s;
}

inline int run_table1(const Table1Config& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    certifier::Table1Grid grid;
    if (cfg.cls) {
      grid.only = channels::parse_tag(*cfg.cls);
      if (!grid.only) throw io::InputError("--class: unknown channel class '" + *cfg.cls + "'");
    }
    const auto rows = certifier::reproduce_table1(grid);
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.abs_diff);
    const bool pass = worst <= kTable1Tolerance;

    if (cfg.csv) write_text(cfg.csv, table1_csv(rows), out);
    if (cfg.format == "csv") {
      out << table1_csv(rows);
    } else if (cfg.format == "json") {
      Json arr = Json::array();
      for (const auto& r : rows) {
        Json j;
        j["class"] = std::string(channels::tag_name(r.cls.tag));
        j["tau"] = r.cls.tau;
        j["nbar"] = r.cls.nbar;
        j["s_min_eigen"] = r.s_min_eigen;
        if (r.closed.kind == certifier::ClosedForm::Kind::Value) {
          j["s_min_closed"] = r.closed.value;
        } else {
          j["s_min_closed"] = closed_text(r.closed, true);
        }
        j["abs_diff"] = r.abs_diff;
        arr.push_back(std::move(j));
      }
      Json doc;
      doc["rows"] = std::move(arr);
      doc["max_abs_diff"] = worst;
      doc["pass"] = pass;
      out << doc.dump(2) << "\n";
    } else {
      out << table1_text(rows);
      out << "\nrows: " << rows.size() << "  max abs_diff: " << fmt9(worst)
          << "  tolerance: 1e-09  " << (pass ? "PASS" : "FAIL") << "\n";
    }
    return pass ? kOk : kCheckFailed;
  });
}

// ---------------------------------------------------------------------------
// pqd-grid

struct PqdGridConfig {
  Json model;  // measurement object or file path
  std::optional<double> s;
  double half_width = 5.0;
  int points = 101;
  std::optional<std::string> out;
};

inline int run_pqd_grid(const PqdGridConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.model.is_null()) throw io::InputError("model: required (--model)");
    if (!cfg.s) throw io::InputError("s: required (--s)");
    const auto m = io::parse_measurement(resolve_document(cfg.model), "model");
    const fock::PhaseGrid grid(cfg.half_width, cfg.points);
    const auto outcomes = measurements::representative_outcomes(m);
    const double s = *cfg.s;
    // Refuse divergent orderings before writing anything.
    for (const auto& o : outcomes) measurements::spqd(m, o, s, measurements::Vec2(0.0, 0.0));
    std::string body = "z1,z2,outcome,value\n";
    const auto& z = grid.nodes();
    for (int p = 0; p < grid.points(); ++p) {
      for (int q = 0; q < grid.points(); ++q) {
        for (const auto& o : outcomes) {
          const double v = measurements::spqd(m, o, s, measurements::Vec2(z(p), z(q)));
          body += fmt17(z(p)) + "," + fmt17(z(q)) + "," + measurements::outcome_name(m, o) + "," +
                  fmt17(v) + "\n";
        }
      }
    }
    write_text(cfg.out, body, out);
    return kOk;
  });
}

// ---------------------------------------------------------------------------
// oracle-validate

struct OracleValidateConfig {
  int cutoff = 40;
  std::optional<std::string> item;
  std::string format = "text";
};

inline int run_oracle_validate(const OracleValidateConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    oracle::BatteryConfig bc;
    bc.cutoff = cfg.cutoff;
    bc.item = cfg.item;
    const auto results = oracle::run_battery(bc);
    bool all = true;
    if (cfg.format == "json") {
      Json arr = Json::array();
      for (const auto& r : results) {
        Json j;
        j["item"] = r.name;
        j["passed"] = r.passed;
        j["max_error"] = r.max_error;
        j["tolerance"] = r.tolerance;
        if (!r.failure.empty()) j["failure"] = r.failure;
        arr.push_back(std::move(j));
        all = all && r.passed;
      }
      Json doc;
      doc["cutoff"] = cfg.cutoff;
      doc["items"] = std::move(arr);
      doc["all_passed"] = all;
      out << doc.dump(2) << "\n";
    } else {
      char line[256];
      for (const auto& r : results) {
        std::snprintf(line, sizeof line, "%s  %-20s max_error=%-12s tolerance=%s", r.passed ? "PASS" : "FAIL",
                      r.name.c_str(), fmt9(r.max_error).c_str(), fmt9(r.tolerance).c_str());
        out << line;
        if (!r.failure.empty()) out << "  (" << r.failure << ")";
        out << "\n";
        all = all && r.passed;
      }
      out << (all ? "all items passed" : "some items failed") << " at cutoff " << cfg.cutoff << "\n";
    }
    return all ? kOk : kCheckFailed;
  });
}

// ---------------------------------------------------------------------------
// eb-check

struct EbCheckConfig {
  std::optional<double> tau;
  double epsilon = 0.0;
  double nu_max = 10.0;
};

inline int run_eb_check(const EbCheckConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!cfg.tau) throw io::InputError("tau: required (--tau)");
    const auto grid = channels::log_nu_grid(cfg.nu_max);
    const auto rep = channels::eb_tms_scan(*cfg.tau, cfg.epsilon, grid);
    out << io::to_json(rep, *cfg.tau, cfg.epsilon).dump(2) << "\n";
    return kOk;
  });
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace detail {

/// Loads --config. File references inside it resolve against the config's
/// own directory.
inline Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j = io::read_json_file(path);
  if (!j.is_object()) throw io::InputError(path + ": config must be a JSON object");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (const char* key : {"channel", "measurements", "model"}) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) continue;
    const std::filesystem::path ref(it->get<std::string>());
    if (ref.is_relative()) *it = (base / ref).string();
  }
  return j;
}

template <typename T>
void fill(const Json& cfg, const char* key, const CLI::Option* flag, T& target) {
  if (flag->count() > 0 || !cfg.contains(key)) return;
  try {
    target = cfg[key].get<T>();
  } catch (const Json::exception&) {
    throw io::InputError(std::string("config.") + key + ": wrong type");
  }
}

template <typename T>
void fill(const Json& cfg, const char* key, const CLI::Option* flag, std::optional<T>& target) {
  T tmp{};
  if (flag->count() > 0 || !cfg.contains(key)) return;
  fill(cfg, key, flag, tmp);
  target = tmp;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"jmcert: joint-measurability certification for Gaussian channels"};
  app.require_subcommand(1);

  std::string config_path;
  std::string channel_path;
  std::string measurements_path;
  std::string model_path;

  CertifyConfig certify_cfg;
  auto* certify = app.add_subcommand("certify", "certify incompatibility breaking for a measurement set");
  auto* cert_config = certify->add_option("--config", config_path, "JSON config; flags override");
  auto* cert_channel = certify->add_option("--channel", channel_path, "channel JSON file");
  auto* cert_meas = certify->add_option("--measurements", measurements_path, "measurement list JSON file");
  auto* cert_fail = certify->add_flag("--fail-if-not-broken", certify_cfg.fail_if_not_broken,
                                      "exit 3 when the verdict is not broken");
  std::string cert_out;
  auto* cert_out_opt = certify->add_option("--out", cert_out, "write the certificate here");
  (void)cert_config;

  SminConfig smin_cfg;
  auto* smin = app.add_subcommand("smin", "minimal isotropic ordering broken by a channel");
  smin->add_option("--config", config_path, "JSON config; flags override");
  auto* smin_channel = smin->add_option("--channel", channel_path, "channel JSON file");
  auto* smin_format = smin->add_option("--format", smin_cfg.format, "text or json")
                          ->check(CLI::IsMember({"text", "json"}));

  Table1Config t1_cfg;
  std::string t1_class;
  std::string t1_csv;
  auto* table1 = app.add_subcommand("table1", "reproduce the single-mode channel table");
  table1->add_option("--config", config_path, "JSON config; flags override");
  auto* t1_class_opt = table1->add_option("--class", t1_class, "restrict to one channel class");
  auto* t1_csv_opt = table1->add_option("--csv", t1_csv, "also write CSV to this path");
  auto* t1_format = table1->add_option("--format", t1_cfg.format, "text, csv or json")
                        ->check(CLI::IsMember({"text", "csv", "json"}));

  PqdGridConfig pqd_cfg;
  double pqd_s = 0.0;
  std::string pqd_out;
  auto* pqd = app.add_subcommand("pqd-grid", "sample closed-form s-PQDs on a phase-space grid");
  pqd->add_option("--config", config_path, "JSON config; flags override");
  auto* pqd_model = pqd->add_option("--model", model_path, "measurement JSON file");
  auto* pqd_s_opt = pqd->add_option("--s", pqd_s, "ordering parameter");
  auto* pqd_hw = pqd->add_option("--half-width", pqd_cfg.half_width, "grid half-width");
  auto* pqd_points = pqd->add_option("--points", pqd_cfg.points, "odd number of points per axis");
  auto* pqd_out_opt = pqd->add_option("--out", pqd_out, "CSV output path");

  OracleValidateConfig or_cfg;
  std::string or_item;
  auto* orc = app.add_subcommand("oracle-validate", "run the Fock-space oracle battery");
  orc->add_option("--config", config_path, "JSON config; flags override");
  auto* or_cutoff = orc->add_option("--cutoff", or_cfg.cutoff, "Fock cutoff D");
  auto* or_item_opt = orc->add_option("--item", or_item, "run a single item");
  auto* or_format = orc->add_option("--format", or_cfg.format, "text or json")
                        ->check(CLI::IsMember({"text", "json"}));

  EbCheckConfig eb_cfg;
  double eb_tau = 0.0;
  auto* eb = app.add_subcommand("eb-check", "entanglement-breaking checks for lossy channels");
  eb->add_option("--config", config_path, "JSON config; flags override");
  auto* eb_tau_opt = eb->add_option("--tau", eb_tau, "transmissivity in (0, 1]");
  auto* eb_eps = eb->add_option("--epsilon", eb_cfg.epsilon, "excess noise >= 0");
  auto* eb_nu = eb->add_option("--nu-max", eb_cfg.nu_max, "upper end of the nu scan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kBadInput;
  }

  int code = kBadInput;
  const int parsed = guarded(err, [&] {
    const Json cfg = detail::load_config(config_path);
    if (certify->parsed()) {
      certify_cfg.channel = cert_channel->count() ? Json(channel_path) : cfg.value("channel", Json());
      certify_cfg.measurements =
          cert_meas->count() ? Json(measurements_path) : cfg.value("measurements", Json());
      detail::fill(cfg, "fail_if_not_broken", cert_fail, certify_cfg.fail_if_not_broken);
      if (cert_out_opt->count()) certify_cfg.out = cert_out;
      else detail::fill(cfg, "out", cert_out_opt, certify_cfg.out);
      code = run_certify(certify_cfg, out, err);
    } else if (smin->parsed()) {
      smin_cfg.channel = smin_channel->count() ? Json(channel_path) : cfg.value("channel", Json());
      detail::fill(cfg, "format", smin_format, smin_cfg.format);
      code = run_smin(smin_cfg, out, err);
    } else if (table1->parsed()) {
      if (t1_class_opt->count()) t1_cfg.cls = t1_class;
      else detail::fill(cfg, "class", t1_class_opt, t1_cfg.cls);
      if (t1_csv_opt->count()) t1_cfg.csv = t1_csv;
      else detail::fill(cfg, "csv", t1_csv_opt, t1_cfg.csv);
      detail::fill(cfg, "format", t1_format, t1_cfg.format);
      code = run_table1(t1_cfg, out, err);
    } else if (pqd->parsed()) {
      pqd_cfg.model = pqd_model->count() ? Json(model_path) : cfg.value("model", Json());
      if (pqd_s_opt->count()) pqd_cfg.s = pqd_s;
      else detail::fill(cfg, "s", pqd_s_opt, pqd_cfg.s);
      detail::fill(cfg, "half_width", pqd_hw, pqd_cfg.half_width);
      detail::fill(cfg, "points", pqd_points, pqd_cfg.points);
      if (pqd_out_opt->count()) pqd_cfg.out = pqd_out;
      else detail::fill(cfg, "out", pqd_out_opt, pqd_cfg.out);
      code = run_pqd_grid(pqd_cfg, out, err);
    } else if (orc->parsed()) {
      detail::fill(cfg, "cutoff", or_cutoff, or_cfg.cutoff);
      if (or_item_opt->count()) or_cfg.item = or_item;
      else detail::fill(cfg, "item", or_item_opt, or_cfg.item);
      detail::fill(cfg, "format", or_format, or_cfg.format);
      code = run_oracle_validate(or_cfg, out, err);
    } else if (eb->parsed()) {
      if (eb_tau_opt->count()) eb_cfg.tau = eb_tau;
      else detail::fill(cfg, "tau", eb_tau_opt, eb_cfg.tau);
      detail::fill(cfg, "epsilon", eb_eps, eb_cfg.epsilon);
      detail::fill(cfg, "nu_max", eb_nu, eb_cfg.nu_max);
      code = run_eb_check(eb_cfg, out, err);
    }
    return kOk;
  });
  return parsed == kOk ? code : parsed;
}

}  // namespace jmcert::cli
