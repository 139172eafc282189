#pragma once

// JSON ingestion and emission for channels, measurements and certificates.
// Parse failures carry the offending field path (e.g. "channel.tau") so the
// command line can point at the problem.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jmcert/certifier.hpp"
#include "jmcert/channels.hpp"
#include "jmcert/errors.hpp"
#include "jmcert/linalg.hpp"
#include "jmcert/measurements.hpp"

namespace jmcert::io {

using Json = nlohmann::ordered_json;
using linalg::RealMatrix;
using linalg::RealVector;

/// Malformed input: unreadable file, bad JSON, missing or ill-typed field.
class InputError : public Error {
 public:
  using Error::Error;
};

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    // nlohmann reports "parse error at line L, column C: ...".
    throw InputError(path + ": " + e.what());
  }
}

namespace detail {

inline const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw InputError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(path + "." + key + ": missing required field");
  return *it;
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw InputError(path + ": expected a number, got " + std::string(v.type_name()));
  return v.get<double>();
}

inline double number_or(const Json& obj, const std::string& key, double fallback,
                        const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, path + "." + key);
}

inline std::string text(const Json& v, const std::string& path) {
  if (!v.is_string()) throw InputError(path + ": expected a string, got " + std::string(v.type_name()));
  return v.get<std::string>();
}

inline RealMatrix matrix(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw InputError(path + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::Index cols = -1;
  RealMatrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = v[static_cast<std::size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array()) throw InputError(rp + ": expected an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw InputError(rp + ": ragged matrix row");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = number(row[static_cast<std::size_t>(j)], rp + "[" + std::to_string(j) + "]");
    }
  }
  return m;
}

inline RealVector vector(const Json& v, const std::string& path) {
  if (!v.is_array()) throw InputError(path + ": expected an array");
  RealVector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = number(v[i], path + "[" + std::to_string(i) + "]");
  }
  return out;
}

/// Re-raises library range errors with the field path attached.
template <typename F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Channel object: {"class", "tau", "nbar"}, {"tau", "epsilon"} for loss with
/// excess noise, or raw {"modes", "T", "N", "d"}.
inline channels::GaussianChannel parse_channel(const Json& j, const std::string& path = "channel",
                                               std::vector<std::string>* warnings = nullptr) {
  using namespace detail;
  if (!j.is_object()) throw InputError(path + ": expected an object");
  if (j.contains("epsilon")) {
    if (j.contains("class") && text(j["class"], path + ".class") != "C_loss") {
      throw InputError(path + ".epsilon: excess noise applies only to class C_loss");
    }
    const double tau = number(field(j, "tau", path), path + ".tau");
    const double eps = number(j["epsilon"], path + ".epsilon");
    return with_path(path, [&] { return channels::loss_with_excess(tau, eps); });
  }
  if (j.contains("class")) {
    const std::string name = text(j["class"], path + ".class");
    const auto tag = channels::parse_tag(name);
    if (!tag) throw InputError(path + ".class: unknown channel class '" + name + "'");
    channels::ChannelClass c;
    c.tag = *tag;
    const auto fixed = channels::fixed_tau(*tag);
    c.tau = fixed && !j.contains("tau") ? *fixed : number(field(j, "tau", path), path + ".tau");
    c.nbar = number_or(j, "nbar", 0.0, path);
    return with_path(path, [&] { return channels::from_class(c, warnings); });
  }
  if (j.contains("T")) {
    const RealMatrix t = matrix(j["T"], path + ".T");
    const int modes = j.contains("modes") ? static_cast<int>(number(j["modes"], path + ".modes"))
                                          : static_cast<int>(t.rows() / 2);
    const RealMatrix n = matrix(field(j, "N", path), path + ".N");
    const RealVector d = j.contains("d") ? vector(j["d"], path + ".d") : RealVector::Zero(t.rows());
    return with_path(path, [&] { return channels::make_channel(modes, t, n, d); });
  }
  throw InputError(path + ": expected \"class\", \"epsilon\" or raw \"T\"/\"N\" fields");
}

inline measurements::MeasurementModel parse_measurement(const Json& j, const std::string& path) {
  using namespace detail;
  using namespace measurements;
  const std::string model = text(field(j, "model", path), path + ".model");
  const std::string label = j.contains("label") ? text(j["label"], path + ".label") : std::string();
  return with_path(path, [&]() -> MeasurementModel {
    if (model == "gaussian") return MeasurementModel(Gaussian{matrix(field(j, "sigma", path), path + ".sigma")}, label);
    if (model == "heterodyne") return MeasurementModel(Heterodyne{}, label);
    if (model == "homodyne") return MeasurementModel(Homodyne{number_or(j, "theta", 0.0, path)}, label);
    if (model == "ideal_pd") return MeasurementModel(IdealPD{}, label);
    if (model == "realistic_pd") {
      return MeasurementModel(RealisticPD{number(field(j, "p_dark", path), path + ".p_dark")}, label);
    }
    if (model == "thermal_pd") return MeasurementModel(ThermalPD{number(field(j, "nu", path), path + ".nu")}, label);
    throw InputError(path + ".model: unknown model '" + model + "'");
  });
}

/// One set member: a catalogue object or {"product": [objects...]}.
inline certifier::ProductMeasurement parse_member(const Json& j, const std::string& path) {
  if (j.is_object() && j.contains("product")) {
    const Json& factors = j["product"];
    if (!factors.is_array() || factors.empty()) {
      throw InputError(path + ".product: expected a non-empty array");
    }
    certifier::ProductMeasurement pm;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      pm.factors.push_back(parse_measurement(factors[i], path + ".product[" + std::to_string(i) + "]"));
    }
    return pm;
  }
  return certifier::ProductMeasurement{{parse_measurement(j, path)}};
}

/// A JSON array of members, or an object holding one under "measurements".
inline certifier::MeasurementSet parse_measurement_set(const Json& j,
                                                       const std::string& path = "measurements") {
  const Json& list = j.is_object() && j.contains("measurements") ? j["measurements"] : j;
  if (!list.is_array()) throw InputError(path + ": expected an array of measurements");
  if (list.empty()) throw InputError(path + ": at least one measurement is required");
  std::vector<certifier::ProductMeasurement> members;
  for (std::size_t i = 0; i < list.size(); ++i) {
    members.push_back(parse_member(list[i], path + "[" + std::to_string(i) + "]"));
  }
  return detail::with_path(path, [&] { return certifier::MeasurementSet(std::move(members)); });
}

inline Json to_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const RealVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const certifier::OrderingCertificate& c) {
  Json mother;
  mother["T"] = to_json(c.mother.T);
  mother["noise"] = to_json(c.mother.noise);
  mother["d"] = to_json(c.mother.shift);
  if (c.mother.special_case) mother["special_case"] = *c.mother.special_case;
  Json out;
  out["broken"] = c.broken;
  out["s_min_channel"] = c.s_min_channel;
  out["s_bar_set"] = c.s_bar_set;
  out["mother"] = std::move(mother);
  out["post_processing"] = c.post_processing;
  out["note"] = c.note;
  return out;
}

inline Json to_json(const channels::EbReport& r, double tau, double epsilon) {
  Json out;
  out["tau"] = tau;
  out["epsilon"] = epsilon;
  out["sufficient_condition_psd"] = r.sufficient_condition_psd;
  out["tms_min_eigenvalue"] = r.tms_min_eigenvalue;
  out["nu_at_minimum"] = r.nu_at_minimum;
  out["scan_nu_range"] = Json::array({r.scan_nu_min, r.scan_nu_max});
  out["separable"] = r.separable;
  return out;
}

}  // namespace jmcert::io
