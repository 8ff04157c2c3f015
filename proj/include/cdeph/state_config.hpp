#pragma once

// State sources shared by the command-line tools: named families with
// k=v parameters, or JSON files holding a family or an explicit mixture of
// pure states.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cdeph/dephasing.hpp"
#include "cdeph/errors.hpp"
#include "cdeph/linalg.hpp"
#include "cdeph/states.hpp"

namespace cdeph {

using ParamMap = std::map<std::string, double>;

/// "a=0.5,b=0.9" -> {a: 0.5, b: 0.9}.  Empty input gives an empty map.
inline ParamMap parse_params(const std::string& text) {
  ParamMap out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) raise(ErrorCode::ConfigError, "expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size()) raise(ErrorCode::ConfigError, "parameter '" + key + "' is not a number");
    if (!out.emplace(key, v).second) raise(ErrorCode::ConfigError, "parameter '" + key + "' given twice");
  }
  return out;
}

/// A state to evolve: either a parametrised family, which has closed-form
/// z-axis dynamics, or an explicit initial density matrix.
struct StateSource {
  std::variant<FamilyParams, DensityMatrix> state;
  std::string description;

  bool is_family() const { return std::holds_alternative<FamilyParams>(state); }
  const FamilyParams& family() const { return std::get<FamilyParams>(state); }

  DensityMatrix initial() const {
    return is_family() ? build_family(family()) : std::get<DensityMatrix>(state);
  }

  int n_qubits() const { return is_family() ? family_qubits(family()) : std::get<DensityMatrix>(state).n_qubits(); }
};

namespace detail {

class ParamReader {
 public:
  ParamReader(std::string family, ParamMap params) : family_(std::move(family)), params_(std::move(params)) {}

  double required(const std::string& key) {
    const auto it = params_.find(key);
    if (it == params_.end()) raise(ErrorCode::ConfigError, family_ + " needs parameter '" + key + "'");
    used_.push_back(key);
    return it->second;
  }

  double optional(const std::string& key, double fallback) {
    const auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    used_.push_back(key);
    return it->second;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const double v = fallback ? optional(key, *fallback) : required(key);
    if (v != std::floor(v)) raise(ErrorCode::ConfigError, "parameter '" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  void finish() const {
    for (const auto& [k, v] : params_)
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        raise(ErrorCode::ConfigError, family_ + " does not take parameter '" + k + "'");
  }

 private:
  std::string family_;
  ParamMap params_;
  std::vector<std::string> used_;
};

inline BellKind bell_from_code(int code) {
  switch (code) {
    case 0: return BellKind::PsiPlus;
    case 1: return BellKind::PsiMinus;
    default: raise(ErrorCode::ConfigError, "bell must be 0 (Psi+) or 1 (Psi-)");
  }
}

/// Shortest text that reads back to the same double.
inline std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_params(const ParamMap& p) {
  std::string out;
  for (const auto& [k, v] : p) out += (out.empty() ? "" : ",") + k + '=' + shortest(v);
  return out;
}

}  // namespace detail

/// Families: rho_a(a), rho_ab(a, b, bell=0|1), rho_eta(eta), rho_alpha(alpha),
/// rho_alpha_beta(alpha, beta).  Pure states: ghz(n, label, sign=+1) with the
/// 1-based GHZ_i labelling, w (three qubits), bell(kind=0..3).
inline StateSource make_state_source(const std::string& name, const ParamMap& params) {
  detail::ParamReader r(name, params);
  StateSource src{DensityMatrix::maximally_mixed(1), name};
  if (name == "rho_a") {
    src.state = FamilyParams(RhoA{r.required("a")});
  } else if (name == "rho_ab") {
    const double a = r.required("a");
    const double b = r.required("b");
    src.state = FamilyParams(RhoAB{a, b, detail::bell_from_code(r.integer("bell", 0))});
  } else if (name == "rho_eta") {
    src.state = FamilyParams(RhoEta{r.required("eta")});
  } else if (name == "rho_alpha") {
    src.state = FamilyParams(RhoAlpha{r.required("alpha")});
  } else if (name == "rho_alpha_beta") {
    const double alpha = r.required("alpha");
    src.state = FamilyParams(RhoAlphaBeta{alpha, r.required("beta")});
  } else if (name == "ghz") {
    const int n = r.integer("n");
    const int label = r.integer("label", 1);
    const int sign = r.integer("sign", 1);
    if (sign != 1 && sign != -1) raise(ErrorCode::ConfigError, "sign must be +1 or -1");
    if (n < 2 || n > kMaxQubits) raise(ErrorCode::ConfigError, "ghz needs 2..6 qubits");
    auto spec = ghz_labelled(n, label);
    spec.plus = sign > 0;
    src.state = ghz_state(spec);
  } else if (name == "w") {
    src.state = w_state(3);
  } else if (name == "bell") {
    const int kind = r.integer("kind", 0);
    if (kind < 0 || kind > 3) raise(ErrorCode::ConfigError, "bell kind must be 0..3 (Phi+, Phi-, Psi+, Psi-)");
    src.state = bell_state(static_cast<BellKind>(kind));
  } else {
    raise(ErrorCode::ConfigError, "unknown family '" + name + "'");
  }
  r.finish();
  if (src.is_family()) {
    try {
      validate(src.family());
    } catch (const Error& e) {
      raise(ErrorCode::ConfigError, e.what());
    }
  }
  const auto desc = detail::format_params(params);
  src.description = desc.empty() ? name : name + "(" + desc + ")";
  return src;
}

namespace detail {

inline Complex json_complex(const nlohmann::json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  raise(ErrorCode::ConfigError, "amplitude must be a number or an [re, im] pair");
}

}  // namespace detail

/// {"family": name, "params": {...}} or
/// {"mixture": [{"weight": w, "ket": [amplitudes]}, ...]}; amplitudes are
/// numbers or [re, im] pairs, kets unit norm, weights summing to 1.
inline StateSource state_source_from_json(const nlohmann::json& j) {
  if (!j.is_object()) raise(ErrorCode::ConfigError, "state config must be a JSON object");
  if (j.contains("family") == j.contains("mixture"))
    raise(ErrorCode::ConfigError, "state config needs exactly one of 'family' or 'mixture'");
  if (j.contains("family")) {
    if (!j["family"].is_string()) raise(ErrorCode::ConfigError, "'family' must be a string");
    ParamMap params;
    if (j.contains("params")) {
      if (!j["params"].is_object()) raise(ErrorCode::ConfigError, "'params' must be an object");
      for (const auto& [k, v] : j["params"].items()) {
        if (!v.is_number()) raise(ErrorCode::ConfigError, "parameter '" + k + "' is not a number");
        params[k] = v.get<double>();
      }
    }
    return make_state_source(j["family"].get<std::string>(), params);
  }
  const auto& mix = j["mixture"];
  if (!mix.is_array() || mix.empty()) raise(ErrorCode::ConfigError, "'mixture' must be a non-empty array");
  ComplexMatrix rho;
  double total = 0.0;
  for (const auto& item : mix) {
    if (!item.is_object() || !item.contains("weight") || !item.contains("ket"))
      raise(ErrorCode::ConfigError, "mixture entries need 'weight' and 'ket'");
    if (!item["weight"].is_number()) raise(ErrorCode::ConfigError, "'weight' must be a number");
    const double w = item["weight"].get<double>();
    if (!(w >= 0.0)) raise(ErrorCode::ConfigError, "weights must be non-negative");
    const auto& ket = item["ket"];
    if (!ket.is_array()) raise(ErrorCode::ConfigError, "'ket' must be an array");
    ComplexVector v(static_cast<Eigen::Index>(ket.size()));
    for (std::size_t i = 0; i < ket.size(); ++i) v(static_cast<Eigen::Index>(i)) = detail::json_complex(ket[i]);
    const Eigen::Index d = v.size();
    if (d < 2 || (d & (d - 1)) != 0 || d > (Eigen::Index{1} << kMaxQubits))
      raise(ErrorCode::ConfigError, "ket length must be 2^N with 1 <= N <= 6");
    if (rho.size() == 0) rho = ComplexMatrix::Zero(d, d);
    if (rho.rows() != d) raise(ErrorCode::ConfigError, "kets in a mixture must have equal length");
    if (std::abs(v.norm() - 1.0) > 1e-9) raise(ErrorCode::ConfigError, "kets must be normalised");
    rho += w * v * v.adjoint();
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) raise(ErrorCode::ConfigError, "mixture weights must sum to 1");
  rho = 0.5 * (rho + rho.adjoint());
  try {
    return StateSource{DensityMatrix(std::move(rho)), "mixture"};
  } catch (const Error& e) {
    raise(ErrorCode::ConfigError, e.what());
  }
}

inline StateSource load_state_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::ConfigError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return state_source_from_json(j);
}

/// rho(t) under a collective channel.  Families on the z-axis with the
/// standard Cauchy spectrum use their closed forms; everything else goes
/// through the Theta-sum.
inline DensityMatrix evolve_source(const StateSource& src, double t, const DephasingChannel& channel) {
  const bool standard = channel.orientation().is_z_axis() && channel.spectrum().is_standard_cauchy();
  if (src.is_family() && standard) return evolved_family(src.family(), t);
  if (channel.orientation().is_z_axis()) return evolve_z_fastpath(src.initial(), t, channel.spectrum());
  return evolve(channel, src.initial(), t);
}

}  // namespace cdeph
