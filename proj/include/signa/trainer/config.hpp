#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "signa/contrast.hpp"
#include "signa/diffcore/error.hpp"
#include "signa/encoder.hpp"

namespace signa {

enum class Precision { f32, f64 };

inline std::string_view to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

inline Precision parse_precision(std::string_view s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw ConfigError("unknown precision '" + std::string(s) + "' (expected f32 or f64)");
}

template <std::floating_point Real>
constexpr Precision precision_of() {
  return sizeof(Real) == sizeof(float) ? Precision::f32 : Precision::f64;
}

enum class AblationKind { none, no_dropout, nfm, no_stoch_mask, all_mask };

inline std::string_view to_string(AblationKind a) {
  switch (a) {
    case AblationKind::none: return "none";
    case AblationKind::no_dropout: return "no_dropout";
    case AblationKind::nfm: return "nfm";
    case AblationKind::no_stoch_mask: return "no_stoch_mask";
    case AblationKind::all_mask: return "all_mask";
  }
  return "none";
}

inline AblationKind parse_ablation(std::string_view s) {
  if (s == "none") return AblationKind::none;
  if (s == "no_dropout") return AblationKind::no_dropout;
  if (s == "nfm") return AblationKind::nfm;
  if (s == "no_stoch_mask") return AblationKind::no_stoch_mask;
  if (s == "all_mask") return AblationKind::all_mask;
  throw ConfigError("unknown ablation '" + std::string(s) + "'");
}

struct Ablation {
  AblationKind kind = AblationKind::none;
  /// Node-feature-masking rate, nfm only.
  double p_feat = 0.0;

  bool operator==(const Ablation&) const = default;
};

struct TrainConfig {
  ModelSpec model;
  EstimatorSpec estimator;
  double mask_rate = 0.3;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::size_t num_epochs = 200;
  std::uint64_t seed = 0;
  Ablation ablation;
  Precision precision = Precision::f64;
  std::size_t log_every = 0;

  bool operator==(const TrainConfig&) const = default;

  std::vector<std::string> validate() const {
    auto issues = model.validate();
    for (auto& i : estimator.validate()) issues.push_back(std::move(i));
    if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) issues.push_back("mask_rate must lie in [0, 1]");
    if (!(learning_rate > 0.0)) issues.push_back("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) issues.push_back("weight_decay must be >= 0");
    if (num_epochs < 1) issues.push_back("num_epochs must be >= 1");
    if (ablation.kind == AblationKind::nfm) {
      if (!(ablation.p_feat >= 0.0 && ablation.p_feat < 1.0)) issues.push_back("ablation.p_feat must lie in [0, 1)");
    } else if (ablation.p_feat != 0.0) {
      issues.push_back("ablation.p_feat is only meaningful with ablation.kind = nfm");
    }
    return issues;
  }
};

/// The model/estimator/masking actually trained after an ablation is applied.
struct EffectiveConfig {
  ModelSpec model;
  EstimatorSpec estimator;
  double mask_rate = 0.0;
  /// Input feature masking rate; 0 disables it.
  double nfm_rate = 0.0;
};

/// no_dropout: p = 0. nfm: p = 0 and input features are masked at p_feat.
/// no_stoch_mask: alpha = 0. all_mask: alpha = 1.
inline EffectiveConfig apply_ablation(const TrainConfig& config) {
  if (auto issues = config.validate(); !issues.empty()) throw ConfigError(issues);
  EffectiveConfig e{config.model, config.estimator, config.mask_rate, 0.0};
  switch (config.ablation.kind) {
    case AblationKind::none: break;
    case AblationKind::no_dropout: e.model.dropout_p = 0.0; break;
    case AblationKind::nfm:
      e.model.dropout_p = 0.0;
      e.nfm_rate = config.ablation.p_feat;
      break;
    case AblationKind::no_stoch_mask: e.mask_rate = 0.0; break;
    case AblationKind::all_mask: e.mask_rate = 1.0; break;
  }
  return e;
}

// ---------------------------------------------------------------------------
// JSON mapping. Field names mirror the structs; unknown keys are errors and
// every problem is collected before throwing.

namespace config_detail {

using nlohmann::json;

class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) {
      issues_.push_back(where.empty() ? "config must be a JSON object" : where + " must be a JSON object");
      return;
    }
    const std::set<std::string_view> ok(allowed);
    for (const auto& [key, _] : obj.items())
      if (!ok.count(key)) issues_.push_back("unknown key '" + qualify(where, key) + "'");
  }

  template <typename T>
  void get(const json& obj, const std::string& where, const char* key, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    const auto& v = obj.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
          throw std::invalid_argument("expected a non-negative integer");
        out = v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
        out = v.get<T>();
      } else {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
        out = v.get<T>();
      }
    } catch (const std::exception& e) {
      issues_.push_back("'" + qualify(where, key) + "': " + e.what());
    }
  }

  template <typename Parse, typename T>
  void get_enum(const json& obj, const std::string& where, const char* key, Parse parse, T& out) {
    std::string s;
    const std::size_t before = issues_.size();
    get(obj, where, key, s);
    if (issues_.size() != before || s.empty()) return;
    try {
      out = parse(s);
    } catch (const ConfigError&) {
      issues_.push_back("'" + qualify(where, key) + "': unknown value '" + s + "'");
    }
  }

 private:
  static std::string qualify(const std::string& where, std::string_view key) {
    return where.empty() ? std::string(key) : where + "." + std::string(key);
  }
  std::vector<std::string>& issues_;
};

}  // namespace config_detail

inline nlohmann::json to_json(const TrainConfig& c) {
  using nlohmann::json;
  json model = {{"num_layers", c.model.num_layers},
                {"base_encoder", std::string(to_string(c.model.base_encoder))},
                {"hidden_dim", c.model.hidden_dim},
                {"dropout_p", c.model.dropout_p},
                {"activation", activation_name(c.model.activation)},
                {"layer_norm", c.model.layer_norm},
                {"projector_dim", c.model.projector_dim},
                {"projector_activation", activation_name(c.model.projector_activation)}};
  json estimator = {{"kind", std::string(to_string(c.estimator.kind))},
                    {"temperature", c.estimator.temperature},
                    {"clamp_eps", c.estimator.clamp_eps},
                    {"negative_samples", c.estimator.negative_samples}};
  return json{{"model", model},
              {"estimator", estimator},
              {"mask_rate", c.mask_rate},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"num_epochs", c.num_epochs},
              {"seed", c.seed},
              {"ablation", {{"kind", std::string(to_string(c.ablation.kind))}, {"p_feat", c.ablation.p_feat}}},
              {"precision", std::string(to_string(c.precision))},
              {"log_every", c.log_every}};
}

/// Missing keys keep their defaults; unknown keys, type errors and failed
/// validation are all reported together in one ConfigError.
inline TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  std::vector<std::string> issues;
  config_detail::Reader r(issues);
  TrainConfig c = std::move(base);
  r.check_keys(j, "", {"model", "estimator", "mask_rate", "learning_rate", "weight_decay", "num_epochs", "seed",
                       "ablation", "precision", "log_every"});
  if (j.is_object()) {
    if (j.contains("model")) {
      const auto& m = j.at("model");
      r.check_keys(m, "model", {"num_layers", "base_encoder", "hidden_dim", "dropout_p", "activation", "layer_norm",
                                "projector_dim", "projector_activation"});
      r.get(m, "model", "num_layers", c.model.num_layers);
      r.get_enum(m, "model", "base_encoder", parse_base_encoder, c.model.base_encoder);
      r.get(m, "model", "hidden_dim", c.model.hidden_dim);
      r.get(m, "model", "dropout_p", c.model.dropout_p);
      r.get_enum(m, "model", "activation", parse_activation, c.model.activation);
      r.get(m, "model", "layer_norm", c.model.layer_norm);
      r.get(m, "model", "projector_dim", c.model.projector_dim);
      r.get_enum(m, "model", "projector_activation", parse_activation, c.model.projector_activation);
    }
    if (j.contains("estimator")) {
      const auto& e = j.at("estimator");
      r.check_keys(e, "estimator", {"kind", "temperature", "clamp_eps", "negative_samples"});
      r.get_enum(e, "estimator", "kind", parse_estimator, c.estimator.kind);
      r.get(e, "estimator", "temperature", c.estimator.temperature);
      r.get(e, "estimator", "clamp_eps", c.estimator.clamp_eps);
      r.get(e, "estimator", "negative_samples", c.estimator.negative_samples);
    }
    if (j.contains("ablation")) {
      const auto& a = j.at("ablation");
      r.check_keys(a, "ablation", {"kind", "p_feat"});
      r.get_enum(a, "ablation", "kind", parse_ablation, c.ablation.kind);
      r.get(a, "ablation", "p_feat", c.ablation.p_feat);
    }
    r.get(j, "", "mask_rate", c.mask_rate);
    r.get(j, "", "learning_rate", c.learning_rate);
    r.get(j, "", "weight_decay", c.weight_decay);
    r.get(j, "", "num_epochs", c.num_epochs);
    r.get(j, "", "seed", c.seed);
    r.get_enum(j, "", "precision", parse_precision, c.precision);
    r.get(j, "", "log_every", c.log_every);
  }
  // Fields that failed to parse keep their previous values, so validation
  // still runs and its findings join the same report.
  for (auto& i : c.validate()) issues.push_back(std::move(i));
  if (!issues.empty()) throw ConfigError(issues);
  return c;
}

inline TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace signa
