#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/encoder.hpp"
#include "signa/trainer/config.hpp"
#include "signa/trainer/train.hpp"

namespace signa {

inline constexpr int kCheckpointFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint payloads assume a little-endian host");

namespace checkpoint_detail {

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) return {};
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw CheckpointError("corrupt payload: base64 length is not a multiple of 4");
  if (text.empty()) return {};
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw CheckpointError("corrupt payload: invalid base64");
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

/// Little-endian IEEE-754 binary64 payload.
template <std::floating_point Real>
std::string encode_values(const BasicTensor<Real>& t) {
  std::vector<std::uint8_t> bytes(t.size() * sizeof(double));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = static_cast<double>(t[i]);
    std::memcpy(bytes.data() + i * sizeof(double), &v, sizeof(double));
  }
  return base64_encode(bytes);
}

inline std::vector<double> decode_values(const std::string& text, std::size_t expected) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected * sizeof(double))
    throw CheckpointError("corrupt payload: expected " + std::to_string(expected) + " values, got " +
                          std::to_string(bytes.size()) + " bytes");
  std::vector<double> out(expected);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

}  // namespace checkpoint_detail

template <std::floating_point Real>
struct BasicCheckpoint {
  TrainConfig config;
  BasicEncoderState<Real> state;
  std::size_t input_dim = 0;
  double final_loss = 0.0;
  std::size_t epochs = 0;
};

using Checkpoint = BasicCheckpoint<double>;

template <std::floating_point Real>
nlohmann::json checkpoint_to_json(const BasicEncoderState<Real>& state, const TrainConfig& config, double final_loss,
                                  std::size_t epochs) {
  using nlohmann::json;
  const auto effective = apply_ablation(config);
  json params = json::array();
  for (const auto* p : state.parameters())
    params.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"data", checkpoint_detail::encode_values(p->value)}});
  json seeds = json::object();
  for (auto purpose : {RngPurpose::init, RngPurpose::dropout, RngPurpose::mask})
    seeds[std::string(to_string(purpose))] = config.seed;
  return json{{"format_version", kCheckpointFormatVersion},
              {"config", to_json(config)},
              {"effective", {{"dropout_p", effective.model.dropout_p},
                             {"mask_rate", effective.mask_rate},
                             {"nfm_rate", effective.nfm_rate},
                             {"encoder_bias", !config.model.layer_norm}}},
              {"input_dim", state.input_dim()},
              {"parameters", params},
              {"final_loss", final_loss},
              {"epochs", epochs},
              {"rng_seeds", seeds}};
}

template <std::floating_point Real>
void save_checkpoint(const BasicEncoderState<Real>& state, const TrainConfig& config, double final_loss,
                     std::size_t epochs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write '" + path.string() + "'");
  out << checkpoint_to_json(state, config, final_loss, epochs).dump(2) << '\n';
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

/// Parameters are stored as binary64; loading at another precision converts
/// them and reports it on `warn`.
template <std::floating_point Real = double>
BasicCheckpoint<Real> checkpoint_from_json(const nlohmann::json& j, std::ostream* warn = &std::cerr) {
  using nlohmann::json;
  try {
    if (!j.is_object() || !j.contains("format_version")) throw CheckpointError("corrupt payload: missing format_version");
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw CheckpointError("format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointFormatVersion) + ")");
    BasicCheckpoint<Real> ck;
    ck.config = config_from_json(j.at("config"));
    ck.input_dim = j.at("input_dim").get<std::size_t>();
    ck.final_loss = j.at("final_loss").get<double>();
    ck.epochs = j.at("epochs").get<std::size_t>();
    const auto effective = apply_ablation(ck.config);
    RngStream skeleton_rng(0, RngPurpose::init);
    ck.state = init_encoder<Real>(effective.model, ck.input_dim, skeleton_rng);

    std::map<std::string, const json*> stored;
    for (const auto& p : j.at("parameters")) stored[p.at("name").get<std::string>()] = &p;
    const auto params = ck.state.parameters();
    if (stored.size() != params.size())
      throw CheckpointError("checkpoint holds " + std::to_string(stored.size()) + " parameters, config implies " +
                            std::to_string(params.size()));
    for (auto* p : params) {
      const auto it = stored.find(p->name);
      if (it == stored.end()) throw CheckpointError("parameter '" + p->name + "' missing");
      const auto shape = it->second->at("shape").template get<Shape>();
      if (shape != p->value.shape())
        throw CheckpointError("parameter '" + p->name + "' has shape " + to_string(shape) + ", config implies " +
                              to_string(p->value.shape()));
      const auto values = checkpoint_detail::decode_values(it->second->at("data").template get<std::string>(), p->value.size());
      for (std::size_t i = 0; i < values.size(); ++i) p->value[i] = static_cast<Real>(values[i]);
    }
    if (precision_of<Real>() != ck.config.precision) {
      if (warn)
        *warn << "warning: checkpoint trained at " << to_string(ck.config.precision) << ", converting parameters to "
              << to_string(precision_of<Real>()) << '\n';
      ck.config.precision = precision_of<Real>();
    }
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt payload: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("config echo is invalid: ") + e.what());
  }
}

template <std::floating_point Real = double>
BasicCheckpoint<Real> load_checkpoint(const std::filesystem::path& path, std::ostream* warn = &std::cerr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt payload in '" + path.string() + "': " + e.what());
  }
  return checkpoint_from_json<Real>(j, warn);
}

/// 17 significant digits, enough to round-trip binary64.
inline std::string format_real(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

/// Header row `<prefix>0,<prefix>1,...` followed by one line per matrix row.
template <std::floating_point Real>
void write_matrix_csv(const BasicTensor<Real>& m, const std::filesystem::path& path,
                      const std::string& column_prefix = "c") {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Error::Category::data, "cannot write '" + path.string() + "'");
  for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << column_prefix << c;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_real(static_cast<double>(m(r, c)));
    }
    out << '\n';
  }
  if (!out) throw Error(Error::Category::data, "failed writing '" + path.string() + "'");
}

/// Inference embeddings H: header `h0,h1,...`, then one node per row.
template <std::floating_point Real>
void export_embeddings(const BasicEncoderState<Real>& state, const ModelSpec& spec, const Graph& g,
                       const std::filesystem::path& path) {
  if (g.num_features() != state.input_dim())
    throw Error(Error::Category::data, "graph has " + std::to_string(g.num_features()) +
                                           " feature columns, checkpoint expects " + std::to_string(state.input_dim()));
  write_matrix_csv(inference_embeddings(state, spec, g), path, "h");
}

}  // namespace signa
