#pragma once

#include <array>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "signa/diffcore/error.hpp"

#ifndef SIGNA_VERSION
#define SIGNA_VERSION "0.0.0"
#endif

namespace signa {

inline constexpr const char* kToolkitVersion = SIGNA_VERSION;

/// Hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Category::data, "cannot hash '" + path.string() + "': file not readable");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(Error::Category::data, "SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Provenance record written next to every command's outputs. Timestamps live
/// only here, never inside the hashed artifacts.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)), started_(utc_timestamp()) {}

  void set_config(const std::optional<std::filesystem::path>& path, nlohmann::json effective) {
    if (path) config_file_ = nlohmann::json{{"path", path->string()}, {"sha256", sha256_file(*path)}};
    effective_config_ = std::move(effective);
  }
  void add_input(const std::string& role, const std::filesystem::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  void add_output(const std::filesystem::path& path) {
    outputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"command", command_},
                     {"toolkit_version", kToolkitVersion},
                     {"config_file", config_file_},
                     {"effective_config", effective_config_},
                     {"seed", seed_},
                     {"inputs", inputs_},
                     {"outputs", outputs_},
                     {"started_at", started_},
                     {"finished_at", utc_timestamp()}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    return j;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Error::Category::data, "cannot write manifest '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
  }

 private:
  std::string command_;
  std::string started_;
  nlohmann::json config_file_ = nullptr;
  nlohmann::json effective_config_ = nullptr;
  std::uint64_t seed_ = 0;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace signa
