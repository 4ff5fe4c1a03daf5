#pragma once

// Run manifest: config hash, input digests, and per-stage output listings.
// Everything entering the manifest is content-addressed (SHA-256), and the
// run id is derived from the config hash plus input digests, so reruns with
// identical config and inputs serialize to byte-identical manifests.

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sociopose/common.hpp"

namespace sociopose {

inline std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, len) != 1 || EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericError("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for digest");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(content);
}

struct Manifest {
  std::string run_id;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::map<std::string, std::string> inputs;                              // path -> digest
  std::map<std::string, std::map<std::string, std::string>> stages;      // stage -> path -> digest

  void add_input(const std::filesystem::path& path) {
    inputs[path.generic_string()] = sha256_file(path);
  }

  void add_output(const std::string& stage, const std::filesystem::path& path) {
    stages[stage][path.generic_string()] = sha256_file(path);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["config_hash"] = config_hash;
    j["tool_version"] = tool_version;
    j["inputs"] = inputs;
    j["stages"] = stages;
    return j;
  }

  static Manifest from_json(const nlohmann::json& j) {
    Manifest m;
    m.run_id = j.value("run_id", "");
    m.config_hash = j.value("config_hash", "");
    m.tool_version = j.value("tool_version", kToolVersion);
    if (j.contains("inputs")) m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    if (j.contains("stages"))
      m.stages = j.at("stages").get<std::map<std::string, std::map<std::string, std::string>>>();
    return m;
  }

  void refresh_run_id() {
    std::string acc = config_hash;
    for (const auto& [path, digest] : inputs) acc += "\n" + path + ":" + digest;
    run_id = sha256_hex(acc).substr(0, 16);
  }

  void save(const std::filesystem::path& path) {
    refresh_run_id();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << to_json().dump(2) << "\n";
  }

  static Manifest load_or_empty(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return {};
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest " + path.string() + ": " + e.what());
    }
    return from_json(j);
  }
};

}  // namespace sociopose
