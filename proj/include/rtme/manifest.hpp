#pragma once

// Run manifests embedded in every JSON the CLI writes. Two runs with equal
// manifests (timestamps aside) produce equal numbers.

#include <chrono>
#include <ctime>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "rtme/errors.hpp"
#include "rtme/io.hpp"

namespace rtme {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class RunManifest {
 public:
  RunManifest(std::string command, json parameters, std::uint64_t seed)
      : command_(std::move(command)),
        parameters_(std::move(parameters)),
        seed_(seed),
        started_at_(utc_timestamp()) {}

  // Digest of an input file's bytes, keyed by path.
  void add_input(const std::string& path) {
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(read_text_file(path))}});
  }

  json finish() const {
    return {{"command", command_},
            {"parameters", parameters_},
            {"seed", seed_},
            {"tool_version", kToolVersion},
            {"input_digest", inputs_},
            {"started_at", started_at_},
            {"finished_at", utc_timestamp()}};
  }

 private:
  std::string command_;
  json parameters_;
  std::uint64_t seed_;
  std::string started_at_;
  json inputs_ = json::array();
};

}  // namespace rtme
