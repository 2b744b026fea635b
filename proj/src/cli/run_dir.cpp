#include <openssl/evp.h>

#include <cstdio>
#include <ctime>
#include <cstdlib>
#include <stdexcept>

#include "timrl/cli/cli.hpp"

namespace timrl::cli {

std::string sha1_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string git_blob_hash(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  return sha1_hex(blob);
}

std::string config_hash(const trainer::TrainConfig& config) { return git_blob_hash(trainer::serialize(config)); }

std::filesystem::path output_root() {
  const char* root = std::getenv(kOutputRootEnv);
  return (root != nullptr && *root != '\0') ? std::filesystem::path(root) : std::filesystem::path("runs");
}

std::string iso_timestamp(std::chrono::system_clock::time_point when) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& hash,
                                   std::chrono::system_clock::time_point when) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  const std::string base = std::string(stamp) + "-" + hash.substr(0, 12);
  std::filesystem::create_directories(root);
  for (int n = 0;; ++n) {
    const auto dir = root / (n == 0 ? base : base + "-" + std::to_string(n));
    if (std::filesystem::create_directory(dir)) return dir;
  }
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = trainer::to_json(config);
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["started"] = started;
  j["finished"] = finished;
  j["run_dir"] = run_dir.string();
  j["layout"] = {{"config", "config.json"},
                 {"metrics", "metrics.csv"},
                 {"checkpoints", "checkpoints/"},
                 {"manifest", "manifest.json"}};
  j["artifacts"] = artifacts;
  return j;
}

std::vector<std::string> RunManifest::missing_artifacts() const {
  std::vector<std::string> out;
  for (const auto& a : artifacts) {
    if (!std::filesystem::exists(run_dir / a)) out.push_back(a);
  }
  return out;
}

}  // namespace timrl::cli
