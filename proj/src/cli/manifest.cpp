#include "cli/manifest.hpp"

#include <chrono>
#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "xps/errors.hpp"
#include "xps/version.hpp"

namespace xps::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read '{}' for hashing", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string utc_timestamp() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

OutputDigest digest_output(const std::filesystem::path& path) {
  return {path.filename().string(), sha256_file(path), std::filesystem::file_size(path)};
}

Json RunManifest::to_json() const {
  Json j;
  j["tool"] = "xpsim";
  j["version"] = kVersion;
  j["command"] = command;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["seeds"] = seeds;
  j["config"] = config;
  j["effective_config"] = effective;
  Json outs = Json::array();
  for (const auto& o : outputs) outs.push_back({{"file", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  j["outputs"] = outs;
  return j;
}

}  // namespace xps::cli
