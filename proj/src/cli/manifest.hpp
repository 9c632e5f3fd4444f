#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xps/config.hpp"

namespace xps::cli {

struct OutputDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  Json config;            // input document as given (after command-line overrides)
  std::vector<Json> effective;
  std::vector<std::uint64_t> seeds;
  std::string command;
  std::string started_at, finished_at;
  std::vector<OutputDigest> outputs;

  Json to_json() const;
};

std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();
OutputDigest digest_output(const std::filesystem::path& path);

}  // namespace xps::cli
