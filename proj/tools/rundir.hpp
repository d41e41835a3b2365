#pragma once

// Run directories named by a digest of the resolved configuration, with a
// manifest listing every emitted file and its SHA-256.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace acrt::cli {

std::string sha256_hex(std::string_view data);

class RunDir {
 public:
  /// <out_dir>/<command>-<first 12 hex of sha256(command + config)>.
  RunDir(const std::filesystem::path& out_dir, std::string command, nlohmann::json config);

  const std::filesystem::path& path() const { return dir_; }
  const std::string& digest() const { return digest_; }

  /// Atomic write (temporary file then rename); recorded in the manifest.
  void write(const std::string& name, const std::string& content);

  /// Writes manifest.json. `summary` lands under "summary".
  void finish(const nlohmann::json& summary, int exit_code);

 private:
  std::filesystem::path dir_;
  std::string command_;
  nlohmann::json config_;
  std::string digest_;
  std::string started_;
  std::vector<std::pair<std::string, std::string>> outputs_;  // name, sha256
};

/// Header-first CSV with '.' decimals and no locale.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);

  Csv& cell(const std::string& s);
  Csv& cell(double x);
  Csv& cell(long long x);
  Csv& cell(unsigned long long x);
  Csv& cell(int x) { return cell(static_cast<long long>(x)); }
  Csv& cell(bool x) { return cell(static_cast<long long>(x)); }
  void end_row();

  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string text_;
};

}  // namespace acrt::cli
