#include "rundir.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "acrt/checkpoint.hpp"
#include "version.hpp"

namespace acrt::cli {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

RunDir::RunDir(const std::filesystem::path& out_dir, std::string command, json config)
    : command_(std::move(command)), config_(std::move(config)), started_(utc_now()) {
  digest_ = sha256_hex(command_ + "\n" + config_.dump());
  dir_ = out_dir / (command_ + "-" + digest_.substr(0, 12));
  std::filesystem::create_directories(dir_);
}

void RunDir::write(const std::string& name, const std::string& content) {
  atomic_write(dir_ / name, content);
  const auto digest = sha256_hex(content);
  for (auto& [n, d] : outputs_) {
    if (n == name) {
      d = digest;
      return;
    }
  }
  outputs_.emplace_back(name, digest);
}

void RunDir::finish(const json& summary, int exit_code) {
  json files = json::array();
  for (const auto& [name, digest] : outputs_) files.push_back({{"path", name}, {"sha256", digest}});
  const json manifest = {
      {"command", command_},
      {"tool_version", kToolVersion},
      {"config", config_},
      {"config_digest", digest_},
      {"started_at", started_},
      {"finished_at", utc_now()},
      {"exit_code", exit_code},
      {"outputs", files},
      {"summary", summary},
  };
  atomic_write(dir_ / "manifest.json", manifest.dump(2) + "\n");
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += '\n';
}

Csv& Csv::cell(const std::string& s) {
  if (in_row_++) text_ += ',';
  if (s.find_first_of(",\"\n") == std::string::npos) {
    text_ += s;
  } else {
    text_ += '"';
    for (const char c : s) {
      if (c == '"') text_ += '"';
      text_ += c;
    }
    text_ += '"';
  }
  return *this;
}

Csv& Csv::cell(double x) {
  if (in_row_++) text_ += ',';
  text_ += std::isfinite(x) ? format_double(x) : (std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf"));
  return *this;
}

Csv& Csv::cell(long long x) {
  if (in_row_++) text_ += ',';
  text_ += std::to_string(x);
  return *this;
}

Csv& Csv::cell(unsigned long long x) {
  if (in_row_++) text_ += ',';
  text_ += std::to_string(x);
  return *this;
}

void Csv::end_row() {
  if (in_row_ != columns_) {
    throw std::logic_error("csv row has " + std::to_string(in_row_) + " cells, header has " +
                           std::to_string(columns_));
  }
  text_ += '\n';
  in_row_ = 0;
}

}  // namespace acrt::cli
