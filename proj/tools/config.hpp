#pragma once

// JSON run configurations for the acrt tool, with shipped presets.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "acrt/analyze.hpp"
#include "acrt/netcore.hpp"
#include "acrt/train.hpp"
#include "json.hpp"

namespace acrt::cli {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  double split_fraction = 0.9;
};

enum class ScanMode { Scaling, Histogram };

struct ScanConfig {
  ScanMode mode = ScanMode::Scaling;
  RunConfig run;
  std::vector<std::int64_t> moduli;
  std::vector<std::uint64_t> seeds;
  double confidence = 0.9;
  int bootstrap_samples = 2000;
};

std::vector<std::string> run_preset_names();
std::vector<std::string> scan_preset_names();
RunConfig run_preset(const std::string& name);
ScanConfig scan_preset(const std::string& name);

/// Applies a config document over a preset (or the defaults when it names none).
/// Unknown keys and wrong types raise ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
ScanConfig parse_scan_config(const nlohmann::json& doc);

nlohmann::json to_json(const RunConfig& c);
nlohmann::json to_json(const ScanConfig& c);

nlohmann::json read_json_file(const std::string& path);

/// Validates every field, rethrowing std::invalid_argument as ConfigError.
void validate(const RunConfig& c);
void validate(const ScanConfig& c);

}  // namespace acrt::cli
