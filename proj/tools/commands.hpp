#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace acrt::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInvalidConfig = 2,
  kExitStepCap = 3,
  kExitDiverged = 4,
};

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::filesystem::path out_dir = "runs";
};

struct TrainOptions {
  std::string config_path;  // empty: preset only
  std::string preset;       // used when no config file is given
};

struct AnalyzeOptions {
  std::string checkpoint;
  std::string family = "first_order";
  bool replace_fits = false;
  std::optional<double> noise;
  std::optional<int> ablate;
  std::optional<int> cluster;  // index into the last layer's clusters; default largest
  std::optional<std::int64_t> equivariance;
};

struct ConstructOptions {
  std::int64_t n = 0;
  bool random_decoder = false;
  int m = 0;  // 0: smallest m above the theorem bound
};

struct TheoryOptions {
  std::int64_t n = 0;
  int m = 0;  // 0: ceil(ln n)
  std::optional<double> delta;  // default pi / e^3
  double rho = 0.5;
  int trials = 10000;
  bool keep_margins = false;
};

struct ScanOptions {
  std::string config_path;
  std::string preset;
};

// Each command writes into a run directory under out_dir and prints the
// directory on `out`. Diagnostics go to `err`.
int cmd_train(const GlobalOptions& g, const TrainOptions& o, std::ostream& out, std::ostream& err);
int cmd_analyze(const GlobalOptions& g, const AnalyzeOptions& o, std::ostream& out, std::ostream& err);
int cmd_construct(const GlobalOptions& g, const ConstructOptions& o, std::ostream& out, std::ostream& err);
int cmd_theory(const GlobalOptions& g, const TheoryOptions& o, std::ostream& out, std::ostream& err);
int cmd_scan(const GlobalOptions& g, const ScanOptions& o, std::ostream& out, std::ostream& err);

}  // namespace acrt::cli
