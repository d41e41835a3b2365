#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "version.hpp"

using namespace acrt::cli;

namespace {

std::string list(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acrt: cosets, sinusoids and the approximate CRT in modular-addition networks"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();  // global flags are accepted after the subcommand too

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for training, sampling and bootstrap");
  app.add_option("--jobs", g.jobs, "Concurrent runs for scan")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for run outputs");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a network and write a checkpoint");
  train_cmd->add_option("config", train.config_path, "JSON run config")->check(CLI::ExistingFile);
  train_cmd->add_option("--preset", train.preset, "Run preset: " + list(run_preset_names()));

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Clusters, fits and ablations of a checkpoint");
  analyze_cmd->add_option("checkpoint", analyze.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--family", analyze.family,
                          "Fit family: first_order, sum_of_sines, second_order, mixed");
  analyze_cmd->add_flag("--replace-fits", analyze.replace_fits, "Report accuracy before and after fit replacement");
  analyze_cmd->add_option("--noise", analyze.noise, "Lognormal weight noise sigma on one cluster");
  analyze_cmd->add_option("--ablate", analyze.ablate, "Neurons to remove from one cluster");
  analyze_cmd->add_option("--cluster", analyze.cluster, "Cluster index for --noise/--ablate (default largest)");
  analyze_cmd->add_option("--equivariance", analyze.equivariance, "Shift t for the equivariance check");

  ConstructOptions construct;
  auto* construct_cmd = app.add_subcommand("construct", "Build the exact coset network or a frequency decoder");
  construct_cmd->add_option("n", construct.n, "Modulus")->required();
  construct_cmd->add_flag("--random-decoder", construct.random_decoder, "Random-frequency decoder (any n)");
  construct_cmd->add_option("-m", construct.m, "Decoder frequency count (default ceil(ln n))");

  TheoryOptions theory;
  auto* theory_cmd = app.add_subcommand("theory", "Monte Carlo check of the frequency-count bound");
  theory_cmd->add_option("n", theory.n, "Modulus")->required();
  theory_cmd->add_option("-m", theory.m, "Frequencies per trial (default ceil(ln n))");
  theory_cmd->add_option("--delta", theory.delta, "Margin fraction (default pi/e^3)");
  theory_cmd->add_option("--rho", theory.rho, "Success probability in the bound");
  theory_cmd->add_option("--trials", theory.trials, "Monte Carlo trials");
  theory_cmd->add_flag("--keep-margins", theory.keep_margins, "Write per-trial margins");

  ScanOptions scan;
  auto* scan_cmd = app.add_subcommand("scan", "Seed and modulus sweeps: log scaling or coset histograms");
  scan_cmd->add_option("config", scan.config_path, "JSON scan config")->check(CLI::ExistingFile);
  scan_cmd->add_option("--preset", scan.preset, "Scan preset: " + list(scan_preset_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  if (*train_cmd) return cmd_train(g, train, std::cout, std::cerr);
  if (*analyze_cmd) return cmd_analyze(g, analyze, std::cout, std::cerr);
  if (*construct_cmd) return cmd_construct(g, construct, std::cout, std::cerr);
  if (*theory_cmd) return cmd_theory(g, theory, std::cout, std::cerr);
  if (*scan_cmd) return cmd_scan(g, scan, std::cout, std::cerr);
  return kExitFailure;
}
