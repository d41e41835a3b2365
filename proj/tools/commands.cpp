#include "commands.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "acrt/analyze.hpp"
#include "acrt/checkpoint.hpp"
#include "acrt/construct.hpp"
#include "acrt/theory.hpp"
#include "config.hpp"
#include "rundir.hpp"

namespace acrt::cli {

using nlohmann::json;

namespace {

int guarded(std::ostream& err, const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "acrt: invalid configuration: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    err << "acrt: invalid argument: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const TrainingDiverged& e) {
    err << "acrt: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "acrt: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

std::string history_csv(const TrainedModel& m) {
  Csv csv({"step", "train_loss", "train_accuracy", "test_accuracy", "mean_margin"});
  for (const auto& h : m.history) {
    csv.cell(h.step).cell(h.train_loss).cell(h.train_accuracy);
    if (h.test_accuracy) {
      csv.cell(*h.test_accuracy);
    } else {
      csv.cell(std::string());
    }
    csv.cell(h.mean_margin);
    csv.end_row();
  }
  return csv.str();
}

json clusters_json(const std::vector<NeuronCluster>& clusters, bool members) {
  json arr = json::array();
  for (const auto& c : clusters) {
    json j = {{"layer", c.layer},
              {"frequency", c.frequency},
              {"size", c.members.size()},
              {"norm_share", c.norm_share},
              {"learned", c.learned}};
    if (members) j["members"] = c.members;
    arr.push_back(std::move(j));
  }
  return arr;
}

void fit_rows(Csv& csv, const FitTable& t) {
  for (const auto& r : t.rows) {
    csv.cell(t.layer).cell(r.neuron).cell(r.dead);
    if (r.fit) {
      csv.cell(std::string(to_string(r.fit->family)))
          .cell(join(r.fit->frequencies))
          .cell(r.fit->r2)
          .cell(r.fit->bias)
          .cell(join(r.fit->amplitudes))
          .cell(join(r.fit->phases));
    } else {
      for (int i = 0; i < 6; ++i) csv.cell(std::string());
    }
    csv.end_row();
  }
}

// The dataset a checkpoint was trained on, or every pair when it was built.
Dataset dataset_for(const Checkpoint& ck) {
  if (ck.split_fraction > 0.0) return generate_dataset(Modulus{ck.params.n}, ck.split_fraction, ck.seed);
  return generate_dataset(Modulus{ck.params.n}, 1.0, 0);
}

}  // namespace

int cmd_train(const GlobalOptions& g, const TrainOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg;
    if (!o.config_path.empty()) {
      cfg = parse_run_config(read_json_file(o.config_path));
    } else {
      cfg = run_preset(o.preset.empty() ? "embed-n59" : o.preset);
    }
    if (g.seed) cfg.train.seed = *g.seed;
    validate(cfg);

    RunDir dir(g.out_dir, "train", to_json(cfg));
    const auto data = generate_dataset(Modulus{cfg.model.n}, cfg.split_fraction, cfg.train.seed);
    err << "acrt train: n=" << cfg.model.n << " kind=" << to_string(cfg.model.kind)
        << " seed=" << cfg.train.seed << '\n';
    int code = kExitOk;
    json summary;
    try {
      const auto model = train(cfg.model, cfg.train, data);
      Checkpoint ck{model.params, cfg.model, cfg.train, cfg.train.seed, cfg.split_fraction, "train"};
      dir.write("checkpoint.json", checkpoint_to_string(ck));
      dir.write("history.csv", history_csv(model));
      const auto& last = model.history.back();
      code = model.reached_target ? kExitOk : kExitStepCap;
      summary = {{"steps", model.steps},
                 {"reached_target", model.reached_target},
                 {"target_step", model.target_step ? json(*model.target_step) : json(nullptr)},
                 {"train_accuracy", last.train_accuracy},
                 {"test_accuracy", last.test_accuracy ? json(*last.test_accuracy) : json(nullptr)},
                 {"train_loss", last.train_loss},
                 {"mean_margin", last.mean_margin}};
    } catch (const TrainingDiverged& e) {
      summary = {{"diverged_at_step", e.step()}};
      dir.finish(summary, kExitDiverged);
      throw;
    }
    dir.write("report.json", summary.dump(2) + "\n");
    dir.finish(summary, code);
    out << dir.path().string() << '\n';
    if (code == kExitStepCap) err << "acrt train: step cap reached before target accuracy\n";
    return code;
  });
}

int cmd_analyze(const GlobalOptions& g, const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ck = load_checkpoint(o.checkpoint);
    const auto family = fit_family_from_string(o.family);
    const auto seed = g.seed.value_or(0);
    json config = {{"checkpoint_sha256", sha256_hex(checkpoint_to_string(ck))},
                   {"family", o.family},
                   {"replace_fits", o.replace_fits},
                   {"noise", o.noise ? json(*o.noise) : json(nullptr)},
                   {"ablate", o.ablate ? json(*o.ablate) : json(nullptr)},
                   {"cluster", o.cluster ? json(*o.cluster) : json(nullptr)},
                   {"equivariance", o.equivariance ? json(*o.equivariance) : json(nullptr)},
                   {"seed", seed}};
    RunDir dir(g.out_dir, "analyze", config);
    const auto& params = ck.params;
    const auto data = dataset_for(ck);

    json report;
    report["n"] = params.n;
    report["kind"] = to_string(params.kind);
    report["learned_norm_share"] = kLearnedNormShare;
    report["fit_threshold"] = kGoodFitR2;
    report["accuracy_all"] = accuracy(params, data, Split::All).accuracy;

    json clusters = json::array();
    Csv fits({"layer", "neuron", "dead", "family", "frequencies", "r2", "bias", "amplitudes", "phases"});
    json layers = json::array();
    std::vector<NeuronCluster> last_clusters;
    for (int layer = 1; layer <= params.depth(); ++layer) {
      auto cl = cluster_neurons(params, layer);
      for (auto& c : clusters_json(cl, true)) clusters.push_back(c);
      const auto table = fit_layer(params, layer, family);
      fit_rows(fits, table);
      layers.push_back({{"layer", layer},
                        {"clusters", cl.size()},
                        {"median_r2", table.median_r2},
                        {"fraction_good", table.fraction_good},
                        {"dead", table.dead_count}});
      if (o.replace_fits && layer == 1) {
        const auto replaced = replace_with_fits(params, table);
        report["replace_fits"] = {{"layer", layer},
                                  {"accuracy_before", accuracy(params, data, Split::All).accuracy},
                                  {"accuracy_after", accuracy(replaced, data, Split::All).accuracy}};
      }
      if (layer == params.depth()) last_clusters = std::move(cl);
    }
    report["layers"] = layers;
    report["unique_frequency_count"] = unique_frequency_count(params);

    const bool want_cluster = o.noise || o.ablate;
    std::optional<NeuronCluster> target;
    if (want_cluster) {
      if (last_clusters.empty()) throw std::invalid_argument("no clusters in the last hidden layer");
      std::size_t idx = 0;
      if (o.cluster) {
        if (*o.cluster < 0 || static_cast<std::size_t>(*o.cluster) >= last_clusters.size()) {
          throw std::invalid_argument("--cluster " + std::to_string(*o.cluster) + " out of range (" +
                                      std::to_string(last_clusters.size()) + " clusters)");
        }
        idx = static_cast<std::size_t>(*o.cluster);
      } else {
        for (std::size_t i = 1; i < last_clusters.size(); ++i) {
          if (last_clusters[i].members.size() > last_clusters[idx].members.size()) idx = i;
        }
      }
      target = last_clusters[idx];
      report["target_cluster"] = {{"index", idx}, {"frequency", target->frequency}, {"size", target->members.size()}};
    }
    if (o.noise) {
      const auto noised = inject_noise(params, *target, *o.noise, seed);
      report["noise"] = {{"sigma", *o.noise},
                         {"baseline_loss", cross_entropy(params, data, Split::All)},
                         {"noised_loss", cross_entropy(noised, data, Split::All)},
                         {"noised_accuracy", accuracy(noised, data, Split::All).accuracy}};
    }
    if (o.ablate) {
      const auto ablated = ablate_cluster(params, *target, *o.ablate, seed);
      report["ablation"] = {{"count", *o.ablate},
                            {"accuracy_after", accuracy(ablated, data, Split::All).accuracy}};
    }
    if (o.equivariance) {
      json eq = json::array();
      for (const auto& c : last_clusters) {
        const auto r = equivariance_check(params, c, *o.equivariance);
        eq.push_back({{"frequency", c.frequency},
                      {"lag", r.lag},
                      {"period", r.period},
                      {"peaks_at_2t", r.peaks_at(2 * *o.equivariance)}});
      }
      report["equivariance"] = {{"t", *o.equivariance}, {"clusters", eq}};
    }

    dir.write("clusters.json", clusters.dump(2) + "\n");
    dir.write("fits.csv", fits.str());
    dir.write("report.json", report.dump(2) + "\n");
    dir.finish(report, kExitOk);
    out << dir.path().string() << '\n';
    return kExitOk;
  });
}

int cmd_construct(const GlobalOptions& g, const ConstructOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Modulus n{o.n};
    const auto seed = g.seed.value_or(0);
    json config = {{"n", o.n}, {"random_decoder", o.random_decoder}, {"m", o.m}, {"seed", seed}};
    if (o.random_decoder) {
      const int m = o.m > 0 ? o.m : static_cast<int>(std::ceil(std::log(static_cast<double>(o.n))));
      RunDir dir(g.out_dir, "construct", config);
      const auto dec = random_frequency_decoder(n, m, seed);
      std::vector<int> all = dec.frequencies();
      std::int64_t common = o.n;
      for (const int f : all) common = gcd(common, f);
      json report = {{"n", o.n},
                     {"mode", "random_decoder"},
                     {"m", m},
                     {"frequencies", all},
                     {"gcd", common},
                     {"accuracy", dec.accuracy()},
                     {"min_margin", min_margin(all, o.n)}};
      dir.write("report.json", report.dump(2) + "\n");
      dir.finish(report, kExitOk);
      out << dir.path().string() << '\n';
      return kExitOk;
    }
    const auto plan = acrt_frequency_plan(n);
    if (plan.degenerate) {
      throw std::invalid_argument("n = " + std::to_string(o.n) +
                                  " is prime: the CRT plan is degenerate; use --random-decoder");
    }
    RunDir dir(g.out_dir, "construct", config);
    const auto params = build_acrt_network(plan);
    const auto data = generate_dataset(n, 1.0, 0);
    json entries = json::array();
    for (const auto& e : plan.entries) entries.push_back({{"f", e.f}, {"q", e.q}, {"neurons", e.q * e.q}});
    json report = {{"n", o.n},
                   {"mode", "exact_cosets"},
                   {"plan", entries},
                   {"coverage", plan.coverage},
                   {"neurons", plan.neuron_count()},
                   {"accuracy", accuracy(params, data, Split::All).accuracy},
                   {"clusters", clusters_json(cluster_neurons(params, 1), false)}};
    Checkpoint ck{params, std::nullopt, std::nullopt, 0, 0.0, "construct"};
    dir.write("checkpoint.json", checkpoint_to_string(ck));
    dir.write("report.json", report.dump(2) + "\n");
    dir.finish(report, kExitOk);
    out << dir.path().string() << '\n';
    return kExitOk;
  });
}

int cmd_theory(const GlobalOptions& g, const TheoryOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    TheoryParams tp;
    tp.n = o.n;
    Modulus{o.n};
    tp.m = o.m > 0 ? o.m : static_cast<int>(std::ceil(std::log(static_cast<double>(o.n))));
    if (o.delta) tp.delta = *o.delta;
    tp.rho = o.rho;
    tp.trials = o.trials;
    tp.seed = g.seed.value_or(0);
    tp.keep_margins = o.keep_margins;
    tp.validate();
    json config = {{"n", tp.n},         {"m", tp.m},           {"delta", tp.delta},
                   {"rho", tp.rho},     {"trials", tp.trials}, {"seed", tp.seed},
                   {"keep_margins", tp.keep_margins}};
    RunDir dir(g.out_dir, "theory", config);
    const auto r = monte_carlo_margin(tp);
    json quantiles = json::array();
    for (std::size_t i = 0; i < r.quantile_levels.size(); ++i) {
      quantiles.push_back({{"level", r.quantile_levels[i]}, {"min_margin", r.worst_margin_quantiles[i]}});
    }
    json report = {{"n", tp.n},
                   {"m", tp.m},
                   {"delta", tp.delta},
                   {"rho", tp.rho},
                   {"trials", r.trials},
                   {"seed", tp.seed},
                   {"theorem_bound", r.bound},
                   {"bound_m_min", r.bound_m_min},
                   {"threshold", tp.delta * tp.m},
                   {"successes", r.successes},
                   {"empirical_success", r.empirical_success},
                   {"standard_error", r.standard_error},
                   {"quantiles", quantiles}};
    if (tp.keep_margins) {
      Csv csv({"trial", "min_margin"});
      for (std::size_t t = 0; t < r.per_trial_margins.size(); ++t) {
        csv.cell(static_cast<long long>(t)).cell(r.per_trial_margins[t]).end_row();
      }
      dir.write("margins.csv", csv.str());
    }
    dir.write("report.json", report.dump(2) + "\n");
    dir.finish(report, kExitOk);
    out << dir.path().string() << '\n';
    return kExitOk;
  });
}

int cmd_scan(const GlobalOptions& g, const ScanOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScanConfig cfg = !o.config_path.empty() ? parse_scan_config(read_json_file(o.config_path))
                                            : scan_preset(o.preset.empty() ? "log-scaling" : o.preset);
    validate(cfg);
    const auto seed = g.seed.value_or(0);
    json config = to_json(cfg);
    config["bootstrap_seed"] = seed;
    RunDir dir(g.out_dir, "scan", config);

    ScanSpec spec;
    spec.moduli = cfg.moduli;
    spec.seeds = cfg.seeds;
    spec.model = cfg.run.model;
    spec.train = cfg.run.train;
    spec.split_fraction = cfg.run.split_fraction;
    spec.jobs = g.jobs;
    err << "acrt scan: " << spec.moduli.size() * spec.seeds.size() << " runs, jobs=" << spec.jobs << '\n';
    const auto result = scaling_scan(spec);

    Csv runs({"n", "seed", "kind", "depth", "width", "unique_frequency_count", "frequencies", "train_accuracy",
              "test_accuracy", "mean_margin", "steps", "reached_target", "flagged", "note"});
    for (const auto& r : result.records) {
      runs.cell(static_cast<long long>(r.n))
          .cell(static_cast<unsigned long long>(r.seed))
          .cell(std::string(to_string(r.kind)))
          .cell(r.depth)
          .cell(r.width)
          .cell(r.unique_frequency_count)
          .cell(join(r.frequencies))
          .cell(r.train_accuracy)
          .cell(r.test_accuracy)
          .cell(r.mean_margin)
          .cell(r.steps)
          .cell(r.reached_target)
          .cell(r.flagged)
          .cell(r.note)
          .end_row();
    }
    dir.write("runs.csv", runs.str());

    auto fit_json = [](const LogFit& f) {
      return json{{"valid", f.valid}, {"reason", f.reason}, {"intercept", f.intercept},
                  {"slope", f.slope}, {"r2", f.r2},         {"points", f.points}};
    };
    json summary = {{"runs", result.records.size()}, {"excluded", result.excluded}};
    if (cfg.mode == ScanMode::Scaling) {
      summary["fit_means"] = fit_json(result.fit_means);
      summary["fit_runs"] = fit_json(result.fit_runs);
      Csv plot({"n", "ln_n", "mean_count", "std_count", "runs"});
      for (const auto n : spec.moduli) {
        std::vector<double> c;
        for (const auto& r : result.records) {
          if (r.n == n && !r.flagged) c.push_back(r.unique_frequency_count);
        }
        double mean = 0.0, var = 0.0;
        for (const double x : c) mean += x;
        if (!c.empty()) mean /= static_cast<double>(c.size());
        for (const double x : c) var += (x - mean) * (x - mean);
        const double sd = c.size() > 1 ? std::sqrt(var / static_cast<double>(c.size() - 1)) : 0.0;
        plot.cell(static_cast<long long>(n)).cell(std::log(static_cast<double>(n))).cell(mean).cell(sd);
        plot.cell(static_cast<long long>(c.size())).end_row();
      }
      dir.write("scaling.csv", plot.str());
    } else {
      const auto h = frequency_histogram(spec.moduli.front(), result.records, seed, cfg.confidence,
                                         cfg.bootstrap_samples);
      Csv hist({"frequency", "count", "divisor"});
      for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const int f = static_cast<int>(i) + 1;
        hist.cell(f).cell(h.counts[i]).cell(gcd(f, h.n) > 1).end_row();
      }
      dir.write("histogram.csv", hist.str());
      summary["histogram"] = {{"models", h.models},          {"divisor_mean", h.divisor_mean},
                              {"nondivisor_mean", h.nondivisor_mean}, {"ratio", h.ratio},
                              {"ci_low", h.ci_low},          {"ci_high", h.ci_high},
                              {"confidence", h.confidence},  {"bootstrap_samples", h.bootstrap_samples}};
    }
    dir.write("summary.json", summary.dump(2) + "\n");
    dir.finish(summary, kExitOk);
    out << dir.path().string() << '\n';
    return kExitOk;
  });
}

}  // namespace acrt::cli
