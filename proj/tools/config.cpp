#include "config.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace acrt::cli {

using nlohmann::json;

namespace {

RunConfig embed_n59() {
  RunConfig c;
  c.model.kind = ModelKind::EmbedMlp;
  c.model.depth = 1;
  c.model.width = 1024;
  c.model.embed_dim = 128;
  c.model.n = 59;
  c.train.learning_rate = 7.5e-4;
  c.train.l2_lambda = 1e-5;
  c.train.batch_size = 256;
  c.train.max_steps = 60000;
  c.train.steps_after_target = 10000;
  c.train.eval_every = 100;
  c.split_fraction = 0.9;
  return c;
}

// Sweeps run many seeds, so they use half the width and a shorter tail.
RunConfig sweep(RunConfig c) {
  c.model.width = 512;
  c.train.steps_after_target = 5000;
  return c;
}

const std::map<std::string, RunConfig (*)()>& run_presets() {
  static const std::map<std::string, RunConfig (*)()> presets = {
      {"embed-n59", [] { return embed_n59(); }},
      {"onehot-n59",
       [] {
         auto c = embed_n59();
         c.model.kind = ModelKind::OneHotMlp;
         return c;
       }},
      {"mean-n59",
       [] {
         auto c = embed_n59();
         c.model.kind = ModelKind::MeanEmbed;
         return c;
       }},
      {"embed-n66",
       [] {
         auto c = embed_n59();
         c.model.n = 66;
         c.train.l2_lambda = 1e-4;
         return c;
       }},
      {"onehot-n12",
       [] {
         auto c = embed_n59();
         c.model.kind = ModelKind::OneHotMlp;
         c.model.n = 12;
         c.model.width = 256;
         c.train.batch_size = 0;
         c.train.max_steps = 50000;
         c.train.steps_after_target = 0;
         return c;
       }},
  };
  return presets;
}

std::vector<std::uint64_t> seed_range(std::uint64_t count) {
  std::vector<std::uint64_t> s(count);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

const std::map<std::string, ScanConfig (*)()>& scan_presets() {
  static const std::map<std::string, ScanConfig (*)()> presets = {
      {"log-scaling",
       [] {
         ScanConfig c;
         c.mode = ScanMode::Scaling;
         c.run = sweep(embed_n59());
         c.moduli = {31, 59, 97, 127};
         c.seeds = seed_range(5);
         return c;
       }},
      {"coset-n66",
       [] {
         ScanConfig c;
         c.mode = ScanMode::Histogram;
         c.run = sweep(run_preset("embed-n66"));
         c.moduli = {66};
         c.seeds = seed_range(200);
         return c;
       }},
  };
  return presets;
}

// Field-path aware accessor over one JSON object.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": expected " + type_name<T>() + ", got " + it->dump());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError(where(k) + ": unknown field");
    }
  }

 private:
  template <class T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_unsigned_v<T>) return "a non-negative integer";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else return "a string";
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void apply_model(const json& j, ModelConfig& m) {
  Fields f(j, "model");
  std::string kind = to_string(m.kind);
  f.read("kind", kind);
  try {
    m.kind = model_kind_from_string(kind);
  } catch (const std::invalid_argument&) {
    throw ConfigError("model.kind: unknown kind \"" + kind + "\" (one_hot_mlp, embed_mlp, mean_embed)");
  }
  f.read("depth", m.depth);
  f.read("width", m.width);
  f.read("embed_dim", m.embed_dim);
  f.read("n", m.n);
  f.finish();
}

void apply_train(const json& j, TrainConfig& t) {
  Fields f(j, "train");
  f.read("learning_rate", t.learning_rate);
  f.read("l2_lambda", t.l2_lambda);
  f.read("batch_size", t.batch_size);
  f.read("max_steps", t.max_steps);
  f.read("seed", t.seed);
  f.read("target_accuracy", t.target_accuracy);
  f.read("eval_every", t.eval_every);
  f.read("steps_after_target", t.steps_after_target);
  f.read("adam_beta1", t.adam_beta1);
  f.read("adam_beta2", t.adam_beta2);
  f.read("adam_epsilon", t.adam_epsilon);
  f.finish();
}

void apply_run_fields(Fields& f, RunConfig& c) {
  if (const auto* m = f.child("model")) apply_model(*m, c.model);
  if (const auto* t = f.child("train")) apply_train(*t, c.train);
  if (const auto* d = f.child("data")) {
    Fields df(*d, "data");
    df.read("split_fraction", c.split_fraction);
    df.finish();
  }
}

void check_schema(Fields& f) {
  int version = -1;
  f.read("schema_version", version);
  if (version == -1) throw ConfigError("schema_version: missing");
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
}

template <class Fn>
void rethrow_as_config(const char* prefix, Fn fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(prefix) + e.what());
  }
}

}  // namespace

std::vector<std::string> run_preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : run_presets()) names.push_back(k);
  return names;
}

std::vector<std::string> scan_preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : scan_presets()) names.push_back(k);
  return names;
}

RunConfig run_preset(const std::string& name) {
  const auto it = run_presets().find(name);
  if (it == run_presets().end()) throw ConfigError("preset: unknown run preset \"" + name + "\"");
  return it->second();
}

ScanConfig scan_preset(const std::string& name) {
  const auto it = scan_presets().find(name);
  if (it == scan_presets().end()) throw ConfigError("preset: unknown scan preset \"" + name + "\"");
  return it->second();
}

RunConfig parse_run_config(const json& doc) {
  Fields f(doc, "");
  check_schema(f);
  std::string preset;
  f.read("preset", preset);
  RunConfig c = preset.empty() ? RunConfig{} : run_preset(preset);
  apply_run_fields(f, c);
  f.finish();
  validate(c);
  return c;
}

ScanConfig parse_scan_config(const json& doc) {
  Fields f(doc, "");
  check_schema(f);
  std::string preset;
  f.read("preset", preset);
  ScanConfig c = preset.empty() ? ScanConfig{} : scan_preset(preset);
  std::string mode = c.mode == ScanMode::Scaling ? "scaling" : "histogram";
  f.read("mode", mode);
  if (mode == "scaling") {
    c.mode = ScanMode::Scaling;
  } else if (mode == "histogram") {
    c.mode = ScanMode::Histogram;
  } else {
    throw ConfigError("mode: expected \"scaling\" or \"histogram\", got \"" + mode + "\"");
  }
  if (const auto* m = f.child("moduli")) {
    if (!m->is_array()) throw ConfigError("moduli: expected an array of integers");
    c.moduli.clear();
    for (const auto& v : *m) {
      if (!v.is_number_integer()) throw ConfigError("moduli: expected integers, got " + v.dump());
      c.moduli.push_back(v.get<std::int64_t>());
    }
  }
  if (const auto* s = f.child("seeds")) {
    if (s->is_number_unsigned()) {
      c.seeds = seed_range(s->get<std::uint64_t>());
    } else if (s->is_array()) {
      c.seeds.clear();
      for (const auto& v : *s) {
        if (!v.is_number_unsigned()) throw ConfigError("seeds: expected non-negative integers, got " + v.dump());
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    } else {
      throw ConfigError("seeds: expected a count or an array of seeds");
    }
  }
  f.read("confidence", c.confidence);
  f.read("bootstrap_samples", c.bootstrap_samples);
  apply_run_fields(f, c.run);
  f.finish();
  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  return {
      {"schema_version", kSchemaVersion},
      {"model",
       {{"kind", to_string(c.model.kind)},
        {"depth", c.model.depth},
        {"width", c.model.width},
        {"embed_dim", c.model.embed_dim},
        {"n", c.model.n}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"l2_lambda", c.train.l2_lambda},
        {"batch_size", c.train.batch_size},
        {"max_steps", c.train.max_steps},
        {"seed", c.train.seed},
        {"target_accuracy", c.train.target_accuracy},
        {"eval_every", c.train.eval_every},
        {"steps_after_target", c.train.steps_after_target},
        {"adam_beta1", c.train.adam_beta1},
        {"adam_beta2", c.train.adam_beta2},
        {"adam_epsilon", c.train.adam_epsilon}}},
      {"data", {{"split_fraction", c.split_fraction}}},
  };
}

json to_json(const ScanConfig& c) {
  json j = to_json(c.run);
  j["mode"] = c.mode == ScanMode::Scaling ? "scaling" : "histogram";
  j["moduli"] = c.moduli;
  j["seeds"] = c.seeds;
  j["confidence"] = c.confidence;
  j["bootstrap_samples"] = c.bootstrap_samples;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON (" + e.what() + ")");
  }
}

void validate(const RunConfig& c) {
  rethrow_as_config("", [&] { c.model.validate(); });
  rethrow_as_config("", [&] { c.train.validate(); });
  if (!(c.split_fraction > 0.0 && c.split_fraction <= 1.0)) {
    throw ConfigError("data.split_fraction: must be in (0, 1]");
  }
}

void validate(const ScanConfig& c) {
  validate(c.run);
  if (c.moduli.empty()) throw ConfigError("moduli: empty");
  for (const auto n : c.moduli) {
    if (n < 2) throw ConfigError("moduli: every modulus must be >= 2");
  }
  if (c.seeds.empty()) throw ConfigError("seeds: empty");
  if (c.mode == ScanMode::Scaling && std::set<std::int64_t>(c.moduli.begin(), c.moduli.end()).size() < 3) {
    throw ConfigError("moduli: the log fit needs at least 3 distinct moduli");
  }
  if (c.mode == ScanMode::Histogram && c.moduli.size() != 1) {
    throw ConfigError("moduli: histogram mode takes exactly one modulus");
  }
  if (!(c.confidence > 0.0 && c.confidence < 1.0)) throw ConfigError("confidence: must be in (0, 1)");
  if (c.bootstrap_samples < 0) throw ConfigError("bootstrap_samples: must be >= 0");
}

}  // namespace acrt::cli
