#include "acrt/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace acrt {

using nlohmann::json;

std::string format_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("cannot serialize a non-finite value");
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void write_string(std::ostringstream& os, const std::string& s) { os << json(s).dump(); }

template <class Seq>
void write_array(std::ostringstream& os, const Seq& values) {
  os << '[';
  bool first = true;
  for (const double v : values) {
    if (!first) os << ',';
    first = false;
    os << format_double(v);
  }
  os << ']';
}

void write_fit(std::ostringstream& os, const SinusoidFit& f) {
  os << "{\"family\":";
  write_string(os, to_string(f.family));
  os << ",\"n\":" << f.n << ",\"frequencies\":[";
  for (std::size_t i = 0; i < f.frequencies.size(); ++i) os << (i ? "," : "") << f.frequencies[i];
  os << "],\"phases\":";
  write_array(os, f.phases);
  os << ",\"amplitudes\":";
  write_array(os, f.amplitudes);
  os << ",\"bias\":" << format_double(f.bias) << ",\"r2\":" << format_double(f.r2) << '}';
}

json model_config_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)}, {"depth", c.depth}, {"width", c.width},
          {"embed_dim", c.embed_dim}, {"n", c.n}};
}

json train_config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"l2_lambda", c.l2_lambda}, {"batch_size", c.batch_size},
          {"max_steps", c.max_steps},         {"seed", c.seed},           {"target_accuracy", c.target_accuracy},
          {"eval_every", c.eval_every},       {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon}};
}

ModelConfig model_config_from(const json& j) {
  ModelConfig c;
  c.kind = model_kind_from_string(j.at("kind").get<std::string>());
  c.depth = j.at("depth").get<int>();
  c.width = j.at("width").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.n = j.at("n").get<std::int64_t>();
  return c;
}

TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.l2_lambda = j.at("l2_lambda").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_steps = j.at("max_steps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.target_accuracy = j.at("target_accuracy").get<double>();
  c.eval_every = j.at("eval_every").get<int>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  return c;
}

SinusoidFit fit_from(const json& j) {
  SinusoidFit f;
  f.family = fit_family_from_string(j.at("family").get<std::string>());
  f.n = j.at("n").get<std::int64_t>();
  f.frequencies = j.at("frequencies").get<std::vector<int>>();
  f.phases = j.at("phases").get<std::vector<double>>();
  f.amplitudes = j.at("amplitudes").get<std::vector<double>>();
  f.bias = j.at("bias").get<double>();
  f.r2 = j.at("r2").get<double>();
  return f;
}

Eigen::MatrixXd matrix_from(const json& t) {
  const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw std::runtime_error("tensor shape must be 2-d");
  const auto& values = t.at("values");
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != shape[0] * shape[1]) {
    throw std::runtime_error("tensor " + t.at("name").get<std::string>() + ": value count does not match shape");
  }
  Eigen::MatrixXd m(shape[0], shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < shape[0]; ++r) {
    for (Eigen::Index c = 0; c < shape[1]; ++c) m(r, c) = values[k++].get<double>();
  }
  return m;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ck) {
  ck.params.validate();
  std::ostringstream os;
  os << "{\n\"format\":\"acrt-checkpoint\",\n\"version\":" << kCheckpointVersion << ",\n";
  os << "\"origin\":";
  write_string(os, ck.origin);
  os << ",\n\"kind\":";
  write_string(os, to_string(ck.params.kind));
  os << ",\n\"n\":" << ck.params.n << ",\n\"embed_dim\":" << ck.params.embed_dim;
  os << ",\n\"seed\":" << ck.seed << ",\n\"split_fraction\":" << format_double(ck.split_fraction);
  os << ",\n\"model_config\":" << (ck.model_config ? model_config_json(*ck.model_config).dump() : "null");
  os << ",\n\"train_config\":" << (ck.train_config ? train_config_json(*ck.train_config).dump() : "null");
  os << ",\n\"tensors\":[";
  bool first = true;
  for (const auto& t : tensors(ck.params)) {
    os << (first ? "\n" : ",\n") << "{\"name\":";
    first = false;
    write_string(os, t.name);
    os << ",\"shape\":[" << t.rows << ',' << t.cols << "],\"values\":[";
    // Row-major regardless of Eigen's column-major storage.
    const auto m = t.map();
    for (Eigen::Index r = 0; r < t.rows; ++r) {
      for (Eigen::Index c = 0; c < t.cols; ++c) {
        if (r || c) os << ',';
        os << format_double(m(r, c));
      }
    }
    os << "]}";
  }
  os << "\n],\n\"overrides\":[";
  for (std::size_t i = 0; i < ck.params.overrides.size(); ++i) {
    const auto& o = ck.params.overrides[i];
    os << (i ? ",\n" : "\n") << "{\"layer\":" << o.layer << ",\"neurons\":[";
    for (std::size_t j = 0; j < o.neurons.size(); ++j) {
      if (j) os << ',';
      if (o.neurons[j]) {
        write_fit(os, *o.neurons[j]);
      } else {
        os << "null";
      }
    }
    os << "]}";
  }
  os << "\n]\n}\n";
  return os.str();
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "acrt-checkpoint") throw std::runtime_error("not an acrt checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.origin = j.value("origin", "");
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.split_fraction = j.at("split_fraction").get<double>();
    if (!j.at("model_config").is_null()) ck.model_config = model_config_from(j["model_config"]);
    if (!j.at("train_config").is_null()) ck.train_config = train_config_from(j["train_config"]);

    auto& p = ck.params;
    p.kind = model_kind_from_string(j.at("kind").get<std::string>());
    p.n = j.at("n").get<std::int64_t>();
    p.embed_dim = j.at("embed_dim").get<int>();
    for (const auto& t : j.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      auto m = matrix_from(t);
      if (name == "embed_a") {
        p.embed_a = std::move(m);
      } else if (name == "embed_b") {
        p.embed_b = std::move(m);
      } else if (name == "output") {
        p.output = std::move(m);
      } else if (name.rfind("hidden.", 0) == 0) {
        const auto dot = name.find('.', 7);
        if (dot == std::string::npos) throw std::runtime_error("bad tensor name " + name);
        const auto idx = std::stoul(name.substr(7, dot - 7));
        if (idx >= p.hidden.size()) p.hidden.resize(idx + 1);
        const auto field = name.substr(dot + 1);
        if (field == "weight") {
          p.hidden[idx].weight = std::move(m);
        } else if (field == "bias") {
          if (m.cols() != 1) throw std::runtime_error("bias tensor must have one column");
          p.hidden[idx].bias = m.col(0);
        } else {
          throw std::runtime_error("bad tensor name " + name);
        }
      } else {
        throw std::runtime_error("unknown tensor " + name);
      }
    }
    for (const auto& o : j.at("overrides")) {
      LayerOverride lo;
      lo.layer = o.at("layer").get<int>();
      for (const auto& f : o.at("neurons")) {
        lo.neurons.push_back(f.is_null() ? std::nullopt : std::optional<SinusoidFit>(fit_from(f)));
      }
      p.overrides.push_back(std::move(lo));
    }
    p.validate();
    return ck;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto text = checkpoint_to_string(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace acrt
