#include "acrt/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "acrt/rng.hpp"
#include "engine.hpp"

namespace acrt {

// ---------------------------------------------------------------- dataset

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool in_train = train_mask[i] != 0;
    if (split == Split::All || (split == Split::Train) == in_train) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::train_size() const {
  return static_cast<std::size_t>(std::count(train_mask.begin(), train_mask.end(), 1));
}

Dataset generate_dataset(Modulus modulus, double split_fraction, std::uint64_t seed) {
  if (!(split_fraction > 0.0 && split_fraction <= 1.0)) {
    throw std::invalid_argument("generate_dataset: split_fraction must be in (0, 1]");
  }
  const auto n = modulus.value();
  Dataset ds;
  ds.n = n;
  ds.split_fraction = split_fraction;
  ds.seed = seed;
  ds.pairs.reserve(static_cast<std::size_t>(n * n));
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t b = 0; b < n; ++b) {
      ds.pairs.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                          static_cast<std::int32_t>((a + b) % n)});
    }
  }
  const auto total = ds.pairs.size();
  const auto train = static_cast<std::size_t>(std::floor(split_fraction * static_cast<double>(total)));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5eed));
  rng.shuffle(std::span<std::size_t>(order));
  ds.train_mask.assign(total, 0);
  for (std::size_t i = 0; i < train; ++i) ds.train_mask[order[i]] = 1;
  return ds;
}

// ---------------------------------------------------------------- config

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::OneHotMlp: return "one_hot_mlp";
    case ModelKind::EmbedMlp: return "embed_mlp";
    case ModelKind::MeanEmbed: return "mean_embed";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::OneHotMlp, ModelKind::EmbedMlp, ModelKind::MeanEmbed}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

void ModelConfig::validate() const {
  if (n < 2) throw std::invalid_argument("model.n must be >= 2");
  if (depth < 1 || depth > 4) throw std::invalid_argument("model.depth must be in [1, 4]");
  if (width < 1) throw std::invalid_argument("model.width must be positive");
  if (kind != ModelKind::OneHotMlp && embed_dim < 1) {
    throw std::invalid_argument("model.embed_dim must be positive");
  }
}

// ---------------------------------------------------------------- params

int NetworkParams::width(int layer) const {
  if (layer < 1 || layer > depth()) throw std::out_of_range("hidden layer index out of range");
  return static_cast<int>(hidden[static_cast<std::size_t>(layer - 1)].weight.rows());
}

int NetworkParams::input_dim() const {
  switch (kind) {
    case ModelKind::OneHotMlp: return static_cast<int>(2 * n);
    case ModelKind::EmbedMlp: return 2 * embed_dim;
    case ModelKind::MeanEmbed: return embed_dim;
  }
  return 0;
}

void NetworkParams::validate() const {
  Modulus{n};
  if (hidden.empty()) throw std::invalid_argument("network has no hidden layers");
  if (kind != ModelKind::OneHotMlp) {
    if (embed_a.rows() != n || embed_a.cols() != embed_dim) {
      throw std::invalid_argument("embed_a must be n x embed_dim");
    }
  }
  if (kind == ModelKind::EmbedMlp && (embed_b.rows() != n || embed_b.cols() != embed_dim)) {
    throw std::invalid_argument("embed_b must be n x embed_dim");
  }
  Eigen::Index in = input_dim();
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const auto& layer = hidden[i];
    if (layer.weight.cols() != in || layer.bias.size() != layer.weight.rows()) {
      throw std::invalid_argument("hidden layer " + std::to_string(i + 1) + " has inconsistent shape");
    }
    in = layer.weight.rows();
  }
  if (output.rows() != n || output.cols() != in) {
    throw std::invalid_argument("output weight must be n x width");
  }
  for (const auto& t : tensors(*this)) {
    if (!t.map().allFinite()) throw std::invalid_argument("tensor " + t.name + " has non-finite entries");
  }
  for (const auto& o : overrides) {
    if (o.layer < 1 || o.layer > depth() ||
        static_cast<int>(o.neurons.size()) != width(o.layer)) {
      throw std::invalid_argument("override does not match a hidden layer");
    }
  }
}

const LayerOverride* NetworkParams::override_for(int layer) const {
  for (const auto& o : overrides) {
    if (o.layer == layer) return &o;
  }
  return nullptr;
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams z;
  z.kind = kind;
  z.n = n;
  z.embed_dim = embed_dim;
  z.embed_a = Eigen::MatrixXd::Zero(embed_a.rows(), embed_a.cols());
  z.embed_b = Eigen::MatrixXd::Zero(embed_b.rows(), embed_b.cols());
  for (const auto& layer : hidden) {
    z.hidden.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  z.output = Eigen::MatrixXd::Zero(output.rows(), output.cols());
  return z;
}

namespace {

template <typename Params, typename Ref, typename Ptr>
std::vector<Ref> collect_tensors(Params& p) {
  std::vector<Ref> out;
  auto add = [&](std::string name, auto& m) {
    if (m.size() == 0) return;
    out.push_back(Ref{std::move(name), static_cast<Ptr>(m.data()), m.rows(), m.cols()});
  };
  add("embed_a", p.embed_a);
  add("embed_b", p.embed_b);
  for (std::size_t i = 0; i < p.hidden.size(); ++i) {
    add("hidden." + std::to_string(i) + ".weight", p.hidden[i].weight);
    add("hidden." + std::to_string(i) + ".bias", p.hidden[i].bias);
  }
  add("output", p.output);
  return out;
}

}  // namespace

std::vector<TensorRef> tensors(NetworkParams& params) {
  return collect_tensors<NetworkParams, TensorRef, double*>(params);
}

std::vector<ConstTensorRef> tensors(const NetworkParams& params) {
  return collect_tensors<const NetworkParams, ConstTensorRef, const double*>(params);
}

NetworkParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0x1417));
  auto fill = [&rng](auto& m, double fan_in) {
    const double s = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-s, s);
  };
  NetworkParams p;
  p.kind = config.kind;
  p.n = config.n;
  p.embed_dim = config.kind == ModelKind::OneHotMlp ? 0 : config.embed_dim;
  if (config.kind != ModelKind::OneHotMlp) {
    p.embed_a.resize(config.n, config.embed_dim);
    fill(p.embed_a, 1.0);
  }
  if (config.kind == ModelKind::EmbedMlp) {
    p.embed_b.resize(config.n, config.embed_dim);
    fill(p.embed_b, 1.0);
  }
  int in = p.input_dim();
  for (int l = 0; l < config.depth; ++l) {
    DenseLayer layer{Eigen::MatrixXd(config.width, in), Eigen::VectorXd(config.width)};
    fill(layer.weight, in);
    fill(layer.bias, in);
    p.hidden.push_back(std::move(layer));
    in = config.width;
  }
  p.output.resize(config.n, in);
  fill(p.output, in);
  return p;
}

double l2_norm_squared(const NetworkParams& params) {
  double total = 0.0;
  for (const auto& t : tensors(params)) total += t.map().squaredNorm();
  return total;
}

// ---------------------------------------------------------------- engine

namespace detail {

void Engine::build_token_tables(const NetworkParams& p) {
  const auto& w1 = p.hidden.front().weight;
  const auto n = p.n;
  switch (p.kind) {
    case ModelKind::OneHotMlp:
      table_a_ = w1.leftCols(n);
      table_b_ = w1.rightCols(n);
      break;
    case ModelKind::EmbedMlp:
      table_a_.noalias() = w1.leftCols(p.embed_dim) * p.embed_a.transpose();
      table_b_.noalias() = w1.rightCols(p.embed_dim) * p.embed_b.transpose();
      break;
    case ModelKind::MeanEmbed:
      table_a_.noalias() = 0.5 * (w1 * p.embed_a.transpose());
      table_b_ = table_a_;
      break;
  }
}

void Engine::forward(const NetworkParams& p, std::span<const Triple> batch) {
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  const auto depth = p.hidden.size();
  pre_.resize(depth);
  act_.resize(depth);
  build_token_tables(p);

  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = p.hidden[l];
    auto& pre = pre_[l];
    if (l == 0) {
      pre.resize(layer.weight.rows(), bsz);
      for (Eigen::Index i = 0; i < bsz; ++i) {
        const auto& t = batch[static_cast<std::size_t>(i)];
        pre.col(i) = table_a_.col(t.a) + table_b_.col(t.b) + layer.bias;
      }
    } else {
      pre.noalias() = layer.weight * act_[l - 1];
      pre.colwise() += layer.bias;
    }
    if (const auto* o = p.override_for(static_cast<int>(l) + 1)) {
      for (Eigen::Index j = 0; j < pre.rows(); ++j) {
        const auto& fit = o->neurons[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < bsz; ++i) {
          const auto& t = batch[static_cast<std::size_t>(i)];
          pre(j, i) = fit ? fit->evaluate(t.a, t.b) : 0.0;
        }
      }
    }
    act_[l] = pre.cwiseMax(0.0);
  }
  logits_.noalias() = p.output * act_.back();
}

double Engine::forward_backward(const NetworkParams& p, std::span<const Triple> batch,
                                NetworkParams& grad) {
  if (!p.overrides.empty()) {
    throw std::logic_error("gradients are not defined for networks with fitted overrides");
  }
  forward(p, batch);
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(bsz);

  // Softmax cross-entropy; dz = (softmax - onehot) / B.
  double loss = 0.0;
  dz_.resize(logits_.rows(), bsz);
  for (Eigen::Index i = 0; i < bsz; ++i) {
    const auto z = logits_.col(i);
    const double zmax = z.maxCoeff();
    auto e = dz_.col(i);
    e = (z.array() - zmax).exp().matrix();
    const double sum = e.sum();
    const auto c = batch[static_cast<std::size_t>(i)].c;
    loss += std::log(sum) - (z(c) - zmax);
    e *= inv_b / sum;
    e(c) -= inv_b;
  }
  loss *= inv_b;

  grad.output.noalias() = dz_ * act_.back().transpose();
  dh_.noalias() = p.output.transpose() * dz_;

  for (std::size_t l = p.hidden.size(); l-- > 0;) {
    // dh becomes d(pre) in place.
    dh_.array() *= (pre_[l].array() > 0.0).cast<double>();
    auto& g = grad.hidden[l];
    g.bias = dh_.rowwise().sum();
    if (l > 0) {
      g.weight.noalias() = dh_ * act_[l - 1].transpose();
      dh_prev_.noalias() = p.hidden[l].weight.transpose() * dh_;
      dh_.swap(dh_prev_);
    }
  }

  // First layer: scatter d(pre_1) into the token tables.
  const auto width1 = p.hidden.front().weight.rows();
  grad_table_a_.setZero(width1, p.n);
  grad_table_b_.setZero(width1, p.n);
  for (Eigen::Index i = 0; i < bsz; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    grad_table_a_.col(t.a) += dh_.col(i);
    grad_table_b_.col(t.b) += dh_.col(i);
  }
  auto& w1 = p.hidden.front().weight;
  auto& gw1 = grad.hidden.front().weight;
  switch (p.kind) {
    case ModelKind::OneHotMlp:
      gw1.leftCols(p.n) = grad_table_a_;
      gw1.rightCols(p.n) = grad_table_b_;
      break;
    case ModelKind::EmbedMlp:
      gw1.leftCols(p.embed_dim).noalias() = grad_table_a_ * p.embed_a;
      gw1.rightCols(p.embed_dim).noalias() = grad_table_b_ * p.embed_b;
      grad.embed_a.noalias() = grad_table_a_.transpose() * w1.leftCols(p.embed_dim);
      grad.embed_b.noalias() = grad_table_b_.transpose() * w1.rightCols(p.embed_dim);
      break;
    case ModelKind::MeanEmbed:
      grad_table_a_ += grad_table_b_;
      gw1.noalias() = 0.5 * (grad_table_a_ * p.embed_a);
      grad.embed_a.noalias() = 0.5 * (grad_table_a_.transpose() * w1);
      break;
  }
  return loss;
}

}  // namespace detail

// ---------------------------------------------------------------- evaluation

ForwardResult forward(const NetworkParams& params, Residue a, Residue b, bool capture) {
  const Modulus mod(params.n);
  const Triple t{static_cast<std::int32_t>(mod.canonical(a)), static_cast<std::int32_t>(mod.canonical(b)),
                 static_cast<std::int32_t>(mod.canonical(a + b))};
  detail::Engine engine;
  engine.forward(params, std::span<const Triple>(&t, 1));
  ForwardResult out;
  out.logits = engine.logits().col(0);
  if (capture) {
    for (const auto& pre : engine.preactivations()) out.preactivations.emplace_back(pre.col(0));
  }
  return out;
}

BatchActivations forward_batch(const NetworkParams& params, std::span<const Triple> batch,
                               bool keep_preactivations) {
  detail::Engine engine;
  engine.forward(params, batch);
  BatchActivations out;
  out.logits = engine.logits();
  if (keep_preactivations) out.preactivations = engine.preactivations();
  return out;
}

std::vector<Triple> all_pairs(std::int64_t n) {
  std::vector<Triple> pairs;
  pairs.reserve(static_cast<std::size_t>(n * n));
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t b = 0; b < n; ++b) {
      pairs.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                       static_cast<std::int32_t>((a + b) % n)});
    }
  }
  return pairs;
}

namespace {

std::vector<std::size_t> nonempty_indices(const Dataset& data, Split split) {
  auto idx = data.indices(split);
  if (idx.empty()) throw std::invalid_argument("evaluation subset is empty");
  return idx;
}

void check_logits(const Eigen::MatrixXd& logits, const Dataset& data) {
  if (logits.rows() != data.n || logits.cols() != static_cast<Eigen::Index>(data.pairs.size())) {
    throw std::invalid_argument("logits do not cover the dataset");
  }
}

}  // namespace

Eigen::MatrixXd all_logits(const NetworkParams& params) {
  const auto pairs = all_pairs(params.n);
  detail::Engine engine;
  engine.forward(params, pairs);
  return engine.logits();
}

LossAndGradient loss_and_gradient(const NetworkParams& params, std::span<const Triple> batch,
                                  double l2) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  LossAndGradient out;
  out.gradient = params.zeros_like();
  detail::Engine engine;
  out.cross_entropy = engine.forward_backward(params, batch, out.gradient);
  out.loss = out.cross_entropy + l2 * l2_norm_squared(params);
  if (l2 != 0.0) {
    auto g = tensors(out.gradient);
    const auto p = tensors(params);
    for (std::size_t i = 0; i < g.size(); ++i) g[i].map() += 2.0 * l2 * p[i].map();
  }
  return out;
}

AccuracyReport accuracy(const Eigen::MatrixXd& logits, const Dataset& data, Split split) {
  check_logits(logits, data);
  AccuracyReport r;
  for (const auto i : nonempty_indices(data, split)) {
    const auto z = logits.col(static_cast<Eigen::Index>(i));
    Eigen::Index best = 0;
    const double zmax = z.maxCoeff(&best);  // first maximal index
    if ((z.array() == zmax).count() > 1) ++r.ties;
    if (best == data.pairs[i].c) ++r.correct;
    ++r.total;
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

AccuracyReport accuracy(const NetworkParams& params, const Dataset& data, Split split) {
  return accuracy(all_logits(params), data, split);
}

double margin(const Eigen::MatrixXd& logits, const Dataset& data, Split split) {
  check_logits(logits, data);
  const auto idx = nonempty_indices(data, split);
  double total = 0.0;
  for (const auto i : idx) {
    const auto z = logits.col(static_cast<Eigen::Index>(i));
    const auto c = data.pairs[i].c;
    double other = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      if (k != c) other = std::max(other, z(k));
    }
    total += z(c) - other;
  }
  return total / static_cast<double>(idx.size());
}

double margin(const NetworkParams& params, const Dataset& data, Split split) {
  return margin(all_logits(params), data, split);
}

double cross_entropy(const Eigen::MatrixXd& logits, const Dataset& data, Split split) {
  check_logits(logits, data);
  const auto idx = nonempty_indices(data, split);
  double total = 0.0;
  for (const auto i : idx) {
    const auto z = logits.col(static_cast<Eigen::Index>(i));
    const double zmax = z.maxCoeff();
    total += std::log((z.array() - zmax).exp().sum()) - (z(data.pairs[i].c) - zmax);
  }
  return total / static_cast<double>(idx.size());
}

double cross_entropy(const NetworkParams& params, const Dataset& data, Split split) {
  return cross_entropy(all_logits(params), data, split);
}

std::vector<ActivationGrid> activation_grids(const NetworkParams& params, int layer) {
  if (layer < 1 || layer > params.depth()) {
    throw std::out_of_range("activation_grids: layer " + std::to_string(layer) + " does not exist");
  }
  const auto n = params.n;
  const auto pairs = all_pairs(n);
  detail::Engine engine;
  engine.forward(params, pairs);
  const auto& pre = engine.preactivations()[static_cast<std::size_t>(layer - 1)];
  std::vector<ActivationGrid> grids;
  grids.reserve(static_cast<std::size_t>(pre.rows()));
  for (Eigen::Index j = 0; j < pre.rows(); ++j) {
    ActivationGrid g;
    g.n = n;
    g.layer = layer;
    g.neuron = static_cast<int>(j);
    g.values.resize(n, n);
    // Column index a * n + b; row-major reshape onto (a, b).
    for (std::int64_t a = 0; a < n; ++a) {
      for (std::int64_t b = 0; b < n; ++b) g.values(a, b) = pre(j, a * n + b);
    }
    grids.push_back(std::move(g));
  }
  return grids;
}

}  // namespace acrt
