#include "cltr/ranker.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cltr {
namespace {

constexpr double kSigmoidClamp = 30.0;

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
double elu_derivative(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

double sigmoid(double x) {
  x = std::clamp(x, -kSigmoidClamp, kSigmoidClamp);
  return 1.0 / (1.0 + std::exp(-x));
}

// Sizes of each layer's input, ending with the single output.
std::vector<int> layer_widths(const Architecture& arch, int feature_dim) {
  std::vector<int> widths{feature_dim};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(1);
  return widths;
}

}  // namespace

Head parse_head(std::string_view name) {
  if (name == "none") return Head::kNone;
  if (name == "sigmoid") return Head::kSigmoid;
  if (name == "softmax") return Head::kSoftmax;
  if (name == "soft-min-max") return Head::kSoftMinMax;
  throw std::invalid_argument("unknown head '" + std::string(name) + "'");
}

std::string_view to_string(Head head) {
  switch (head) {
    case Head::kNone: return "none";
    case Head::kSigmoid: return "sigmoid";
    case Head::kSoftmax: return "softmax";
    case Head::kSoftMinMax: return "soft-min-max";
  }
  return "none";
}

Architecture Architecture::mlp(std::vector<int> hidden_sizes) {
  if (hidden_sizes.empty()) throw std::invalid_argument("mlp needs at least one hidden layer");
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("hidden layer sizes must be >= 1");
  return Architecture{std::move(hidden_sizes)};
}

Architecture Architecture::parse(std::string_view text) {
  if (text == "linear") return linear();
  if (text.substr(0, 4) != "mlp:") throw std::invalid_argument("bad architecture '" + std::string(text) + "'");
  std::vector<int> sizes;
  std::string_view rest = text.substr(4);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto token = rest.substr(0, comma);
    int h = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), h);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw std::invalid_argument("bad architecture '" + std::string(text) + "'");
    sizes.push_back(h);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return mlp(std::move(sizes));
}

std::string Architecture::to_string() const {
  if (is_linear()) return "linear";
  std::string s = "mlp:";
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(hidden[i]);
  }
  return s;
}

ScoringModel::ScoringModel(Architecture architecture, int feature_dim, Head head)
    : architecture_(std::move(architecture)), feature_dim_(feature_dim), head_(head) {
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  params_.assign(parameter_count(architecture_, feature_dim_), 0.0);
}

std::size_t ScoringModel::parameter_count(const Architecture& architecture, int feature_dim) {
  const auto widths = layer_widths(architecture, feature_dim);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l + 1]) * (widths[l] + 1);
  return n;
}

ScoringModel ScoringModel::initialized(Architecture architecture, int feature_dim, Head head,
                                       std::uint64_t seed) {
  ScoringModel model(std::move(architecture), feature_dim, head);
  std::mt19937_64 rng(seed);
  const auto widths = layer_widths(model.architecture_, feature_dim);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    const std::size_t n = static_cast<std::size_t>(widths[l + 1]) * (widths[l] + 1);
    for (std::size_t i = 0; i < n; ++i) model.params_[offset + i] = uniform(rng);
    offset += n;
  }
  return model;
}

void ScoringModel::check_features(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != feature_dim_)
    throw std::invalid_argument("feature length " + std::to_string(features.size()) +
                                " does not match model dimension " + std::to_string(feature_dim_));
}

double ScoringModel::score(std::span<const double> features) const {
  ForwardCache cache;
  return score(features, cache);
}

double ScoringModel::score(std::span<const double> features, ForwardCache& cache,
                           const DropoutSpec* dropout) const {
  check_features(features);
  const auto& hidden = architecture_.hidden;
  const std::size_t n_hidden = hidden.size();
  cache.pre.resize(n_hidden);
  cache.post.resize(n_hidden);
  cache.mask.resize(n_hidden);

  const bool use_dropout = dropout != nullptr && dropout->rate > 0.0 && dropout->rng != nullptr;
  std::span<const double> input = features;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    const std::size_t in = input.size();
    const std::size_t out = static_cast<std::size_t>(hidden[l]);
    auto& pre = cache.pre[l];
    auto& post = cache.post[l];
    pre.resize(out);
    post.resize(out);
    const double* w = params_.data() + offset;
    const double* b = w + out * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in;
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += row[i] * input[i];
      pre[o] = z;
      post[o] = elu(z);
    }
    auto& mask = cache.mask[l];
    if (use_dropout && l + 2 >= n_hidden) {
      std::bernoulli_distribution keep(1.0 - dropout->rate);
      mask.resize(out);
      for (std::size_t o = 0; o < out; ++o) {
        mask[o] = keep(*dropout->rng) ? 1.0 / (1.0 - dropout->rate) : 0.0;
        post[o] *= mask[o];
      }
    } else {
      mask.clear();
    }
    offset += out * (in + 1);
    input = post;
  }
  const double* w = params_.data() + offset;
  double s = w[input.size()];
  for (std::size_t i = 0; i < input.size(); ++i) s += w[i] * input[i];
  return s;
}

std::vector<double> ScoringModel::grad_score(std::span<const double> features) const {
  ForwardCache cache;
  score(features, cache);
  std::vector<double> grad(params_.size(), 0.0);
  std::vector<double> scratch;
  accumulate_gradient(features, cache, 1.0, grad, scratch);
  return grad;
}

void ScoringModel::accumulate_gradient(std::span<const double> features, const ForwardCache& cache,
                                       double upstream, std::span<double> grad,
                                       std::vector<double>& scratch) const {
  check_features(features);
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
  const auto widths = layer_widths(architecture_, feature_dim_);
  const std::size_t n_layers = widths.size() - 1;

  std::vector<std::size_t> offsets(n_layers);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offsets[l] = offset;
    offset += static_cast<std::size_t>(widths[l + 1]) * (widths[l] + 1);
  }

  auto layer_input = [&](std::size_t l) -> std::span<const double> {
    return l == 0 ? features : std::span<const double>(cache.post[l - 1]);
  };

  // Output layer.
  std::size_t l = n_layers - 1;
  std::span<const double> in = layer_input(l);
  double* g = grad.data() + offsets[l];
  const double* w = params_.data() + offsets[l];
  for (std::size_t i = 0; i < in.size(); ++i) g[i] += upstream * in[i];
  g[in.size()] += upstream;

  // delta: d score / d (output of layer l-1), scaled by upstream.
  std::vector<double> delta(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) delta[i] = upstream * w[i];

  while (l > 0) {
    --l;
    const std::size_t out = static_cast<std::size_t>(widths[l + 1]);
    in = layer_input(l);
    const auto& mask = cache.mask[l];
    const auto& pre = cache.pre[l];
    for (std::size_t o = 0; o < out; ++o) {
      if (!mask.empty()) delta[o] *= mask[o];
      delta[o] *= elu_derivative(pre[o]);
    }
    g = grad.data() + offsets[l];
    w = params_.data() + offsets[l];
    for (std::size_t o = 0; o < out; ++o) {
      double* row = g + o * in.size();
      for (std::size_t i = 0; i < in.size(); ++i) row[i] += delta[o] * in[i];
    }
    double* gb = g + out * in.size();
    for (std::size_t o = 0; o < out; ++o) gb[o] += delta[o];
    if (l == 0) break;
    scratch.assign(in.size(), 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in.size();
      for (std::size_t i = 0; i < in.size(); ++i) scratch[i] += row[i] * delta[o];
    }
    delta.swap(scratch);
  }
}

std::vector<double> score_query(const ScoringModel& model, const Query& query) {
  std::vector<double> scores(query.documents.size());
  ForwardCache cache;
  for (std::size_t i = 0; i < scores.size(); ++i)
    scores[i] = model.score(query.documents[i].features, cache);
  return scores;
}

Ranking rank_by_scores(int query_id, std::span<const double> scores) {
  Ranking ranking{query_id, std::vector<int>(scores.size())};
  std::iota(ranking.order.begin(), ranking.order.end(), 0);
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return ranking;
}

Ranking rank_query(const ScoringModel& model, const Query& query) {
  return rank_by_scores(query.query_id, score_query(model, query));
}

std::vector<int> ranks_of(const Ranking& ranking) {
  std::vector<int> ranks(ranking.order.size());
  for (std::size_t r = 0; r < ranking.order.size(); ++r)
    ranks[static_cast<std::size_t>(ranking.order[r])] = static_cast<int>(r) + 1;
  return ranks;
}

std::vector<double> apply_head(Head head, std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (scores.empty()) return out;
  switch (head) {
    case Head::kNone:
      break;
    case Head::kSigmoid:
      for (auto& v : out) v = sigmoid(v);
      break;
    case Head::kSoftmax: {
      const double m = *std::max_element(scores.begin(), scores.end());
      double z = 0.0;
      for (auto& v : out) z += (v = std::exp(v - m));
      for (auto& v : out) v /= z;
      break;
    }
    case Head::kSoftMinMax: {
      const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
      if (*lo == *hi) {
        std::fill(out.begin(), out.end(), 0.5);
        break;
      }
      const double top = *hi;
      const double floor = std::exp(*lo - top);
      const double denom = 1.0 - floor;
      for (auto& v : out) v = std::clamp((std::exp(v - top) - floor) / denom, 0.0, 1.0);
      out[static_cast<std::size_t>(lo - scores.begin())] = 0.0;
      out[static_cast<std::size_t>(hi - scores.begin())] = 1.0;
      break;
    }
  }
  return out;
}

std::vector<double> head_vjp(Head head, std::span<const double> scores,
                             std::span<const double> upstream) {
  if (scores.size() != upstream.size()) throw std::invalid_argument("head_vjp: size mismatch");
  std::vector<double> grad(upstream.begin(), upstream.end());
  if (scores.empty() || head == Head::kNone) return grad;
  const auto y = apply_head(head, scores);
  switch (head) {
    case Head::kNone:
      break;
    case Head::kSigmoid:
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = upstream[i] * y[i] * (1.0 - y[i]);
      break;
    case Head::kSoftmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) dot += upstream[i] * y[i];
      for (std::size_t i = 0; i < y.size(); ++i) grad[i] = y[i] * (upstream[i] - dot);
      break;
    }
    case Head::kSoftMinMax: {
      const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
      if (*lo == *hi) {
        std::fill(grad.begin(), grad.end(), 0.0);
        break;
      }
      const std::size_t imin = static_cast<std::size_t>(lo - scores.begin());
      const std::size_t imax = static_cast<std::size_t>(hi - scores.begin());
      const double top = *hi;
      const double floor = std::exp(*lo - top);
      const double denom = 1.0 - floor;
      double via_min = 0.0;
      double via_max = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        via_min += upstream[i] * (y[i] - 1.0);
        via_max -= upstream[i] * y[i];
      }
      for (std::size_t j = 0; j < y.size(); ++j)
        grad[j] = upstream[j] * std::exp(scores[j] - top) / denom;
      grad[imin] += via_min * floor / denom;
      grad[imax] += via_max / denom;
      break;
    }
  }
  return grad;
}

void save_model(const ScoringModel& model, std::ostream& out) {
  out << "cltr-model 1\n";
  out << "architecture " << model.architecture().to_string() << '\n';
  out << "feature_dim " << model.feature_dim() << '\n';
  out << "head " << to_string(model.head()) << '\n';
  out << "parameters " << model.parameters().size() << '\n';
  char buf[40];
  for (double p : model.parameters()) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", p);
    out << buf;
  }
  out << "end\n";
}

ScoringModel load_model(std::istream& in) {
  auto expect = [&](const std::string& key) {
    std::string k;
    if (!(in >> k) || k != key) throw std::runtime_error("checkpoint: expected '" + key + "'");
  };
  std::string version;
  expect("cltr-model");
  in >> version;
  if (version != "1") throw std::runtime_error("checkpoint: unsupported version " + version);
  std::string arch, head;
  int dim = 0;
  std::size_t n = 0;
  expect("architecture");
  in >> arch;
  expect("feature_dim");
  in >> dim;
  expect("head");
  in >> head;
  expect("parameters");
  in >> n;
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  ScoringModel model(Architecture::parse(arch), dim, parse_head(head));
  if (n != model.parameters().size())
    throw std::runtime_error("checkpoint: parameter count does not match architecture");
  std::string token;
  for (auto& p : model.parameters()) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated parameters");
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), p);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw std::runtime_error("checkpoint: bad parameter '" + token + "'");
  }
  // A cut inside the last number would otherwise still parse.
  expect("end");
  return model;
}

}  // namespace cltr
