#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cltr/dataset.hpp"

namespace cltr {

/// Regression-head activation applied to the raw scores of one query.
enum class Head { kNone, kSigmoid, kSoftmax, kSoftMinMax };

Head parse_head(std::string_view name);
std::string_view to_string(Head head);

/// Either a linear scorer (no hidden layers) or an elu MLP.
struct Architecture {
  std::vector<int> hidden;

  static Architecture linear() { return {}; }
  static Architecture mlp(std::vector<int> hidden_sizes);
  bool is_linear() const { return hidden.empty(); }

  /// "linear" or "mlp:32,16".
  static Architecture parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const Architecture&) const = default;
};

/// Intermediate activations of one forward pass, reused across calls.
struct ForwardCache {
  std::vector<std::vector<double>> pre;    // pre-activation per hidden layer
  std::vector<std::vector<double>> post;   // elu output (after dropout) per hidden layer
  std::vector<std::vector<double>> mask;   // dropout scale per hidden unit, empty when off
};

/// Inverted dropout on the last two hidden layers.
struct DropoutSpec {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

/// Document scorer with a flat parameter vector. Layer layout, per layer:
/// row-major weights (out x in) followed by the out biases; the final layer
/// has a single output.
class ScoringModel {
 public:
  ScoringModel(Architecture architecture, int feature_dim, Head head = Head::kNone);

  /// Parameters uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static ScoringModel initialized(Architecture architecture, int feature_dim, Head head,
                                  std::uint64_t seed);

  static std::size_t parameter_count(const Architecture& architecture, int feature_dim);

  const Architecture& architecture() const { return architecture_; }
  int feature_dim() const { return feature_dim_; }
  Head head() const { return head_; }
  void set_head(Head head) { head_ = head; }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  /// Raw score; the head is not applied.
  double score(std::span<const double> features) const;
  double score(std::span<const double> features, ForwardCache& cache,
               const DropoutSpec* dropout = nullptr) const;

  /// d score / d parameters.
  std::vector<double> grad_score(std::span<const double> features) const;

  /// grad += upstream * d score / d parameters, using the activations that
  /// `score(features, cache, ...)` left in `cache`.
  void accumulate_gradient(std::span<const double> features, const ForwardCache& cache,
                           double upstream, std::span<double> grad,
                           std::vector<double>& scratch) const;

  bool operator==(const ScoringModel&) const = default;

 private:
  void check_features(std::span<const double> features) const;

  Architecture architecture_;
  int feature_dim_;
  Head head_;
  std::vector<double> params_;
};

/// Displayed order of a query's documents; `order[r - 1]` holds rank r.
struct Ranking {
  int query_id = 0;
  std::vector<int> order;

  bool operator==(const Ranking&) const = default;
};

std::vector<double> score_query(const ScoringModel& model, const Query& query);

/// Descending score, ties broken by ascending doc id.
Ranking rank_by_scores(int query_id, std::span<const double> scores);
Ranking rank_query(const ScoringModel& model, const Query& query);

/// 1-based rank of every doc id.
std::vector<int> ranks_of(const Ranking& ranking);

/// Maps one query's scores into [0,1]. All-equal input to soft-min-max gives
/// 0.5 everywhere.
std::vector<double> apply_head(Head head, std::span<const double> scores);

/// Vector-Jacobian product of `apply_head`: returns upstream^T * d head / d scores.
std::vector<double> head_vjp(Head head, std::span<const double> scores,
                             std::span<const double> upstream);

/// Text checkpoint:
///   cltr-model 1
///   architecture <linear|mlp:h1,h2,...>
///   feature_dim <d>
///   head <none|sigmoid|softmax|soft-min-max>
///   parameters <n>
///   <n lines, one parameter each, %.17g>
///   end
void save_model(const ScoringModel& model, std::ostream& out);
ScoringModel load_model(std::istream& in);

}  // namespace cltr
