#include "cltr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "cltr/random.hpp"

namespace cltr {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

template <typename PairFn>
void for_each_preference_pair(std::span<const double> scores, std::span<const double> labels,
                              const RankWeight& lambda, PairFn&& fn) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels size mismatch");
  const auto ranks = ranks_of(rank_by_scores(0, scores));
  std::vector<double> weight(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) weight[i] = lambda(ranks[i]);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (!(labels[i] > labels[j])) continue;
      const double delta = (labels[i] - labels[j]) * std::abs(weight[i] - weight[j]);
      if (delta == 0.0) continue;
      fn(i, j, delta);
    }
  }
}

}  // namespace

std::vector<double> lambda_gradients(std::span<const double> scores, std::span<const double> labels,
                                     const RankWeight& lambda, double sigma) {
  std::vector<double> grad(scores.size(), 0.0);
  for_each_preference_pair(scores, labels, lambda, [&](std::size_t i, std::size_t j, double delta) {
    const double g = delta * sigma * logistic(-sigma * (scores[i] - scores[j]));
    grad[i] -= g;
    grad[j] += g;
  });
  return grad;
}

double pairwise_loss(std::span<const double> scores, std::span<const double> labels,
                     const RankWeight& lambda, double sigma) {
  double loss = 0.0;
  for_each_preference_pair(scores, labels, lambda, [&](std::size_t i, std::size_t j, double delta) {
    loss += delta * softplus(-sigma * (scores[i] - scores[j]));
  });
  return loss;
}

TrainResult fit(std::span<const Query> split, const QueryObjective& objective, ScoringModel model,
                const TrainConfig& config, const Validator& validate, std::span<const Query> test) {
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (split.empty()) throw std::invalid_argument("cannot train on an empty split");

  const std::size_t n_params = model.parameters().size();
  const std::size_t max_docs = max_documents(split);
  std::vector<ForwardCache> caches(max_docs);
  std::vector<double> scores, score_grad, grad(n_params), accum(n_params, 0.0), scratch;

  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 dropout_rng(derive_seed(config.seed, "dropout"));
  const DropoutSpec dropout{config.dropout, &dropout_rng};
  const DropoutSpec* dropout_ptr = config.dropout > 0.0 ? &dropout : nullptr;

  auto epoch_loss = [&](const ScoringModel& m) {
    double total = 0.0;
    std::vector<double> s, g;
    for (std::size_t q = 0; q < split.size(); ++q) {
      s = score_query(m, split[q]);
      g.assign(s.size(), 0.0);
      total += objective(q, s, g);
    }
    return total / static_cast<double>(split.size());
  };
  auto record = [&](int epoch, const ScoringModel& m) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss(m);
    if (validate) rec.validation = validate(m);
    if (!test.empty()) rec.test_ndcg10 = evaluate_ndcg(m, test, 10);
    return rec;
  };

  TrainResult result{model, {}, 0, 0};
  result.trace.push_back(record(0, model));
  std::optional<double> best = result.trace.back().validation;

  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    for (const std::size_t q : order) {
      const auto& docs = split[q].documents;
      scores.resize(docs.size());
      for (std::size_t d = 0; d < docs.size(); ++d)
        scores[d] = model.score(docs[d].features, caches[d], dropout_ptr);
      score_grad.assign(docs.size(), 0.0);
      objective(q, scores, score_grad);

      std::fill(grad.begin(), grad.end(), 0.0);
      bool any = false;
      for (std::size_t d = 0; d < docs.size(); ++d) {
        if (score_grad[d] == 0.0) continue;
        any = true;
        model.accumulate_gradient(docs[d].features, caches[d], score_grad[d], grad, scratch);
      }
      if (!any) continue;
      auto params = model.parameters();
      for (std::size_t p = 0; p < n_params; ++p) {
        accum[p] += grad[p] * grad[p];
        params[p] -= config.learning_rate * grad[p] / (std::sqrt(accum[p]) + config.adagrad_epsilon);
      }
    }
    result.trace.push_back(record(epoch, model));
    const auto& v = result.trace.back().validation;
    if (!validate || (v && (!best || *v > *best))) {
      best = v;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

TrainResult train_with_labels(std::span<const Query> split,
                              const std::vector<std::vector<double>>& labels, ScoringModel model,
                              const TrainConfig& config, const Validator& validate,
                              std::span<const Query> test) {
  if (labels.size() != split.size()) throw std::invalid_argument("labels do not match split");
  const RankWeight lambda = dcg_rank_weight();
  const double sigma = config.sigma;
  QueryObjective objective = [&](std::size_t q, std::span<const double> scores,
                                 std::span<double> score_grad) {
    const auto g = lambda_gradients(scores, labels[q], lambda, sigma);
    std::copy(g.begin(), g.end(), score_grad.begin());
    return pairwise_loss(scores, labels[q], lambda, sigma);
  };
  return fit(split, objective, std::move(model), config, validate, test);
}

TrainResult train_counterfactual(std::span<const Query> split, const PseudoLabels& pseudo,
                                 ScoringModel model, const TrainConfig& config,
                                 const Validator& validate, std::span<const Query> test) {
  std::vector<std::vector<double>> labels(split.size());
  std::size_t uncovered = 0;
  for (std::size_t q = 0; q < split.size(); ++q) {
    for (const auto& d : split[q].documents) {
      const auto it = pseudo.find({split[q].query_id, d.doc_id});
      if (it == pseudo.end()) {
        ++uncovered;
        labels[q].push_back(0.0);
      } else {
        labels[q].push_back(it->second.gamma_hat);
      }
    }
  }
  auto result = train_with_labels(split, labels, std::move(model), config, validate, test);
  result.uncovered_documents = uncovered;
  return result;
}

std::vector<std::vector<double>> binary_labels(std::span<const Query> split) {
  std::vector<std::vector<double>> labels(split.size());
  for (std::size_t q = 0; q < split.size(); ++q)
    for (const auto& d : split[q].documents) labels[q].push_back(d.binary_label);
  return labels;
}

TrainResult train_full_info(std::span<const Query> split, ScoringModel model,
                            const TrainConfig& config, std::span<const Query> validation,
                            std::span<const Query> test) {
  Validator validate;
  if (!validation.empty()) {
    const RankWeight lambda = dcg_rank_weight();
    validate = [validation, lambda](const ScoringModel& m) { return true_delta(m, validation, lambda); };
  }
  return train_with_labels(split, binary_labels(split), std::move(model), config, validate, test);
}

TrainResult train_production(std::span<const Query> split, int n_queries, ScoringModel model,
                             const TrainConfig& config, std::uint64_t subset_seed,
                             std::span<const Query> validation) {
  if (n_queries < 1 || static_cast<std::size_t>(n_queries) > split.size())
    throw std::invalid_argument("production ranker needs 1..|train| queries");
  std::vector<std::size_t> idx(split.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(subset_seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(n_queries));
  std::sort(idx.begin(), idx.end());
  std::vector<Query> subset;
  subset.reserve(idx.size());
  for (auto i : idx) subset.push_back(split[i]);
  return train_full_info(subset, std::move(model), config, validation);
}

void write_trace_csv(std::ostream& out, const std::vector<EpochRecord>& trace) {
  out << "epoch,train_loss,validation_delta_hat,test_ndcg10\n";
  char buf[64];
  for (const auto& rec : trace) {
    out << rec.epoch << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", rec.train_loss);
    out << buf << ',';
    if (rec.validation) {
      std::snprintf(buf, sizeof(buf), "%.10g", *rec.validation);
      out << buf;
    }
    out << ',';
    if (rec.test_ndcg10) {
      std::snprintf(buf, sizeof(buf), "%.10g", *rec.test_ndcg10);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace cltr
