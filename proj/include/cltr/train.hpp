#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cltr/dataset.hpp"
#include "cltr/estimators.hpp"
#include "cltr/metrics.hpp"
#include "cltr/ranker.hpp"

namespace cltr {

struct TrainConfig {
  double learning_rate = 0.02;
  int epochs = 32;
  double sigma = 1.0;  // pairwise logistic sharpness
  std::uint64_t seed = 0;
  double adagrad_epsilon = 1e-8;
  double dropout = 0.0;  // off unless set
};

/// d loss / d score of the |delta lambda|-weighted pairwise logistic loss.
/// Every pair with labels l_i > l_j contributes
///   -/+ (l_i - l_j) |lambda(r_i) - lambda(r_j)| sigma logistic(-sigma (s_i - s_j))
/// to documents i and j, where r are the ranks induced by the current scores.
std::vector<double> lambda_gradients(std::span<const double> scores, std::span<const double> labels,
                                     const RankWeight& lambda, double sigma);

/// sum over pairs l_i > l_j of (l_i - l_j) |delta lambda| log(1 + exp(-sigma (s_i - s_j))).
double pairwise_loss(std::span<const double> scores, std::span<const double> labels,
                     const RankWeight& lambda, double sigma);

/// Loss of one query given its raw scores; writes d loss / d score.
using QueryObjective = std::function<double(std::size_t query_index, std::span<const double> scores,
                                            std::span<double> score_grad)>;

/// Higher is better.
using Validator = std::function<double(const ScoringModel&)>;

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> validation;
  std::optional<double> test_ndcg10;  // oracle-only diagnostic
};

struct TrainResult {
  ScoringModel model;
  std::vector<EpochRecord> trace;  // epoch 0 is the initial model
  int best_epoch = 0;
  std::size_t uncovered_documents = 0;
};

/// Per-query AdaGrad over queries in a seeded shuffled order. Returns the
/// epoch with the best validation score (the last epoch without a
/// validator; earliest on ties).
TrainResult fit(std::span<const Query> split, const QueryObjective& objective, ScoringModel model,
                const TrainConfig& config, const Validator& validate = {},
                std::span<const Query> test = {});

/// Lambda-gradient training against real-valued per-document labels,
/// labels[q][doc_id].
TrainResult train_with_labels(std::span<const Query> split,
                              const std::vector<std::vector<double>>& labels, ScoringModel model,
                              const TrainConfig& config, const Validator& validate = {},
                              std::span<const Query> test = {});

/// Labels are pseudo-label gamma_hat; documents absent from `pseudo` get 0
/// and are counted in TrainResult::uncovered_documents.
TrainResult train_counterfactual(std::span<const Query> split, const PseudoLabels& pseudo,
                                 ScoringModel model, const TrainConfig& config,
                                 const Validator& validate = {}, std::span<const Query> test = {});

/// Supervised training on the true binary labels; validated by the DCG
/// metric value on `validation` when nonempty.
TrainResult train_full_info(std::span<const Query> split, ScoringModel model,
                            const TrainConfig& config, std::span<const Query> validation = {},
                            std::span<const Query> test = {});

/// Full-info training on a seeded subset of `n_queries` training queries
/// (kept in their original order).
TrainResult train_production(std::span<const Query> split, int n_queries, ScoringModel model,
                             const TrainConfig& config, std::uint64_t subset_seed,
                             std::span<const Query> validation = {});

std::vector<std::vector<double>> binary_labels(std::span<const Query> split);

/// Columns epoch,train_loss,validation_delta_hat,test_ndcg10 (empty cells
/// where not computed).
void write_trace_csv(std::ostream& out, const std::vector<EpochRecord>& trace);

}  // namespace cltr
