#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cltr/dataset.hpp"
#include "cltr/ranker.hpp"

namespace cltr {

/// Metric weight of a 1-based rank.
using RankWeight = std::function<double(int rank)>;

/// 1 / log2(rank + 1).
double dcg_weight(int rank);
RankWeight dcg_rank_weight();

/// 1 for ranks <= k, 0 below.
RankWeight top_k_rank_weight(int k);

/// nDCG@k of one ranking against per-doc gains. A query without positive
/// gains scores 1.0.
double ndcg_at_k(const Ranking& ranking, std::span<const double> gains, int k);

/// Mean nDCG@k over the split, binary labels as gains.
double evaluate_ndcg(const ScoringModel& model, std::span<const Query> split, int k = 10);

/// Sum over queries (uniform weight) of sum_d gamma_{q,d} lambda(d | q, f),
/// with gamma = binary labels.
double true_delta(const ScoringModel& model, std::span<const Query> split,
                  const RankWeight& lambda);

/// Same with caller-provided relevance probabilities, gamma[q][doc_id].
double true_delta(const ScoringModel& model, std::span<const Query> split,
                  const std::vector<std::vector<double>>& gamma, const RankWeight& lambda);

}  // namespace cltr
