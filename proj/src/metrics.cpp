#include "cltr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cltr {

double dcg_weight(int rank) { return 1.0 / std::log2(rank + 1.0); }

RankWeight dcg_rank_weight() { return [](int rank) { return dcg_weight(rank); }; }

RankWeight top_k_rank_weight(int k) {
  return [k](int rank) { return rank <= k ? 1.0 : 0.0; };
}

double ndcg_at_k(const Ranking& ranking, std::span<const double> gains, int k) {
  const std::size_t cutoff = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.order.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < cutoff; ++r)
    dcg += gains[static_cast<std::size_t>(ranking.order[r])] * dcg_weight(static_cast<int>(r) + 1);

  std::vector<double> ideal(gains.begin(), gains.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t r = 0; r < cutoff; ++r) idcg += ideal[r] * dcg_weight(static_cast<int>(r) + 1);
  if (idcg <= 0.0) return 1.0;
  return dcg / idcg;
}

double evaluate_ndcg(const ScoringModel& model, std::span<const Query> split, int k) {
  if (split.empty()) throw std::invalid_argument("evaluate_ndcg: empty split");
  double total = 0.0;
  std::vector<double> gains;
  for (const auto& q : split) {
    gains.clear();
    for (const auto& d : q.documents) gains.push_back(d.binary_label);
    total += ndcg_at_k(rank_query(model, q), gains, k);
  }
  return total / static_cast<double>(split.size());
}

double true_delta(const ScoringModel& model, std::span<const Query> split,
                  const std::vector<std::vector<double>>& gamma, const RankWeight& lambda) {
  if (split.empty()) throw std::invalid_argument("true_delta: empty split");
  if (gamma.size() != split.size()) throw std::invalid_argument("true_delta: gamma size mismatch");
  double total = 0.0;
  for (std::size_t q = 0; q < split.size(); ++q) {
    const auto ranks = ranks_of(rank_query(model, split[q]));
    double per_query = 0.0;
    for (std::size_t d = 0; d < ranks.size(); ++d) per_query += gamma[q][d] * lambda(ranks[d]);
    total += per_query;
  }
  return total / static_cast<double>(split.size());
}

double true_delta(const ScoringModel& model, std::span<const Query> split,
                  const RankWeight& lambda) {
  std::vector<std::vector<double>> gamma(split.size());
  for (std::size_t q = 0; q < split.size(); ++q)
    for (const auto& d : split[q].documents) gamma[q].push_back(d.binary_label);
  return true_delta(model, split, gamma, lambda);
}

}  // namespace cltr
