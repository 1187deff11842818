#include "cltr/estimators.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace cltr {

Estimator parse_estimator(std::string_view name) {
  if (name == "naive") return Estimator::kNaive;
  if (name == "ips") return Estimator::kIps;
  if (name == "bayes-ips") return Estimator::kBayesIps;
  if (name == "affine") return Estimator::kAffine;
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(Estimator kind) {
  switch (kind) {
    case Estimator::kNaive: return "naive";
    case Estimator::kIps: return "ips";
    case Estimator::kBayesIps: return "bayes-ips";
    case Estimator::kAffine: return "affine";
  }
  return "naive";
}

double correction_weight(Estimator kind, bool clicked, int rank, const BiasSchedule& schedule,
                         const EstimatorOptions& options) {
  const double c = clicked ? 1.0 : 0.0;
  double w = 0.0;
  if (kind == Estimator::kNaive) {
    w = c;
  } else {
    const double theta = schedule.theta(rank);
    if (theta == 0.0)
      throw std::domain_error("zero examination probability at rank " + std::to_string(rank));
    switch (kind) {
      case Estimator::kIps:
        w = c / theta;
        break;
      case Estimator::kBayesIps: {
        const double plus = schedule.eps_plus(rank);
        const double minus = schedule.eps_minus(rank);
        w = c / theta * (plus / (plus + minus));
        break;
      }
      case Estimator::kAffine: {
        const double alpha = schedule.alpha(rank);
        if (alpha == 0.0) throw std::domain_error("uncorrectable rank " + std::to_string(rank) + ": alpha is 0");
        w = (c - schedule.beta(rank)) / alpha;
        break;
      }
      case Estimator::kNaive:
        break;
    }
  }
  if (options.clip) w = std::clamp(w, -*options.clip, *options.clip);
  return w;
}

DeltaEstimator::DeltaEstimator(Estimator kind, const ClickLog& log, const BiasSchedule& schedule,
                               const EstimatorOptions& options)
    : sessions_(log.sessions.size()) {
  if (log.sessions.empty()) throw std::invalid_argument("cannot estimate from an empty click log");
  const auto cells = impression_cells(log);
  // Cells are sorted by (query, doc, rank); fold ranks of the same document.
  for (const auto& cell : cells) {
    const double w1 = correction_weight(kind, true, cell.rank, schedule, options);
    const double w0 = correction_weight(kind, false, cell.rank, schedule, options);
    const double sum = static_cast<double>(cell.clicks) * w1 +
                       static_cast<double>(cell.impressions - cell.clicks) * w0;
    if (terms_.empty() || terms_.back().query_id != cell.query_id)
      terms_.push_back(QueryTerms{cell.query_id, {}});
    auto& docs = terms_.back().doc_weight_sums;
    if (!docs.empty() && docs.back().first == cell.doc_id)
      docs.back().second += sum;
    else
      docs.emplace_back(cell.doc_id, sum);
  }
}

double DeltaEstimator::operator()(const ScoringModel& model, std::span<const Query> split,
                                  const RankWeight& lambda) const {
  std::unordered_map<int, const Query*> by_id;
  by_id.reserve(split.size());
  for (const auto& q : split) by_id.emplace(q.query_id, &q);

  double total = 0.0;
  for (const auto& terms : terms_) {
    const auto it = by_id.find(terms.query_id);
    if (it == by_id.end())
      throw std::invalid_argument("logged query " + std::to_string(terms.query_id) + " not in split");
    const auto ranks = ranks_of(rank_query(model, *it->second));
    double per_query = 0.0;
    for (const auto& [doc, weight_sum] : terms.doc_weight_sums)
      per_query += weight_sum * lambda(ranks.at(static_cast<std::size_t>(doc)));
    total += per_query;
  }
  return total / static_cast<double>(sessions_);
}

double estimate_delta(Estimator kind, const ClickLog& log, const BiasSchedule& schedule,
                      const ScoringModel& model, std::span<const Query> split,
                      const RankWeight& lambda, const EstimatorOptions& options) {
  return DeltaEstimator(kind, log, schedule, options)(model, split, lambda);
}

PseudoLabels aggregate_pseudo_labels(Estimator kind, const ClickLog& log,
                                     const BiasSchedule& schedule,
                                     const EstimatorOptions& options) {
  if (log.sessions.empty()) throw std::invalid_argument("cannot aggregate an empty click log");
  PseudoLabels labels;
  std::map<std::pair<int, int>, double> sums;
  for (const auto& cell : impression_cells(log)) {
    const double w1 = correction_weight(kind, true, cell.rank, schedule, options);
    const double w0 = correction_weight(kind, false, cell.rank, schedule, options);
    const std::pair<int, int> key{cell.query_id, cell.doc_id};
    sums[key] += static_cast<double>(cell.clicks) * w1 +
                 static_cast<double>(cell.impressions - cell.clicks) * w0;
    labels[key].impressions += cell.impressions;
  }
  for (auto& [key, label] : labels) label.gamma_hat = sums[key] / static_cast<double>(label.impressions);
  return labels;
}

void write_pseudo_labels_csv(std::ostream& out, const PseudoLabels& labels) {
  out << "qid,docid,impressions,gamma_hat\n";
  char buf[96];
  for (const auto& [key, label] : labels) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%lld,%.17g\n", key.first, key.second,
                  static_cast<long long>(label.impressions), label.gamma_hat);
    out << buf;
  }
}

}  // namespace cltr
