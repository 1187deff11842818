#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cltr/bias_model.hpp"
#include "cltr/click_sim.hpp"
#include "cltr/metrics.hpp"

namespace cltr {

enum class Estimator { kNaive, kIps, kBayesIps, kAffine };

Estimator parse_estimator(std::string_view name);
std::string_view to_string(Estimator kind);

struct EstimatorOptions {
  /// Symmetric clip on |correction weight|; off when unset.
  std::optional<double> clip;
};

/// Per-impression weight multiplying lambda(d | q, f):
///   naive      c
///   ips        c / theta_k
///   bayes-ips  c / theta_k * eps+_k / (eps+_k + eps-_k)
///   affine     (c - beta_k) / alpha_k
/// Throws std::domain_error for theta_k = 0, or alpha_k = 0 with affine.
double correction_weight(Estimator kind, bool clicked, int rank, const BiasSchedule& schedule,
                         const EstimatorOptions& options = {});

/// Click-based metric estimate (1/N) sum_i sum_(d,k) w(c_i(d), k) lambda(d | q_i, f).
/// Correction weights use the logged display ranks; lambda uses the ranks
/// `model` assigns. The weight sums are computed once, so one estimator can
/// score many models.
class DeltaEstimator {
 public:
  DeltaEstimator(Estimator kind, const ClickLog& log, const BiasSchedule& schedule,
                 const EstimatorOptions& options = {});

  /// `split` must contain every logged query.
  double operator()(const ScoringModel& model, std::span<const Query> split,
                    const RankWeight& lambda) const;

  std::size_t sessions() const { return sessions_; }

 private:
  struct QueryTerms {
    int query_id;
    std::vector<std::pair<int, double>> doc_weight_sums;
  };
  std::vector<QueryTerms> terms_;
  std::size_t sessions_ = 0;
};

double estimate_delta(Estimator kind, const ClickLog& log, const BiasSchedule& schedule,
                      const ScoringModel& model, std::span<const Query> split,
                      const RankWeight& lambda, const EstimatorOptions& options = {});

struct PseudoLabel {
  double gamma_hat = 0.0;
  std::int64_t impressions = 0;

  bool operator==(const PseudoLabel&) const = default;
};

/// (query_id, doc_id) -> mean correction weight over the sessions that
/// displayed the document.
using PseudoLabels = std::map<std::pair<int, int>, PseudoLabel>;

PseudoLabels aggregate_pseudo_labels(Estimator kind, const ClickLog& log,
                                     const BiasSchedule& schedule,
                                     const EstimatorOptions& options = {});

/// Columns qid,docid,impressions,gamma_hat.
void write_pseudo_labels_csv(std::ostream& out, const PseudoLabels& labels);

}  // namespace cltr
