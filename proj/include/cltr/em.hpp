#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cltr/bias_model.hpp"
#include "cltr/click_sim.hpp"
#include "cltr/dataset.hpp"
#include "cltr/ranker.hpp"

namespace cltr {

/// Click probability at each rank for relevant (plus) and non-relevant
/// (minus) documents: zeta+_k = alpha_k + beta_k, zeta-_k = beta_k.
struct ZetaParams {
  std::vector<double> plus;
  std::vector<double> minus;

  /// zeta+_k = 1/sqrt(k), zeta-_k = 0.1/k, then projected.
  static ZetaParams initial(int max_rank);

  int max_rank() const { return static_cast<int>(plus.size()); }
  double alpha(int rank) const { return plus.at(rank - 1) - minus.at(rank - 1); }
  double beta(int rank) const { return minus.at(rank - 1); }

  BiasSchedule to_schedule() const;

  bool operator==(const ZetaParams&) const = default;
};

inline constexpr double kZetaFloor = 1e-4;

/// Clamps to [1e-4, 1 - 1e-4] and enforces zeta- <= zeta+ - 1e-4 by
/// projecting violating pairs onto that boundary.
ZetaParams project_zeta(ZetaParams zeta);

/// P(R=1 | C=clicked, gamma_hat, rank) by Bayes' rule on the click model.
/// Returns gamma_hat when the evidence has zero probability.
double posterior_relevance(double gamma_hat, bool clicked, const ZetaParams& zeta, int rank);

struct EmConfig {
  int iterations = 10;
  int m_step_epochs = 8;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

/// Head outputs of `model` per query, relevance[q][doc_id].
std::vector<std::vector<double>> predict_relevance(const ScoringModel& model,
                                                   std::span<const Query> split);

/// One expectation step: re-estimates zeta+_k and zeta-_k from the relevance
/// posteriors of every impression at rank k. Ranks without impressions keep
/// `current`.
ZetaParams e_step(const ClickLog& log, std::span<const Query> split,
                  const ScoringModel& gamma_model, const ZetaParams& current);

/// Unprojected E-step, exposed for tests.
ZetaParams e_step_raw(const ClickLog& log, std::span<const Query> split,
                      const std::vector<std::vector<double>>& gamma_hat, const ZetaParams& current);

/// Mean-squared-error regression of the model's head output onto
/// targets[q][doc]; documents with weight 0 are ignored.
ScoringModel fit_relevance(std::span<const Query> split,
                           const std::vector<std::vector<double>>& targets,
                           const std::vector<std::vector<double>>& weights, ScoringModel model,
                           int epochs, double learning_rate, std::uint64_t seed);

struct RegressionTargets {
  std::vector<std::vector<double>> targets;  // [q][doc_id]
  std::vector<std::vector<double>> weights;  // 1 for displayed documents, else 0
};

/// Impression-averaged relevance posteriors under `zeta` with prior gamma_hat.
RegressionTargets posterior_targets(const ClickLog& log, std::span<const Query> split,
                                    const std::vector<std::vector<double>>& gamma_hat,
                                    const ZetaParams& zeta);

/// Regresses the model onto posterior_targets, using the model's own
/// predictions as the prior.
ScoringModel m_step(const ClickLog& log, std::span<const Query> split, const ZetaParams& zeta,
                    ScoringModel model, int epochs, double learning_rate, std::uint64_t seed);

struct EmResult {
  ZetaParams zeta;
  ScoringModel model;
  std::vector<ZetaParams> trajectory;  // index 0 is the initialization
  int e_steps = 0;
  int m_steps = 0;
};

/// `config.iterations` rounds of M-step then E-step, starting from
/// ZetaParams::initial and `initial_model` (whose head maps into [0,1]).
/// The first M-step uses a flat prior of 0.5 instead of the untrained
/// model's predictions, so the first targets come from clicks alone.
EmResult run_em(const ClickLog& log, std::span<const Query> split, ScoringModel initial_model,
                const EmConfig& config);

/// Columns iteration,k,zeta_plus,zeta_minus,alpha,beta.
void write_zeta_csv(std::ostream& out, const std::vector<ZetaParams>& trajectory);

}  // namespace cltr
