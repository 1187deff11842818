#include "cltr/em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "cltr/random.hpp"
#include "cltr/train.hpp"

namespace cltr {
namespace {

std::unordered_map<int, std::size_t> index_by_query_id(std::span<const Query> split) {
  std::unordered_map<int, std::size_t> idx;
  idx.reserve(split.size());
  for (std::size_t q = 0; q < split.size(); ++q) idx.emplace(split[q].query_id, q);
  return idx;
}

std::size_t lookup(const std::unordered_map<int, std::size_t>& idx, int query_id) {
  const auto it = idx.find(query_id);
  if (it == idx.end()) throw std::invalid_argument("logged query " + std::to_string(query_id) + " not in split");
  return it->second;
}

}  // namespace

ZetaParams ZetaParams::initial(int max_rank) {
  ZetaParams z;
  for (int k = 1; k <= max_rank; ++k) {
    z.plus.push_back(1.0 / std::sqrt(static_cast<double>(k)));
    z.minus.push_back(0.1 / k);
  }
  return project_zeta(std::move(z));
}

BiasSchedule ZetaParams::to_schedule() const { return BiasSchedule::from_click_rates(plus, minus); }

ZetaParams project_zeta(ZetaParams zeta) {
  constexpr double lo = kZetaFloor;
  constexpr double hi = 1.0 - kZetaFloor;
  for (std::size_t k = 0; k < zeta.plus.size(); ++k) {
    double p = std::clamp(zeta.plus[k], lo, hi);
    double m = std::clamp(zeta.minus[k], lo, hi);
    if (m > p - kZetaFloor) {
      const double mid = std::clamp(0.5 * (p + m), lo + 0.5 * kZetaFloor, hi - 0.5 * kZetaFloor);
      p = mid + 0.5 * kZetaFloor;
      m = mid - 0.5 * kZetaFloor;
    }
    zeta.plus[k] = p;
    zeta.minus[k] = m;
  }
  return zeta;
}

double posterior_relevance(double gamma_hat, bool clicked, const ZetaParams& zeta, int rank) {
  const double zp = zeta.plus.at(static_cast<std::size_t>(rank - 1));
  const double zm = zeta.minus.at(static_cast<std::size_t>(rank - 1));
  const double relevant = clicked ? zp * gamma_hat : (1.0 - zp) * gamma_hat;
  const double irrelevant = clicked ? zm * (1.0 - gamma_hat) : (1.0 - zm) * (1.0 - gamma_hat);
  const double denom = relevant + irrelevant;
  if (denom <= 0.0) return gamma_hat;
  return relevant / denom;
}

std::vector<std::vector<double>> predict_relevance(const ScoringModel& model,
                                                   std::span<const Query> split) {
  std::vector<std::vector<double>> out(split.size());
  for (std::size_t q = 0; q < split.size(); ++q) out[q] = apply_head(model.head(), score_query(model, split[q]));
  return out;
}

ZetaParams e_step_raw(const ClickLog& log, std::span<const Query> split,
                      const std::vector<std::vector<double>>& gamma_hat, const ZetaParams& current) {
  const std::size_t n_ranks = current.plus.size();
  std::vector<double> plus_num(n_ranks, 0.0), plus_den(n_ranks, 0.0);
  std::vector<double> minus_num(n_ranks, 0.0), minus_den(n_ranks, 0.0);
  const auto idx = index_by_query_id(split);

  for (const auto& cell : impression_cells(log)) {
    if (cell.rank > static_cast<int>(n_ranks)) throw std::invalid_argument("zeta shorter than logged ranking");
    const double g = gamma_hat[lookup(idx, cell.query_id)].at(static_cast<std::size_t>(cell.doc_id));
    const double clicks = static_cast<double>(cell.clicks);
    const double skips = static_cast<double>(cell.impressions - cell.clicks);
    const double rel_click = posterior_relevance(g, true, current, cell.rank);
    const double rel_skip = posterior_relevance(g, false, current, cell.rank);
    const std::size_t k = static_cast<std::size_t>(cell.rank - 1);
    plus_num[k] += clicks * rel_click;
    plus_den[k] += clicks * rel_click + skips * rel_skip;
    minus_num[k] += clicks * (1.0 - rel_click);
    minus_den[k] += clicks * (1.0 - rel_click) + skips * (1.0 - rel_skip);
  }

  ZetaParams next = current;
  for (std::size_t k = 0; k < n_ranks; ++k) {
    if (plus_den[k] > 0.0) next.plus[k] = plus_num[k] / plus_den[k];
    if (minus_den[k] > 0.0) next.minus[k] = minus_num[k] / minus_den[k];
  }
  return next;
}

ZetaParams e_step(const ClickLog& log, std::span<const Query> split,
                  const ScoringModel& gamma_model, const ZetaParams& current) {
  return project_zeta(e_step_raw(log, split, predict_relevance(gamma_model, split), current));
}

ScoringModel fit_relevance(std::span<const Query> split,
                           const std::vector<std::vector<double>>& targets,
                           const std::vector<std::vector<double>>& weights, ScoringModel model,
                           int epochs, double learning_rate, std::uint64_t seed) {
  if (targets.size() != split.size() || weights.size() != split.size())
    throw std::invalid_argument("regression targets do not match split");
  const Head head = model.head();
  QueryObjective objective = [&](std::size_t q, std::span<const double> scores,
                                 std::span<double> score_grad) {
    const auto out = apply_head(head, scores);
    std::vector<double> upstream(out.size(), 0.0);
    double loss = 0.0;
    for (std::size_t d = 0; d < out.size(); ++d) {
      const double diff = out[d] - targets[q][d];
      loss += weights[q][d] * diff * diff;
      upstream[d] = 2.0 * weights[q][d] * diff;
    }
    const auto g = head_vjp(head, scores, upstream);
    std::copy(g.begin(), g.end(), score_grad.begin());
    return loss;
  };
  TrainConfig config;
  config.epochs = epochs;
  config.learning_rate = learning_rate;
  config.seed = seed;
  return fit(split, objective, std::move(model), config).model;
}

RegressionTargets posterior_targets(const ClickLog& log, std::span<const Query> split,
                                    const std::vector<std::vector<double>>& gamma_hat,
                                    const ZetaParams& zeta) {
  if (gamma_hat.size() != split.size()) throw std::invalid_argument("gamma_hat does not match split");
  RegressionTargets out;
  out.targets.resize(split.size());
  out.weights.resize(split.size());
  for (std::size_t q = 0; q < split.size(); ++q) {
    out.targets[q].assign(split[q].documents.size(), 0.0);
    out.weights[q].assign(split[q].documents.size(), 0.0);
  }
  const auto idx = index_by_query_id(split);
  for (const auto& cell : impression_cells(log)) {
    const std::size_t q = lookup(idx, cell.query_id);
    const auto d = static_cast<std::size_t>(cell.doc_id);
    const double g = gamma_hat[q].at(d);
    out.targets[q][d] += static_cast<double>(cell.clicks) * posterior_relevance(g, true, zeta, cell.rank) +
                         static_cast<double>(cell.impressions - cell.clicks) *
                             posterior_relevance(g, false, zeta, cell.rank);
    out.weights[q][d] += static_cast<double>(cell.impressions);
  }
  for (std::size_t q = 0; q < split.size(); ++q) {
    for (std::size_t d = 0; d < out.targets[q].size(); ++d) {
      if (out.weights[q][d] > 0.0) {
        out.targets[q][d] /= out.weights[q][d];
        out.weights[q][d] = 1.0;
      }
    }
  }
  return out;
}

ScoringModel m_step(const ClickLog& log, std::span<const Query> split, const ZetaParams& zeta,
                    ScoringModel model, int epochs, double learning_rate, std::uint64_t seed) {
  auto t = posterior_targets(log, split, predict_relevance(model, split), zeta);
  return fit_relevance(split, t.targets, t.weights, std::move(model), epochs, learning_rate, seed);
}

EmResult run_em(const ClickLog& log, std::span<const Query> split, ScoringModel initial_model,
                const EmConfig& config) {
  if (config.iterations < 1) throw std::invalid_argument("EM needs at least one iteration");
  EmResult result{ZetaParams::initial(log.schedule.max_rank()), std::move(initial_model), {}, 0, 0};
  result.trajectory.push_back(result.zeta);
  for (int it = 1; it <= config.iterations; ++it) {
    const std::uint64_t seed = derive_seed(config.seed, "m-step") + static_cast<std::uint64_t>(it);
    if (it == 1) {
      std::vector<std::vector<double>> flat(split.size());
      for (std::size_t q = 0; q < split.size(); ++q) flat[q].assign(split[q].documents.size(), 0.5);
      auto t = posterior_targets(log, split, flat, result.zeta);
      result.model = fit_relevance(split, t.targets, t.weights, std::move(result.model),
                                   config.m_step_epochs, config.learning_rate, seed);
    } else {
      result.model = m_step(log, split, result.zeta, std::move(result.model), config.m_step_epochs,
                            config.learning_rate, seed);
    }
    ++result.m_steps;
    result.zeta = e_step(log, split, result.model, result.zeta);
    ++result.e_steps;
    result.trajectory.push_back(result.zeta);
  }
  return result;
}

void write_zeta_csv(std::ostream& out, const std::vector<ZetaParams>& trajectory) {
  out << "iteration,k,zeta_plus,zeta_minus,alpha,beta\n";
  char buf[160];
  for (std::size_t it = 0; it < trajectory.size(); ++it) {
    const auto& z = trajectory[it];
    for (int k = 1; k <= z.max_rank(); ++k) {
      std::snprintf(buf, sizeof(buf), "%zu,%d,%.10g,%.10g,%.10g,%.10g\n", it, k, z.plus[k - 1],
                    z.minus[k - 1], z.alpha(k), z.beta(k));
      out << buf;
    }
  }
}

}  // namespace cltr
