#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cltr/bias_model.hpp"
#include "cltr/dataset.hpp"
#include "cltr/ranker.hpp"

namespace cltr {

enum class BudgetUnit { kClicks, kSessions };

BudgetUnit parse_budget_unit(std::string_view name);
std::string_view to_string(BudgetUnit unit);

/// One logged interaction: the query, the displayed ranking (an index into
/// ClickLog::rankings) and a 0/1 click per displayed position.
struct Session {
  int query_id = 0;
  int ranking_index = 0;
  std::vector<std::uint8_t> clicks;  // clicks[r - 1] is the click at rank r

  bool operator==(const Session&) const = default;
};

struct ClickLog {
  std::vector<Ranking> rankings;  // distinct displayed rankings
  std::vector<Session> sessions;
  BiasSchedule schedule;
  std::uint64_t seed = 0;
  std::int64_t budget = 0;
  BudgetUnit budget_unit = BudgetUnit::kClicks;

  const Ranking& ranking(const Session& session) const {
    return rankings[static_cast<std::size_t>(session.ranking_index)];
  }
  std::int64_t total_clicks() const;

  bool operator==(const ClickLog&) const = default;
};

/// Clicks each displayed document independently with probability
/// alpha_k * gamma[doc] + beta_k at its displayed rank k.
std::vector<std::uint8_t> simulate_session(const Ranking& ranking, std::span<const double> gamma,
                                           const BiasSchedule& schedule, std::mt19937_64& rng);

/// Samples queries uniformly from `split`, shows each the (fixed) production
/// ranking and simulates clicks on the true binary labels, until the budget
/// (total clicks or number of sessions) is reached.
ClickLog simulate_log(std::span<const Query> split, const ScoringModel& production,
                      const BiasSchedule& schedule, std::int64_t budget, BudgetUnit unit,
                      std::uint64_t seed);

/// Line format:
///   # cltr-clicklog 1
///   # seed=<u64>
///   # budget=<n>
///   # budget_unit=<clicks|sessions>
///   # schedule <k> <theta> <eps_plus> <eps_minus>     (one per rank)
///   session <id> qid:<q> ranking:<d1,d2,...> clicks:<0101...>
void write_click_log(std::ostream& out, const ClickLog& log);
ClickLog read_click_log(std::istream& in);

/// Sufficient statistics of a log: impressions and clicks per
/// (query, document, displayed rank), sorted by that key.
struct ImpressionCell {
  int query_id = 0;
  int doc_id = 0;
  int rank = 0;
  std::int64_t impressions = 0;
  std::int64_t clicks = 0;
};

std::vector<ImpressionCell> impression_cells(const ClickLog& log);

}  // namespace cltr
