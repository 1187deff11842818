#include "cltr/click_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

namespace cltr {
namespace {

template <typename T>
T parse_or_throw(std::string_view token, std::string_view what) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw std::runtime_error("click log: bad " + std::string(what) + " '" + std::string(token) + "'");
  return value;
}

std::string_view after_prefix(std::string_view token, std::string_view prefix) {
  if (token.substr(0, prefix.size()) != prefix)
    throw std::runtime_error("click log: expected '" + std::string(prefix) + "'");
  return token.substr(prefix.size());
}

}  // namespace

BudgetUnit parse_budget_unit(std::string_view name) {
  if (name == "clicks") return BudgetUnit::kClicks;
  if (name == "sessions") return BudgetUnit::kSessions;
  throw std::invalid_argument("unknown budget unit '" + std::string(name) + "'");
}

std::string_view to_string(BudgetUnit unit) {
  return unit == BudgetUnit::kClicks ? "clicks" : "sessions";
}

std::int64_t ClickLog::total_clicks() const {
  std::int64_t total = 0;
  for (const auto& s : sessions)
    for (auto c : s.clicks) total += c;
  return total;
}

std::vector<std::uint8_t> simulate_session(const Ranking& ranking, std::span<const double> gamma,
                                           const BiasSchedule& schedule, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::uint8_t> clicks(ranking.order.size());
  for (std::size_t r = 0; r < ranking.order.size(); ++r) {
    const double p = schedule.click_probability(gamma[static_cast<std::size_t>(ranking.order[r])],
                                                static_cast<int>(r) + 1);
    clicks[r] = uniform(rng) < p ? 1 : 0;
  }
  return clicks;
}

ClickLog simulate_log(std::span<const Query> split, const ScoringModel& production,
                      const BiasSchedule& schedule, std::int64_t budget, BudgetUnit unit,
                      std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (split.empty()) throw std::invalid_argument("cannot simulate clicks on an empty split");
  if (max_documents(split) > static_cast<std::size_t>(schedule.max_rank()))
    throw std::invalid_argument("schedule max_rank is shorter than the longest ranking");

  ClickLog log{{}, {}, schedule, seed, budget, unit};
  std::vector<std::vector<double>> gammas(split.size());
  log.rankings.reserve(split.size());
  for (std::size_t q = 0; q < split.size(); ++q) {
    log.rankings.push_back(rank_query(production, split[q]));
    for (const auto& d : split[q].documents) gammas[q].push_back(d.binary_label);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, split.size() - 1);
  std::int64_t spent = 0;
  while (spent < budget) {
    const std::size_t q = pick(rng);
    Session session{split[q].query_id, static_cast<int>(q),
                    simulate_session(log.rankings[q], gammas[q], schedule, rng)};
    if (unit == BudgetUnit::kClicks)
      spent += std::count(session.clicks.begin(), session.clicks.end(), 1);
    else
      ++spent;
    log.sessions.push_back(std::move(session));
  }

  // Keep only displayed rankings, numbered by first appearance.
  std::vector<int> remap(log.rankings.size(), -1);
  std::vector<Ranking> used;
  for (auto& s : log.sessions) {
    auto& slot = remap[static_cast<std::size_t>(s.ranking_index)];
    if (slot < 0) {
      slot = static_cast<int>(used.size());
      used.push_back(log.rankings[static_cast<std::size_t>(s.ranking_index)]);
    }
    s.ranking_index = slot;
  }
  log.rankings = std::move(used);
  return log;
}

void write_click_log(std::ostream& out, const ClickLog& log) {
  out << "# cltr-clicklog 1\n";
  out << "# seed=" << log.seed << '\n';
  out << "# budget=" << log.budget << '\n';
  out << "# budget_unit=" << to_string(log.budget_unit) << '\n';
  char buf[128];
  for (int k = 1; k <= log.schedule.max_rank(); ++k) {
    std::snprintf(buf, sizeof(buf), "# schedule %d %.17g %.17g %.17g\n", k, log.schedule.theta(k),
                  log.schedule.eps_plus(k), log.schedule.eps_minus(k));
    out << buf;
  }
  std::string line;
  for (std::size_t i = 0; i < log.sessions.size(); ++i) {
    const auto& s = log.sessions[i];
    line = "session " + std::to_string(i) + " qid:" + std::to_string(s.query_id) + " ranking:";
    const auto& order = log.ranking(s).order;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (r) line += ',';
      line += std::to_string(order[r]);
    }
    line += " clicks:";
    for (auto c : s.clicks) line += c ? '1' : '0';
    line += '\n';
    out << line;
  }
}

ClickLog read_click_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "# cltr-clicklog 1")
    throw std::runtime_error("click log: missing '# cltr-clicklog 1' header");

  std::uint64_t seed = 0;
  std::int64_t budget = 0;
  BudgetUnit unit = BudgetUnit::kClicks;
  std::vector<double> theta, plus, minus;
  std::vector<Ranking> rankings;
  std::map<std::pair<int, std::vector<int>>, int> ranking_ids;
  std::vector<Session> sessions;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string_view body = std::string_view(line).substr(2);
      if (body.rfind("seed=", 0) == 0) {
        seed = parse_or_throw<std::uint64_t>(body.substr(5), "seed");
      } else if (body.rfind("budget=", 0) == 0) {
        budget = parse_or_throw<std::int64_t>(body.substr(7), "budget");
      } else if (body.rfind("budget_unit=", 0) == 0) {
        unit = parse_budget_unit(body.substr(12));
      } else if (body.rfind("schedule ", 0) == 0) {
        std::istringstream row{std::string(body.substr(9))};
        int k = 0;
        double t = 0, p = 0, m = 0;
        if (!(row >> k >> t >> p >> m) || k != static_cast<int>(theta.size()) + 1)
          throw std::runtime_error("click log: bad schedule line");
        theta.push_back(t);
        plus.push_back(p);
        minus.push_back(m);
      }
      continue;
    }
    std::istringstream row(line);
    std::string tag, id, qid, ranking, clicks;
    if (!(row >> tag >> id >> qid >> ranking >> clicks) || tag != "session")
      throw std::runtime_error("click log: malformed session line '" + line + "'");
    Session s;
    s.query_id = parse_or_throw<int>(after_prefix(qid, "qid:"), "qid");
    std::vector<int> order;
    std::string_view rest = after_prefix(ranking, "ranking:");
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      order.push_back(parse_or_throw<int>(rest.substr(0, comma), "doc id"));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    for (char c : after_prefix(clicks, "clicks:")) {
      if (c != '0' && c != '1') throw std::runtime_error("click log: clicks must be a bitstring");
      s.clicks.push_back(c == '1');
    }
    if (s.clicks.size() != order.size())
      throw std::runtime_error("click log: click vector length differs from ranking length");
    auto key = std::make_pair(s.query_id, order);
    auto [it, inserted] = ranking_ids.emplace(key, static_cast<int>(rankings.size()));
    if (inserted) rankings.push_back(Ranking{s.query_id, std::move(order)});
    s.ranking_index = it->second;
    sessions.push_back(std::move(s));
  }
  if (theta.empty()) throw std::runtime_error("click log: missing schedule header");
  ClickLog log{std::move(rankings), std::move(sessions),
               BiasSchedule(std::move(theta), std::move(plus), std::move(minus),
                            BiasSchedule::Check::kUnchecked),
               seed, budget, unit};
  return log;
}

std::vector<ImpressionCell> impression_cells(const ClickLog& log) {
  // Per ranking: impressions and clicks at each rank.
  std::vector<std::int64_t> shown(log.rankings.size(), 0);
  std::vector<std::vector<std::int64_t>> clicked(log.rankings.size());
  for (std::size_t i = 0; i < log.rankings.size(); ++i)
    clicked[i].assign(log.rankings[i].order.size(), 0);
  for (const auto& s : log.sessions) {
    const auto idx = static_cast<std::size_t>(s.ranking_index);
    ++shown[idx];
    for (std::size_t r = 0; r < s.clicks.size(); ++r) clicked[idx][r] += s.clicks[r];
  }

  std::map<std::tuple<int, int, int>, ImpressionCell> cells;
  for (std::size_t i = 0; i < log.rankings.size(); ++i) {
    if (shown[i] == 0) continue;
    const auto& ranking = log.rankings[i];
    for (std::size_t r = 0; r < ranking.order.size(); ++r) {
      const int rank = static_cast<int>(r) + 1;
      auto& cell = cells[{ranking.query_id, ranking.order[r], rank}];
      cell.query_id = ranking.query_id;
      cell.doc_id = ranking.order[r];
      cell.rank = rank;
      cell.impressions += shown[i];
      cell.clicks += clicked[i][r];
    }
  }
  std::vector<ImpressionCell> out;
  out.reserve(cells.size());
  for (auto& [key, cell] : cells) out.push_back(cell);
  return out;
}

}  // namespace cltr
