#include "cltr/bias_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cltr/random.hpp"

namespace cltr {
namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw std::invalid_argument("bad " + what + " '" + text + "'");
  return v;
}

}  // namespace

BiasSchedule::BiasSchedule(std::vector<double> theta, std::vector<double> eps_plus,
                           std::vector<double> eps_minus, Check check)
    : theta_(std::move(theta)), eps_plus_(std::move(eps_plus)), eps_minus_(std::move(eps_minus)) {
  if (theta_.empty() || theta_.size() != eps_plus_.size() || theta_.size() != eps_minus_.size())
    throw std::invalid_argument("bias schedule: per-rank tables must be nonempty and equal length");
  alpha_.resize(theta_.size());
  beta_.resize(theta_.size());
  for (std::size_t k = 0; k < theta_.size(); ++k) {
    alpha_[k] = theta_[k] * (eps_plus_[k] - eps_minus_[k]);
    beta_[k] = theta_[k] * eps_minus_[k];
  }
  if (check == Check::kUnchecked) return;
  for (std::size_t k = 0; k < theta_.size(); ++k) {
    const std::string rank = std::to_string(k + 1);
    if (!(theta_[k] > 0.0 && theta_[k] <= 1.0))
      throw std::invalid_argument("bias schedule: theta out of (0,1] at rank " + rank);
    if (!in_unit(eps_plus_[k]) || !in_unit(eps_minus_[k]))
      throw std::invalid_argument("bias schedule: eps out of [0,1] at rank " + rank);
    if (!(alpha_[k] > 0.0))
      throw std::invalid_argument("bias schedule: alpha must be positive at rank " + rank);
    if (beta_[k] < 0.0 || alpha_[k] + beta_[k] > 1.0 + 1e-12)
      throw std::invalid_argument("bias schedule: click probabilities leave [0,1] at rank " + rank);
  }
}

BiasSchedule BiasSchedule::standard(double eta, double eps_minus_1, int max_rank) {
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
  if (!(eps_minus_1 > 0.0 && eps_minus_1 < 1.0)) throw std::invalid_argument("eps_minus_1 must be in (0,1)");
  if (max_rank < 1) throw std::invalid_argument("max_rank must be >= 1");
  std::vector<double> theta, plus, minus;
  for (int k = 1; k <= max_rank; ++k) {
    const int k20 = std::min(k, 20);
    theta.push_back(std::pow(1.0 / k20, eta));
    plus.push_back(1.0 - (k20 + 1) / 100.0);
    minus.push_back(eps_minus_1 / std::min(k, 10));
  }
  return BiasSchedule(std::move(theta), std::move(plus), std::move(minus));
}

BiasSchedule BiasSchedule::from_click_rates(const std::vector<double>& zeta_plus,
                                            const std::vector<double>& zeta_minus) {
  if (zeta_plus.size() != zeta_minus.size()) throw std::invalid_argument("zeta size mismatch");
  std::vector<double> theta(zeta_plus), plus(zeta_plus.size(), 1.0), minus(zeta_plus.size());
  for (std::size_t k = 0; k < zeta_plus.size(); ++k) {
    if (!(zeta_plus[k] > 0.0)) throw std::invalid_argument("zeta+ must be positive");
    minus[k] = zeta_minus[k] / zeta_plus[k];
  }
  return BiasSchedule(std::move(theta), std::move(plus), std::move(minus));
}

std::size_t BiasSchedule::index(int rank) const {
  if (rank < 1 || rank > max_rank())
    throw std::out_of_range("rank " + std::to_string(rank) + " outside 1.." + std::to_string(max_rank()));
  return static_cast<std::size_t>(rank - 1);
}

double BiasSchedule::click_probability(double gamma, int rank) const {
  const std::size_t k = index(rank);
  return alpha_[k] * gamma + beta_[k];
}

bool ips_feasibility(const BiasSchedule& schedule, double tolerance) {
  const auto& plus = schedule.eps_pluses();
  const auto& minus = schedule.eps_minuses();
  const std::size_t n = plus.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      double gap = 0.0;
      if (plus[b] != 0.0 && minus[b] != 0.0)
        gap = plus[a] / plus[b] - minus[a] / minus[b];
      else
        gap = plus[a] * minus[b] - minus[a] * plus[b];
      if (std::abs(gap) > tolerance) return false;
    }
  }
  return true;
}

void write_schedule_csv(std::ostream& out, const BiasSchedule& schedule) {
  out << "k,theta,eps_plus,eps_minus\n";
  char buf[128];
  for (int k = 1; k <= schedule.max_rank(); ++k) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", k, schedule.theta(k),
                  schedule.eps_plus(k), schedule.eps_minus(k));
    out << buf;
  }
}

BiasSchedule read_schedule_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,theta,eps_plus,eps_minus", 0) != 0)
    throw std::runtime_error("schedule csv: missing header");
  std::vector<double> theta, plus, minus;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell[4];
    for (auto& c : cell) std::getline(row, c, ',');
    const int k = static_cast<int>(parse_double(cell[0], "rank"));
    if (k != static_cast<int>(theta.size()) + 1) throw std::runtime_error("schedule csv: ranks must be 1..n in order");
    theta.push_back(parse_double(cell[1], "theta"));
    plus.push_back(parse_double(cell[2], "eps_plus"));
    minus.push_back(parse_double(cell[3], "eps_minus"));
  }
  return BiasSchedule(std::move(theta), std::move(plus), std::move(minus));
}

BiasSchedule schedule_from_config(const std::map<std::string, std::string>& section) {
  auto get = [&](const std::string& key) {
    const auto it = section.find(key);
    if (it == section.end()) throw std::invalid_argument("schedule config: missing key '" + key + "'");
    return parse_double(it->second, key);
  };
  return BiasSchedule::standard(get("eta"), get("eps_minus_1"), static_cast<int>(get("max_rank")));
}

std::string schedule_config_section(double eta, double eps_minus_1, int max_rank) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "[bias]\neta=%.17g\neps_minus_1=%.17g\nmax_rank=%d\n", eta,
                eps_minus_1, max_rank);
  return buf;
}

std::uint64_t schedule_hash(const BiasSchedule& schedule) {
  std::ostringstream out;
  write_schedule_csv(out, schedule);
  return fnv1a64(out.str());
}

}  // namespace cltr
