#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cltr {

/// Per-rank examination (theta) and perceived-relevance (eps+/eps-)
/// probabilities of the trust-bias click model, with the derived affine
/// coefficients alpha_k = theta_k (eps+_k - eps-_k) and beta_k = theta_k eps-_k.
/// Ranks are 1-based.
class BiasSchedule {
 public:
  enum class Check { kEnforced, kUnchecked };

  /// kEnforced rejects schedules with theta_k <= 0, alpha_k <= 0 or
  /// probabilities outside [0,1]. kUnchecked only requires equal lengths.
  BiasSchedule(std::vector<double> theta, std::vector<double> eps_plus,
               std::vector<double> eps_minus, Check check = Check::kEnforced);

  /// theta_k = (1/min(k,20))^eta, eps+_k = 1 - (min(k,20)+1)/100,
  /// eps-_k = eps_minus_1 / min(k,10).
  static BiasSchedule standard(double eta, double eps_minus_1, int max_rank);

  /// Schedule whose click rates for relevant / non-relevant documents are
  /// the given values (alpha = zeta+ - zeta-, beta = zeta-), encoded as
  /// theta = zeta+, eps+ = 1, eps- = zeta- / zeta+.
  static BiasSchedule from_click_rates(const std::vector<double>& zeta_plus,
                                       const std::vector<double>& zeta_minus);

  int max_rank() const { return static_cast<int>(theta_.size()); }
  double theta(int rank) const { return theta_[index(rank)]; }
  double eps_plus(int rank) const { return eps_plus_[index(rank)]; }
  double eps_minus(int rank) const { return eps_minus_[index(rank)]; }
  double alpha(int rank) const { return alpha_[index(rank)]; }
  double beta(int rank) const { return beta_[index(rank)]; }

  const std::vector<double>& thetas() const { return theta_; }
  const std::vector<double>& eps_pluses() const { return eps_plus_; }
  const std::vector<double>& eps_minuses() const { return eps_minus_; }

  /// P(C=1 | gamma, rank) = alpha_k gamma + beta_k.
  double click_probability(double gamma, int rank) const;

  bool operator==(const BiasSchedule&) const = default;

 private:
  std::size_t index(int rank) const;

  std::vector<double> theta_;
  std::vector<double> eps_plus_;
  std::vector<double> eps_minus_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

/// True iff eps+_k / eps+_k' and eps-_k / eps-_k' agree within `tolerance`
/// for every rank pair, i.e. some per-rank IPS propensity could order rankers
/// correctly. Pairs with a zero denominator are compared by cross products.
bool ips_feasibility(const BiasSchedule& schedule, double tolerance);

/// CSV with header `k,theta,eps_plus,eps_minus`, values printed %.17g.
void write_schedule_csv(std::ostream& out, const BiasSchedule& schedule);
BiasSchedule read_schedule_csv(std::istream& in);

/// Builds a standard schedule from keys eta, eps_minus_1, max_rank.
BiasSchedule schedule_from_config(const std::map<std::string, std::string>& section);
std::string schedule_config_section(double eta, double eps_minus_1, int max_rank);

/// FNV-1a over the per-rank CSV form.
std::uint64_t schedule_hash(const BiasSchedule& schedule);

}  // namespace cltr
