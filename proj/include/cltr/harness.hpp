#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cltr/bias_model.hpp"
#include "cltr/click_sim.hpp"
#include "cltr/config.hpp"
#include "cltr/dataset.hpp"
#include "cltr/em.hpp"
#include "cltr/estimators.hpp"
#include "cltr/ranker.hpp"
#include "cltr/train.hpp"

namespace cltr {

/// Whether estimators get the generating bias schedule or one estimated by EM.
enum class BiasMode { kOracle, kEstimated };

BiasMode parse_bias_mode(std::string_view name);
std::string_view to_string(BiasMode mode);

struct ExperimentConfig {
  // [dataset]: LTR files in data_dir (train.txt, vali.txt, test.txt) or synthetic.
  std::string data_dir;
  int n_queries = 1000;
  int docs_per_query = 20;
  int feature_dim = 136;

  // [bias]
  double eta = 1.0;
  double eps_minus_1 = 0.65;

  // [clicks]
  std::vector<std::int64_t> budgets{1000, 10000, 100000, 1000000};
  BudgetUnit budget_unit = BudgetUnit::kClicks;
  double validation_ratio = 0.15;

  // [estimators]
  std::vector<Estimator> estimators{Estimator::kNaive, Estimator::kIps, Estimator::kBayesIps,
                                    Estimator::kAffine};
  BiasMode bias_mode = BiasMode::kOracle;
  std::vector<Head> heads{Head::kSoftMinMax};
  std::optional<double> clip;

  // [model]
  Architecture architecture = Architecture::mlp({32, 16});
  double learning_rate = 0.02;
  int epochs = 32;
  double sigma = 1.0;
  double dropout = 0.0;
  int production_queries = 20;

  // [em]
  int em_iterations = 10;
  int m_step_epochs = 8;
  double em_learning_rate = 0.05;

  // [run]
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  std::string out_dir = "out";

  /// Sets one field from its config key (e.g. "eta", "budgets"). Throws
  /// std::invalid_argument for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void apply(const ConfigSections& sections);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Sectioned key=value text that `load` reads back to an equal config.
  std::string to_text() const;

  /// Throws std::invalid_argument unless there is at least one budget,
  /// estimator and seed (and head, in estimated mode).
  void validate() const;

  TrainConfig train_config(std::uint64_t seed) const;
  EmConfig em_config(std::uint64_t seed) const;
};

/// Per-seed state shared by all cells of that seed.
struct SeedContext {
  std::uint64_t seed = 0;
  Dataset data;
  BiasSchedule schedule;
  ScoringModel model_init;  // starting point of every trained ranker
  ScoringModel production;
  ScoringModel full_info;
  double production_ndcg10 = 0.0;
  double full_info_ndcg10 = 0.0;
};

Dataset load_dataset(const ExperimentConfig& config, std::uint64_t seed);
BiasSchedule make_schedule(const ExperimentConfig& config, const Dataset& data);
SeedContext prepare_seed(const ExperimentConfig& config, std::uint64_t seed);

struct ClickLogs {
  ClickLog train;
  ClickLog validation;
};

/// Training log of `budget` units on the train split and a validation log of
/// validation_ratio * budget units on the validation split. Logs for
/// different budgets of one seed share a random stream, so smaller logs are
/// prefixes of larger ones.
ClickLogs simulate_logs(const ExperimentConfig& config, const SeedContext& context,
                        std::int64_t budget);

EmResult estimate_bias(const ExperimentConfig& config, const SeedContext& context,
                       const ClickLog& log, Head head);

struct CellOutcome {
  TrainResult training;
  double ndcg10 = 0.0;
};

/// Pseudo-labels from the training log, lambda-gradient training with
/// best-validation-epoch selection, test nDCG@10.
CellOutcome train_cell(const ExperimentConfig& config, const SeedContext& context,
                       const ClickLogs& logs, Estimator estimator, const BiasSchedule& schedule);

struct SweepRow {
  std::uint64_t seed = 0;
  double eta = 0.0;
  double eps_minus_1 = 0.0;
  std::int64_t budget = 0;
  BudgetUnit budget_unit = BudgetUnit::kClicks;
  std::string estimator;  // estimator name, or "production" / "full-info"
  std::string bias_mode;  // "oracle" / "estimated", "-" for reference rows
  std::string head;       // "-" unless estimated
  double ndcg10 = 0.0;
  double production_ndcg10 = 0.0;
  double full_info_ndcg10 = 0.0;
  int best_epoch = 0;
  std::uint64_t schedule_hash = 0;
  std::string status = "ok";
};

void write_config_header(std::ostream& out, const ExperimentConfig& config);
void write_sweep_columns(std::ostream& out);
void write_sweep_row(std::ostream& out, const SweepRow& row);

/// Every (seed, budget, [head,] estimator) cell plus production and
/// full-info reference rows per seed. Rows are appended to `csv` as they
/// finish; a failing cell is recorded with its error and the sweep goes on.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, std::ostream* csv = nullptr);

}  // namespace cltr
