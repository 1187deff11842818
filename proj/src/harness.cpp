#include "cltr/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cltr/metrics.hpp"
#include "cltr/random.hpp"

namespace cltr {
namespace {

template <typename T>
T parse_int(const std::string& key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("config: bad integer for " + key + ": '" + std::string(text) + "'");
  return value;
}

double parse_real(const std::string& key, std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("config: bad number for " + key + ": '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  while (!text.empty()) {
    const auto comma = text.find(',');
    auto item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) items.push_back(item);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  return items;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string short_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename Range, typename Fn>
std::string join(const Range& items, Fn&& fn) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ',';
    out += fn(item);
  }
  return out;
}

std::string sanitize(std::string text) {
  for (auto& c : text)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return text;
}

}  // namespace

BiasMode parse_bias_mode(std::string_view name) {
  if (name == "oracle") return BiasMode::kOracle;
  if (name == "estimated") return BiasMode::kEstimated;
  throw std::invalid_argument("unknown bias mode '" + std::string(name) + "'");
}

std::string_view to_string(BiasMode mode) { return mode == BiasMode::kOracle ? "oracle" : "estimated"; }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "data_dir") data_dir = value;
  else if (key == "n_queries") n_queries = parse_int<int>(key, value);
  else if (key == "docs_per_query") docs_per_query = parse_int<int>(key, value);
  else if (key == "feature_dim") feature_dim = parse_int<int>(key, value);
  else if (key == "eta") eta = parse_real(key, value);
  else if (key == "eps_minus_1") eps_minus_1 = parse_real(key, value);
  else if (key == "budgets") {
    budgets.clear();
    for (auto item : split_list(value)) budgets.push_back(parse_int<std::int64_t>(key, item));
  } else if (key == "budget_unit") budget_unit = parse_budget_unit(value);
  else if (key == "validation_ratio") validation_ratio = parse_real(key, value);
  else if (key == "estimators") {
    estimators.clear();
    for (auto item : split_list(value)) estimators.push_back(parse_estimator(item));
  } else if (key == "bias_mode") bias_mode = parse_bias_mode(value);
  else if (key == "heads") {
    heads.clear();
    for (auto item : split_list(value)) heads.push_back(parse_head(item));
  } else if (key == "clip") {
    if (value.empty() || value == "none") clip.reset();
    else clip = parse_real(key, value);
  } else if (key == "architecture") architecture = Architecture::parse(value);
  else if (key == "learning_rate") learning_rate = parse_real(key, value);
  else if (key == "epochs") epochs = parse_int<int>(key, value);
  else if (key == "sigma") sigma = parse_real(key, value);
  else if (key == "dropout") dropout = parse_real(key, value);
  else if (key == "production_queries") production_queries = parse_int<int>(key, value);
  else if (key == "em_iterations") em_iterations = parse_int<int>(key, value);
  else if (key == "m_step_epochs") m_step_epochs = parse_int<int>(key, value);
  else if (key == "em_learning_rate") em_learning_rate = parse_real(key, value);
  else if (key == "seeds") {
    seeds.clear();
    for (auto item : split_list(value)) seeds.push_back(parse_int<std::uint64_t>(key, item));
  } else if (key == "out_dir") out_dir = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void ExperimentConfig::apply(const ConfigSections& sections) {
  for (const auto& [section, entries] : sections)
    for (const auto& [key, value] : entries) set(key, value);
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  ExperimentConfig config;
  config.apply(parse_config_file(path));
  return config;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "[dataset]\n"
      << "data_dir=" << data_dir << '\n'
      << "n_queries=" << n_queries << '\n'
      << "docs_per_query=" << docs_per_query << '\n'
      << "feature_dim=" << feature_dim << '\n'
      << "[bias]\n"
      << "eta=" << real(eta) << '\n'
      << "eps_minus_1=" << real(eps_minus_1) << '\n'
      << "[clicks]\n"
      << "budgets=" << join(budgets, [](auto b) { return std::to_string(b); }) << '\n'
      << "budget_unit=" << to_string(budget_unit) << '\n'
      << "validation_ratio=" << real(validation_ratio) << '\n'
      << "[estimators]\n"
      << "estimators=" << join(estimators, [](auto e) { return std::string(to_string(e)); }) << '\n'
      << "bias_mode=" << to_string(bias_mode) << '\n'
      << "heads=" << join(heads, [](auto h) { return std::string(to_string(h)); }) << '\n'
      << "clip=" << (clip ? real(*clip) : std::string("none")) << '\n'
      << "[model]\n"
      << "architecture=" << architecture.to_string() << '\n'
      << "learning_rate=" << real(learning_rate) << '\n'
      << "epochs=" << epochs << '\n'
      << "sigma=" << real(sigma) << '\n'
      << "dropout=" << real(dropout) << '\n'
      << "production_queries=" << production_queries << '\n'
      << "[em]\n"
      << "em_iterations=" << em_iterations << '\n'
      << "m_step_epochs=" << m_step_epochs << '\n'
      << "em_learning_rate=" << real(em_learning_rate) << '\n'
      << "[run]\n"
      << "seeds=" << join(seeds, [](auto s) { return std::to_string(s); }) << '\n'
      << "out_dir=" << out_dir << '\n';
  return out.str();
}

void ExperimentConfig::validate() const {
  if (budgets.empty()) throw std::invalid_argument("config: at least one budget is required");
  if (estimators.empty()) throw std::invalid_argument("config: at least one estimator is required");
  if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
  if (bias_mode == BiasMode::kEstimated && heads.empty())
    throw std::invalid_argument("config: estimated bias mode needs at least one head");
  for (auto b : budgets)
    if (b < 1) throw std::invalid_argument("config: budgets must be >= 1");
}

TrainConfig ExperimentConfig::train_config(std::uint64_t seed) const {
  TrainConfig tc;
  tc.learning_rate = learning_rate;
  tc.epochs = epochs;
  tc.sigma = sigma;
  tc.dropout = dropout;
  tc.seed = seed;
  return tc;
}

EmConfig ExperimentConfig::em_config(std::uint64_t seed) const {
  EmConfig ec;
  ec.iterations = em_iterations;
  ec.m_step_epochs = m_step_epochs;
  ec.learning_rate = em_learning_rate;
  ec.seed = seed;
  return ec;
}

Dataset load_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  if (!config.data_dir.empty()) {
    const std::filesystem::path dir(config.data_dir);
    return load_ltr_dataset(dir / "train.txt", dir / "vali.txt", dir / "test.txt");
  }
  return generate_synthetic(config.n_queries, config.docs_per_query, config.feature_dim,
                            derive_seed(seed, "dataset"));
}

BiasSchedule make_schedule(const ExperimentConfig& config, const Dataset& data) {
  const std::size_t max_rank = std::max({max_documents(data.train), max_documents(data.validation),
                                         max_documents(data.test), std::size_t{1}});
  return BiasSchedule::standard(config.eta, config.eps_minus_1, static_cast<int>(max_rank));
}

SeedContext prepare_seed(const ExperimentConfig& config, std::uint64_t seed) {
  Dataset data = load_dataset(config, seed);
  BiasSchedule schedule = make_schedule(config, data);
  ScoringModel init = ScoringModel::initialized(config.architecture, data.feature_dim, Head::kNone,
                                                derive_seed(seed, "model-init"));
  ScoringModel production_init = ScoringModel::initialized(
      config.architecture, data.feature_dim, Head::kNone, derive_seed(seed, "production-init"));

  const int n_production = std::min<int>(config.production_queries, static_cast<int>(data.train.size()));
  auto production = train_production(data.train, n_production, production_init,
                                     config.train_config(derive_seed(seed, "production-train")),
                                     derive_seed(seed, "production-subset"), data.validation)
                        .model;
  auto full_info = train_full_info(data.train, init, config.train_config(derive_seed(seed, "full-info-train")),
                                   data.validation)
                       .model;
  const double production_ndcg = evaluate_ndcg(production, data.test, 10);
  const double full_info_ndcg = evaluate_ndcg(full_info, data.test, 10);
  return SeedContext{seed,       std::move(data),      std::move(schedule), std::move(init),
                     std::move(production), std::move(full_info), production_ndcg, full_info_ndcg};
}

ClickLogs simulate_logs(const ExperimentConfig& config, const SeedContext& context,
                        std::int64_t budget) {
  const auto val_budget = std::max<std::int64_t>(
      1, std::llround(config.validation_ratio * static_cast<double>(budget)));
  return ClickLogs{
      simulate_log(context.data.train, context.production, context.schedule, budget,
                   config.budget_unit, derive_seed(context.seed, "train-clicks")),
      simulate_log(context.data.validation, context.production, context.schedule, val_budget,
                   config.budget_unit, derive_seed(context.seed, "validation-clicks"))};
}

EmResult estimate_bias(const ExperimentConfig& config, const SeedContext& context,
                       const ClickLog& log, Head head) {
  auto model = ScoringModel::initialized(config.architecture, context.data.feature_dim, head,
                                         derive_seed(context.seed, "em-model"));
  return run_em(log, context.data.train, std::move(model), config.em_config(derive_seed(context.seed, "em")));
}

CellOutcome train_cell(const ExperimentConfig& config, const SeedContext& context,
                       const ClickLogs& logs, Estimator estimator, const BiasSchedule& schedule) {
  EstimatorOptions options;
  options.clip = config.clip;
  const auto pseudo = aggregate_pseudo_labels(estimator, logs.train, schedule, options);
  const DeltaEstimator validation_estimate(estimator, logs.validation, schedule, options);
  const RankWeight lambda = dcg_rank_weight();
  const auto& validation = context.data.validation;
  Validator validate = [&](const ScoringModel& m) { return validation_estimate(m, validation, lambda); };
  auto training = train_counterfactual(context.data.train, pseudo, context.model_init,
                                       config.train_config(derive_seed(context.seed, "cell-train")),
                                       validate, context.data.test);
  const double ndcg = evaluate_ndcg(training.model, context.data.test, 10);
  return CellOutcome{std::move(training), ndcg};
}

void write_config_header(std::ostream& out, const ExperimentConfig& config) {
  std::istringstream text(config.to_text());
  std::string line;
  while (std::getline(text, line)) out << "# " << line << '\n';
}

void write_sweep_columns(std::ostream& out) {
  out << "seed,eta,eps_minus_1,budget,budget_unit,estimator,bias_mode,head,ndcg10,"
         "production_ndcg10,full_info_ndcg10,best_epoch,schedule_hash,status\n";
}

void write_sweep_row(std::ostream& out, const SweepRow& row) {
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(row.schedule_hash));
  out << row.seed << ',' << short_real(row.eta) << ',' << short_real(row.eps_minus_1) << ','
      << row.budget << ',' << to_string(row.budget_unit) << ',' << row.estimator << ','
      << row.bias_mode << ',' << row.head << ',' << short_real(row.ndcg10) << ','
      << short_real(row.production_ndcg10) << ',' << short_real(row.full_info_ndcg10) << ','
      << row.best_epoch << ',' << hash << ',' << sanitize(row.status) << '\n';
  out.flush();
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, std::ostream* csv) {
  config.validate();
  std::vector<SweepRow> rows;
  auto emit = [&](SweepRow row) {
    if (csv) write_sweep_row(*csv, row);
    rows.push_back(std::move(row));
  };

  for (const auto seed : config.seeds) {
    SweepRow base;
    base.seed = seed;
    base.eta = config.eta;
    base.eps_minus_1 = config.eps_minus_1;
    base.budget_unit = config.budget_unit;

    std::optional<SeedContext> context;
    try {
      context.emplace(prepare_seed(config, seed));
    } catch (const std::exception& e) {
      SweepRow failed = base;
      failed.estimator = "production";
      failed.bias_mode = "-";
      failed.head = "-";
      failed.status = std::string("error: ") + e.what();
      emit(failed);
      continue;
    }
    base.production_ndcg10 = context->production_ndcg10;
    base.full_info_ndcg10 = context->full_info_ndcg10;
    base.schedule_hash = schedule_hash(context->schedule);

    for (const char* name : {"production", "full-info"}) {
      SweepRow ref = base;
      ref.estimator = name;
      ref.bias_mode = "-";
      ref.head = "-";
      ref.ndcg10 = std::string_view(name) == "production" ? context->production_ndcg10
                                                          : context->full_info_ndcg10;
      emit(ref);
    }

    for (const auto budget : config.budgets) {
      SweepRow at_budget = base;
      at_budget.budget = budget;
      std::optional<ClickLogs> logs;
      try {
        logs.emplace(simulate_logs(config, *context, budget));
      } catch (const std::exception& e) {
        for (auto estimator : config.estimators) {
          SweepRow failed = at_budget;
          failed.estimator = std::string(to_string(estimator));
          failed.bias_mode = std::string(to_string(config.bias_mode));
          failed.head = "-";
          failed.status = std::string("error: ") + e.what();
          emit(failed);
        }
        continue;
      }

      auto run_estimators = [&](const BiasSchedule& schedule, const std::string& head) {
        for (auto estimator : config.estimators) {
          SweepRow row = at_budget;
          row.estimator = std::string(to_string(estimator));
          row.bias_mode = std::string(to_string(config.bias_mode));
          row.head = head;
          try {
            auto outcome = train_cell(config, *context, *logs, estimator, schedule);
            row.ndcg10 = outcome.ndcg10;
            row.best_epoch = outcome.training.best_epoch;
          } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
          }
          emit(row);
        }
      };

      if (config.bias_mode == BiasMode::kOracle) {
        run_estimators(context->schedule, "-");
        continue;
      }
      for (auto head : config.heads) {
        std::optional<BiasSchedule> estimated;
        std::string error;
        try {
          estimated.emplace(estimate_bias(config, *context, logs->train, head).zeta.to_schedule());
        } catch (const std::exception& e) {
          error = std::string("error: em: ") + e.what();
        }
        if (estimated) {
          run_estimators(*estimated, std::string(to_string(head)));
          continue;
        }
        for (auto estimator : config.estimators) {
          SweepRow failed = at_budget;
          failed.estimator = std::string(to_string(estimator));
          failed.bias_mode = std::string(to_string(config.bias_mode));
          failed.head = std::string(to_string(head));
          failed.status = error;
          emit(failed);
        }
      }
    }
  }
  return rows;
}

}  // namespace cltr
