// Command-line front end: generate | simulate | em | train | sweep | eval.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cltr/harness.hpp"
#include "cltr/metrics.hpp"
#include "cltr/random.hpp"

namespace fs = std::filesystem;
using namespace cltr;

namespace {

struct Flags {
  std::optional<std::string> config, seed, eta, eps_minus_1, budget, budget_unit, estimator,
      bias_mode, head, out, data, n_queries, docs_per_query, feature_dim, epochs, architecture;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--seed", f.seed, "run seed (replaces the seed list)");
  cmd->add_option("--eta", f.eta, "position-bias exponent");
  cmd->add_option("--eps-minus-1", f.eps_minus_1, "incorrect-click rate at rank 1");
  cmd->add_option("--budget", f.budget, "click budget(s), comma separated");
  cmd->add_option("--budget-unit", f.budget_unit, "clicks|sessions");
  cmd->add_option("--estimator", f.estimator, "naive|ips|bayes-ips|affine (comma list allowed)");
  cmd->add_option("--bias-mode", f.bias_mode, "oracle|estimated");
  cmd->add_option("--head", f.head, "sigmoid|softmax|soft-min-max (comma list allowed)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--data", f.data, "directory with train.txt, vali.txt, test.txt");
  cmd->add_option("--n-queries", f.n_queries, "synthetic dataset size");
  cmd->add_option("--docs-per-query", f.docs_per_query, "synthetic documents per query");
  cmd->add_option("--feature-dim", f.feature_dim, "synthetic feature dimension");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--architecture", f.architecture, "linear | mlp:32,16");
}

ExperimentConfig build_config(const Flags& f) {
  ExperimentConfig config = f.config ? ExperimentConfig::load(*f.config) : ExperimentConfig{};
  auto over = [&](const std::optional<std::string>& value, const char* key) {
    if (value) config.set(key, *value);
  };
  over(f.seed, "seeds");
  over(f.eta, "eta");
  over(f.eps_minus_1, "eps_minus_1");
  over(f.budget, "budgets");
  over(f.budget_unit, "budget_unit");
  over(f.estimator, "estimators");
  over(f.bias_mode, "bias_mode");
  over(f.head, "heads");
  over(f.out, "out_dir");
  over(f.data, "data_dir");
  over(f.n_queries, "n_queries");
  over(f.docs_per_query, "docs_per_query");
  over(f.feature_dim, "feature_dim");
  over(f.epochs, "epochs");
  over(f.architecture, "architecture");
  config.validate();
  return config;
}

std::ofstream open_output(const ExperimentConfig& config, const std::string& name) {
  fs::create_directories(config.out_dir);
  const fs::path path = fs::path(config.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ofstream open_csv(const ExperimentConfig& config, const std::string& name) {
  auto out = open_output(config, name);
  write_config_header(out, config);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int run_generate(const ExperimentConfig& config) {
  const auto seed = config.seeds.front();
  const Dataset data = load_dataset(config, seed);
  fs::create_directories(config.out_dir);
  write_ltr_file(fs::path(config.out_dir) / "train.txt", data.train);
  write_ltr_file(fs::path(config.out_dir) / "vali.txt", data.validation);
  write_ltr_file(fs::path(config.out_dir) / "test.txt", data.test);

  auto csv = open_csv(config, "generate.csv");
  csv << "split,queries,documents,positive_fraction\n";
  auto summarize = [&](const char* name, const std::vector<Query>& split) {
    std::size_t docs = 0, positive = 0;
    for (const auto& q : split)
      for (const auto& d : q.documents) {
        ++docs;
        positive += static_cast<std::size_t>(d.binary_label);
      }
    csv << name << ',' << split.size() << ',' << docs << ','
        << fmt(docs ? static_cast<double>(positive) / docs : 0.0) << '\n';
  };
  summarize("train", data.train);
  summarize("validation", data.validation);
  summarize("test", data.test);
  return 0;
}

int run_simulate(const ExperimentConfig& config) {
  const auto seed = config.seeds.front();
  const SeedContext context = prepare_seed(config, seed);
  const ClickLogs logs = simulate_logs(config, context, config.budgets.front());
  {
    auto out = open_output(config, "clicks.log");
    write_click_log(out, logs.train);
    auto val = open_output(config, "validation_clicks.log");
    write_click_log(val, logs.validation);
    auto model = open_output(config, "production.model");
    save_model(context.production, model);
  }
  auto csv = open_csv(config, "simulate.csv");
  csv << "k,impressions,clicks,ctr\n";
  std::vector<std::int64_t> shown(static_cast<std::size_t>(context.schedule.max_rank()), 0), clicked(shown);
  for (const auto& cell : impression_cells(logs.train)) {
    shown[cell.rank - 1] += cell.impressions;
    clicked[cell.rank - 1] += cell.clicks;
  }
  for (std::size_t k = 0; k < shown.size(); ++k)
    csv << k + 1 << ',' << shown[k] << ',' << clicked[k] << ','
        << fmt(shown[k] ? static_cast<double>(clicked[k]) / shown[k] : 0.0) << '\n';
  std::cerr << "simulated " << logs.train.sessions.size() << " sessions, "
            << logs.train.total_clicks() << " clicks\n";
  return 0;
}

int run_em_command(const ExperimentConfig& config, const std::optional<std::string>& clicks_path) {
  const auto seed = config.seeds.front();
  const SeedContext context = prepare_seed(config, seed);
  std::optional<ClickLog> log;
  if (clicks_path) {
    std::ifstream in(*clicks_path);
    if (!in) throw std::runtime_error("cannot open " + *clicks_path);
    log.emplace(read_click_log(in));
  } else {
    log.emplace(simulate_logs(config, context, config.budgets.front()).train);
  }
  auto csv = open_csv(config, "zeta.csv");
  for (const auto head : config.heads) {
    const EmResult em = estimate_bias(config, context, *log, head);
    csv << "# head=" << to_string(head) << '\n';
    write_zeta_csv(csv, em.trajectory);
  }
  return 0;
}

int run_train(const ExperimentConfig& config) {
  const auto seed = config.seeds.front();
  const SeedContext context = prepare_seed(config, seed);
  const auto budget = config.budgets.front();
  const ClickLogs logs = simulate_logs(config, context, budget);
  const Estimator estimator = config.estimators.front();

  std::string head = "-";
  BiasSchedule schedule = context.schedule;
  if (config.bias_mode == BiasMode::kEstimated) {
    head = std::string(to_string(config.heads.front()));
    schedule = estimate_bias(config, context, logs.train, config.heads.front()).zeta.to_schedule();
  }
  const CellOutcome outcome = train_cell(config, context, logs, estimator, schedule);
  if (outcome.training.uncovered_documents > 0)
    std::cerr << "warning: " << outcome.training.uncovered_documents
              << " training documents were never displayed; labelled 0\n";

  {
    auto trace = open_csv(config, "trace.csv");
    write_trace_csv(trace, outcome.training.trace);
    auto model = open_output(config, "model.txt");
    save_model(outcome.training.model, model);
  }
  auto csv = open_csv(config, "cell.csv");
  write_sweep_columns(csv);
  SweepRow row;
  row.seed = seed;
  row.eta = config.eta;
  row.eps_minus_1 = config.eps_minus_1;
  row.budget = budget;
  row.budget_unit = config.budget_unit;
  row.estimator = std::string(to_string(estimator));
  row.bias_mode = std::string(to_string(config.bias_mode));
  row.head = head;
  row.ndcg10 = outcome.ndcg10;
  row.production_ndcg10 = context.production_ndcg10;
  row.full_info_ndcg10 = context.full_info_ndcg10;
  row.best_epoch = outcome.training.best_epoch;
  row.schedule_hash = schedule_hash(context.schedule);
  write_sweep_row(csv, row);
  return 0;
}

int run_sweep_command(const ExperimentConfig& config) {
  auto csv = open_csv(config, "sweep.csv");
  write_sweep_columns(csv);
  const auto rows = run_sweep(config, &csv);
  int failures = 0;
  for (const auto& r : rows) failures += r.status != "ok";
  std::cerr << rows.size() << " rows, " << failures << " failed cells\n";
  return 0;
}

int run_eval(const ExperimentConfig& config, const std::string& model_path) {
  std::ifstream in(model_path);
  if (!in) throw std::runtime_error("cannot open " + model_path);
  const ScoringModel model = load_model(in);
  const Dataset data = load_dataset(config, config.seeds.front());
  auto csv = open_csv(config, "eval.csv");
  csv << "split,queries,ndcg10,true_delta_dcg\n";
  const RankWeight lambda = dcg_rank_weight();
  auto row = [&](const char* name, const std::vector<Query>& split) {
    if (split.empty()) return;
    csv << name << ',' << split.size() << ',' << fmt(evaluate_ndcg(model, split, 10)) << ','
        << fmt(true_delta(model, split, lambda)) << '\n';
  };
  row("train", data.train);
  row("validation", data.validation);
  row("test", data.test);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual learning-to-rank laboratory under position and trust bias"};
  app.require_subcommand(1);

  Flags gen_f, sim_f, em_f, train_f, sweep_f, eval_f;
  auto* gen = app.add_subcommand("generate", "write a synthetic LTR dataset");
  auto* sim = app.add_subcommand("simulate", "train a production ranker and simulate a click log");
  auto* em = app.add_subcommand("em", "estimate per-rank click rates with regression EM");
  auto* train = app.add_subcommand("train", "train one estimator cell");
  auto* sweep = app.add_subcommand("sweep", "run the full experiment grid");
  auto* eval = app.add_subcommand("eval", "evaluate a model checkpoint");
  add_common(gen, gen_f);
  add_common(sim, sim_f);
  add_common(em, em_f);
  add_common(train, train_f);
  add_common(sweep, sweep_f);
  add_common(eval, eval_f);

  std::optional<std::string> clicks_path;
  em->add_option("--clicks", clicks_path, "read the click log instead of simulating one");
  std::string model_path;
  eval->add_option("--model", model_path, "model checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return run_generate(build_config(gen_f));
    if (*sim) return run_simulate(build_config(sim_f));
    if (*em) return run_em_command(build_config(em_f), clicks_path);
    if (*train) return run_train(build_config(train_f));
    if (*sweep) return run_sweep_command(build_config(sweep_f));
    if (*eval) return run_eval(build_config(eval_f), model_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
