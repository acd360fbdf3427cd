// gzhybrid: synthetic Galaxy Zoo style data generation, hybrid
// contrastive/supervised pretraining, linear-probe evaluation and reporting.
//
// Subcommands: gen-data, train, probe, sweep, plot.
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gzhybrid/checkpoint.hpp"
#include "gzhybrid/config.hpp"
#include "gzhybrid/errors.hpp"
#include "gzhybrid/plot.hpp"
#include "gzhybrid/probe.hpp"
#include "gzhybrid/synthdata.hpp"
#include "gzhybrid/trainer.hpp"

namespace {

using namespace gzhybrid;
namespace fs = std::filesystem;

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config file (JSON)");
  cmd->add_option("--seed", flags.seed, "Master seed; all sub-streams derive from it")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_flag("--print-config", flags.print_config,
                "Print the fully resolved config and exit");
}

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = ExperimentConfig::from_file(flags.config_path);
  if (flags.seed_set) cfg.seed = flags.seed;
  return cfg;
}

void archive_config(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.resolved.json", std::ios::binary);
  out << cfg.to_json_text();
  if (!out) throw ConfigError("cannot archive config under " + dir.string());
}

Dataset open_dataset(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.dataset_dir;
  if (cfg.schema_path.empty()) return load_dataset(dir);
  std::ifstream in(cfg.schema_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open schema document: " + cfg.schema_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_catalog(dir / "catalog.csv", dir / "images",
                      AnswerSchema::from_document(buf.str()), buf.str());
}

// ---------------------------------------------------------------------------

int run_gen_data(const CommonFlags& flags, const ExperimentConfig& cfg_in,
                 const std::string& out_dir) {
  ExperimentConfig cfg = cfg_in;
  cfg.out_dir = out_dir;
  cfg.resolve_and_validate(false);
  if (flags.print_config) {
    std::cout << cfg.to_json_text();
    return 0;
  }
  const Dataset ds = make_dataset(cfg.gen, cfg.seed);
  write_dataset(ds, out_dir);
  archive_config(cfg, out_dir);
  std::cout << "wrote " << ds.records.size() << " records to " << out_dir << " ("
            << ds.split_indices("train").size() << " train, "
            << ds.split_indices("val").size() << " val, "
            << ds.split_indices("test").size() << " test, "
            << ds.split_indices("unlabelled").size() << " unlabelled, "
            << ds.split_indices("ring_train").size() << " ring_train, "
            << ds.split_indices("ring_test").size() << " ring_test)" << std::endl;
  return 0;
}

int run_train(const CommonFlags& flags, const ExperimentConfig& cfg_in,
              const std::string& out_dir) {
  ExperimentConfig cfg = cfg_in;
  cfg.out_dir = out_dir;
  cfg.resolve_and_validate(true);
  if (flags.print_config) {
    std::cout << cfg.to_json_text();
    return 0;
  }
  const Dataset ds = open_dataset(cfg);
  archive_config(cfg, out_dir);
  const TrainResult result = train_model(cfg, ds, out_dir);
  std::cout << "checkpoint: " << result.checkpoint_path.string() << "\n"
            << "best validation objective: " << result.best_objective << "\n"
            << "steps: " << result.steps << ", epochs: " << result.epochs_completed
            << (result.early_stopped ? " (early stop)" : "") << std::endl;
  return 0;
}

int run_probe(const CommonFlags& flags, ExperimentConfig cfg,
              const std::string& checkpoint, const std::string& out_dir, int budget) {
  cfg.resolve_and_validate(true);
  if (flags.print_config) {
    std::cout << cfg.to_json_text();
    return 0;
  }
  if (!fs::exists(checkpoint))
    throw ConfigError("checkpoint does not exist: " + checkpoint);

  const ExperimentConfig ckpt_cfg = checkpoint_config(checkpoint);
  const Dataset ds = open_dataset(cfg);
  const NamedTensors tensors = load_checkpoint(checkpoint);
  ParameterSet<float> encoder = init_encoder_params<float>(ckpt_cfg.encoder, 0);
  apply_group(tensors, "online/encoder", encoder);

  const auto pool = ds.split_indices("ring_train");
  std::vector<int> labels;
  for (auto i : pool) {
    if (!ds.records[i].ring_label)
      throw DataError("probe: record " + ds.records[i].id + " has no ring label");
    labels.push_back(*ds.records[i].ring_label);
  }
  const RepresentationMatrix reps =
      extract_representations(ckpt_cfg.encoder, encoder, ds, pool);
  ProbeResult result = train_linear_probe(reps, labels, budget, cfg.probe.folds,
                                          cfg.probe.l2, cfg.seed, cfg.probe.max_iters,
                                          cfg.probe.tol);
  result.method = "probe";

  const fs::path out =
      out_dir.empty() ? fs::path(checkpoint).parent_path() : fs::path(out_dir);
  fs::create_directories(out);
  write_probe_tables({result}, {}, out / "probe_results.csv",
                     out / "probe_summary.csv");

  std::printf("budget %d, %d folds\n", result.budget, int(result.fold_accuracies.size()));
  for (std::size_t f = 0; f < result.fold_accuracies.size(); ++f)
    std::printf("  fold %zu accuracy %.4f\n", f, result.fold_accuracies[f]);
  std::printf("mean %.4f  std %.4f  majority-baseline %.4f\n", result.mean,
              result.stddev, result.majority_baseline);
  return 0;
}

int run_sweep(const CommonFlags& flags, ExperimentConfig cfg,
              const std::vector<std::string>& method_specs, bool include_direct,
              std::vector<int> budgets, const std::string& out_dir) {
  cfg.resolve_and_validate(true);
  if (flags.print_config) {
    std::cout << cfg.to_json_text();
    return 0;
  }
  std::vector<SweepMethod> methods;
  for (const auto& spec : method_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
      throw ConfigError("--method expects name=checkpoint_path, got '" + spec + "'");
    SweepMethod m{spec.substr(0, eq), spec.substr(eq + 1)};
    if (!fs::exists(m.checkpoint))
      throw ConfigError("checkpoint does not exist: " + m.checkpoint.string());
    methods.push_back(std::move(m));
  }
  if (include_direct) methods.push_back({"direct", {}});
  if (methods.empty())
    throw ConfigError("sweep: give at least one --method or --direct");
  if (budgets.empty()) budgets = cfg.probe.budgets;

  const Dataset ds = open_dataset(cfg);
  archive_config(cfg, out_dir);
  const SweepResult sweep = budget_sweep(methods, budgets, ds, cfg, cfg.seed, out_dir);

  std::printf("%-14s %8s %10s %10s\n", "method", "budget", "mean", "std");
  for (const auto& cell : sweep.cells)
    std::printf("%-14s %8d %10.4f %10.4f\n", cell.method.c_str(), cell.budget,
                cell.mean, cell.stddev);
  for (const auto& miss : sweep.missing) std::printf("missing: %s\n", miss.c_str());
  std::cout << "tables and plots written to " << out_dir << std::endl;
  return 0;
}

int run_plot(const std::string& summary_path, const std::string& out_dir) {
  std::ifstream in(summary_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open summary table: " + summary_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("plot: summary table is empty");

  struct Row {
    std::string method;
    double budget, mean, stddev;
    bool has_loss = false;
    double loss = 0.0;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto next = line.find(',', pos);
      fields.push_back(line.substr(pos, next == std::string::npos ? next : next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (fields.size() < 4) throw DataError("plot: malformed summary row: " + line);
    Row r;
    r.method = fields[0];
    r.budget = std::stod(fields[1]);
    r.mean = std::stod(fields[2]);
    r.stddev = std::stod(fields[3]);
    if (fields.size() >= 6 && !fields[5].empty()) {
      r.has_loss = true;
      r.loss = std::stod(fields[5]);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("plot: summary table has no data rows");

  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.method) == order.end())
      order.push_back(r.method);

  std::vector<PlotSeries> series;
  for (const auto& name : order) {
    PlotSeries s;
    s.name = name;
    for (const auto& r : rows)
      if (r.method == name) s.points.push_back({r.budget, r.mean, r.stddev});
    series.push_back(std::move(s));
  }
  const fs::path out = out_dir.empty() ? fs::path(summary_path).parent_path()
                                       : fs::path(out_dir);
  fs::create_directories(out);
  write_line_chart_svg(out / "accuracy_vs_budget.svg",
                       "downstream accuracy vs label budget", "ring labels",
                       "5-fold accuracy", series, true);
  std::cout << "wrote " << (out / "accuracy_vs_budget.svg").string() << std::endl;

  std::vector<ScatterPoint> points;
  for (const auto& name : order) {
    double best_budget = -1.0;
    ScatterPoint pt;
    for (const auto& r : rows)
      if (r.method == name && r.has_loss && r.budget > best_budget) {
        best_budget = r.budget;
        pt = {r.loss, r.mean, name};
      }
    if (best_budget >= 0.0) points.push_back(pt);
  }
  if (!points.empty()) {
    write_scatter_svg(out / "loss_vs_accuracy.svg",
                      "contrastive loss vs downstream accuracy",
                      "final contrastive loss", "downstream accuracy", points);
    std::cout << "wrote " << (out / "loss_vs_accuracy.svg").string() << std::endl;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid contrastive/supervised galaxy-morphology pretraining"};
  app.require_subcommand(1);

  // gen-data ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  CommonFlags gen_flags;
  add_common(gen, gen_flags);
  std::string gen_out;
  int gen_labelled = -1, gen_unlabelled = -1, gen_rings = -1, gen_image_size = -1;
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--labelled", gen_labelled, "Labelled pretraining records");
  gen->add_option("--unlabelled", gen_unlabelled, "Unlabelled records");
  gen->add_option("--rings", gen_rings, "Ring-task records");
  gen->add_option("--image-size", gen_image_size, "Generated image side length");

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train one model");
  CommonFlags train_flags;
  add_common(train, train_flags);
  std::string train_data, train_out, train_mode;
  double train_lambda = -1.0;
  int train_epochs = -1, train_patience = -1, train_batch = -1;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Run output directory")->required();
  train->add_option("--mode", train_mode, "direct|pretrain|contrastive|hybrid");
  train->add_option("--lambda", train_lambda, "Supervised weight in the combined loss");
  train->add_option("--epochs", train_epochs, "Epoch cap");
  train->add_option("--patience", train_patience, "Early-stop patience (evaluations)");
  train->add_option("--batch", train_batch, "Batch size");

  // probe ------------------------------------------------------------------
  auto* probe = app.add_subcommand("probe", "Linear probe of a frozen checkpoint");
  CommonFlags probe_flags;
  add_common(probe, probe_flags);
  std::string probe_ckpt, probe_data, probe_out;
  int probe_budget = -1;
  probe->add_option("--checkpoint", probe_ckpt, "Checkpoint file")->required();
  probe->add_option("--data", probe_data, "Dataset directory")->required();
  probe->add_option("--budget", probe_budget, "Ring label budget");
  probe->add_option("--out", probe_out, "Output directory (default: checkpoint dir)");

  // sweep ------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Label-budget sweep over checkpoints");
  CommonFlags sweep_flags;
  add_common(sweep, sweep_flags);
  std::string sweep_data, sweep_out;
  std::vector<std::string> sweep_methods;
  std::vector<int> sweep_budgets;
  bool sweep_direct = false;
  sweep->add_option("--data", sweep_data, "Dataset directory")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--method", sweep_methods,
                    "name=checkpoint_path (repeatable)");
  sweep->add_flag("--direct", sweep_direct, "Include the direct-training baseline");
  sweep->add_option("--budgets", sweep_budgets, "Ascending label budgets");

  // plot -------------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "Render plots from a sweep summary table");
  std::string plot_summary, plot_out;
  plot->add_option("--summary", plot_summary, "summary.csv from sweep")->required();
  plot->add_option("--out", plot_out, "Output directory (default: table dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = load_config(gen_flags);
      if (gen_labelled >= 0) cfg.gen.labelled = gen_labelled;
      if (gen_unlabelled >= 0) cfg.gen.unlabelled = gen_unlabelled;
      if (gen_rings >= 0) cfg.gen.rings = gen_rings;
      if (gen_image_size > 0) cfg.gen.image_size = gen_image_size;
      return run_gen_data(gen_flags, cfg, gen_out);
    }
    if (train->parsed()) {
      ExperimentConfig cfg = load_config(train_flags);
      cfg.dataset_dir = train_data;
      if (!train_mode.empty()) cfg.train.mode = parse_train_mode(train_mode);
      if (train_lambda >= 0.0) cfg.train.lambda = train_lambda;
      if (train_epochs > 0) cfg.train.epochs = train_epochs;
      if (train_patience > 0) cfg.train.patience = train_patience;
      if (train_batch > 0) cfg.train.batch_size = train_batch;
      return run_train(train_flags, cfg, train_out);
    }
    if (probe->parsed()) {
      ExperimentConfig cfg = load_config(probe_flags);
      cfg.dataset_dir = probe_data;
      if (probe_budget <= 0) probe_budget = cfg.probe.budget;
      return run_probe(probe_flags, cfg, probe_ckpt, probe_out, probe_budget);
    }
    if (sweep->parsed()) {
      ExperimentConfig cfg = load_config(sweep_flags);
      cfg.dataset_dir = sweep_data;
      return run_sweep(sweep_flags, cfg, sweep_methods, sweep_direct, sweep_budgets,
                       sweep_out);
    }
    if (plot->parsed()) return run_plot(plot_summary, plot_out);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << std::endl;
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << std::endl;
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << std::endl;
    return 2;
  } catch (const EncodingError& e) {
    std::cerr << "encoding error: " << e.what() << std::endl;
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
