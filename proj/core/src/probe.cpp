#include "gzhybrid/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "gzhybrid/checkpoint.hpp"
#include "gzhybrid/errors.hpp"
#include "gzhybrid/plot.hpp"
#include "gzhybrid/rng.hpp"
#include "gzhybrid/trainer.hpp"

namespace gzhybrid {

RepresentationMatrix extract_representations(const EncoderConfig& encoder_cfg,
                                             const ParameterSet<float>& encoder,
                                             const Dataset& dataset,
                                             std::span<const std::size_t> indices) {
  RepresentationMatrix out;
  out.width = encoder_cfg.representation_width;
  out.ids.reserve(indices.size());
  out.values.reserve(indices.size() * std::size_t(out.width));

  const std::size_t chunk = 64;
  for (std::size_t at = 0; at < indices.size(); at += chunk) {
    const std::size_t hi = std::min(indices.size(), at + chunk);
    const Tensor<float> views =
        center_batch(dataset, indices.subspan(at, hi - at), encoder_cfg.in_height);
    const Tensor<float> y = encoder_forward(encoder_cfg, encoder, views, nullptr);
    if (!y.all_finite())
      throw NumericError("extract_representations: non-finite representation");
    out.values.insert(out.values.end(), y.data.begin(), y.data.end());
  }
  for (auto i : indices) out.ids.push_back(dataset.records[i].id);
  return out;
}

namespace {

// Stratified draw of `budget` row indices (positions into labels). Keeps the
// class balance within one sample of the pool's.
std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels,
                                              int budget, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] ? pos : neg).push_back(i);
  if (budget > int(labels.size()))
    throw DataError("probe: budget exceeds available labels");
  rng.shuffle(pos);
  rng.shuffle(neg);
  const double pos_frac = double(pos.size()) / double(labels.size());
  std::size_t n_pos = std::size_t(std::llround(pos_frac * budget));
  n_pos = std::min(n_pos, pos.size());
  std::size_t n_neg = std::size_t(budget) - n_pos;
  if (n_neg > neg.size()) {
    n_pos += n_neg - neg.size();
    n_neg = neg.size();
    n_pos = std::min(n_pos, pos.size());
  }
  if (n_pos == 0 || n_neg == 0)
    throw DataError("probe: budgeted subsample is single-class, reseed and retry");
  std::vector<std::size_t> out(pos.begin(), pos.begin() + long(n_pos));
  out.insert(out.end(), neg.begin(), neg.begin() + long(n_neg));
  std::sort(out.begin(), out.end());
  return out;
}

// Fold ids per subsample row; stratified, disjoint, exhaustive.
std::vector<int> stratified_folds(const std::vector<int>& labels,
                                  const std::vector<std::size_t>& subsample, int folds,
                                  Rng& rng) {
  std::vector<int> fold_of(subsample.size(), -1);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < subsample.size(); ++i)
      if (labels[subsample[i]] == cls) rows.push_back(i);
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i)
      fold_of[rows[i]] = int(i % std::size_t(folds));
  }
  return fold_of;
}

struct LogisticModel {
  std::vector<double> weights;  // on standardized features
  double bias = 0.0;
  std::vector<double> mean, scale;  // standardization fitted on training rows
};

double logistic_objective(const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y, const std::vector<double>& w,
                          double b, double l2, std::vector<double>* gw, double* gb) {
  const std::size_t n = x.size(), d = w.size();
  if (gw) {
    gw->assign(d, 0.0);
    *gb = 0.0;
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = b;
    for (std::size_t j = 0; j < d; ++j) z += w[j] * x[i][j];
    const double yi = double(y[i]);
    loss += std::max(z, 0.0) - yi * z + std::log1p(std::exp(-std::abs(z)));
    if (gw) {
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double g = (s - yi) / double(n);
      for (std::size_t j = 0; j < d; ++j) (*gw)[j] += g * x[i][j];
      *gb += g;
    }
  }
  loss /= double(n);
  for (std::size_t j = 0; j < d; ++j) {
    loss += 0.5 * l2 * w[j] * w[j];
    if (gw) (*gw)[j] += l2 * w[j];
  }
  return loss;
}

// Full-batch gradient descent with a backtracking line search; deterministic
// and dependency-free. Stops when the loss change drops below tol.
LogisticModel fit_logistic(const std::vector<std::vector<double>>& x_raw,
                           const std::vector<int>& y, double l2, int max_iters,
                           double tol) {
  const std::size_t n = x_raw.size();
  const std::size_t d = n ? x_raw[0].size() : 0;

  LogisticModel model;
  model.mean.assign(d, 0.0);
  model.scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x_raw[i][j];
    m /= double(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (x_raw[i][j] - m) * (x_raw[i][j] - m);
    v = std::sqrt(v / double(n));
    model.mean[j] = m;
    model.scale[j] = v > 1e-12 ? v : 1.0;
  }
  std::vector<std::vector<double>> x(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      x[i][j] = (x_raw[i][j] - model.mean[j]) / model.scale[j];

  model.weights.assign(d, 0.0);
  model.bias = 0.0;
  std::vector<double> gw;
  double gb = 0.0;
  double loss = logistic_objective(x, y, model.weights, model.bias, l2, &gw, &gb);
  double step = 1.0;

  for (int iter = 0; iter < max_iters; ++iter) {
    double gnorm2 = gb * gb;
    for (double g : gw) gnorm2 += g * g;
    if (gnorm2 < 1e-18) break;

    std::vector<double> w_try(d);
    double b_try = 0.0, loss_try = 0.0;
    bool accepted = false;
    for (int back = 0; back < 40; ++back) {
      for (std::size_t j = 0; j < d; ++j) w_try[j] = model.weights[j] - step * gw[j];
      b_try = model.bias - step * gb;
      loss_try = logistic_objective(x, y, w_try, b_try, l2, nullptr, nullptr);
      if (loss_try <= loss - 1e-4 * step * gnorm2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double delta = loss - loss_try;
    model.weights = w_try;
    model.bias = b_try;
    loss = logistic_objective(x, y, model.weights, model.bias, l2, &gw, &gb);
    step = std::min(step * 2.0, 1e6);
    if (delta < tol) break;
  }
  return model;
}

int logistic_predict(const LogisticModel& m, std::span<const double> row) {
  double z = m.bias;
  for (std::size_t j = 0; j < m.weights.size(); ++j)
    z += m.weights[j] * ((row[j] - m.mean[j]) / m.scale[j]);
  return z > 0.0 ? 1 : 0;
}

void finish_stats(ProbeResult& r) {
  double mean = 0.0;
  for (double a : r.fold_accuracies) mean += a;
  mean /= double(r.fold_accuracies.size());
  double var = 0.0;
  for (double a : r.fold_accuracies) var += (a - mean) * (a - mean);
  r.mean = mean;
  r.stddev = std::sqrt(var / double(r.fold_accuracies.size()));
}

}  // namespace

std::vector<std::size_t> probe_subsample(const std::vector<int>& labels, int budget,
                                         std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "probe-subsample");
  return stratified_subsample(labels, budget, rng);
}

std::vector<int> probe_fold_assignment(const std::vector<int>& labels,
                                       const std::vector<std::size_t>& subsample,
                                       int folds, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "probe-folds");
  return stratified_folds(labels, subsample, folds, rng);
}

ProbeResult train_linear_probe(const RepresentationMatrix& representations,
                               const std::vector<int>& labels, int budget, int folds,
                               double l2, std::uint64_t seed, int max_iters,
                               double tol) {
  if (labels.size() != representations.ids.size())
    throw std::invalid_argument("train_linear_probe: labels misaligned with rows");
  if (budget < folds) throw DataError("probe: budget smaller than fold count");

  const auto subsample = probe_subsample(labels, budget, seed);
  const auto fold_of = probe_fold_assignment(labels, subsample, folds, seed);

  ProbeResult result;
  result.budget = budget;
  double majority_sum = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::vector<double>> x_train;
    std::vector<int> y_train;
    std::vector<std::size_t> heldout;
    for (std::size_t i = 0; i < subsample.size(); ++i) {
      const auto row = representations.row(subsample[i]);
      if (fold_of[i] == f) {
        heldout.push_back(i);
      } else {
        x_train.emplace_back(row.begin(), row.end());
        y_train.push_back(labels[subsample[i]]);
      }
    }
    if (x_train.empty() || heldout.empty())
      throw DataError("probe: fold " + std::to_string(f) + " is degenerate");

    const LogisticModel model = fit_logistic(x_train, y_train, l2, max_iters, tol);

    long train_pos = std::accumulate(y_train.begin(), y_train.end(), 0L);
    const int majority = 2 * train_pos >= long(y_train.size()) ? 1 : 0;

    long correct = 0, majority_correct = 0;
    for (auto i : heldout) {
      std::vector<double> row(representations.row(subsample[i]).begin(),
                              representations.row(subsample[i]).end());
      if (logistic_predict(model, row) == labels[subsample[i]]) ++correct;
      if (majority == labels[subsample[i]]) ++majority_correct;
    }
    result.fold_accuracies.push_back(double(correct) / double(heldout.size()));
    majority_sum += double(majority_correct) / double(heldout.size());
  }
  finish_stats(result);
  result.majority_baseline = majority_sum / double(folds);
  return result;
}

ExperimentConfig checkpoint_config(const std::filesystem::path& checkpoint_path) {
  const auto cfg_path = checkpoint_path.parent_path() / "config.resolved.json";
  if (!std::filesystem::exists(cfg_path))
    throw ConfigError("no archived config next to checkpoint: " + cfg_path.string());
  ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
  cfg.resolve_and_validate(false);
  return cfg;
}

void write_probe_tables(const std::vector<ProbeResult>& cells,
                        const std::map<std::string, double>& final_contrastive,
                        const std::filesystem::path& results_path,
                        const std::filesystem::path& summary_path) {
  std::ofstream results(results_path, std::ios::binary);
  results << "method,budget,fold,accuracy\n";
  for (const auto& cell : cells)
    for (std::size_t f = 0; f < cell.fold_accuracies.size(); ++f) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s,%d,%zu,%.6f\n", cell.method.c_str(),
                    cell.budget, f, cell.fold_accuracies[f]);
      results << buf;
    }

  std::ofstream summary(summary_path, std::ios::binary);
  summary << "method,budget,mean_accuracy,std_accuracy,majority_baseline,"
             "final_contrastive_loss\n";
  for (const auto& cell : cells) {
    char buf[192];
    const auto it = final_contrastive.find(cell.method);
    if (it != final_contrastive.end())
      std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f,%.6f\n",
                    cell.method.c_str(), cell.budget, cell.mean, cell.stddev,
                    cell.majority_baseline, it->second);
    else
      std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f,\n", cell.method.c_str(),
                    cell.budget, cell.mean, cell.stddev, cell.majority_baseline);
    summary << buf;
  }
}

SweepResult budget_sweep(const std::vector<SweepMethod>& methods,
                         const std::vector<int>& budgets, const Dataset& dataset,
                         const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& out_dir) {
  if (!std::is_sorted(budgets.begin(), budgets.end()))
    throw ConfigError("sweep: budgets must be ascending");
  std::filesystem::create_directories(out_dir);

  const auto pool = dataset.split_indices("ring_train");
  if (pool.empty()) throw DataError("sweep: ring_train split is empty");
  std::vector<int> labels;
  labels.reserve(pool.size());
  for (auto i : pool) {
    if (!dataset.records[i].ring_label)
      throw DataError("sweep: record " + dataset.records[i].id + " has no ring label");
    labels.push_back(*dataset.records[i].ring_label);
  }

  SweepResult sweep;
  for (const auto& method : methods) {
    if (method.checkpoint.empty()) {
      // Direct baseline: end-to-end training per budget and fold.
      for (int budget : budgets) {
        try {
          const auto subsample = probe_subsample(labels, budget, seed);
          const auto fold_of =
              probe_fold_assignment(labels, subsample, cfg.probe.folds, seed);

          ProbeResult cell;
          cell.method = method.name;
          cell.budget = budget;
          double majority_sum = 0.0;
          for (int f = 0; f < cfg.probe.folds; ++f) {
            std::vector<std::size_t> train_idx, held_idx;
            std::vector<int> train_y, held_y;
            for (std::size_t i = 0; i < subsample.size(); ++i) {
              const std::size_t rec = pool[subsample[i]];
              if (fold_of[i] == f) {
                held_idx.push_back(rec);
                held_y.push_back(labels[subsample[i]]);
              } else {
                train_idx.push_back(rec);
                train_y.push_back(labels[subsample[i]]);
              }
            }
            const DirectModel model = train_direct_model(
                cfg, dataset, train_idx, train_y,
                Rng::stream(seed, "direct-cell", std::uint64_t(budget),
                            std::uint64_t(f))
                    .next_u64(),
                nullptr);
            const auto scores = direct_scores(model, dataset, held_idx);
            long correct = 0;
            long train_pos = std::accumulate(train_y.begin(), train_y.end(), 0L);
            const int majority = 2 * train_pos >= long(train_y.size()) ? 1 : 0;
            long majority_correct = 0;
            for (std::size_t i = 0; i < held_idx.size(); ++i) {
              if ((scores[i] > 0.0 ? 1 : 0) == held_y[i]) ++correct;
              if (majority == held_y[i]) ++majority_correct;
            }
            cell.fold_accuracies.push_back(double(correct) / double(held_idx.size()));
            majority_sum += double(majority_correct) / double(held_idx.size());
          }
          finish_stats(cell);
          cell.majority_baseline = majority_sum / double(cfg.probe.folds);
          sweep.cells.push_back(std::move(cell));
          std::cout << "sweep " << method.name << " budget " << budget << " mean "
                    << sweep.cells.back().mean << std::endl;
        } catch (const std::exception& e) {
          sweep.missing.push_back(method.name + "@" + std::to_string(budget) + ": " +
                                  e.what());
          std::cerr << "sweep cell failed: " << sweep.missing.back() << std::endl;
        }
      }
      continue;
    }

    // Frozen-representation methods.
    RepresentationMatrix reps;
    ExperimentConfig mcfg = cfg;
    try {
      mcfg = checkpoint_config(method.checkpoint);
      const NamedTensors ckpt = load_checkpoint(method.checkpoint);
      ParameterSet<float> encoder = init_encoder_params<float>(mcfg.encoder, 0);
      apply_group(ckpt, "online/encoder", encoder);
      reps = extract_representations(mcfg.encoder, encoder, dataset, pool);
      try {
        sweep.final_contrastive[method.name] =
            eval_checkpoint_contrastive(mcfg, dataset, ckpt);
      } catch (const std::exception&) {
        // No target network in this checkpoint; the scatter omits it.
      }
    } catch (const std::exception& e) {
      for (int budget : budgets)
        sweep.missing.push_back(method.name + "@" + std::to_string(budget) + ": " +
                                e.what());
      std::cerr << "sweep method failed: " << method.name << ": " << e.what()
                << std::endl;
      continue;
    }

    for (int budget : budgets) {
      try {
        ProbeResult cell = train_linear_probe(reps, labels, budget, cfg.probe.folds,
                                              cfg.probe.l2, seed, cfg.probe.max_iters,
                                              cfg.probe.tol);
        cell.method = method.name;
        sweep.cells.push_back(std::move(cell));
        std::cout << "sweep " << method.name << " budget " << budget << " mean "
                  << sweep.cells.back().mean << std::endl;
      } catch (const std::exception& e) {
        sweep.missing.push_back(method.name + "@" + std::to_string(budget) + ": " +
                                e.what());
        std::cerr << "sweep cell failed: " << sweep.missing.back() << std::endl;
      }
    }
  }

  write_probe_tables(sweep.cells, sweep.final_contrastive, out_dir / "results.csv",
                     out_dir / "summary.csv");

  // Accuracy vs budget, one series per method.
  std::vector<PlotSeries> series;
  for (const auto& method : methods) {
    PlotSeries s;
    s.name = method.name;
    for (const auto& cell : sweep.cells)
      if (cell.method == method.name)
        s.points.push_back({double(cell.budget), cell.mean, cell.stddev});
    if (!s.points.empty()) series.push_back(std::move(s));
  }
  if (!series.empty())
    write_line_chart_svg(out_dir / "accuracy_vs_budget.svg",
                         "downstream accuracy vs label budget", "ring labels",
                         "5-fold accuracy", series, true);

  // Contrastive loss vs accuracy at the largest budget per method.
  std::vector<ScatterPoint> points;
  for (const auto& [name, loss] : sweep.final_contrastive) {
    double best_budget = -1.0, acc = 0.0;
    for (const auto& cell : sweep.cells)
      if (cell.method == name && double(cell.budget) > best_budget) {
        best_budget = double(cell.budget);
        acc = cell.mean;
      }
    if (best_budget >= 0.0) points.push_back({loss, acc, name});
  }
  if (!points.empty())
    write_scatter_svg(out_dir / "loss_vs_accuracy.svg",
                      "contrastive loss vs downstream accuracy",
                      "final contrastive loss", "downstream accuracy", points);
  return sweep;
}

}  // namespace gzhybrid
