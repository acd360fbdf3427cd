#include "gzhybrid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gzhybrid/errors.hpp"

namespace gzhybrid {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

void read_augment(const json& obj, const std::string& where, AugmentPolicy& p) {
  check_keys(obj,
             {"rotation_min_deg", "rotation_max_deg", "crop_scale_min",
              "crop_scale_max", "flip_p", "jitter_strength", "blur_p"},
             where);
  read(obj, "rotation_min_deg", p.rotation_min_deg);
  read(obj, "rotation_max_deg", p.rotation_max_deg);
  read(obj, "crop_scale_min", p.crop_scale_min);
  read(obj, "crop_scale_max", p.crop_scale_max);
  read(obj, "flip_p", p.flip_p);
  read(obj, "jitter_strength", p.jitter_strength);
  read(obj, "blur_p", p.blur_p);
}

json augment_to_json(const AugmentPolicy& p) {
  return json{{"rotation_min_deg", p.rotation_min_deg},
              {"rotation_max_deg", p.rotation_max_deg},
              {"crop_scale_min", p.crop_scale_min},
              {"crop_scale_max", p.crop_scale_max},
              {"flip_p", p.flip_p},
              {"jitter_strength", p.jitter_strength},
              {"blur_p", p.blur_p}};
}

}  // namespace

TrainMode parse_train_mode(const std::string& text) {
  if (text == "direct") return TrainMode::direct;
  if (text == "pretrain") return TrainMode::pretrain;
  if (text == "contrastive") return TrainMode::contrastive;
  if (text == "hybrid") return TrainMode::hybrid;
  throw ConfigError("config: unknown training mode '" + text +
                    "' (expected direct|pretrain|contrastive|hybrid)");
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::direct: return "direct";
    case TrainMode::pretrain: return "pretrain";
    case TrainMode::contrastive: return "contrastive";
    case TrainMode::hybrid: return "hybrid";
  }
  return "hybrid";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(doc,
             {"seed", "out", "dataset", "schema", "encoder", "heads", "train",
              "augment", "probe", "direct", "gen"},
             "top level");

  ExperimentConfig cfg;
  read(doc, "seed", cfg.seed);
  read(doc, "out", cfg.out_dir);
  read(doc, "dataset", cfg.dataset_dir);
  read(doc, "schema", cfg.schema_path);

  if (doc.contains("encoder")) {
    const auto& e = doc["encoder"];
    check_keys(e, {"input_size", "stages", "representation_width",
                   "normalize_representation"},
               "encoder");
    int input_size = cfg.encoder.in_height;
    read(e, "input_size", input_size);
    cfg.encoder.in_height = input_size;
    cfg.encoder.in_width = input_size;
    if (e.contains("stages")) {
      cfg.encoder.stages.clear();
      for (const auto& s : e["stages"]) {
        if (!s.is_array() || s.size() != 3)
          throw ConfigError("config: encoder stages must be [filters, kernel, stride]");
        cfg.encoder.stages.push_back(
            {s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
      }
    }
    read(e, "representation_width", cfg.encoder.representation_width);
    read(e, "normalize_representation", cfg.encoder.normalize_representation);
  }

  if (doc.contains("heads")) {
    const auto& h = doc["heads"];
    check_keys(h, {"projection_width", "hidden_width", "per_sample_norm"}, "heads");
    read(h, "projection_width", cfg.heads.projection_width);
    read(h, "hidden_width", cfg.heads.hidden_width);
    read(h, "per_sample_norm", cfg.heads.per_sample_norm);
  }

  if (doc.contains("train")) {
    const auto& t = doc["train"];
    check_keys(t,
               {"mode", "lambda", "ema_decay", "ema_schedule", "ema_base",
                "eq3_denominator", "denominator_floor", "supervised_both_views",
                "batch_size", "epochs", "patience", "lr", "beta1", "beta2",
                "max_eval_samples"},
               "train");
    std::string mode = to_string(cfg.train.mode);
    read(t, "mode", mode);
    cfg.train.mode = parse_train_mode(mode);
    read(t, "lambda", cfg.train.lambda);
    read(t, "ema_decay", cfg.train.ema_decay);
    read(t, "ema_schedule", cfg.train.ema_schedule);
    read(t, "ema_base", cfg.train.ema_base);
    read(t, "eq3_denominator", cfg.train.eq3_denominator);
    read(t, "denominator_floor", cfg.train.denominator_floor);
    read(t, "supervised_both_views", cfg.train.supervised_both_views);
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "epochs", cfg.train.epochs);
    read(t, "patience", cfg.train.patience);
    read(t, "lr", cfg.train.lr);
    read(t, "beta1", cfg.train.beta1);
    read(t, "beta2", cfg.train.beta2);
    read(t, "max_eval_samples", cfg.train.max_eval_samples);
  }

  if (doc.contains("augment")) {
    const auto& a = doc["augment"];
    check_keys(a, {"standard", "strong"}, "augment");
    if (a.contains("standard")) read_augment(a["standard"], "augment.standard", cfg.augment_standard);
    if (a.contains("strong")) read_augment(a["strong"], "augment.strong", cfg.augment_strong);
  }

  if (doc.contains("probe")) {
    const auto& p = doc["probe"];
    check_keys(p, {"budgets", "folds", "l2", "budget", "max_iters", "tol"}, "probe");
    read(p, "budgets", cfg.probe.budgets);
    read(p, "folds", cfg.probe.folds);
    read(p, "l2", cfg.probe.l2);
    read(p, "budget", cfg.probe.budget);
    read(p, "max_iters", cfg.probe.max_iters);
    read(p, "tol", cfg.probe.tol);
  }

  if (doc.contains("direct")) {
    const auto& d = doc["direct"];
    check_keys(d, {"epochs", "batch_size", "patience", "lr"}, "direct");
    read(d, "epochs", cfg.direct.epochs);
    read(d, "batch_size", cfg.direct.batch_size);
    read(d, "patience", cfg.direct.patience);
    read(d, "lr", cfg.direct.lr);
  }

  if (doc.contains("gen")) {
    const auto& g = doc["gen"];
    check_keys(g,
               {"labelled", "unlabelled", "rings", "image_size", "raters",
                "rater_accuracy", "ring_prob_background", "votes_min", "votes_max"},
               "gen");
    read(g, "labelled", cfg.gen.labelled);
    read(g, "unlabelled", cfg.gen.unlabelled);
    read(g, "rings", cfg.gen.rings);
    read(g, "image_size", cfg.gen.image_size);
    read(g, "raters", cfg.gen.raters);
    read(g, "rater_accuracy", cfg.gen.rater_accuracy);
    read(g, "ring_prob_background", cfg.gen.ring_prob_background);
    read(g, "votes_min", cfg.gen.votes_min);
    read(g, "votes_max", cfg.gen.votes_max);
  }

  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
  json stages = json::array();
  for (const auto& s : encoder.stages)
    stages.push_back(json::array({s.filters, s.kernel, s.stride}));

  json doc;
  doc["seed"] = seed;
  doc["out"] = out_dir;
  doc["dataset"] = dataset_dir;
  doc["schema"] = schema_path;
  doc["encoder"] = {{"input_size", encoder.in_height},
                    {"stages", stages},
                    {"representation_width", encoder.representation_width},
                    {"normalize_representation", encoder.normalize_representation}};
  doc["heads"] = {{"projection_width", heads.projection_width},
                  {"hidden_width", heads.hidden_width},
                  {"per_sample_norm", heads.per_sample_norm}};
  doc["train"] = {{"mode", to_string(train.mode)},
                  {"lambda", train.lambda},
                  {"ema_decay", train.ema_decay},
                  {"ema_schedule", train.ema_schedule},
                  {"ema_base", train.ema_base},
                  {"eq3_denominator", train.eq3_denominator},
                  {"denominator_floor", train.denominator_floor},
                  {"supervised_both_views", train.supervised_both_views},
                  {"batch_size", train.batch_size},
                  {"epochs", train.epochs},
                  {"patience", train.patience},
                  {"lr", train.lr},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"max_eval_samples", train.max_eval_samples}};
  doc["augment"] = {{"standard", augment_to_json(augment_standard)},
                    {"strong", augment_to_json(augment_strong)}};
  doc["probe"] = {{"budgets", probe.budgets}, {"folds", probe.folds},
                  {"l2", probe.l2},           {"budget", probe.budget},
                  {"max_iters", probe.max_iters}, {"tol", probe.tol}};
  doc["direct"] = {{"epochs", direct.epochs},
                   {"batch_size", direct.batch_size},
                   {"patience", direct.patience},
                   {"lr", direct.lr}};
  doc["gen"] = {{"labelled", gen.labelled},
                {"unlabelled", gen.unlabelled},
                {"rings", gen.rings},
                {"image_size", gen.image_size},
                {"raters", gen.raters},
                {"rater_accuracy", gen.rater_accuracy},
                {"ring_prob_background", gen.ring_prob_background},
                {"votes_min", gen.votes_min},
                {"votes_max", gen.votes_max}};
  return doc.dump(2) + "\n";
}

void ExperimentConfig::resolve_and_validate(bool need_dataset) {
  encoder.in_channels = 3;
  encoder.in_width = encoder.in_height;
  encoder.validate();

  augment_standard.out_size = encoder.in_height;
  augment_strong.out_size = encoder.in_height;
  augment_standard.validate();
  augment_strong.validate();

  if (train.eq3_denominator != "detached" && train.eq3_denominator != "off")
    throw ConfigError("config: eq3_denominator must be 'detached' or 'off'");
  if (train.lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
  if (train.ema_decay < 0.0 || train.ema_decay > 1.0)
    throw ConfigError("config: ema_decay must lie in [0, 1]");
  if (train.batch_size < 1 || train.epochs < 1 || train.patience < 1)
    throw ConfigError("config: batch_size, epochs and patience must be >= 1");
  if (train.denominator_floor <= 0.0)
    throw ConfigError("config: denominator_floor must be > 0");
  if (heads.projection_width < 1 || heads.hidden_width < 1)
    throw ConfigError("config: head widths must be >= 1");
  if (probe.folds < 2) throw ConfigError("config: probe needs at least 2 folds");
  if (probe.l2 < 0.0) throw ConfigError("config: probe l2 must be >= 0");
  gen.validate();

  if (need_dataset) {
    if (dataset_dir.empty())
      throw ConfigError("config: dataset directory is required (--data or 'dataset')");
    if (!std::filesystem::exists(dataset_dir))
      throw ConfigError("config: dataset directory does not exist: " + dataset_dir);
    const auto schema_file = schema_path.empty()
                                 ? std::filesystem::path(dataset_dir) / "schema.json"
                                 : std::filesystem::path(schema_path);
    if (!std::filesystem::exists(schema_file))
      throw ConfigError("config: schema document not found: " + schema_file.string());
  }
}

}  // namespace gzhybrid
