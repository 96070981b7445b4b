// tools/subemb_main.cc

// Copyright 2026  The subemb authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: data generation, training, confidence fine-tuning,
// evaluation, correlation analysis, group-count sweeps, pair scoring and
// gradient checking. Every command writes a manifest.json into its output
// directory before producing artifacts, and exits with a stable code:
//   0 success, 2 configuration error, 3 numeric divergence,
//   4 gradient-check failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "subemb/checkpoint.h"
#include "subemb/evaluation.h"
#include "subemb/gradcheck.h"
#include "subemb/scorer.h"
#include "subemb/synthdata.h"
#include "subemb/trainer.h"

namespace subemb {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitGradcheck = 4;

std::string NowIso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json LoadJsonFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error &e) {
    throw ConfigError("config " + path + ": parse error at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
}

// Atomic write: temp file in the same directory, then rename.
void WriteFileAtomic(const std::string &path, const std::string &contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << contents;
  }
  fs::rename(tmp, path);
}

void WriteManifest(const std::string &out_dir, const std::string &command,
                   const json &config_snapshot, uint64_t seed,
                   const json &inputs, const std::vector<std::string> &outputs) {
  fs::create_directories(out_dir);
  json manifest = {
      {"command", command},
      {"tool_version", kToolVersion},
      {"seed", seed},
      {"config", config_snapshot},
      {"inputs", inputs},
      {"outputs", outputs},
      {"created_at", NowIso8601()},
  };
  WriteFileAtomic((fs::path(out_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
}

template <typename T>
void ReadField(const json &j, const char *key, T *out) {
  if (j.contains(key)) {
    try {
      *out = j.at(key).get<T>();
    } catch (const json::exception &e) {
      throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
  }
}

DatasetConfig ParseDatasetConfig(const json &j) {
  DatasetConfig c;
  for (const auto &[key, value] : j.items()) {
    (void)value;
    static const std::set<std::string> known = {
        "n_train_identities", "n_test_identities", "samples_per_identity",
        "observation_dim", "noise_scale", "apply_probability",
        "attribute_count", "seed", "format", "corruption"};
    if (known.find(key) == known.end())
      throw ConfigError("unknown dataset config field '" + key + "'");
  }
  ReadField(j, "n_train_identities", &c.n_train_identities);
  ReadField(j, "n_test_identities", &c.n_test_identities);
  ReadField(j, "samples_per_identity", &c.samples_per_identity);
  ReadField(j, "observation_dim", &c.observation_dim);
  ReadField(j, "noise_scale", &c.noise_scale);
  ReadField(j, "apply_probability", &c.apply_probability);
  ReadField(j, "attribute_count", &c.attribute_count);
  ReadField(j, "seed", &c.seed);
  ReadField(j, "format", &c.format);
  if (j.contains("corruption")) {
    const json &k = j.at("corruption");
    ReadField(k, "blur_radius_min", &c.corruption.blur_radius_min);
    ReadField(k, "blur_radius_max", &c.corruption.blur_radius_max);
    ReadField(k, "occlude_fraction_min", &c.corruption.occlude_fraction_min);
    ReadField(k, "occlude_fraction_max", &c.corruption.occlude_fraction_max);
    ReadField(k, "occlude_blocks", &c.corruption.occlude_blocks);
    ReadField(k, "pose_angle_min_deg", &c.corruption.pose_angle_min_deg);
    ReadField(k, "pose_angle_max_deg", &c.corruption.pose_angle_max_deg);
  }
  c.Validate();
  return c;
}

json DatasetConfigSnapshot(const DatasetConfig &c) {
  return json{{"n_train_identities", c.n_train_identities},
              {"n_test_identities", c.n_test_identities},
              {"samples_per_identity", c.samples_per_identity},
              {"observation_dim", c.observation_dim},
              {"noise_scale", c.noise_scale},
              {"apply_probability", c.apply_probability},
              {"attribute_count", c.attribute_count},
              {"seed", c.seed},
              {"format", c.format},
              {"corruption",
               {{"blur_radius_min", c.corruption.blur_radius_min},
                {"blur_radius_max", c.corruption.blur_radius_max},
                {"occlude_fraction_min", c.corruption.occlude_fraction_min},
                {"occlude_fraction_max", c.corruption.occlude_fraction_max},
                {"occlude_blocks", c.corruption.occlude_blocks},
                {"pose_angle_min_deg", c.corruption.pose_angle_min_deg},
                {"pose_angle_max_deg", c.corruption.pose_angle_max_deg}}}};
}

// Desk-scale defaults; production-scale values (embedding_dim 512,
// group_count 16, margin 30) remain selectable through the same fields.
TrainConfig ParseTrainConfig(const json &j) {
  TrainConfig c;
  for (const auto &[key, value] : j.items()) {
    (void)value;
    static const std::set<std::string> known = {
        "epochs", "batch_size", "lr_encoder", "lr_prototypes",
        "lr_discriminator", "momentum", "lambda_reg", "lambda_cls",
        "lambda_adv", "margin", "embedding_dim", "group_count", "hidden_dims",
        "nonlinearity", "initial_confidence", "augment_probability",
        "augment_families", "seed", "threads", "save_interval", "ablation"};
    if (known.find(key) == known.end())
      throw ConfigError("unknown train config field '" + key + "'");
  }
  ReadField(j, "epochs", &c.epochs);
  ReadField(j, "batch_size", &c.batch_size);
  ReadField(j, "lr_encoder", &c.lr_encoder);
  ReadField(j, "lr_prototypes", &c.lr_prototypes);
  ReadField(j, "lr_discriminator", &c.lr_discriminator);
  ReadField(j, "momentum", &c.momentum);
  ReadField(j, "lambda_reg", &c.lambda_reg);
  ReadField(j, "lambda_cls", &c.lambda_cls);
  ReadField(j, "lambda_adv", &c.lambda_adv);
  ReadField(j, "margin", &c.margin);
  ReadField(j, "embedding_dim", &c.embedding_dim);
  ReadField(j, "group_count", &c.group_count);
  ReadField(j, "hidden_dims", &c.hidden_dims);
  ReadField(j, "nonlinearity", &c.nonlinearity);
  ReadField(j, "initial_confidence", &c.initial_confidence);
  ReadField(j, "augment_probability", &c.augment_probability);
  ReadField(j, "seed", &c.seed);
  ReadField(j, "threads", &c.threads);
  ReadField(j, "save_interval", &c.save_interval);
  if (j.contains("ablation")) {
    const json &a = j.at("ablation");
    ReadField(a, "variation_augmentation",
              &c.ablation.variation_augmentation);
    ReadField(a, "confidence_aware", &c.ablation.confidence_aware);
    ReadField(a, "multiple_embeddings", &c.ablation.multiple_embeddings);
    ReadField(a, "decorrelation", &c.ablation.decorrelation);
  }
  if (j.contains("augment_families")) {
    const auto fams = j.at("augment_families").get<std::vector<bool>>();
    if (fams.size() != c.augment_families.size())
      throw ConfigError("augment_families must have exactly 3 entries");
    for (size_t i = 0; i < fams.size(); ++i) c.augment_families[i] = fams[i];
  }
  return c;
}

json TrainConfigSnapshot(const TrainConfig &c) {
  return json{
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr_encoder", c.lr_encoder},
      {"lr_prototypes", c.lr_prototypes},
      {"lr_discriminator", c.lr_discriminator},
      {"momentum", c.momentum},
      {"lambda_reg", c.lambda_reg},
      {"lambda_cls", c.lambda_cls},
      {"lambda_adv", c.lambda_adv},
      {"margin", c.margin},
      {"embedding_dim", c.embedding_dim},
      {"group_count", c.group_count},
      {"hidden_dims", c.hidden_dims},
      {"nonlinearity", c.nonlinearity},
      {"initial_confidence", c.initial_confidence},
      {"augment_probability", c.augment_probability},
      {"seed", c.seed},
      {"threads", c.threads},
      {"save_interval", c.save_interval},
      {"ablation",
       {{"variation_augmentation", c.ablation.variation_augmentation},
        {"confidence_aware", c.ablation.confidence_aware},
        {"multiple_embeddings", c.ablation.multiple_embeddings},
        {"decorrelation", c.ablation.decorrelation}}},
      {"augment_families",
       std::vector<bool>(c.augment_families.begin(),
                         c.augment_families.end())}};
}

struct CommonTrainArgs {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  // Flag overrides; -1 means "not set on the command line".
  int va = -1, ci = -1, me = -1, de = -1;
  int64_t seed = -1;
  int epochs = -1;
  int threads = -1;
  std::vector<int> families;
};

TrainConfig ResolveTrainConfig(const CommonTrainArgs &args) {
  TrainConfig cfg;
  if (!args.config_path.empty())
    cfg = ParseTrainConfig(LoadJsonFile(args.config_path));
  if (args.va >= 0) cfg.ablation.variation_augmentation = args.va != 0;
  if (args.ci >= 0) cfg.ablation.confidence_aware = args.ci != 0;
  if (args.me >= 0) cfg.ablation.multiple_embeddings = args.me != 0;
  if (args.de >= 0) cfg.ablation.decorrelation = args.de != 0;
  if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
  if (args.epochs >= 0) cfg.epochs = args.epochs;
  if (args.threads >= 0) cfg.threads = args.threads;
  if (!args.families.empty()) {
    if (args.families.size() != cfg.augment_families.size())
      throw ConfigError("--families needs exactly 3 entries (blur,occ,pose)");
    for (size_t i = 0; i < cfg.augment_families.size(); ++i)
      cfg.augment_families[i] = args.families[i] != 0;
  }
  cfg.Validate();
  return cfg;
}

int CmdGenData(const std::string &config_path, const std::string &out_dir,
               int64_t seed_override) {
  DatasetConfig cfg;
  if (!config_path.empty()) cfg = ParseDatasetConfig(LoadJsonFile(config_path));
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  cfg.Validate();

  const std::string ext = cfg.format == "csv" ? ".csv" : ".bin";
  WriteManifest(out_dir, "gen-data", DatasetConfigSnapshot(cfg), cfg.seed,
                json::object(),
                {"dataset.json", "train" + ext, "test" + ext});
  const Dataset ds = MakeDataset(cfg);
  SaveDataset(ds, out_dir);
  std::cout << "wrote dataset (" << ds.train.size() << " train / "
            << ds.test.size() << " test rows) to " << out_dir << "\n";
  return kExitOk;
}

int CmdTrain(const CommonTrainArgs &args) {
  const TrainConfig cfg = ResolveTrainConfig(args);
  const Dataset ds = LoadDataset(args.data_dir);

  WriteManifest(args.out_dir, "train", TrainConfigSnapshot(cfg), cfg.seed,
                json{{"data_dir", args.data_dir}},
                {"checkpoint.bin", "trainlog.csv"});

  TrainLog log;
  const auto sink = [&](int epoch, const ModelBundle &bundle) {
    const std::string name = epoch + 1 == cfg.epochs || cfg.epochs == 0
                                 ? "checkpoint.bin"
                                 : "checkpoint-epoch" +
                                       std::to_string(epoch + 1) + ".bin";
    SaveBundle(bundle, (fs::path(args.out_dir) / name).string());
  };
  const ModelBundle bundle = Train(ds, cfg, &log, {}, sink);
  WriteFileAtomic((fs::path(args.out_dir) / "trainlog.csv").string(),
                  log.ToCsv());
  std::cout << "trained " << cfg.epochs << " epochs; final total loss "
            << (log.epochs.empty() ? 0.0 : log.epochs.back().mean.total)
            << "; checkpoint in " << args.out_dir << "\n";
  return kExitOk;
}

int CmdFinetune(const std::string &checkpoint_path,
                const std::string &data_dir, const std::string &out_dir,
                int epochs, double lr, int pairs_per_identity, int64_t seed) {
  ModelBundle bundle = LoadBundle(checkpoint_path);
  const Dataset ds = LoadDataset(data_dir);
  const uint64_t pair_seed =
      seed >= 0 ? static_cast<uint64_t>(seed) : bundle.train_config.seed;

  WriteManifest(out_dir, "finetune",
                json{{"epochs", epochs},
                     {"lr", lr},
                     {"pairs_per_identity", pairs_per_identity}},
                pair_seed,
                json{{"checkpoint", checkpoint_path}, {"data_dir", data_dir}},
                {"checkpoint.bin", "finetune.json"});

  const auto pairs = BuildGenuinePairs(ds, pairs_per_identity, pair_seed);
  const FinetuneReport report = FinetuneConfidence(&bundle, pairs, epochs, lr);
  SaveBundle(bundle, (fs::path(out_dir) / "checkpoint.bin").string());

  json report_json = {{"initial_objective", report.initial_objective},
                      {"final_objective", report.final_objective},
                      {"epochs_run", report.epochs_run},
                      {"pairs", pairs.size()}};
  WriteFileAtomic((fs::path(out_dir) / "finetune.json").string(),
                  report_json.dump(2) + "\n");
  std::cout << "fine-tuned confidence head: objective "
            << report.initial_objective << " -> " << report.final_objective
            << "\n";
  return kExitOk;
}

int CmdEval(const std::string &checkpoint_path, const std::string &data_dir,
            const std::string &out_dir, bool pa,
            std::vector<double> far_targets, std::vector<int> ranks,
            std::vector<double> fpir_targets, int threads, int gallery_size,
            const std::string &export_format) {
  const ModelBundle bundle = LoadBundle(checkpoint_path);
  const Dataset ds = LoadDataset(data_dir);

  if (pa && !bundle.confidence_finetuned)
    std::cerr << "warning: --pa requested but the checkpoint's confidence "
                 "branch was never fine-tuned; falling back to 1/s from the "
                 "training head\n";

  EvalProtocolConfig cfg;
  cfg.method = pa ? ScoreMethod::kMls : ScoreMethod::kCosine;
  if (!far_targets.empty()) cfg.far_targets = std::move(far_targets);
  if (!ranks.empty()) cfg.rank_values = std::move(ranks);
  if (!fpir_targets.empty()) cfg.fpir_targets = std::move(fpir_targets);
  if (threads > 0) cfg.threads = threads;
  if (gallery_size > 0) cfg.gallery_size = gallery_size;

  std::vector<std::string> outputs = {"eval.json", "roc.csv"};
  if (!export_format.empty())
    outputs.push_back(export_format == "csv" ? "embeddings.csv"
                                             : "embeddings.bin");
  WriteManifest(out_dir, "eval",
                json{{"pa", pa},
                     {"far_targets", cfg.far_targets},
                     {"rank_values", cfg.rank_values},
                     {"fpir_targets", cfg.fpir_targets},
                     {"gallery_size", cfg.gallery_size}},
                bundle.train_config.seed,
                json{{"checkpoint", checkpoint_path}, {"data_dir", data_dir}},
                outputs);

  const EvalReport report = EvaluateModel(bundle, ds.test, cfg);
  WriteFileAtomic((fs::path(out_dir) / "eval.json").string(),
                  report.ToJsonString() + "\n");
  report.WriteRocCsv((fs::path(out_dir) / "roc.csv").string());

  if (!export_format.empty()) {
    const auto embeddings = EmbedSamples(bundle, ds.test, cfg.threads);
    std::vector<EmbeddingRecord> records;
    records.reserve(embeddings.size());
    for (size_t i = 0; i < embeddings.size(); ++i)
      records.push_back(
          MakeEmbeddingRecord(static_cast<int64_t>(i), embeddings[i]));
    if (export_format == "csv")
      WriteEmbeddingsCsv((fs::path(out_dir) / "embeddings.csv").string(),
                         records);
    else if (export_format == "binary")
      WriteEmbeddingsBinary((fs::path(out_dir) / "embeddings.bin").string(),
                            records);
    else
      throw ConfigError("--export-embeddings must be 'csv' or 'binary'");
  }

  std::cout << "evaluation (" << report.score_method << " scoring):\n";
  for (const auto &[far, tar] : report.tar_at_far)
    std::printf("  TAR @ FAR=%-8g %.4f\n", far, tar);
  for (const auto &[k, acc] : report.rank_accuracy)
    std::printf("  rank-%-12d %.4f\n", k, acc);
  for (const auto &[fpir, tpir] : report.tpir_at_fpir)
    std::printf("  TPIR @ FPIR=%-6g %.4f\n", fpir, tpir);
  std::printf("  mean |off-diag corr| %.4f\n", report.mean_abs_offdiag);
  return kExitOk;
}

int CmdGradcheck(int64_t seed, int trials, const std::string &inject,
                 const std::string &out_dir) {
  GradCheckOptions options;
  if (seed >= 0) options.seed = static_cast<uint64_t>(seed);
  options.trials = trials;
  options.fault_inject_case = inject;

  const GradCheckReport report = RunGradientChecks(options);
  std::cout << report.ToTable();
  if (!out_dir.empty()) {
    json rows = json::array();
    for (const GradCheckCase &c : report.cases)
      rows.push_back({{"name", c.name},
                      {"max_error", c.max_error},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass},
                      {"worst_param", c.worst_param}});
    WriteManifest(out_dir, "gradcheck",
                  json{{"trials", options.trials},
                       {"fault_inject", inject}},
                  options.seed, json::object(), {"gradcheck.json"});
    WriteFileAtomic((fs::path(out_dir) / "gradcheck.json").string(),
                    json{{"all_pass", report.all_pass}, {"cases", rows}}
                            .dump(2) +
                        "\n");
  }
  return report.all_pass ? kExitOk : kExitGradcheck;
}

int CmdAnalyzeCorr(const std::string &checkpoint_path,
                   const std::string &data_dir, const std::string &out_dir,
                   const std::string &split, int threads) {
  const ModelBundle bundle = LoadBundle(checkpoint_path);
  const Dataset ds = LoadDataset(data_dir);
  const std::vector<VariationSample> &samples =
      split == "train" ? ds.train : ds.test;
  if (split != "train" && split != "test")
    throw ConfigError("--split must be 'train' or 'test'");

  WriteManifest(out_dir, "analyze-corr", json{{"split", split}},
                bundle.train_config.seed,
                json{{"checkpoint", checkpoint_path}, {"data_dir", data_dir}},
                {"corr.csv"});

  const auto embeddings = EmbedSamples(bundle, samples, threads);
  std::vector<int> labels;
  for (const VariationSample &s : samples) labels.push_back(s.identity);
  std::vector<int> degenerate;
  const Mat corr = SubembeddingCorrelation(embeddings, labels, &degenerate);

  std::ostringstream csv;
  char buf[32];
  for (int a = 0; a < corr.NumRows(); ++a) {
    for (int b = 0; b < corr.NumCols(); ++b) {
      std::snprintf(buf, sizeof buf, "%.10f", corr(a, b));
      csv << (b ? "," : "") << buf;
    }
    csv << "\n";
  }
  WriteFileAtomic((fs::path(out_dir) / "corr.csv").string(), csv.str());
  std::printf("mean |off-diagonal| correlation over %d groups: %.4f\n",
              corr.NumRows(), MeanAbsOffDiagonal(corr, degenerate));
  if (!degenerate.empty()) {
    std::cout << "degenerate groups:";
    for (int k : degenerate) std::cout << ' ' << k;
    std::cout << "\n";
  }
  return kExitOk;
}

int CmdSweepK(const CommonTrainArgs &args, std::vector<int> k_values) {
  if (k_values.empty()) throw ConfigError("sweep-k: provide --k values");
  const TrainConfig cfg = ResolveTrainConfig(args);
  const Dataset ds = LoadDataset(args.data_dir);

  json snapshot = TrainConfigSnapshot(cfg);
  snapshot["k_values"] = k_values;
  WriteManifest(args.out_dir, "sweep-k", snapshot, cfg.seed,
                json{{"data_dir", args.data_dir}}, {"sweep.csv"});

  EvalProtocolConfig eval_cfg;
  eval_cfg.threads = cfg.threads;
  const std::vector<SweepRow> rows =
      SweepGroupCount(ds, cfg, k_values, eval_cfg);
  const std::string csv = SweepTableCsv(rows, eval_cfg.far_targets);
  WriteFileAtomic((fs::path(args.out_dir) / "sweep.csv").string(), csv);
  std::cout << csv;
  return kExitOk;
}

int CmdScore(const std::string &checkpoint_path, const std::string &data_dir,
             int index_a, int index_b, const std::string &split) {
  const ModelBundle bundle = LoadBundle(checkpoint_path);
  const Dataset ds = LoadDataset(data_dir);
  const std::vector<VariationSample> &samples =
      split == "train" ? ds.train : ds.test;
  if (split != "train" && split != "test")
    throw ConfigError("--split must be 'train' or 'test'");
  const int n = static_cast<int>(samples.size());
  if (index_a < 0 || index_a >= n || index_b < 0 || index_b >= n)
    throw ConfigError("sample index out of range [0, " + std::to_string(n) +
                      ")");

  const ProbEmbedding a = EmbedObservation(bundle, samples[index_a].x);
  const ProbEmbedding b = EmbedObservation(bundle, samples[index_b].x);
  const int D = bundle.encoder.config.embedding_dim;
  json out = {
      {"a", index_a},
      {"b", index_b},
      {"split", split},
      {"same_identity", samples[index_a].identity == samples[index_b].identity},
      {"cosine", PairScoreCosine(a, b).value},
      {"mls", PairScoreMls(a, b, D).value},
      {"confidence_finetuned", bundle.confidence_finetuned},
  };
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int RunCli(int argc, char **argv) {
  CLI::App app{"confidence-aware sub-embedding representation toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // gen-data ---------------------------------------------------------------
  auto *gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_config, gen_out;
  int64_t gen_seed = -1;
  gen->add_option("--config", gen_config, "dataset config JSON");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "override the config seed");

  // train ------------------------------------------------------------------
  auto *train = app.add_subcommand("train", "train a model");
  CommonTrainArgs train_args;
  train->add_option("--config", train_args.config_path, "train config JSON");
  train->add_option("--data", train_args.data_dir, "dataset directory")
      ->required();
  train->add_option("--out", train_args.out_dir, "output directory")
      ->required();
  auto *va_flag = train->add_flag("--va,!--no-va", "variation augmentation");
  auto *ci_flag =
      train->add_flag("--ci,!--no-ci", "confidence-aware identification");
  auto *me_flag = train->add_flag("--me,!--no-me", "multiple sub-embeddings");
  auto *de_flag = train->add_flag("--de,!--no-de", "mask decorrelation");
  train->add_option("--seed", train_args.seed, "override seed");
  train->add_option("--epochs", train_args.epochs, "override epochs");
  train->add_option("--threads", train_args.threads, "worker threads");
  train->add_option("--families", train_args.families,
                    "augmentation family toggles: blur,occ,pose as 0/1")
      ->delimiter(',')
      ->expected(3);

  // finetune ---------------------------------------------------------------
  auto *finetune = app.add_subcommand(
      "finetune", "fine-tune the confidence branch for probabilistic scoring");
  std::string ft_checkpoint, ft_data, ft_out;
  int ft_epochs = 200;
  double ft_lr = 1e-3;
  int ft_pairs = 10;
  int64_t ft_seed = -1;
  finetune->add_option("--checkpoint", ft_checkpoint, "trained checkpoint")
      ->required();
  finetune->add_option("--data", ft_data, "dataset directory")->required();
  finetune->add_option("--out", ft_out, "output directory")->required();
  finetune->add_option("--epochs", ft_epochs, "fine-tuning epochs");
  finetune->add_option("--lr", ft_lr, "fine-tuning learning rate");
  finetune->add_option("--pairs-per-identity", ft_pairs,
                       "genuine pairs drawn per identity");
  finetune->add_option("--seed", ft_seed, "pair-sampling seed");

  // eval -------------------------------------------------------------------
  auto *eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_checkpoint, ev_data, ev_out, ev_export;
  bool ev_pa = false;
  std::vector<double> ev_far, ev_fpir;
  std::vector<int> ev_rank;
  int ev_threads = -1, ev_gallery = -1;
  eval->add_option("--checkpoint", ev_checkpoint, "trained checkpoint")
      ->required();
  eval->add_option("--data", ev_data, "dataset directory")->required();
  eval->add_option("--out", ev_out, "output directory")->required();
  eval->add_flag("--pa", ev_pa,
                 "probabilistic aggregation (uncertainty-weighted scoring)");
  eval->add_option("--far", ev_far, "FAR targets")->delimiter(',');
  eval->add_option("--rank", ev_rank, "rank values")->delimiter(',');
  eval->add_option("--fpir", ev_fpir, "FPIR targets")->delimiter(',');
  eval->add_option("--threads", ev_threads, "worker threads");
  eval->add_option("--gallery-size", ev_gallery,
                   "clean samples fused per gallery template");
  eval->add_option("--export-embeddings", ev_export,
                   "also export test embeddings ('csv' or 'binary')");

  // gradcheck ----------------------------------------------------------------
  auto *gradcheck =
      app.add_subcommand("gradcheck", "run the gradient-oracle suite");
  int64_t gc_seed = -1;
  int gc_trials = 20;
  std::string gc_inject, gc_out;
  gradcheck->add_option("--seed", gc_seed, "random seed");
  gradcheck->add_option("--trials", gc_trials, "random configurations")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--inject-fault", gc_inject,
                        "test hook: flip a gradient sign in the named case");
  gradcheck->add_option("--out", gc_out, "optional report directory");

  // analyze-corr -------------------------------------------------------------
  auto *corr = app.add_subcommand("analyze-corr",
                                  "sub-embedding correlation matrix");
  std::string ac_checkpoint, ac_data, ac_out, ac_split = "train";
  int ac_threads = 1;
  corr->add_option("--checkpoint", ac_checkpoint, "trained checkpoint")
      ->required();
  corr->add_option("--data", ac_data, "dataset directory")->required();
  corr->add_option("--out", ac_out, "output directory")->required();
  corr->add_option("--split", ac_split, "train or test");
  corr->add_option("--threads", ac_threads, "worker threads");

  // sweep-k ------------------------------------------------------------------
  auto *sweep = app.add_subcommand("sweep-k",
                                   "train/evaluate across group counts");
  CommonTrainArgs sweep_args;
  std::vector<int> sweep_k;
  sweep->add_option("--config", sweep_args.config_path, "train config JSON");
  sweep->add_option("--data", sweep_args.data_dir, "dataset directory")
      ->required();
  sweep->add_option("--out", sweep_args.out_dir, "output directory")
      ->required();
  sweep->add_option("--k", sweep_k, "group counts")
      ->delimiter(',')
      ->required();
  sweep->add_option("--seed", sweep_args.seed, "override seed");
  sweep->add_option("--epochs", sweep_args.epochs, "override epochs");
  sweep->add_option("--threads", sweep_args.threads, "worker threads");

  // score ----------------------------------------------------------------
  auto *score = app.add_subcommand("score", "score one sample pair");
  std::string sc_checkpoint, sc_data, sc_split = "test";
  int sc_a = 0, sc_b = 0;
  score->add_option("--checkpoint", sc_checkpoint, "trained checkpoint")
      ->required();
  score->add_option("--data", sc_data, "dataset directory")->required();
  score->add_option("--a", sc_a, "first sample index")->required();
  score->add_option("--b", sc_b, "second sample index")->required();
  score->add_option("--split", sc_split, "train or test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitConfig;
  }

  if (gen->parsed()) return CmdGenData(gen_config, gen_out, gen_seed);
  if (train->parsed()) {
    if (va_flag->count() > 0) train_args.va = va_flag->as<bool>() ? 1 : 0;
    if (ci_flag->count() > 0) train_args.ci = ci_flag->as<bool>() ? 1 : 0;
    if (me_flag->count() > 0) train_args.me = me_flag->as<bool>() ? 1 : 0;
    if (de_flag->count() > 0) train_args.de = de_flag->as<bool>() ? 1 : 0;
    return CmdTrain(train_args);
  }
  if (finetune->parsed())
    return CmdFinetune(ft_checkpoint, ft_data, ft_out, ft_epochs, ft_lr,
                       ft_pairs, ft_seed);
  if (eval->parsed())
    return CmdEval(ev_checkpoint, ev_data, ev_out, ev_pa, ev_far, ev_rank,
                   ev_fpir, ev_threads, ev_gallery, ev_export);
  if (gradcheck->parsed())
    return CmdGradcheck(gc_seed, gc_trials, gc_inject, gc_out);
  if (corr->parsed())
    return CmdAnalyzeCorr(ac_checkpoint, ac_data, ac_out, ac_split,
                          ac_threads);
  if (sweep->parsed()) return CmdSweepK(sweep_args, sweep_k);
  if (score->parsed())
    return CmdScore(sc_checkpoint, sc_data, sc_a, sc_b, sc_split);
  return kExitConfig;
}

}  // namespace
}  // namespace subemb

int main(int argc, char **argv) {
  try {
    return subemb::RunCli(argc, argv);
  } catch (const subemb::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return subemb::kExitConfig;
  } catch (const subemb::DimensionError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return subemb::kExitConfig;
  } catch (const subemb::NumericError &e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return subemb::kExitNumeric;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
