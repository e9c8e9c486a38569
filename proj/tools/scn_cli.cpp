// Command-line driver for spatial-context-network experiments: dataset
// generation, training, feature extraction, evaluation, reconstruction and
// gradient checking. One JSON config document drives everything; flags
// override config fields, and the effective config is echoed into the output
// directory. Exit codes: 1 usage, 2 data, 3 numeric.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scn/checkpoint.hpp"
#include "scn/classifier.hpp"
#include "scn/features.hpp"
#include "scn/gradcheck.hpp"
#include "scn/manifest.hpp"
#include "scn/patches.hpp"
#include "scn/reconstruct.hpp"
#include "scn/rng.hpp"
#include "scn/serialize.hpp"
#include "scn/synthetic.hpp"
#include "scn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace scn;

namespace {

ordered_json default_config() {
  ordered_json cfg;
  cfg["seed"] = 1;
  cfg["out_dir"] = "out";
  cfg["dataset"] = {
      {"manifest", ""},
      {"pairing", "manifest"},  // manifest | bbox | random | proposal
      {"proposals", ""},
      {"random_patches", 5},
      {"random_patch_side", 64},
      {"min_confidence", 0.1},
      {"aspect_lo", 1.0 / 3.0},
      {"aspect_hi", 3.0},
  };
  cfg["synthetic"] = to_json(SyntheticConfig{});
  cfg["encoder"] = to_json(EncoderConfig{});
  cfg["sgd"] = to_json(SgdConfig{});
  cfg["model"] = {
      {"mode", "feature"},
      {"tune_depth", "fc-only"},
      {"d2", 0},
      {"normalize_offsets", true},
      {"ablate_offset", false},
  };
  cfg["reference"] = {
      {"checkpoint", ""},
      {"pretrain_epochs", 30},
      {"pretrain_lr", 0.01},
      {"pretrain_batch", 64},
  };
  cfg["extract"] = {
      {"checkpoint", ""},
      {"which", "h3"},
      {"split", "test"},
      {"out", "features.bin"},
  };
  cfg["eval"] = {
      {"train_features", ""},
      {"test_features", ""},
      {"reg", 1e-4},
      {"epochs", 100},
      {"report", ""},
  };
  cfg["reconstruct"] = {
      {"checkpoint", ""},
      {"split", "test"},
      {"limit", 0},
  };
  return cfg;
}

struct Context {
  ordered_json cfg;
  uint64_t seed = 1;
  fs::path out_dir;

  std::string str(const char* section, const char* key) const {
    return cfg.at(section).at(key).get<std::string>();
  }
  fs::path under_out(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : out_dir / path;
  }
};

void echo_config(const Context& ctx) {
  std::ofstream out(ctx.out_dir / "config.json");
  out << ctx.cfg.dump(2) << "\n";
}

std::optional<Split> parse_split(const std::string& s) {
  if (s == "all") return std::nullopt;
  return split_from_string(s);
}

// ----- pair materialization ------------------------------------------------

std::vector<PairSample> build_pairs(const Context& ctx,
                                    const DatasetManifest& manifest,
                                    int patch_size, std::optional<Split> split) {
  const std::string pairing = ctx.str("dataset", "pairing");
  if (pairing == "manifest") {
    return pair_from_manifest(manifest, patch_size, split);
  }
  if (pairing == "bbox") {
    return pair_from_boxes(manifest, patch_size, split);
  }
  if (pairing == "proposal") {
    const std::string file = ctx.str("dataset", "proposals");
    if (file.empty()) {
      throw UsageError("pairing=proposal requires dataset.proposals");
    }
    ProposalFilter filter;
    filter.min_confidence = ctx.cfg["dataset"]["min_confidence"].get<float>();
    filter.aspect_lo = ctx.cfg["dataset"]["aspect_lo"].get<float>();
    filter.aspect_hi = ctx.cfg["dataset"]["aspect_hi"].get<float>();
    const DatasetManifest proposals = ingest_proposals(file, manifest, filter);
    return pair_from_boxes(proposals, patch_size, split);
  }
  if (pairing == "random") {
    const int n_patches = ctx.cfg["dataset"]["random_patches"].get<int>();
    const int side = ctx.cfg["dataset"]["random_patch_side"].get<int>();
    std::vector<PairSample> pairs;
    for (const auto& record : manifest.records) {
      if (split && record.split != *split) continue;
      const Image image = read_image(manifest.image_path(record));
      auto per_image = pair_random(
          image, record.image_id, n_patches, side, patch_size,
          derive_seed(ctx.seed, "random-pairs/" + record.image_id));
      pairs.insert(pairs.end(), per_image.begin(), per_image.end());
    }
    return pairs;
  }
  throw ConfigError("unknown pairing strategy '" + pairing + "'");
}

float offset_divisor_for(const Context& ctx, const DatasetManifest& manifest) {
  if (!ctx.cfg["model"]["normalize_offsets"].get<bool>()) return 1.0f;
  int side = 1;
  for (const auto& r : manifest.records) {
    side = std::max({side, r.width, r.height});
  }
  return static_cast<float>(side);
}

Encoder reference_encoder(const Context& ctx, const DatasetManifest& manifest,
                          const EncoderConfig& encoder_config) {
  const std::string checkpoint = ctx.str("reference", "checkpoint");
  if (!checkpoint.empty()) {
    std::fprintf(stderr, "loading reference encoder from %s\n",
                 checkpoint.c_str());
    return load_checkpoint(checkpoint).top_encoder().clone();
  }

  // Supervised pretraining on the labeled shape patches of the train split.
  std::vector<Tensor> patches;
  std::vector<int> labels;
  for (const auto& record : manifest.records) {
    if (record.split != Split::kTrain) continue;
    bool image_loaded = false;
    Image image;
    for (const auto& mb : record.boxes) {
      if (mb.label < 0 || mb.label == kBlack) continue;
      if (!image_loaded) {
        image = read_image(manifest.image_path(record));
        image_loaded = true;
      }
      patches.push_back(crop_resize(image, mb.box, encoder_config.input_size));
      labels.push_back(mb.label);
    }
  }
  if (patches.empty()) {
    throw UsageError(
        "no labeled boxes available for reference pretraining; provide "
        "reference.checkpoint instead");
  }

  SgdConfig pretrain;
  pretrain.max_epochs = ctx.cfg["reference"]["pretrain_epochs"].get<int>();
  pretrain.base_lr = ctx.cfg["reference"]["pretrain_lr"].get<float>();
  pretrain.dropped_lr = pretrain.base_lr / 10.0f;
  pretrain.lr_drop_epoch = std::max(1, pretrain.max_epochs * 3 / 4);
  pretrain.batch_size = ctx.cfg["reference"]["pretrain_batch"].get<int>();
  pretrain.weight_decay = 0.0f;
  std::fprintf(stderr, "pretraining reference encoder on %zu patches\n",
               patches.size());
  return pretrain_reference_encoder(patches, labels, encoder_config, pretrain,
                                    derive_seed(ctx.seed, "reference"));
}

// ----- commands -------------------------------------------------------------

int cmd_gen_synthetic(const Context& ctx) {
  const SyntheticConfig syn = synthetic_config_from_json(ctx.cfg["synthetic"]);
  const SyntheticDataset dataset = gen_synthetic(syn, ctx.seed);
  const DatasetManifest manifest = save_synthetic(ctx.out_dir, dataset);
  echo_config(ctx);
  std::printf("%d pairs (%zu train / %zu test)\n", syn.total(),
              manifest.count(Split::kTrain), manifest.count(Split::kTest));
  std::printf("manifest: %s\n", (ctx.out_dir / "manifest.jsonl").c_str());
  return 0;
}

int cmd_train(const Context& ctx) {
  const std::string manifest_path = ctx.str("dataset", "manifest");
  if (manifest_path.empty()) {
    throw UsageError("train requires dataset.manifest (or --manifest)");
  }
  const DatasetManifest manifest = load_manifest(manifest_path);

  const EncoderConfig encoder_config =
      encoder_config_from_json(ctx.cfg["encoder"]);
  const auto train_pairs =
      build_pairs(ctx, manifest, encoder_config.input_size, Split::kTrain);
  const auto test_pairs =
      build_pairs(ctx, manifest, encoder_config.input_size, Split::kTest);
  if (train_pairs.empty()) throw DataError("train split produced no pairs");
  std::fprintf(stderr, "pairs: %zu train / %zu test\n", train_pairs.size(),
               test_pairs.size());

  ScnModelConfig mcfg;
  mcfg.mode = target_mode_from_string(ctx.str("model", "mode"));
  mcfg.tune_depth = tune_depth_from_string(ctx.str("model", "tune_depth"));
  mcfg.d2 = ctx.cfg["model"]["d2"].get<int>();
  mcfg.offset_divisor = offset_divisor_for(ctx, manifest);

  const Encoder reference = reference_encoder(ctx, manifest, encoder_config);
  ScnModel model(reference, mcfg, derive_seed(ctx.seed, "scn/init"));
  if (ctx.cfg["model"]["ablate_offset"].get<bool>()) {
    model = ablate_offset(model);
    std::fprintf(stderr, "offset ablation: context module ignores offsets\n");
  }

  SgdConfig sgd = sgd_config_from_json(ctx.cfg["sgd"]);
  sgd.seed = derive_seed(ctx.seed, "train");

  echo_config(ctx);
  std::ofstream curve(ctx.out_dir / "curve.csv");
  curve << "epoch,train_mse,test_mse\n";
  float best_test = std::numeric_limits<float>::infinity();
  const fs::path best_path = ctx.out_dir / "best.scn";

  auto on_epoch = [&](const EpochStats& stats) {
    char row[96];
    if (stats.test_mse) {
      std::snprintf(row, sizeof(row), "%d,%.9g,%.9g\n", stats.epoch,
                    double(stats.train_mse), double(*stats.test_mse));
    } else {
      std::snprintf(row, sizeof(row), "%d,%.9g,\n", stats.epoch,
                    double(stats.train_mse));
    }
    curve << row;
    curve.flush();  // divergence later must not lose completed epochs
    if (stats.test_mse && *stats.test_mse < best_test) {
      best_test = *stats.test_mse;
      save_checkpoint(model, best_path);
    }
    if (stats.epoch % 10 == 0 || stats.epoch + 1 == sgd.max_epochs) {
      std::fprintf(stderr, "epoch %d: train %.6g test %.6g\n", stats.epoch,
                   double(stats.train_mse),
                   stats.test_mse ? double(*stats.test_mse) : -1.0);
    }
  };

  const TrainingReport report =
      train(model, train_pairs, test_pairs, sgd, true, on_epoch);

  save_checkpoint(model, ctx.out_dir / "checkpoint.scn");
  if (test_pairs.empty()) save_checkpoint(model, best_path);
  std::printf("final train mse %.9g", double(report.final_train_mse()));
  if (!test_pairs.empty()) {
    std::printf(", final test mse %.9g", double(report.final_test_mse()));
  }
  std::printf("\ncheckpoint: %s\n", (ctx.out_dir / "checkpoint.scn").c_str());
  return 0;
}

int cmd_extract(const Context& ctx) {
  const std::string checkpoint = ctx.str("extract", "checkpoint");
  if (checkpoint.empty()) throw UsageError("extract requires a checkpoint");
  const std::string manifest_path = ctx.str("dataset", "manifest");
  if (manifest_path.empty()) throw UsageError("extract requires a manifest");

  const ScnModel model = load_checkpoint(checkpoint);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const std::string which = ctx.str("extract", "which");
  if (which != "h1" && which != "h3") {
    throw UsageError("extract.which must be h1 or h3");
  }
  const std::string split = ctx.str("extract", "split");
  const auto pairs =
      build_pairs(ctx, manifest, model.top_encoder().config().input_size,
                  parse_split(split));
  if (pairs.empty()) throw DataError("no pairs to extract features from");

  const std::string provenance = fs::path(checkpoint).filename().string() +
                                 "|" +
                                 fs::path(manifest_path).filename().string() +
                                 "|" + split;
  const FeatureSet set = extract_features(
      model, pairs, which == "h1" ? FeatureKind::kH1 : FeatureKind::kH3,
      provenance);
  const fs::path out = ctx.under_out(ctx.str("extract", "out"));
  save_features(out, set);
  echo_config(ctx);
  std::printf("wrote %d x %d %s features to %s\n", set.n, set.d,
              set.source.c_str(), out.c_str());
  return 0;
}

int cmd_eval(const Context& ctx) {
  const std::string train_path = ctx.str("eval", "train_features");
  const std::string test_path = ctx.str("eval", "test_features");
  if (train_path.empty() || test_path.empty()) {
    throw UsageError("eval requires eval.train_features and eval.test_features");
  }
  const FeatureSet train_set = load_features(train_path);
  const FeatureSet test_set = load_features(test_path);

  const LinearClassifier clf = train_linear_classifier(
      train_set, ctx.cfg["eval"]["reg"].get<float>(),
      ctx.cfg["eval"]["epochs"].get<int>(), derive_seed(ctx.seed, "classifier"));

  std::map<int, int> counts;
  for (int label : test_set.labels) counts[label]++;
  int majority = 0;
  for (const auto& [label, count] : counts) majority = std::max(majority, count);

  ordered_json report;
  report["train_features"] = train_path;
  report["test_features"] = test_path;
  report["n_train"] = train_set.n;
  report["n_test"] = test_set.n;
  report["classes"] = clf.classes;
  report["train_accuracy"] = accuracy(clf, train_set);
  report["accuracy"] = accuracy(clf, test_set);
  report["map"] = map_score(clf, test_set);
  report["majority_baseline"] = double(majority) / test_set.n;

  const std::string report_path = ctx.str("eval", "report");
  if (report_path.empty() || report_path == "-") {
    std::printf("%s\n", report.dump(2).c_str());
  } else {
    const fs::path out = ctx.under_out(report_path);
    std::ofstream file(out);
    file << report.dump(2) << "\n";
    std::printf("wrote report to %s\n", out.c_str());
  }
  return 0;
}

int cmd_reconstruct(const Context& ctx) {
  const std::string checkpoint = ctx.str("reconstruct", "checkpoint");
  if (checkpoint.empty()) throw UsageError("reconstruct requires a checkpoint");
  const std::string manifest_path = ctx.str("dataset", "manifest");
  if (manifest_path.empty()) throw UsageError("reconstruct requires a manifest");

  const ScnModel model = load_checkpoint(checkpoint);
  if (model.mode() != TargetMode::kRawPixel) {
    throw UsageError("reconstruct requires a raw-pixel-target checkpoint");
  }
  const DatasetManifest manifest = load_manifest(manifest_path);
  const auto pairs =
      build_pairs(ctx, manifest, model.top_encoder().config().input_size,
                  parse_split(ctx.str("reconstruct", "split")));
  const int limit = ctx.cfg["reconstruct"]["limit"].get<int>();

  const fs::path dir = ctx.out_dir / "recon";
  fs::create_directories(dir);
  int written = 0;
  for (const auto& pair : pairs) {
    if (limit > 0 && written >= limit) break;
    const Image image = reconstruct_patch(model, pair.patch_j, pair.offset);
    char name[128];
    std::snprintf(name, sizeof(name), "%s_%03d.pgm", pair.image_id.c_str(),
                  written);
    write_image(dir / name, image);
    ++written;
  }
  echo_config(ctx);
  std::printf("wrote %d reconstructions to %s\n", written, dir.c_str());
  return 0;
}

int cmd_gradcheck(const Context& ctx, int instances) {
  const GradCheckReport report =
      run_gradient_suite(instances, derive_seed(ctx.seed, "gradcheck"));
  for (const auto& entry : report.cases) {
    std::printf("%-24s max rel err %.3e\n", entry.name.c_str(),
                entry.max_rel_err);
  }
  std::printf("worst %.3e over %zu checks (tolerance 1e-3)\n", report.worst(),
              report.cases.size());
  if (!report.all_below(1e-3)) {
    std::printf("gradcheck: FAIL\n");
    return 3;
  }
  std::printf("gradcheck: OK\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial context network experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  uint64_t seed_flag = 0;
  std::string out_flag;
  app.add_option("--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_flag, "seed override");
  app.add_option("--out", out_flag, "output directory override");

  auto* gen = app.add_subcommand("gen-synthetic",
                                 "render the synthetic shapes dataset");
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string manifest_flag, mode_flag, tune_flag;
  bool ablate_flag = false;
  int epochs_flag = -1;
  train_cmd->add_option("--manifest", manifest_flag, "dataset manifest");
  train_cmd->add_option("--mode", mode_flag, "feature | raw-pixel");
  train_cmd->add_option("--tune-depth", tune_flag,
                        "fc-only | fc-plus-last-conv | all-layers");
  train_cmd->add_flag("--ablate-offset", ablate_flag,
                      "zero the offset path and exclude it from training");
  train_cmd->add_option("--epochs", epochs_flag, "override sgd.max_epochs");

  auto* extract_cmd = app.add_subcommand("extract", "extract features");
  std::string ckpt_flag, which_flag, split_flag, features_out_flag;
  extract_cmd->add_option("--checkpoint", ckpt_flag, "model checkpoint");
  extract_cmd->add_option("--manifest", manifest_flag, "dataset manifest");
  extract_cmd->add_option("--which", which_flag, "h1 | h3");
  extract_cmd->add_option("--split", split_flag, "train | test | all");
  extract_cmd->add_option("--features-out", features_out_flag,
                          "output file (relative to --out)");

  auto* eval_cmd = app.add_subcommand("eval", "train and score a classifier");
  std::string train_features_flag, test_features_flag, report_flag;
  eval_cmd->add_option("--train-features", train_features_flag,
                       "training feature file");
  eval_cmd->add_option("--test-features", test_features_flag,
                       "test feature file");
  eval_cmd->add_option("--report", report_flag, "report file ('-' = stdout)");

  auto* recon_cmd =
      app.add_subcommand("reconstruct", "decode raw-pixel predictions");
  int limit_flag = -1;
  recon_cmd->add_option("--checkpoint", ckpt_flag, "model checkpoint");
  recon_cmd->add_option("--manifest", manifest_flag, "dataset manifest");
  recon_cmd->add_option("--split", split_flag, "train | test | all");
  recon_cmd->add_option("--limit", limit_flag, "max reconstructions (0 = all)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference checks");
  int instances_flag = 3;
  grad_cmd->add_option("--instances", instances_flag,
                       "random instances per check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems exit 1, --help exits 0
  }

  try {
    Context ctx;
    ctx.cfg = default_config();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      ordered_json file_cfg;
      try {
        file_cfg = ordered_json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw DataError("config " + config_path + ": " + e.what());
      }
      ctx.cfg.merge_patch(file_cfg);
    }
    if (app.count("--seed")) ctx.cfg["seed"] = seed_flag;
    if (app.count("--out")) ctx.cfg["out_dir"] = out_flag;
    if (train_cmd->count("--manifest") || extract_cmd->count("--manifest") ||
        recon_cmd->count("--manifest")) {
      ctx.cfg["dataset"]["manifest"] = manifest_flag;
    }
    if (train_cmd->count("--mode")) ctx.cfg["model"]["mode"] = mode_flag;
    if (train_cmd->count("--tune-depth")) {
      ctx.cfg["model"]["tune_depth"] = tune_flag;
    }
    if (ablate_flag) ctx.cfg["model"]["ablate_offset"] = true;
    if (epochs_flag >= 0) ctx.cfg["sgd"]["max_epochs"] = epochs_flag;
    if (extract_cmd->count("--checkpoint")) {
      ctx.cfg["extract"]["checkpoint"] = ckpt_flag;
    }
    if (extract_cmd->count("--which")) ctx.cfg["extract"]["which"] = which_flag;
    if (extract_cmd->count("--split")) ctx.cfg["extract"]["split"] = split_flag;
    if (extract_cmd->count("--features-out")) {
      ctx.cfg["extract"]["out"] = features_out_flag;
    }
    if (eval_cmd->count("--train-features")) {
      ctx.cfg["eval"]["train_features"] = train_features_flag;
    }
    if (eval_cmd->count("--test-features")) {
      ctx.cfg["eval"]["test_features"] = test_features_flag;
    }
    if (eval_cmd->count("--report")) ctx.cfg["eval"]["report"] = report_flag;
    if (recon_cmd->count("--checkpoint")) {
      ctx.cfg["reconstruct"]["checkpoint"] = ckpt_flag;
    }
    if (recon_cmd->count("--split")) {
      ctx.cfg["reconstruct"]["split"] = split_flag;
    }
    if (limit_flag >= 0) ctx.cfg["reconstruct"]["limit"] = limit_flag;

    ctx.seed = ctx.cfg["seed"].get<uint64_t>();
    ctx.out_dir = ctx.cfg["out_dir"].get<std::string>();
    fs::create_directories(ctx.out_dir);

    if (gen->parsed()) return cmd_gen_synthetic(ctx);
    if (train_cmd->parsed()) return cmd_train(ctx);
    if (extract_cmd->parsed()) return cmd_extract(ctx);
    if (eval_cmd->parsed()) return cmd_eval(ctx);
    if (recon_cmd->parsed()) return cmd_reconstruct(ctx);
    if (grad_cmd->parsed()) return cmd_gradcheck(ctx, instances_flag);
    throw UsageError("no subcommand selected");
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {  // usage, config, dimension
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
