#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "taxrisk/baseline.hpp"
#include "taxrisk/checkpoint.hpp"
#include "taxrisk/config.hpp"
#include "taxrisk/errors.hpp"
#include "taxrisk/json_writer.hpp"
#include "taxrisk/jsonl.hpp"
#include "taxrisk/split.hpp"
#include "taxrisk/synthetic.hpp"
#include "taxrisk/trainer.hpp"

namespace fs = std::filesystem;
using namespace taxrisk;

namespace {

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

RunConfig load_config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failure on " + path);
}

void report_rejects(const std::vector<Reject>& rejects) {
  for (const Reject& r : rejects) {
    std::cerr << "reject line " << r.line << ": " << r.reason << "\n";
  }
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

void write_metrics_object(JsonWriter& w, const MetricsReport& m) {
  w.begin_object();
  w.key("evaluated").value(m.evaluated);
  w.key("accuracy").value(m.accuracy);
  w.key("macro_precision").value(m.macro_precision);
  w.key("macro_recall").value(m.macro_recall);
  w.key("macro_f1").value(m.macro_f1);
  w.key("per_class").begin_object();
  for (std::size_t c = 0; c < 3; ++c) {
    w.key(to_string(static_cast<RiskLevel>(c))).begin_object();
    w.key("precision").value(m.per_class[c].precision);
    w.key("recall").value(m.per_class[c].recall);
    w.key("f1").value(m.per_class[c].f1);
    w.key("support").value(m.per_class[c].support);
    w.end_object();
  }
  w.end_object();
  w.key("confusion").begin_array();
  for (std::size_t i = 0; i < 3; ++i) {
    w.begin_array();
    for (std::size_t j = 0; j < 3; ++j) w.value(m.confusion[i][j]);
    w.end_array();
  }
  w.end_array();
  w.key("anomaly_flag_rate").begin_object();
  for (std::size_t c = 0; c < 3; ++c) {
    w.key(to_string(static_cast<RiskLevel>(c))).value(m.anomaly_flag_rate[c]);
  }
  w.end_object();
  w.end_object();
}

void print_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::printf("%-22s %10s %10s %10s\n", "Model", "Accuracy", "Recall", "F1-score");
  for (const auto& [name, m] : rows) {
    std::printf("%-22s %10.4f %10.4f %10.4f\n", name.c_str(), m.accuracy, m.macro_recall,
                m.macro_f1);
  }
}

std::string split_hash(const DatasetSplit& split) {
  std::string acc = "train:";
  for (const auto& r : split.train) acc += r.id + ",";
  acc += "|validation:";
  for (const auto& r : split.validation) acc += r.id + ",";
  acc += "|test:";
  for (const auto& r : split.test) acc += r.id + ",";
  return hex64(fnv1a64(acc));
}

std::optional<double> final_smoothed_val_loss(const LossCurve& curve) {
  if (curve.empty()) return std::nullopt;
  const std::size_t window = std::min<std::size_t>(5, curve.size());
  double s = 0.0;
  for (std::size_t k = 0; k < window; ++k) s += curve[curve.size() - 1 - k].val_loss;
  return s / static_cast<double>(window);
}

// Shared by train and compare: load + split + fit + prepare. Any reject is
// fatal for training commands.
struct PreparedRun {
  DatasetSplit split;
  PreprocessStats stats;
  Prepared train;
  Prepared validation;
  Prepared test;
};

PreparedRun prepare_run(const RunConfig& cfg, const std::string& data_path) {
  LoadResult loaded = load_dataset(data_path, cfg.transformer.seq_len);
  if (!loaded.rejects.empty()) {
    report_rejects(loaded.rejects);
    throw ValidationError(std::to_string(loaded.rejects.size()) +
                          " record(s) rejected; fix the dataset before training");
  }
  if (loaded.records.empty()) throw ValidationError("dataset " + data_path + " is empty");

  PreparedRun run;
  std::vector<std::string> warnings;
  run.split = split_dataset(loaded.records, cfg.split, cfg.seed, &warnings);
  run.stats = fit_preprocessor(run.split.train, cfg.transformer.seq_len, &warnings);
  print_warnings(warnings);
  run.train = apply_preprocessor(run.stats, run.split.train);
  run.validation = apply_preprocessor(run.stats, run.split.validation);
  run.test = apply_preprocessor(run.stats, run.split.test);
  return run;
}

HybridModel train_hybrid_model(const RunConfig& cfg, const PreparedRun& run,
                               TrainResult* result_out) {
  Rng init_rng(cfg.seed, 0);
  HybridModel model(cfg.model_config(run.stats.static_width()), init_rng);
  TrainResult result = train_hybrid(model, run.train, run.validation, cfg.train);
  model.threshold = calibrate_threshold(low_risk_errors(model, run.validation),
                                        cfg.ae_quantile);
  if (result_out) *result_out = result;
  return model;
}

int cmd_generate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, std::optional<long long> n,
                 const std::string& csv_path) {
  RunConfig cfg = load_config_or_default(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.train.seed = *seed;
    cfg.synthetic.seed = *seed;
  }
  if (n) {
    if (*n < 0) throw ConfigError("--n must be nonnegative");
    cfg.synthetic.n_enterprises = static_cast<std::size_t>(*n);
  }
  cfg.validate();

  const std::vector<EnterpriseRecord> records = generate_synthetic(cfg.synthetic);
  save_dataset(records, out_path);
  if (!csv_path.empty()) save_dataset_csv(records, csv_path);

  JsonWriter w;
  w.begin_object();
  w.key("format_version").value(kManifestFormatVersion);
  w.key("seed").value(cfg.seed);
  w.key("config_hash").value(config_hash(cfg));
  w.key("record_count").value(records.size());
  w.key("config");
  write_run_config(w, cfg);
  w.end_object();
  write_text_file(out_path + ".manifest.json", w.str() + "\n");

  std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_config_or_default(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.train.seed = *seed;
    cfg.synthetic.seed = *seed;
  }
  cfg.validate();
  fs::create_directories(out_dir);

  PreparedRun run = prepare_run(cfg, data_path);
  TrainResult result;
  HybridModel model = train_hybrid_model(cfg, run, &result);

  save_checkpoint(model, run.stats, cfg, (fs::path(out_dir) / "checkpoint.json").string());
  emit_loss_curve(result.curve, (fs::path(out_dir) / "loss_curve.csv").string(),
                  (fs::path(out_dir) / "loss_curve.svg").string());
  write_text_file((fs::path(out_dir) / "resolved_config.json").string(),
                  resolved_config_json(cfg) + "\n");
  save_stats_artifact(run.stats, (fs::path(out_dir) / "stats.json").string());

  const auto convergence = convergence_epoch(result.curve);
  const auto smoothed = final_smoothed_val_loss(result.curve);
  JsonWriter w;
  w.begin_object();
  w.key("format_version").value(kManifestFormatVersion);
  w.key("seed").value(cfg.seed);
  w.key("config_hash").value(config_hash(cfg));
  w.key("split_sizes").begin_object();
  w.key("train").value(run.split.train.size());
  w.key("validation").value(run.split.validation.size());
  w.key("test").value(run.split.test.size());
  w.end_object();
  w.key("split_hash").value(split_hash(run.split));
  w.key("epochs_ran").value(result.curve.size());
  w.key("best_epoch").value(result.best_epoch);
  w.key("best_val_loss").value(result.best_val_loss);
  w.key("convergence_epoch");
  if (convergence) w.value(*convergence);
  else w.null();
  w.key("final_smoothed_val_loss");
  if (smoothed) w.value(*smoothed);
  else w.null();
  w.key("threshold").begin_object();
  w.key("tau").value(model.threshold.tau);
  w.key("quantile").value(model.threshold.calibration_quantile);
  w.key("calibration_count").value(model.threshold.calibration_count);
  w.end_object();
  w.end_object();
  write_text_file((fs::path(out_dir) / "run_summary.json").string(), w.str() + "\n");

  std::cout << "split sizes " << run.split.train.size() << "/" << run.split.validation.size()
            << "/" << run.split.test.size() << "\n";
  std::cout << "trained " << result.curve.size() << " epochs, best epoch "
            << result.best_epoch << ", best val loss " << result.best_val_loss << "\n";
  std::cout << "artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& data_path,
                 const std::string& split_name, const std::string& out_path) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
  LoadResult loaded = load_dataset(data_path, ckpt.stats.seq_len);
  if (!loaded.rejects.empty()) {
    report_rejects(loaded.rejects);
    throw ValidationError(std::to_string(loaded.rejects.size()) + " record(s) rejected");
  }

  std::vector<EnterpriseRecord> subset;
  if (split_name == "all") {
    subset = loaded.records;
  } else {
    DatasetSplit split = split_dataset(loaded.records, ckpt.config.split, ckpt.config.seed);
    subset = split_name == "val" ? split.validation : split.test;
  }
  const Prepared prepared = apply_preprocessor(ckpt.stats, subset);
  if (!prepared.rejects.empty()) {
    report_rejects(prepared.rejects);
    throw ValidationError("rejected records in evaluation input");
  }
  const MetricsReport report = evaluate_hybrid(ckpt.model, prepared, ckpt.config.policy);

  print_metrics_table({{"hybrid", report}});

  JsonWriter w;
  w.begin_object();
  w.key("format_version").value(kManifestFormatVersion);
  w.key("config_hash").value(config_hash(ckpt.config));
  w.key("split").value(split_name);
  w.key("metrics");
  write_metrics_object(w, report);
  w.key("config");
  write_run_config(w, ckpt.config);
  w.end_object();
  write_text_file(out_path, w.str() + "\n");
  return 0;
}

int cmd_score(const std::string& checkpoint_path, const std::string& input_path,
              const std::string& output_path, const std::string& policy_name,
              std::optional<double> high_threshold) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
  LevelPolicy policy = ckpt.config.policy;
  if (!policy_name.empty()) {
    if (policy_name == "argmax") {
      policy.mode = LevelPolicy::Mode::Argmax;
    } else if (policy_name == "threshold") {
      policy.mode = LevelPolicy::Mode::Threshold;
    } else {
      throw ConfigError("--policy must be argmax or threshold");
    }
  }
  if (high_threshold) policy.high_threshold = *high_threshold;
  policy.validate();

  LoadResult loaded = load_dataset(input_path, ckpt.stats.seq_len);
  const Prepared prepared = apply_preprocessor(ckpt.stats, loaded.records);
  if (!prepared.rejects.empty()) {
    // Records that passed load validation must survive preprocessing.
    throw ValidationError("internal: preprocessing rejected validated records");
  }

  Tensor probs;
  Tensor errors;
  if (!loaded.records.empty()) {
    const HybridModel::Output out =
        ckpt.model.infer(prepared.x_static, prepared.x_series, prepared.mask);
    probs = out.probs;
    errors = out.recon_errors;
  }

  auto vocab_has = [](const std::vector<std::string>& vocab, const std::string& v) {
    for (std::size_t i = 0; i + 1 < vocab.size(); ++i) {
      if (vocab[i] == v) return true;
    }
    return false;
  };

  std::string out_text;
  std::size_t next_record = 0;
  std::size_t next_reject = 0;
  std::size_t line = 0;
  // Preserve the one-output-line-per-input-line contract: rejected lines
  // yield an error document in position.
  while (next_record < loaded.records.size() || next_reject < loaded.rejects.size()) {
    ++line;
    if (next_reject < loaded.rejects.size() && loaded.rejects[next_reject].line == line) {
      JsonWriter w;
      w.begin_object();
      w.key("line").value(loaded.rejects[next_reject].line);
      w.key("error").value(loaded.rejects[next_reject].reason);
      w.end_object();
      out_text += w.str() + "\n";
      ++next_reject;
      continue;
    }
    if (next_record >= loaded.records.size() || loaded.lines[next_record] != line) {
      continue;  // blank line in the input
    }
    const EnterpriseRecord& rec = loaded.records[next_record];
    const double* p = probs.data() + next_record * 3;
    const RiskLevel level = assign_level(p, policy);
    const double err = errors[next_record];

    JsonWriter w;
    w.begin_object();
    w.key("id").value(rec.id);
    w.key("probs").begin_array();
    w.value(p[0]).value(p[1]).value(p[2]);
    w.end_array();
    w.key("level").value(to_string(level));
    w.key("reconstruction_error").value(err);
    w.key("anomaly_flag").value(flag_anomaly(err, ckpt.model.threshold));
    w.key("label");
    if (rec.label) w.value(to_string(*rec.label));
    else w.null();
    std::vector<std::string> warnings;
    if (!vocab_has(ckpt.stats.industry_vocab, rec.industry)) {
      warnings.push_back("industry '" + rec.industry + "' not in training vocabulary");
    }
    if (!vocab_has(ckpt.stats.region_vocab, rec.region)) {
      warnings.push_back("region '" + rec.region + "' not in training vocabulary");
    }
    if (!warnings.empty()) {
      w.key("warnings").begin_array();
      for (const std::string& msg : warnings) w.value(msg);
      w.end_array();
    }
    w.end_object();
    out_text += w.str() + "\n";
    ++next_record;
  }
  write_text_file(output_path, out_text);
  std::cout << "scored " << loaded.records.size() << " records";
  if (!loaded.rejects.empty()) std::cout << ", " << loaded.rejects.size() << " rejected";
  std::cout << "\n";
  return 0;
}

int cmd_compare(const std::string& config_path, const std::string& data_path,
                const std::string& out_dir, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_config_or_default(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.train.seed = *seed;
    cfg.synthetic.seed = *seed;
  }
  cfg.validate();
  fs::create_directories(out_dir);

  PreparedRun run = prepare_run(cfg, data_path);
  TrainResult hybrid_result;
  HybridModel model = train_hybrid_model(cfg, run, &hybrid_result);
  const MetricsReport hybrid_metrics = evaluate_hybrid(model, run.test, cfg.policy);

  LogisticRegression baseline(LogisticRegression::features(run.train).cols());
  baseline.train(run.train, run.validation, cfg.train);
  const MetricsReport lr_metrics = baseline.evaluate(run.test, cfg.policy);

  print_metrics_table({{"hybrid", hybrid_metrics}, {"logistic_regression", lr_metrics}});

  const std::string shash = split_hash(run.split);
  JsonWriter w;
  w.begin_object();
  w.key("format_version").value(kManifestFormatVersion);
  w.key("config_hash").value(config_hash(cfg));
  w.key("split_sizes").begin_object();
  w.key("train").value(run.split.train.size());
  w.key("validation").value(run.split.validation.size());
  w.key("test").value(run.split.test.size());
  w.end_object();
  w.key("models").begin_object();
  w.key("hybrid").begin_object();
  w.key("split_hash").value(shash);
  w.key("metrics");
  write_metrics_object(w, hybrid_metrics);
  w.end_object();
  w.key("logistic_regression").begin_object();
  w.key("split_hash").value(shash);
  w.key("metrics");
  write_metrics_object(w, lr_metrics);
  w.end_object();
  w.end_object();
  w.key("config");
  write_run_config(w, cfg);
  w.end_object();
  write_text_file((fs::path(out_dir) / "compare.json").string(), w.str() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corporate tax-risk grading: hybrid model workflow"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, out_dir, checkpoint_path, input_path;
  std::string split_name = "test", policy_name, metrics_out = "metrics.json";
  std::string score_out;
  long long n_override = 0;
  std::uint64_t seed_override = 0;
  double high_threshold = 0.0;

  std::string csv_path;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--config", config_path, "Run config JSON");
  generate->add_option("--out", out_path, "Output dataset path (JSONL)")->required();
  generate->add_option("--seed", seed_override, "Master seed override");
  generate->add_option("--n", n_override, "Number of enterprises");
  generate->add_option("--csv", csv_path, "Optional flat CSV export for inspection");

  CLI::App* train = app.add_subcommand("train", "Split, fit, train, calibrate");
  train->add_option("--config", config_path, "Run config JSON");
  train->add_option("--data", data_path, "Dataset JSONL")->required();
  train->add_option("--out-dir", out_dir, "Artifact directory")->required();
  train->add_option("--seed", seed_override, "Master seed override");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Metrics on a held-out split");
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint.json")->required();
  evaluate->add_option("--data", data_path, "Dataset JSONL")->required();
  evaluate->add_option("--split", split_name, "test, val, or all")
      ->check(CLI::IsMember({"test", "val", "all"}));
  evaluate->add_option("--out", metrics_out, "Metrics JSON output path");

  CLI::App* score = app.add_subcommand("score", "Per-record predictions JSONL");
  score->add_option("--checkpoint", checkpoint_path, "checkpoint.json")->required();
  score->add_option("--input", input_path, "Records JSONL (labels optional)")->required();
  score->add_option("--output", score_out, "Predictions JSONL path")->required();
  score->add_option("--policy", policy_name, "argmax or threshold");
  CLI::Option* ht =
      score->add_option("--high-threshold", high_threshold, "High-risk probability cutoff");

  CLI::App* compare = app.add_subcommand("compare", "Hybrid vs logistic regression");
  compare->add_option("--config", config_path, "Run config JSON");
  compare->add_option("--data", data_path, "Dataset JSONL")->required();
  compare->add_option("--out-dir", out_dir, "Artifact directory");
  compare->add_option("--seed", seed_override, "Master seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto opt_seed = [&]() -> std::optional<std::uint64_t> {
    if (generate->count("--seed") || train->count("--seed") || compare->count("--seed")) {
      return seed_override;
    }
    return std::nullopt;
  }();

  if (generate->parsed()) {
    return guarded([&] {
      std::optional<long long> n;
      if (generate->count("--n")) n = n_override;
      cmd_generate(config_path, out_path, opt_seed, n, csv_path);
    });
  }
  if (train->parsed()) {
    return guarded([&] { cmd_train(config_path, data_path, out_dir, opt_seed); });
  }
  if (evaluate->parsed()) {
    return guarded([&] { cmd_evaluate(checkpoint_path, data_path, split_name, metrics_out); });
  }
  if (score->parsed()) {
    return guarded([&] {
      std::optional<double> threshold;
      if (ht->count()) threshold = high_threshold;
      cmd_score(checkpoint_path, input_path, score_out, policy_name, threshold);
    });
  }
  if (compare->parsed()) {
    return guarded([&] {
      cmd_compare(config_path, data_path, out_dir.empty() ? "." : out_dir, opt_seed);
    });
  }
  return 2;
}
