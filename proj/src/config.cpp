#include "taxrisk/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taxrisk/errors.hpp"
#include "taxrisk/json_writer.hpp"

namespace taxrisk {

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {
using nlohmann::json;

[[noreturn]] void bad_key(const std::string& where, const std::string& key) {
  throw ConfigError("unknown config key " + (where.empty() ? key : where + "." + key));
}

double as_double(const json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError(name + " must be a number");
  return v.get<double>();
}

std::uint64_t as_u64(const json& v, const std::string& name) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(name + " must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::size_t as_size(const json& v, const std::string& name) {
  return static_cast<std::size_t>(as_u64(v, name));
}

void parse_dnn(const json& section, RunConfig& cfg) {
  for (const auto& [key, v] : section.items()) {
    if (key == "hidden") {
      if (!v.is_array() || v.empty()) throw ConfigError("dnn.hidden must be a nonempty array");
      cfg.dnn_hidden.clear();
      for (const json& e : v) cfg.dnn_hidden.push_back(as_size(e, "dnn.hidden entry"));
    } else {
      bad_key("dnn", key);
    }
  }
}

void parse_transformer(const json& section, RunConfig& cfg) {
  for (const auto& [key, v] : section.items()) {
    if (key == "seq_len") cfg.transformer.seq_len = as_size(v, "transformer.seq_len");
    else if (key == "d_model") cfg.transformer.d_model = as_size(v, "transformer.d_model");
    else if (key == "n_heads") cfg.transformer.n_heads = as_size(v, "transformer.n_heads");
    else if (key == "n_blocks") cfg.transformer.n_blocks = as_size(v, "transformer.n_blocks");
    else if (key == "d_ff") cfg.transformer.d_ff = as_size(v, "transformer.d_ff");
    else bad_key("transformer", key);
  }
}

void parse_ae(const json& section, RunConfig& cfg) {
  for (const auto& [key, v] : section.items()) {
    if (key == "latent_dim") cfg.ae_latent = as_size(v, "ae.latent_dim");
    else if (key == "threshold_quantile") cfg.ae_quantile = as_double(v, "ae.threshold_quantile");
    else bad_key("ae", key);
  }
}

void parse_policy(const json& section, RunConfig& cfg) {
  for (const auto& [key, v] : section.items()) {
    if (key == "mode") {
      if (!v.is_string()) throw ConfigError("policy.mode must be a string");
      const std::string mode = v.get<std::string>();
      if (mode == "argmax") cfg.policy.mode = LevelPolicy::Mode::Argmax;
      else if (mode == "threshold") cfg.policy.mode = LevelPolicy::Mode::Threshold;
      else throw ConfigError("policy.mode must be argmax or threshold");
    } else if (key == "high_threshold") {
      if (v.is_null()) cfg.policy.high_threshold.reset();
      else cfg.policy.high_threshold = as_double(v, "policy.high_threshold");
    } else {
      bad_key("policy", key);
    }
  }
}

void parse_train(const json& section, RunConfig& cfg) {
  for (const auto& [key, v] : section.items()) {
    if (key == "max_epochs") cfg.train.max_epochs = as_size(v, "train.max_epochs");
    else if (key == "batch_size") cfg.train.batch_size = as_size(v, "train.batch_size");
    else if (key == "lambda_ae") cfg.train.lambda_ae = as_double(v, "train.lambda_ae");
    else if (key == "patience") cfg.train.patience = as_size(v, "train.patience");
    else if (key == "lr") cfg.train.adam.lr = as_double(v, "train.lr");
    else if (key == "beta1") cfg.train.adam.beta1 = as_double(v, "train.beta1");
    else if (key == "beta2") cfg.train.adam.beta2 = as_double(v, "train.beta2");
    else if (key == "epsilon") cfg.train.adam.epsilon = as_double(v, "train.epsilon");
    else bad_key("train", key);
  }
}

void parse_synthetic(const json& section, RunConfig& cfg) {
  for (const auto& [key, v] : section.items()) {
    if (key == "n_enterprises") cfg.synthetic.n_enterprises = as_size(v, "synthetic.n_enterprises");
    else if (key == "seq_len") cfg.synthetic.seq_len = as_size(v, "synthetic.seq_len");
    else if (key == "industry_mix") {
      if (!v.is_object()) throw ConfigError("synthetic.industry_mix must be an object");
      for (const auto& [ind, share] : v.items()) {
        bool known = false;
        for (std::size_t i = 0; i < kIndustries.size(); ++i) {
          if (ind == kIndustries[i]) {
            cfg.synthetic.industry_mix[i] =
                as_double(share, "synthetic.industry_mix." + ind);
            known = true;
            break;
          }
        }
        if (!known) bad_key("synthetic.industry_mix", ind);
      }
    } else if (key == "low_share") cfg.synthetic.low_share = as_double(v, "synthetic.low_share");
    else if (key == "medium_share") cfg.synthetic.medium_share = as_double(v, "synthetic.medium_share");
    else if (key == "high_share") cfg.synthetic.high_share = as_double(v, "synthetic.high_share");
    else if (key == "label_noise") cfg.synthetic.label_noise = as_double(v, "synthetic.label_noise");
    else if (key == "missing_rate") cfg.synthetic.missing_rate = as_double(v, "synthetic.missing_rate");
    else bad_key("synthetic", key);
  }
}

void parse_split(const json& section, RunConfig& cfg) {
  for (const auto& [key, v] : section.items()) {
    if (key == "train") cfg.split.train = as_double(v, "split.train");
    else if (key == "validation") cfg.split.validation = as_double(v, "split.validation");
    else if (key == "test") cfg.split.test = as_double(v, "split.test");
    else bad_key("split", key);
  }
}
}  // namespace

void RunConfig::validate() const {
  for (std::size_t w : dnn_hidden) {
    if (w == 0) throw ConfigError("dnn.hidden widths must be positive");
  }
  transformer.validate();
  if (!(ae_quantile > 0.0 && ae_quantile < 1.0)) {
    throw ConfigError("ae.threshold_quantile must lie in (0,1)");
  }
  if (ae_latent == 0 || ae_latent >= dnn_hidden.back() + transformer.d_model) {
    throw ConfigError("ae.latent_dim must compress below d_s + d_t");
  }
  policy.validate();
  train.validate();
  synthetic.validate();
  split.validate();
  if (synthetic.seq_len > transformer.seq_len) {
    throw ConfigError("synthetic.seq_len exceeds transformer.seq_len");
  }
}

ModelConfig RunConfig::model_config(std::size_t static_dim) const {
  ModelConfig mc;
  mc.static_dim = static_dim;
  mc.static_hidden = dnn_hidden;
  mc.transformer = transformer;
  mc.transformer.series_dim = kChannelNames.size();
  mc.ae_latent = ae_latent;
  mc.threshold_quantile = ae_quantile;
  return mc;
}

RunConfig parse_run_config_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, v] : doc.items()) {
    if (key == "seed") cfg.seed = as_u64(v, "seed");
    else if (key == "dnn") parse_dnn(v, cfg);
    else if (key == "transformer") parse_transformer(v, cfg);
    else if (key == "ae") parse_ae(v, cfg);
    else if (key == "policy") parse_policy(v, cfg);
    else if (key == "train") parse_train(v, cfg);
    else if (key == "synthetic") parse_synthetic(v, cfg);
    else if (key == "split") parse_split(v, cfg);
    else bad_key("", key);
  }
  cfg.train.seed = cfg.seed;
  cfg.synthetic.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path);
  return parse_run_config_json(buf.str());
}

void write_run_config(JsonWriter& w, const RunConfig& cfg) {
  w.begin_object();
  w.key("seed").value(cfg.seed);
  w.key("dnn").begin_object();
  w.key("hidden").begin_array();
  for (std::size_t h : cfg.dnn_hidden) w.value(h);
  w.end_array().end_object();
  w.key("transformer").begin_object();
  w.key("seq_len").value(cfg.transformer.seq_len);
  w.key("d_model").value(cfg.transformer.d_model);
  w.key("n_heads").value(cfg.transformer.n_heads);
  w.key("n_blocks").value(cfg.transformer.n_blocks);
  w.key("d_ff").value(cfg.transformer.d_ff);
  w.end_object();
  w.key("ae").begin_object();
  w.key("latent_dim").value(cfg.ae_latent);
  w.key("threshold_quantile").value(cfg.ae_quantile);
  w.end_object();
  w.key("policy").begin_object();
  w.key("mode").value(cfg.policy.mode == LevelPolicy::Mode::Argmax ? "argmax" : "threshold");
  w.key("high_threshold");
  if (cfg.policy.high_threshold) w.value(*cfg.policy.high_threshold);
  else w.null();
  w.end_object();
  w.key("train").begin_object();
  w.key("max_epochs").value(cfg.train.max_epochs);
  w.key("batch_size").value(cfg.train.batch_size);
  w.key("lambda_ae").value(cfg.train.lambda_ae);
  w.key("patience").value(cfg.train.patience);
  w.key("lr").value(cfg.train.adam.lr);
  w.key("beta1").value(cfg.train.adam.beta1);
  w.key("beta2").value(cfg.train.adam.beta2);
  w.key("epsilon").value(cfg.train.adam.epsilon);
  w.end_object();
  w.key("synthetic").begin_object();
  w.key("n_enterprises").value(cfg.synthetic.n_enterprises);
  w.key("seq_len").value(cfg.synthetic.seq_len);
  w.key("industry_mix").begin_object();
  for (std::size_t i = 0; i < kIndustries.size(); ++i) {
    w.key(kIndustries[i]).value(cfg.synthetic.industry_mix[i]);
  }
  w.end_object();
  w.key("low_share").value(cfg.synthetic.low_share);
  w.key("medium_share").value(cfg.synthetic.medium_share);
  w.key("high_share").value(cfg.synthetic.high_share);
  w.key("label_noise").value(cfg.synthetic.label_noise);
  w.key("missing_rate").value(cfg.synthetic.missing_rate);
  w.end_object();
  w.key("split").begin_object();
  w.key("train").value(cfg.split.train);
  w.key("validation").value(cfg.split.validation);
  w.key("test").value(cfg.split.test);
  w.end_object();
  w.end_object();
}

std::string resolved_config_json(const RunConfig& cfg) {
  JsonWriter w;
  write_run_config(w, cfg);
  return w.str();
}

std::string config_hash(const RunConfig& cfg) {
  return hex64(fnv1a64(resolved_config_json(cfg)));
}

}  // namespace taxrisk
