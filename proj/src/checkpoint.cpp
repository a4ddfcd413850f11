#include "taxrisk/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "taxrisk/errors.hpp"
#include "taxrisk/json_writer.hpp"
#include "taxrisk/rng.hpp"

namespace taxrisk {

namespace {
using nlohmann::json;

void write_string_array(JsonWriter& w, const std::vector<std::string>& values) {
  w.begin_array();
  for (const std::string& v : values) w.value(v);
  w.end_array();
}

template <typename Seq>
void write_double_array(JsonWriter& w, const Seq& values) {
  w.begin_array();
  for (double v : values) w.value(v);
  w.end_array();
}

void write_stats(JsonWriter& w, const PreprocessStats& stats) {
  w.begin_object();
  w.key("seq_len").value(stats.seq_len);
  w.key("static_columns");
  write_string_array(w, stats.static_columns());
  w.key("static_mean");
  write_double_array(w, stats.static_mean);
  w.key("static_std");
  write_double_array(w, stats.static_std);
  w.key("industry_vocab");
  write_string_array(w, stats.industry_vocab);
  w.key("region_vocab");
  write_string_array(w, stats.region_vocab);
  w.key("channel_names");
  w.begin_array();
  for (const char* name : kChannelNames) w.value(name);
  w.end_array();
  w.key("channel_mean");
  write_double_array(w, stats.channel_mean);
  w.key("channel_std");
  write_double_array(w, stats.channel_std);
  w.end_object();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failure on " + path);
}

std::vector<double> read_doubles(const json& arr, std::size_t expected,
                                 const std::string& name) {
  if (!arr.is_array() || arr.size() != expected) {
    throw CheckpointError(name + " must be an array of " + std::to_string(expected));
  }
  std::vector<double> out;
  for (const json& v : arr) {
    if (!v.is_number()) throw CheckpointError(name + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> read_strings(const json& arr, const std::string& name) {
  if (!arr.is_array()) throw CheckpointError(name + " must be an array");
  std::vector<std::string> out;
  for (const json& v : arr) {
    if (!v.is_string()) throw CheckpointError(name + " entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}
}  // namespace

std::string checkpoint_json(const HybridModel& model, const PreprocessStats& stats,
                            const RunConfig& cfg) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version").value(kCheckpointFormatVersion);
  w.key("config");
  write_run_config(w, cfg);
  w.key("preprocess");
  write_stats(w, stats);
  w.key("threshold").begin_object();
  w.key("tau").value(model.threshold.tau);
  w.key("quantile").value(model.threshold.calibration_quantile);
  w.key("calibration_count").value(model.threshold.calibration_count);
  w.end_object();
  w.key("parameters").begin_array();
  HybridModel& mutable_model = const_cast<HybridModel&>(model);
  for (const Parameter* p : mutable_model.parameters()) {
    w.begin_object();
    w.key("name").value(p->name);
    w.key("shape").begin_array();
    for (std::size_t d : p->value.shape()) w.value(d);
    w.end_array();
    w.key("values");
    write_double_array(w, p->value.values());
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

void save_checkpoint(const HybridModel& model, const PreprocessStats& stats,
                     const RunConfig& cfg, const std::string& path) {
  write_file(path, checkpoint_json(model, stats, cfg));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path);

  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw CheckpointError("checkpoint is not a JSON object");
  }
  const auto version = doc.find("format_version");
  if (version == doc.end() || !version->is_number_integer()) {
    throw CheckpointError("checkpoint lacks an integer format_version");
  }
  if (version->get<std::int64_t>() != kCheckpointFormatVersion) {
    throw CheckpointError("incompatible checkpoint format_version " +
                          std::to_string(version->get<std::int64_t>()) + ", expected " +
                          std::to_string(kCheckpointFormatVersion));
  }
  if (!doc.contains("config") || !doc.contains("preprocess") ||
      !doc.contains("threshold") || !doc.contains("parameters")) {
    throw CheckpointError("checkpoint is missing a required section");
  }

  LoadedCheckpoint out;
  out.config = parse_run_config_json(doc["config"].dump());
  out.config.validate();

  const json& pp = doc["preprocess"];
  PreprocessStats& stats = out.stats;
  if (!pp.contains("seq_len") || !pp["seq_len"].is_number_unsigned()) {
    throw CheckpointError("preprocess.seq_len must be a nonnegative integer");
  }
  stats.seq_len = pp["seq_len"].get<std::size_t>();
  const auto sm = read_doubles(pp.value("static_mean", json::array()), 3, "static_mean");
  const auto ss = read_doubles(pp.value("static_std", json::array()), 3, "static_std");
  std::copy(sm.begin(), sm.end(), stats.static_mean.begin());
  std::copy(ss.begin(), ss.end(), stats.static_std.begin());
  stats.industry_vocab = read_strings(pp.value("industry_vocab", json::array()), "industry_vocab");
  stats.region_vocab = read_strings(pp.value("region_vocab", json::array()), "region_vocab");
  const auto cm = read_doubles(pp.value("channel_mean", json::array()), 4, "channel_mean");
  const auto cs = read_doubles(pp.value("channel_std", json::array()), 4, "channel_std");
  std::copy(cm.begin(), cm.end(), stats.channel_mean.begin());
  std::copy(cs.begin(), cs.end(), stats.channel_std.begin());
  if (stats.industry_vocab.empty() || stats.region_vocab.empty()) {
    throw CheckpointError("checkpoint vocabularies are empty");
  }

  Rng init_rng(0);
  out.model = HybridModel(out.config.model_config(stats.static_width()), init_rng);

  const json& params = doc["parameters"];
  if (!params.is_array()) throw CheckpointError("parameters must be an array");
  std::map<std::string, Parameter*> by_name;
  for (Parameter* p : out.model.parameters()) by_name[p->name] = p;
  std::size_t assigned = 0;
  for (const json& entry : params) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("shape") ||
        !entry.contains("values")) {
      throw CheckpointError("parameter entry is missing name/shape/values");
    }
    const std::string name = entry["name"].get<std::string>();
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw CheckpointError("checkpoint parameter " + name + " does not exist in this model");
    }
    Parameter& p = *it->second;
    std::vector<std::size_t> shape;
    for (const json& d : entry["shape"]) shape.push_back(d.get<std::size_t>());
    if (shape != p.value.shape()) {
      throw CheckpointError("parameter " + name + " shape does not match the config");
    }
    const json& values = entry["values"];
    if (!values.is_array() || values.size() != p.value.size()) {
      throw CheckpointError("parameter " + name + " has a corrupt value count");
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = values[i].get<double>();
    ++assigned;
  }
  if (assigned != by_name.size()) {
    throw CheckpointError("checkpoint covers " + std::to_string(assigned) + " of " +
                          std::to_string(by_name.size()) + " model parameters");
  }

  const json& th = doc["threshold"];
  if (!th.is_object() || !th.contains("tau") || !th.contains("quantile") ||
      !th.contains("calibration_count")) {
    throw CheckpointError("threshold section is incomplete");
  }
  out.model.threshold.tau = th["tau"].get<double>();
  out.model.threshold.calibration_quantile = th["quantile"].get<double>();
  out.model.threshold.calibration_count = th["calibration_count"].get<std::size_t>();
  return out;
}

void save_stats_artifact(const PreprocessStats& stats, const std::string& path) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version").value(kStatsFormatVersion);
  w.key("preprocess");
  write_stats(w, stats);
  w.end_object();
  write_file(path, w.str() + "\n");
}

}  // namespace taxrisk
