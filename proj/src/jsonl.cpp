#include "taxrisk/jsonl.hpp"

#include <fstream>

#include <json.hpp>

#include "taxrisk/errors.hpp"

namespace taxrisk {

namespace {
using nlohmann::json;

double require_number(const json& doc, const char* field) {
  const auto it = doc.find(field);
  if (it == doc.end()) throw ValidationError(std::string("missing field ") + field);
  if (!it->is_number()) throw ValidationError(std::string(field) + " must be a number");
  return it->get<double>();
}

std::string require_string(const json& doc, const char* field) {
  const auto it = doc.find(field);
  if (it == doc.end()) throw ValidationError(std::string("missing field ") + field);
  if (!it->is_string()) throw ValidationError(std::string(field) + " must be a string");
  return it->get<std::string>();
}

Channel require_channel(const json& doc, const char* field) {
  const auto it = doc.find(field);
  if (it == doc.end()) throw ValidationError(std::string("missing field ") + field);
  if (!it->is_array()) throw ValidationError(std::string(field) + " must be an array");
  Channel ch;
  ch.reserve(it->size());
  for (const json& v : *it) {
    if (v.is_null()) {
      ch.push_back(std::nullopt);
    } else if (v.is_number()) {
      ch.push_back(v.get<double>());
    } else {
      throw ValidationError(std::string(field) + " entries must be numbers or nulls");
    }
  }
  return ch;
}

EnterpriseRecord parse_record(const json& doc) {
  if (!doc.is_object()) throw ValidationError("line is not a JSON object");
  EnterpriseRecord rec;
  rec.id = require_string(doc, "id");
  rec.industry = require_string(doc, "industry");
  rec.region = require_string(doc, "region");
  rec.company_size = require_number(doc, "company_size");
  rec.registered_capital = require_number(doc, "registered_capital");
  rec.compliance_score = require_number(doc, "compliance_score");
  rec.revenue = require_channel(doc, "revenue");
  rec.profit = require_channel(doc, "profit");
  rec.tax_paid = require_channel(doc, "tax_paid");
  rec.invoice_count = require_channel(doc, "invoice_count");
  const auto fq = doc.find("final_quarter");
  if (fq == doc.end() || !fq->is_number_integer()) {
    throw ValidationError("missing field final_quarter (integer)");
  }
  rec.final_quarter = fq->get<long long>();
  const auto lbl = doc.find("label");
  if (lbl != doc.end() && !lbl->is_null()) {
    if (!lbl->is_string()) throw ValidationError("label must be a string or null");
    rec.label = risk_level_from_string(lbl->get<std::string>());
  }
  return rec;
}

json channel_to_json(const Channel& ch) {
  json arr = json::array();
  for (const auto& v : ch) {
    if (v) {
      arr.push_back(*v);
    } else {
      arr.push_back(nullptr);
    }
  }
  return arr;
}
}  // namespace

LoadResult load_dataset(const std::string& path, std::size_t seq_len) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path);
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      result.rejects.push_back({line_no, "parse error: malformed JSON"});
      continue;
    }
    EnterpriseRecord rec;
    try {
      rec = parse_record(doc);
    } catch (const ValidationError& e) {
      result.rejects.push_back({line_no, std::string("validation error: ") + e.what()});
      continue;
    }
    if (auto err = validate_record(rec, seq_len)) {
      result.rejects.push_back({line_no, "validation error: " + *err});
      continue;
    }
    result.records.push_back(std::move(rec));
    result.lines.push_back(line_no);
  }
  if (in.bad()) throw IoError("read failure on " + path);
  return result;
}

void save_dataset(const std::vector<EnterpriseRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const EnterpriseRecord& rec : records) {
    json doc;
    doc["id"] = rec.id;
    doc["industry"] = rec.industry;
    doc["region"] = rec.region;
    doc["company_size"] = rec.company_size;
    doc["registered_capital"] = rec.registered_capital;
    doc["compliance_score"] = rec.compliance_score;
    doc["revenue"] = channel_to_json(rec.revenue);
    doc["profit"] = channel_to_json(rec.profit);
    doc["tax_paid"] = channel_to_json(rec.tax_paid);
    doc["invoice_count"] = channel_to_json(rec.invoice_count);
    doc["final_quarter"] = rec.final_quarter;
    if (rec.label) {
      doc["label"] = to_string(*rec.label);
    } else {
      doc["label"] = nullptr;
    }
    out << doc.dump() << '\n';
  }
  if (!out) throw IoError("write failure on " + path);
}

void save_dataset_csv(const std::vector<EnterpriseRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "id,industry,region,company_size,registered_capital,compliance_score,"
         "final_quarter,label,quarter,revenue,profit,tax_paid,invoice_count\n";
  for (const EnterpriseRecord& rec : records) {
    std::size_t quarters = 0;
    for (std::size_t c = 0; c < kChannelNames.size(); ++c) {
      quarters = std::max(quarters, rec.channel(c).size());
    }
    for (std::size_t q = 0; q < quarters; ++q) {
      out << rec.id << ',' << rec.industry << ',' << rec.region << ','
          << rec.company_size << ',' << rec.registered_capital << ','
          << rec.compliance_score << ',' << rec.final_quarter << ','
          << (rec.label ? to_string(*rec.label) : "") << ',' << q;
      for (std::size_t c = 0; c < kChannelNames.size(); ++c) {
        out << ',';
        const Channel& ch = rec.channel(c);
        if (q < ch.size() && ch[q]) out << *ch[q];
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("write failure on " + path);
}

void save_rejects(const std::vector<Reject>& rejects, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const Reject& r : rejects) {
    json doc;
    doc["line"] = r.line;
    doc["reason"] = r.reason;
    out << doc.dump() << '\n';
  }
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace taxrisk
