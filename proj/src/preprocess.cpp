#include "taxrisk/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "taxrisk/errors.hpp"

namespace taxrisk {

std::vector<std::string> PreprocessStats::static_columns() const {
  std::vector<std::string> cols = {"company_size_z", "registered_capital_z",
                                   "compliance_score_z"};
  for (const std::string& v : industry_vocab) cols.push_back("industry=" + v);
  for (const std::string& v : region_vocab) cols.push_back("region=" + v);
  return cols;
}

std::vector<double> interpolate_missing(const Channel& channel) {
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < channel.size(); ++i) {
    if (channel[i]) present.push_back(i);
  }
  if (present.size() < 2) {
    throw ValidationError("channel has " + std::to_string(present.size()) +
                          " present values, need at least 2 to interpolate");
  }
  std::vector<double> out(channel.size(), 0.0);
  // Constant extension outside the first/last present value.
  for (std::size_t i = 0; i <= present.front(); ++i) out[i] = *channel[present.front()];
  for (std::size_t i = present.back(); i < channel.size(); ++i) out[i] = *channel[present.back()];
  for (std::size_t k = 0; k + 1 < present.size(); ++k) {
    const std::size_t a = present[k], b = present[k + 1];
    const double va = *channel[a], vb = *channel[b];
    out[a] = va;
    out[b] = vb;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      out[i] = va + t * (vb - va);
    }
  }
  return out;
}

namespace {
struct Moments {
  double mean = 0.0;
  double std_dev = 1.0;
  bool constant = false;
};

Moments population_moments(const std::vector<double>& values) {
  Moments m;
  const double n = static_cast<double>(values.size());
  for (double v : values) m.mean += v;
  m.mean /= n;
  double var = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    var += d * d;
  }
  var /= n;
  if (var > 0.0) {
    m.std_dev = std::sqrt(var);
  } else {
    m.std_dev = 1.0;
    m.constant = true;
  }
  return m;
}

std::vector<std::string> build_vocab(const std::vector<EnterpriseRecord>& train,
                                     const std::string EnterpriseRecord::* field) {
  std::set<std::string> seen;
  for (const EnterpriseRecord& r : train) seen.insert(r.*field);
  std::vector<std::string> vocab(seen.begin(), seen.end());
  vocab.push_back(kUnknownCategory);
  return vocab;
}

std::size_t vocab_slot(const std::vector<std::string>& vocab, const std::string& value) {
  const auto it = std::lower_bound(vocab.begin(), vocab.end() - 1, value);
  if (it != vocab.end() - 1 && *it == value) {
    return static_cast<std::size_t>(it - vocab.begin());
  }
  return vocab.size() - 1;  // __unknown__
}
}  // namespace

PreprocessStats fit_preprocessor(const std::vector<EnterpriseRecord>& train,
                                 std::size_t seq_len,
                                 std::vector<std::string>* warnings) {
  if (train.empty()) throw ValidationError("cannot fit preprocessing on an empty training split");
  PreprocessStats stats;
  stats.seq_len = seq_len;

  const char* static_names[3] = {"company_size", "registered_capital", "compliance_score"};
  for (std::size_t f = 0; f < 3; ++f) {
    std::vector<double> values;
    values.reserve(train.size());
    for (const EnterpriseRecord& r : train) {
      const double v = f == 0 ? r.company_size : f == 1 ? r.registered_capital
                                                        : r.compliance_score;
      values.push_back(v);
    }
    const Moments m = population_moments(values);
    stats.static_mean[f] = m.mean;
    stats.static_std[f] = m.std_dev;
    if (m.constant && warnings) {
      warnings->push_back(std::string("static feature ") + static_names[f] +
                          " is constant in the training split; using std 1");
    }
  }

  stats.industry_vocab = build_vocab(train, &EnterpriseRecord::industry);
  stats.region_vocab = build_vocab(train, &EnterpriseRecord::region);

  for (std::size_t c = 0; c < kChannelNames.size(); ++c) {
    std::vector<double> values;
    for (const EnterpriseRecord& r : train) {
      for (double v : interpolate_missing(r.channel(c))) values.push_back(v);
    }
    const Moments m = population_moments(values);
    stats.channel_mean[c] = m.mean;
    stats.channel_std[c] = m.std_dev;
    if (m.constant && warnings) {
      warnings->push_back(std::string("series channel ") + kChannelNames[c] +
                          " is constant in the training split; using std 1");
    }
  }
  return stats;
}

Prepared apply_preprocessor(const PreprocessStats& stats,
                            const std::vector<EnterpriseRecord>& records) {
  if (stats.seq_len == 0) throw StateError("preprocessing statistics are not fitted");
  Prepared out;
  std::vector<std::size_t> kept;
  kept.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto err = validate_record(records[i], stats.seq_len)) {
      out.rejects.push_back({i + 1, "validation error: " + *err});
    } else {
      kept.push_back(i);
    }
  }

  const std::size_t n = kept.size();
  const std::size_t width = stats.static_width();
  out.x_static = Tensor::matrix(n, width);
  out.x_series = Tensor({n, stats.seq_len, kChannelNames.size()});
  out.mask = Tensor::matrix(n, stats.seq_len);
  out.labels.assign(n, -1);
  out.ids.reserve(n);

  for (std::size_t row = 0; row < n; ++row) {
    const EnterpriseRecord& rec = records[kept[row]];
    out.ids.push_back(rec.id);
    if (rec.label) out.labels[row] = static_cast<int>(*rec.label);

    const double raw[3] = {rec.company_size, rec.registered_capital, rec.compliance_score};
    for (std::size_t f = 0; f < 3; ++f) {
      out.x_static(row, f) = (raw[f] - stats.static_mean[f]) / stats.static_std[f];
    }
    out.x_static(row, 3 + vocab_slot(stats.industry_vocab, rec.industry)) = 1.0;
    out.x_static(row, 3 + stats.industry_vocab.size() +
                          vocab_slot(stats.region_vocab, rec.region)) = 1.0;

    // Real history occupies the trailing positions; the head stays zero
    // with mask 0.
    const std::size_t len = rec.revenue.size();
    const std::size_t pad = stats.seq_len - len;
    for (std::size_t c = 0; c < kChannelNames.size(); ++c) {
      const std::vector<double> filled = interpolate_missing(rec.channel(c));
      for (std::size_t t = 0; t < len; ++t) {
        const double z = (filled[t] - stats.channel_mean[c]) / stats.channel_std[c];
        out.x_series[(row * stats.seq_len + pad + t) * kChannelNames.size() + c] = z;
      }
    }
    for (std::size_t t = 0; t < len; ++t) out.mask(row, pad + t) = 1.0;
  }
  return out;
}

}  // namespace taxrisk
