#include "taxrisk/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "taxrisk/errors.hpp"
#include "taxrisk/rng.hpp"

namespace taxrisk {

void SplitRatios::validate() const {
  if (train < 0.0 || validation < 0.0 || test < 0.0) {
    throw ConfigError("split ratios must be nonnegative");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
}

namespace {
using StratumKey = std::pair<int, long long>;  // (label code, final quarter)

std::string key_str(const StratumKey& k) {
  const std::string label = k.first < 0 ? "unlabeled" : to_string(static_cast<RiskLevel>(k.first));
  return "(label=" + label + ", final_quarter=" + std::to_string(k.second) + ")";
}

// Largest-remainder targets for n into three parts; ties go to the earlier
// split (train, validation, test).
std::array<std::size_t, 3> largest_remainder(std::size_t n, const double ratios[3]) {
  std::array<std::size_t, 3> base{};
  double fracs[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * ratios[i];
    base[i] = static_cast<std::size_t>(std::floor(exact));
    fracs[i] = exact - std::floor(exact);
    assigned += base[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fracs[a] > fracs[b]; });
  for (std::size_t k = 0; k < n - assigned; ++k) base[order[k]] += 1;
  return base;
}

// Apportions every stratum at once. Independent per-stratum rounding keeps
// each stratum within one record of its exact share but lets the global
// totals drift by several records once many strata round the same way.
// Here each stratum starts at its floors, leftover units are placed by
// largest remainder subject to the global largest-remainder totals, and a
// residual-path pass reroutes the rare units the greedy order strands. The
// result meets the exact global totals with every stratum still on its
// floor or ceiling.
std::vector<std::array<std::size_t, 3>> apportion_strata(
    const std::vector<std::size_t>& sizes, const SplitRatios& r) {
  const double ratios[3] = {r.train, r.validation, r.test};
  const std::size_t n_strata = sizes.size();
  std::size_t total = 0;
  for (std::size_t n : sizes) total += n;

  std::array<std::size_t, 3> need = largest_remainder(total, ratios);
  std::vector<std::array<std::size_t, 3>> counts(n_strata);
  std::vector<std::array<double, 3>> fracs(n_strata);
  std::vector<std::size_t> extras(n_strata, 0);
  for (std::size_t s = 0; s < n_strata; ++s) {
    std::size_t placed = 0;
    for (int p = 0; p < 3; ++p) {
      const double exact = static_cast<double>(sizes[s]) * ratios[p];
      counts[s][p] = static_cast<std::size_t>(std::floor(exact));
      fracs[s][p] = exact - std::floor(exact);
      placed += counts[s][p];
      need[p] -= counts[s][p];  // target >= sum of floors, so no underflow
    }
    extras[s] = sizes[s] - placed;
  }

  struct Cell {
    std::size_t s;
    int p;
    double f;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < n_strata; ++s) {
    for (int p = 0; p < 3; ++p) {
      if (fracs[s][p] > 0.0) cells.push_back({s, p, fracs[s][p]});
    }
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return a.f > b.f; });
  std::vector<std::array<bool, 3>> took(n_strata, {false, false, false});
  for (const Cell& c : cells) {
    if (extras[c.s] > 0 && need[c.p] > 0 && !took[c.s][c.p]) {
      counts[c.s][c.p] += 1;
      took[c.s][c.p] = true;
      extras[c.s] -= 1;
      need[c.p] -= 1;
    }
  }

  // Greedy can strand a unit when its stratum's eligible parts are already
  // full. Walk a residual path: give the unit to a full part, displacing a
  // unit another stratum placed there, until a part with open demand takes
  // the chain's end. Such a path always exists because the fractional
  // shares themselves satisfy both the stratum and the part totals.
  for (std::size_t s0 = 0; s0 < n_strata; ++s0) {
    while (extras[s0] > 0) {
      std::array<int, 3> via_stratum;  // predecessor stratum per part, -1 = from s0
      std::array<int, 3> prev_part;
      std::array<bool, 3> seen{false, false, false};
      std::vector<int> frontier;
      for (int p = 0; p < 3; ++p) {
        via_stratum[p] = -2;
        prev_part[p] = -1;
        if (fracs[s0][p] > 0.0 && !took[s0][p]) {
          via_stratum[p] = -1;
          seen[p] = true;
          frontier.push_back(p);
        }
      }
      int goal = -1;
      for (std::size_t fi = 0; fi < frontier.size() && goal < 0; ++fi) {
        const int q = frontier[fi];
        if (need[q] > 0) {
          goal = q;
          break;
        }
        for (std::size_t t = 0; t < n_strata && goal < 0; ++t) {
          if (!took[t][q]) continue;
          for (int r2 = 0; r2 < 3; ++r2) {
            if (seen[r2] || fracs[t][r2] <= 0.0 || took[t][r2]) continue;
            seen[r2] = true;
            via_stratum[r2] = static_cast<int>(t);
            prev_part[r2] = q;
            frontier.push_back(r2);
            if (need[r2] > 0) {
              goal = r2;
              break;
            }
          }
        }
      }
      if (goal < 0) {
        throw StateError("stratified apportionment could not balance the split totals");
      }
      need[goal] -= 1;
      int p = goal;
      while (via_stratum[p] >= 0) {
        const auto t = static_cast<std::size_t>(via_stratum[p]);
        counts[t][p] += 1;
        took[t][p] = true;
        const int q = prev_part[p];
        counts[t][q] -= 1;
        took[t][q] = false;
        p = q;
      }
      counts[s0][p] += 1;
      took[s0][p] = true;
      extras[s0] -= 1;
    }
  }
  return counts;
}
}  // namespace

DatasetSplit split_dataset(const std::vector<EnterpriseRecord>& records,
                           const SplitRatios& ratios, std::uint64_t seed,
                           std::vector<std::string>* warnings) {
  ratios.validate();

  std::map<StratumKey, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int label = records[i].label ? static_cast<int>(*records[i].label) : -1;
    strata[{label, records[i].final_quarter}].push_back(i);
  }

  // Fold undersized strata into their nearest neighbor until stable.
  bool merged = true;
  while (merged && strata.size() > 1) {
    merged = false;
    for (auto it = strata.begin(); it != strata.end(); ++it) {
      if (it->second.size() >= 3) continue;
      auto best = strata.end();
      long long best_cost = 0;
      for (auto jt = strata.begin(); jt != strata.end(); ++jt) {
        if (jt == it) continue;
        const bool same_label = jt->first.first == it->first.first;
        const long long dist = std::llabs(jt->first.second - it->first.second);
        // Same-label strata always beat cross-label ones; then closest
        // quarter; then map order as the final tie-break.
        const long long cost = (same_label ? 0 : 1'000'000'000LL) + dist;
        if (best == strata.end() || cost < best_cost) {
          best = jt;
          best_cost = cost;
        }
      }
      if (warnings) {
        warnings->push_back("stratum " + key_str(it->first) + " has " +
                            std::to_string(it->second.size()) +
                            " records; merged into " + key_str(best->first));
      }
      best->second.insert(best->second.end(), it->second.begin(), it->second.end());
      strata.erase(it);
      merged = true;
      break;
    }
  }

  std::vector<std::size_t> sizes;
  sizes.reserve(strata.size());
  for (const auto& [key, indices] : strata) sizes.push_back(indices.size());
  const auto counts = apportion_strata(sizes, ratios);

  DatasetSplit split;
  std::size_t stratum_index = 0;
  for (auto& [key, indices] : strata) {
    std::sort(indices.begin(), indices.end());
    Rng rng(seed, stratum_index);
    rng.shuffle(indices);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < counts[stratum_index][0]; ++k) {
      split.train.push_back(records[indices[pos++]]);
    }
    for (std::size_t k = 0; k < counts[stratum_index][1]; ++k) {
      split.validation.push_back(records[indices[pos++]]);
    }
    for (std::size_t k = 0; k < counts[stratum_index][2]; ++k) {
      split.test.push_back(records[indices[pos++]]);
    }
    ++stratum_index;
  }
  return split;
}

}  // namespace taxrisk
