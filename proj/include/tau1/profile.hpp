#ifndef TAU1_PROFILE_HPP
#define TAU1_PROFILE_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tau1/numeric.hpp"

namespace tau1 {

// Cell identifiers are opaque; cross-classified keys are built by joining
// the selected columns with a reserved separator.
using CellId = std::string;
constexpr char kKeySeparator = '\x1f';

struct CellCounts {
  std::unordered_map<CellId, std::int64_t> counts;

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& [id, c] : counts) t += c;
    return t;
  }
};

/// Frequency-of-frequencies summary: z[i] is the number of cells observed
/// exactly i times. Absent keys mean zero; stored sparsely since large
/// tables are mostly empty at realistic sample sizes.
struct FrequencyProfile {
  std::int64_t n = 0;  // number of records
  std::int64_t k = 0;  // number of occupied cells
  std::map<std::int64_t, std::int64_t> z;

  std::int64_t z_at(std::int64_t i) const {
    auto it = z.find(i);
    return it == z.end() ? 0 : it->second;
  }

  std::int64_t max_frequency() const { return z.empty() ? 0 : z.rbegin()->first; }

  // Accounting identities: sum(i * Z_i) == n and sum(Z_i) == k.
  void validate() const {
    std::int64_t mass = 0, cells = 0;
    for (const auto& [i, zi] : z) {
      if (i < 1) throw DomainError("FrequencyProfile: frequency keys must be >= 1");
      if (zi < 1) throw DomainError("FrequencyProfile: stored Z_i must be >= 1");
      mass += i * zi;
      cells += zi;
    }
    if (mass != n) throw DomainError("FrequencyProfile: sum(i*Z_i) != n");
    if (cells != k) throw DomainError("FrequencyProfile: sum(Z_i) != k");
    if (!z.empty() && z.rbegin()->first > n)
      throw DomainError("FrequencyProfile: max frequency exceeds n");
  }
};

inline FrequencyProfile profile_from_counts(const CellCounts& cells) {
  FrequencyProfile p;
  for (const auto& [id, c] : cells.counts) {
    if (c < 1) throw DomainError("CellCounts: zero-frequency cell stored: " + id);
    p.z[c] += 1;
    p.n += c;
    p.k += 1;
  }
  return p;
}

inline FrequencyProfile profile_from_records(std::span<const CellId> records) {
  CellCounts cells;
  cells.counts.reserve(records.size());
  for (const CellId& r : records) cells.counts[r] += 1;
  return profile_from_counts(cells);
}

/// Number of cells with frequency >= i; z_bar(p, 1) == k.
inline std::int64_t z_bar(const FrequencyProfile& p, std::int64_t i) {
  if (i < 1) throw DomainError("z_bar: requires i >= 1");
  std::int64_t t = 0;
  for (auto it = p.z.lower_bound(i); it != p.z.end(); ++it) t += it->second;
  return t;
}

struct PairedCounts {
  CellCounts sample;
  CellCounts population;
};

/// Ground truth: cells unique in the sample that are unique in the
/// population. Requires the sample to be nested in the population.
inline std::int64_t true_tau1(const PairedCounts& paired) {
  std::int64_t t = 0;
  for (const auto& [id, sc] : paired.sample.counts) {
    auto it = paired.population.counts.find(id);
    const std::int64_t pc = it == paired.population.counts.end() ? 0 : it->second;
    if (pc < sc)
      throw DomainError("PairedCounts: population frequency below sample frequency for cell '" + id + "'");
    if (sc == 1 && pc == 1) ++t;
  }
  return t;
}

// ---- serialization -------------------------------------------------------

inline nlohmann::json profile_to_json(const FrequencyProfile& p) {
  nlohmann::json jz = nlohmann::json::object();
  for (const auto& [i, zi] : p.z) jz[std::to_string(i)] = zi;
  return nlohmann::json{{"n", p.n}, {"k", p.k}, {"z", jz}};
}

inline FrequencyProfile profile_from_json(const nlohmann::json& j) {
  FrequencyProfile p;
  try {
    p.n = j.at("n").get<std::int64_t>();
    p.k = j.at("k").get<std::int64_t>();
    for (const auto& [key, val] : j.at("z").items())
      p.z[std::stoll(key)] = val.get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("profile JSON: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("profile JSON: non-numeric frequency key");
  }
  p.validate();
  return p;
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}
}  // namespace detail

/// Record reader. With empty key_cols every line is one identifier;
/// otherwise the line is split on `delim` and the selected 1-based columns
/// are joined with the reserved separator.
inline std::vector<CellId> read_records(std::istream& in, const std::vector<int>& key_cols,
                                        char delim = ',', bool skip_header = false) {
  std::vector<CellId> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    if (key_cols.empty()) {
      records.push_back(line);
      continue;
    }
    const auto fields = detail::split_csv_line(line, delim);
    CellId key;
    for (std::size_t c = 0; c < key_cols.size(); ++c) {
      const int col = key_cols[c];
      if (col < 1 || static_cast<std::size_t>(col) > fields.size())
        throw ParseError("record line has no column " + std::to_string(col) + ": " + line);
      if (c) key.push_back(kKeySeparator);
      key += fields[static_cast<std::size_t>(col) - 1];
    }
    records.push_back(std::move(key));
  }
  return records;
}

/// CSV with header `cell,count`.
inline CellCounts read_cell_count_csv(std::istream& in) {
  CellCounts cells;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("count CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "cell,count") throw ParseError("count CSV: expected header 'cell,count', got '" + line + "'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line, ',');
    if (fields.size() != 2)
      throw ParseError("count CSV line " + std::to_string(lineno) + ": expected 2 fields");
    std::int64_t c = 0;
    try {
      c = std::stoll(fields[1]);
    } catch (const std::exception&) {
      throw ParseError("count CSV line " + std::to_string(lineno) + ": bad count '" + fields[1] + "'");
    }
    if (c < 1)
      throw ParseError("count CSV line " + std::to_string(lineno) + ": counts must be >= 1");
    cells.counts[fields[0]] += c;
  }
  return cells;
}

}  // namespace tau1

#endif  // TAU1_PROFILE_HPP
