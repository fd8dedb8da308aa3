#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "obflip/error.hpp"
#include "obflip/model.hpp"

namespace obflip {

/// Column-major table of raw CSV cells.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;  // cells[column][row]

  std::size_t rows() const { return cells.empty() ? 0 : cells.front().size(); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == name) return j;
    }
    return std::nullopt;
  }

  std::size_t index(std::string_view name, ErrorCode missing = ErrorCode::UnknownColumn) const {
    if (auto j = find(name)) return *j;
    throw Error(missing, "column '" + std::string(name) + "' not found");
  }

  const std::vector<std::string>& column(std::string_view name) const { return cells[index(name)]; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// RFC-4180 records: quoted fields may contain the delimiter, doubled quotes
// and newlines.
inline std::vector<std::vector<std::string>> parse_csv_records(std::istream& in, char delimiter = ',') {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delimiter) {
      record.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field.push_back(c);
    }
  }
  if (any) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

inline Dataset parse_csv(std::istream& in, char delimiter = ',') {
  auto records = parse_csv_records(in, delimiter);
  // Skip blank trailing lines.
  while (!records.empty() && records.back().size() == 1 && records.back()[0].empty()) records.pop_back();
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "CSV input has no header row");
  Dataset ds;
  for (const auto& name : records.front()) ds.columns.emplace_back(detail::trim(name));
  ds.cells.assign(ds.columns.size(), {});
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != ds.columns.size()) {
      throw Error(ErrorCode::InvalidConfig, "CSV row " + std::to_string(r + 1) + " has " +
                                                std::to_string(rec.size()) + " fields, header has " +
                                                std::to_string(ds.columns.size()));
    }
    for (std::size_t j = 0; j < rec.size(); ++j) ds.cells[j].emplace_back(detail::trim(rec[j]));
  }
  return ds;
}

inline Dataset read_csv(const std::filesystem::path& path, char delimiter = ',') {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  return parse_csv(in, delimiter);
}

inline std::string csv_escape(std::string_view s, char delimiter = ',') {
  if (s.find_first_of(std::string{'"', '\n', '\r', delimiter}) == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string format_double(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

// Nullopt for NA tokens and non-finite values; throws on non-numeric text.
inline std::optional<double> parse_number(std::string_view token, const std::vector<std::string>& na_tokens,
                                          std::string_view where = {}) {
  if (std::find(na_tokens.begin(), na_tokens.end(), token) != na_tokens.end()) return std::nullopt;
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::NonFiniteValue, "non-numeric value '" + std::string(token) + "'" +
                                               (where.empty() ? "" : " in " + std::string(where)));
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

/// Which columns play which role and how group values map to H and K.
struct RoleSpec {
  std::string outcome;
  std::string group;
  std::vector<std::string> covariates;
  std::string h_value;
  std::string k_value;
  std::vector<std::string> na_tokens{"", "NA"};
};

struct IngestionSpec {
  std::filesystem::path path;
  char delimiter = ',';
  RoleSpec roles;
};

struct DeletionLog {
  std::size_t rows_read = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_unmapped = 0;
  std::size_t rows_h = 0;
  std::size_t rows_k = 0;
  std::map<std::string, std::size_t> missing_by_column;
};

struct IngestResult {
  GroupSample h;
  GroupSample k;
  DeletionLog log;
};

inline void validate_roles(const RoleSpec& roles) {
  std::set<std::string> seen{roles.outcome, roles.group};
  if (roles.outcome == roles.group) throw Error(ErrorCode::InvalidConfig, "outcome and group columns must differ");
  for (const auto& c : roles.covariates) {
    if (!seen.insert(c).second) throw Error(ErrorCode::InvalidConfig, "column '" + c + "' has two roles");
  }
  if (roles.h_value == roles.k_value) {
    throw Error(ErrorCode::FewerThanTwoGroups, "H and K map to the same group value '" + roles.h_value + "'");
  }
}

/*!
 * Split rows into H and K samples with listwise deletion.
 *
 * Rows with an NA in any role column are dropped first, then rows whose
 * group value is neither H nor K. `subset` restricts the candidate rows
 * (all rows when empty).
 */
inline IngestResult build_samples(const Dataset& ds, const RoleSpec& roles,
                                  const std::vector<std::size_t>* subset = nullptr,
                                  ErrorCode missing_code = ErrorCode::MissingColumn) {
  validate_roles(roles);
  const std::size_t yc = ds.index(roles.outcome, missing_code);
  const std::size_t gc = ds.index(roles.group, missing_code);
  std::vector<std::size_t> xc;
  for (const auto& c : roles.covariates) xc.push_back(ds.index(c, missing_code));

  std::vector<std::size_t> all;
  if (!subset) {
    all.resize(ds.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    subset = &all;
  }

  IngestResult out;
  out.log.rows_read = subset->size();
  std::vector<std::size_t> rows_h, rows_k;
  std::vector<double> xs(xc.size());
  std::vector<std::vector<double>> vals_h, vals_k;  // row-major, outcome last
  for (std::size_t r : *subset) {
    bool missing = false;
    const auto& g = ds.cells[gc][r];
    if (std::find(roles.na_tokens.begin(), roles.na_tokens.end(), g) != roles.na_tokens.end()) {
      ++out.log.missing_by_column[roles.group];
      missing = true;
    }
    std::vector<double> row(xc.size() + 1);
    for (std::size_t j = 0; j <= xc.size(); ++j) {
      const std::size_t col = j < xc.size() ? xc[j] : yc;
      const auto v = parse_number(ds.cells[col][r], roles.na_tokens,
                                  "column '" + ds.columns[col] + "', row " + std::to_string(r + 2));
      if (!v) {
        ++out.log.missing_by_column[ds.columns[col]];
        missing = true;
      } else {
        row[j] = *v;
      }
    }
    if (missing) {
      ++out.log.dropped_missing;
      continue;
    }
    if (g == roles.h_value) {
      vals_h.push_back(std::move(row));
    } else if (g == roles.k_value) {
      vals_k.push_back(std::move(row));
    } else {
      ++out.log.dropped_unmapped;
    }
  }
  if (vals_h.empty() && vals_k.empty()) {
    throw Error(ErrorCode::AllRowsDropped, "no rows remain after listwise deletion and group mapping");
  }
  if (vals_h.empty() || vals_k.empty()) {
    throw Error(ErrorCode::FewerThanTwoGroups, "group '" + (vals_h.empty() ? roles.h_value : roles.k_value) +
                                                   "' has no rows after deletion");
  }
  auto to_sample = [&](const std::vector<std::vector<double>>& vals, Group label) {
    const auto n = static_cast<std::ptrdiff_t>(vals.size());
    const auto d = static_cast<std::ptrdiff_t>(xc.size());
    GroupSample s{Matrix(n, d), Vector(n), label};
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      for (std::ptrdiff_t j = 0; j < d; ++j) s.covariates(i, j) = vals[i][j];
      s.outcome(i) = vals[i][d];
    }
    return s;
  };
  out.h = to_sample(vals_h, Group::H);
  out.k = to_sample(vals_k, Group::K);
  out.log.rows_h = vals_h.size();
  out.log.rows_k = vals_k.size();
  return out;
}

inline IngestResult ingest(const IngestionSpec& spec) {
  return build_samples(read_csv(spec.path, spec.delimiter), spec.roles);
}

inline void write_samples_csv(std::ostream& out, const GroupSample& h, const GroupSample& k,
                              const std::vector<std::string>& covariate_names, const std::string& outcome_name,
                              const std::string& group_name, const std::string& h_value, const std::string& k_value) {
  out << csv_escape(group_name);
  for (const auto& c : covariate_names) out << ',' << csv_escape(c);
  out << ',' << csv_escape(outcome_name) << '\n';
  for (const auto* s : {&h, &k}) {
    const auto& label = s->label == Group::H ? h_value : k_value;
    for (std::ptrdiff_t i = 0; i < s->rows(); ++i) {
      out << csv_escape(label);
      for (std::ptrdiff_t j = 0; j < s->dim(); ++j) out << ',' << format_double(s->covariates(i, j));
      out << ',' << format_double(s->outcome(i)) << '\n';
    }
  }
}

}  // namespace obflip
