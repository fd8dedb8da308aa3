#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "obflip/dataset.hpp"
#include "obflip/decomposition.hpp"
#include "obflip/inference.hpp"
#include "obflip/model.hpp"
#include "obflip/rng.hpp"
#include "obflip/signflip.hpp"

namespace obflip {

struct Grouping {
  std::string column;
  std::string h_value;
  std::string k_value;

  std::string describe() const { return column + "(" + h_value + "-" + k_value + ")"; }
};

enum class PredicateKind { Whole, CategoricalEquals, QuantileBin, Threshold, RandomSubsample };
enum class ThresholdOp { Less, LessEqual, Greater, GreaterEqual };

constexpr std::string_view to_string(PredicateKind k) {
  switch (k) {
    case PredicateKind::Whole: return "whole";
    case PredicateKind::CategoricalEquals: return "categorical";
    case PredicateKind::QuantileBin: return "quantile";
    case PredicateKind::Threshold: return "threshold";
    case PredicateKind::RandomSubsample: return "random";
  }
  return "?";
}

constexpr std::string_view to_string(ThresholdOp op) {
  switch (op) {
    case ThresholdOp::Less: return "<";
    case ThresholdOp::LessEqual: return "<=";
    case ThresholdOp::Greater: return ">";
    case ThresholdOp::GreaterEqual: return ">=";
  }
  return "?";
}

inline ThresholdOp parse_threshold_op(std::string_view s) {
  if (s == "<") return ThresholdOp::Less;
  if (s == "<=") return ThresholdOp::LessEqual;
  if (s == ">") return ThresholdOp::Greater;
  if (s == ">=") return ThresholdOp::GreaterEqual;
  throw Error(ErrorCode::InvalidConfig, "unknown threshold operator '" + std::string(s) + "'");
}

/// One analysis: a row predicate plus the outcome/grouping/covariates it is run with.
struct SubgroupSpec {
  std::string name;
  PredicateKind kind = PredicateKind::Whole;
  std::string column;
  std::string value;        // categorical level
  int bin = 0;              // quantile bin, 0-based
  int bins = 0;
  ThresholdOp op = ThresholdOp::Greater;
  double cutoff = 0.0;
  double fraction = 1.0;    // random subsample
  int draw = 0;
  std::uint64_t stream = 0;  // random subsample key component

  std::string outcome;
  Grouping grouping;
  std::vector<std::string> covariates;

  RoleSpec roles(const std::vector<std::string>& na_tokens) const {
    return {outcome, grouping.column, covariates, grouping.h_value, grouping.k_value, na_tokens};
  }
};

/// Expands into one or more subset predicates.
struct SubgroupGenerator {
  PredicateKind kind = PredicateKind::Whole;
  std::string column;
  std::vector<std::string> levels;  // categorical; empty = every observed level
  int bins = 4;
  ThresholdOp op = ThresholdOp::Greater;
  double cutoff = 0.0;
  double fraction = 0.5;
  int count = 50;
  std::string label;  // display prefix; defaults per kind
};

enum class CensusMode { IcuStyle, CrossDesign };
enum class BootstrapScope { None, FlipsOnly, All };

struct CensusFilters {
  int min_group_size = 50;
  // Unset: enabled for cross-design, disabled for icu-style.
  std::optional<bool> magnitude_filter;
  double min_magnitude = 0.01;
  bool magnitude_either_reference = false;

  bool magnitude_enabled(CensusMode mode) const {
    return magnitude_filter.value_or(mode == CensusMode::CrossDesign);
  }
};

struct CensusConfig {
  CensusMode mode = CensusMode::IcuStyle;
  // Single analysis cell (icu-style, and the default cell for cross-design).
  std::string outcome;
  Grouping grouping;
  std::vector<std::string> covariates;
  // Cross-design factors; an empty list falls back to the single cell above.
  std::vector<std::string> outcomes;
  std::vector<Grouping> groupings;
  std::vector<std::vector<std::string>> covariate_sets;

  std::vector<SubgroupGenerator> generators;
  CensusFilters filters;
  BootstrapScope bootstrap_scope = BootstrapScope::FlipsOnly;
  int bootstrap_B = 1000;
  std::uint64_t seed = 0;
  std::vector<std::string> na_tokens{"", "NA"};
  BootstrapOptions bootstrap_options;
};

enum class FilterStatus { Kept, NoData, GroupTooSmall, FitFailed, BelowMagnitude };

constexpr std::string_view to_string(FilterStatus s) {
  switch (s) {
    case FilterStatus::Kept: return "kept";
    case FilterStatus::NoData: return "no_data";
    case FilterStatus::GroupTooSmall: return "group_too_small";
    case FilterStatus::FitFailed: return "fit_failed";
    case FilterStatus::BelowMagnitude: return "below_magnitude";
  }
  return "?";
}

struct CensusRow {
  SubgroupSpec spec;
  std::size_t n_h = 0;
  std::size_t n_k = 0;
  FilterStatus status = FilterStatus::NoData;
  std::string reason;
  std::optional<DualDecomposition> decomposition;
  std::optional<FlipReport> flips;
  std::optional<BootstrapSummary> bootstrap;
  std::string bootstrap_error;

  bool kept() const { return status == FilterStatus::Kept; }
  bool explained_flip() const { return kept() && flips && flips->explained_flip(); }
  bool unexplained_flip() const { return kept() && flips && flips->unexplained_flip(); }
  bool any_flip() const { return explained_flip() || unexplained_flip(); }
  bool alignment() const { return kept() && flips && flips->alignment; }
};

struct CensusAggregates {
  std::size_t specs = 0;
  std::size_t examined = 0;  // kept rows
  std::size_t explained_flips = 0;
  std::size_t unexplained_flips = 0;
  std::size_t any_flip = 0;
  std::size_t alignment = 0;

  bool operator==(const CensusAggregates&) const = default;
};

struct CensusReport {
  CensusMode mode = CensusMode::IcuStyle;
  std::uint64_t seed = 0;
  std::vector<CensusRow> rows;
  CensusAggregates aggregates;
};

inline CensusAggregates recount(const std::vector<CensusRow>& rows) {
  CensusAggregates a;
  a.specs = rows.size();
  for (const auto& r : rows) {
    a.examined += r.kept() ? 1 : 0;
    a.explained_flips += r.explained_flip() ? 1 : 0;
    a.unexplained_flips += r.unexplained_flip() ? 1 : 0;
    a.any_flip += r.any_flip() ? 1 : 0;
    a.alignment += r.alignment() ? 1 : 0;
  }
  return a;
}

namespace detail {

inline std::string percent_label(double fraction) {
  const double pct = fraction * 100.0;
  if (std::abs(pct - std::round(pct)) < 1e-9) return std::to_string(static_cast<long long>(std::round(pct))) + "%";
  return format_double(pct) + "%";
}

inline std::vector<std::string> observed_levels(const Dataset& ds, std::size_t col,
                                                const std::vector<std::string>& na_tokens) {
  std::set<std::string> levels;
  for (const auto& v : ds.cells[col]) {
    if (std::find(na_tokens.begin(), na_tokens.end(), v) == na_tokens.end()) levels.insert(v);
  }
  return {levels.begin(), levels.end()};
}

inline SubgroupSpec make_spec(std::string name, PredicateKind kind, std::string column = {}) {
  SubgroupSpec s;
  s.name = std::move(name);
  s.kind = kind;
  s.column = std::move(column);
  return s;
}

inline std::vector<SubgroupSpec> expand_generators(const Dataset& ds, const CensusConfig& cfg) {
  std::vector<SubgroupSpec> out;
  if (cfg.generators.empty()) {
    out.push_back(make_spec("all", PredicateKind::Whole));
    return out;
  }
  for (std::size_t g = 0; g < cfg.generators.size(); ++g) {
    const auto& gen = cfg.generators[g];
    if (gen.kind != PredicateKind::Whole && gen.kind != PredicateKind::RandomSubsample) {
      ds.index(gen.column);
    }
    const std::string prefix = gen.label.empty() ? gen.column : gen.label;
    switch (gen.kind) {
      case PredicateKind::Whole:
        out.push_back(make_spec(gen.label.empty() ? "all" : gen.label, PredicateKind::Whole));
        break;
      case PredicateKind::CategoricalEquals: {
        const auto levels = gen.levels.empty() ? observed_levels(ds, ds.index(gen.column), cfg.na_tokens) : gen.levels;
        for (const auto& level : levels) {
          auto s = make_spec(prefix + " = " + level, PredicateKind::CategoricalEquals, gen.column);
          s.value = level;
          out.push_back(std::move(s));
        }
        break;
      }
      case PredicateKind::QuantileBin:
        if (gen.bins < 1) throw Error(ErrorCode::InvalidConfig, "quantile generator needs bins >= 1");
        for (int b = 0; b < gen.bins; ++b) {
          auto s = make_spec(prefix + " quantile " + std::to_string(b) + " of " + std::to_string(gen.bins),
                             PredicateKind::QuantileBin, gen.column);
          s.bin = b;
          s.bins = gen.bins;
          out.push_back(std::move(s));
        }
        break;
      case PredicateKind::Threshold: {
        auto s = make_spec(prefix + " " + std::string(to_string(gen.op)) + " " + format_double(gen.cutoff),
                           PredicateKind::Threshold, gen.column);
        s.op = gen.op;
        s.cutoff = gen.cutoff;
        out.push_back(std::move(s));
        break;
      }
      case PredicateKind::RandomSubsample:
        if (!(gen.fraction > 0.0 && gen.fraction <= 1.0) || gen.count < 0) {
          throw Error(ErrorCode::InvalidConfig, "random generator needs 0 < fraction <= 1 and count >= 0");
        }
        for (int i = 0; i < gen.count; ++i) {
          auto s = make_spec((gen.label.empty() ? "random " + percent_label(gen.fraction) : gen.label) + " #" +
                                 std::to_string(i),
                             PredicateKind::RandomSubsample);
          s.fraction = gen.fraction;
          s.draw = i;
          s.stream = static_cast<std::uint64_t>(g);
          out.push_back(std::move(s));
        }
        break;
    }
  }
  return out;
}

}  // namespace detail

/*!
 * Deterministic expansion of the configured generators into analyses.
 *
 * icu-style attaches the single configured analysis cell to every subset;
 * cross-design takes the product subset x outcome x grouping x covariate set
 * (in that nesting order).
 */
inline std::vector<SubgroupSpec> enumerate_subgroups(const Dataset& ds, const CensusConfig& cfg) {
  if (ds.rows() == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
  const auto subsets = detail::expand_generators(ds, cfg);

  std::vector<std::string> outcomes = cfg.outcomes;
  std::vector<Grouping> groupings = cfg.groupings;
  std::vector<std::vector<std::string>> covsets = cfg.covariate_sets;
  if (cfg.mode == CensusMode::IcuStyle || outcomes.empty()) outcomes = {cfg.outcome};
  if (cfg.mode == CensusMode::IcuStyle || groupings.empty()) groupings = {cfg.grouping};
  if (cfg.mode == CensusMode::IcuStyle || covsets.empty()) covsets = {cfg.covariates};

  for (const auto& y : outcomes) ds.index(y);
  for (const auto& g : groupings) ds.index(g.column);
  for (const auto& xs : covsets) {
    for (const auto& x : xs) ds.index(x);
  }

  const bool cross = cfg.mode == CensusMode::CrossDesign;
  std::vector<SubgroupSpec> out;
  out.reserve(subsets.size() * outcomes.size() * groupings.size() * covsets.size());
  for (const auto& s : subsets) {
    for (const auto& y : outcomes) {
      for (const auto& g : groupings) {
        for (const auto& xs : covsets) {
          SubgroupSpec spec = s;
          spec.outcome = y;
          spec.grouping = g;
          spec.covariates = xs;
          if (cross) {
            std::string xl;
            for (const auto& x : xs) xl += (xl.empty() ? "" : "+") + x;
            spec.name += " | " + y + " | " + g.describe() + " | " + xl;
          }
          out.push_back(std::move(spec));
        }
      }
    }
  }
  return out;
}

/// Rows with no NA in any of the analysis's role columns.
inline std::vector<std::size_t> complete_rows(const Dataset& ds, const SubgroupSpec& spec,
                                              const std::vector<std::string>& na_tokens) {
  std::vector<std::size_t> cols{ds.index(spec.outcome), ds.index(spec.grouping.column)};
  for (const auto& x : spec.covariates) cols.push_back(ds.index(x));
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    bool ok = true;
    for (std::size_t c : cols) {
      if (std::find(na_tokens.begin(), na_tokens.end(), ds.cells[c][r]) != na_tokens.end()) {
        ok = false;
        break;
      }
    }
    if (ok) rows.push_back(r);
  }
  return rows;
}

/*!
 * Rank-based quantile bins over `rows` (rows with NA in the column get -1).
 *
 * The row of rank r among m valued rows lands in bin floor(r * k / m); a
 * run of tied values all take the bin of the run's first member.
 */
inline std::vector<int> quantile_bins(const Dataset& ds, std::size_t col, const std::vector<std::size_t>& rows, int k,
                                      const std::vector<std::string>& na_tokens) {
  std::vector<std::pair<double, std::size_t>> valued;  // (value, position in rows)
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (auto v = parse_number(ds.cells[col][rows[i]], na_tokens, "column '" + ds.columns[col] + "'")) {
      valued.emplace_back(*v, i);
    }
  }
  std::stable_sort(valued.begin(), valued.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<int> bins(rows.size(), -1);
  const std::size_t m = valued.size();
  int run_bin = 0;
  for (std::size_t r = 0; r < m; ++r) {
    if (r == 0 || valued[r].first != valued[r - 1].first) {
      run_bin = static_cast<int>((r * static_cast<std::size_t>(k)) / m);
    }
    bins[valued[r].second] = run_bin;
  }
  return bins;
}

/// Rows of `candidates` selected by the spec's predicate, in ascending order.
inline std::vector<std::size_t> apply_predicate(const Dataset& ds, const SubgroupSpec& spec,
                                                const std::vector<std::size_t>& candidates, std::uint64_t seed,
                                                const std::vector<std::string>& na_tokens) {
  std::vector<std::size_t> out;
  switch (spec.kind) {
    case PredicateKind::Whole:
      return candidates;
    case PredicateKind::CategoricalEquals: {
      const auto& col = ds.column(spec.column);
      for (std::size_t r : candidates) {
        if (col[r] == spec.value) out.push_back(r);
      }
      return out;
    }
    case PredicateKind::QuantileBin: {
      const auto bins = quantile_bins(ds, ds.index(spec.column), candidates, spec.bins, na_tokens);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (bins[i] == spec.bin) out.push_back(candidates[i]);
      }
      return out;
    }
    case PredicateKind::Threshold: {
      const std::size_t c = ds.index(spec.column);
      for (std::size_t r : candidates) {
        const auto v = parse_number(ds.cells[c][r], na_tokens, "column '" + spec.column + "'");
        if (!v) continue;
        bool keep = false;
        switch (spec.op) {
          case ThresholdOp::Less: keep = *v < spec.cutoff; break;
          case ThresholdOp::LessEqual: keep = *v <= spec.cutoff; break;
          case ThresholdOp::Greater: keep = *v > spec.cutoff; break;
          case ThresholdOp::GreaterEqual: keep = *v >= spec.cutoff; break;
        }
        if (keep) out.push_back(r);
      }
      return out;
    }
    case PredicateKind::RandomSubsample: {
      // Partial Fisher-Yates over the candidate positions.
      std::vector<std::size_t> pool = candidates;
      const auto take = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(pool.size())));
      auto rng = KeyedStream::from(seed, 0x5ab5ULL, spec.stream, static_cast<std::uint64_t>(spec.draw));
      for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      pool.resize(take);
      std::sort(pool.begin(), pool.end());
      return pool;
    }
  }
  return out;
}

namespace detail {

inline bool passes_magnitude(const DualDecomposition& dd, const CensusFilters& f) {
  const double m = f.min_magnitude;
  if (!(std::abs(dd.by_h.total_gap) > m)) return false;
  const bool h_ok = std::abs(dd.by_h.explained) > m && std::abs(dd.by_h.unexplained) > m;
  const bool k_ok = std::abs(dd.by_k.explained) > m && std::abs(dd.by_k.unexplained) > m;
  return f.magnitude_either_reference ? (h_ok || k_ok) : (h_ok && k_ok);
}

}  // namespace detail

/// Re-derive a row's filter status from its recorded sizes and decomposition.
inline bool audit_row(const CensusRow& row, const CensusConfig& cfg) {
  const auto min_n = static_cast<std::size_t>(std::max(0, cfg.filters.min_group_size));
  const bool big_enough = row.n_h >= min_n && row.n_k >= min_n;
  switch (row.status) {
    case FilterStatus::NoData:
      return !row.decomposition;
    case FilterStatus::GroupTooSmall:
      return !big_enough;
    case FilterStatus::FitFailed:
      return big_enough && !row.decomposition;
    case FilterStatus::BelowMagnitude:
      return big_enough && row.decomposition && cfg.filters.magnitude_enabled(cfg.mode) &&
             !detail::passes_magnitude(*row.decomposition, cfg.filters);
    case FilterStatus::Kept:
      return big_enough && row.decomposition && row.flips &&
             (!cfg.filters.magnitude_enabled(cfg.mode) || detail::passes_magnitude(*row.decomposition, cfg.filters));
  }
  return false;
}

inline CensusRow evaluate_subgroup(const Dataset& ds, const SubgroupSpec& spec, const CensusConfig& cfg,
                                   std::size_t row_index) {
  CensusRow row;
  row.spec = spec;
  const auto candidates = complete_rows(ds, spec, cfg.na_tokens);
  const auto rows = apply_predicate(ds, spec, candidates, cfg.seed, cfg.na_tokens);

  IngestResult samples;
  try {
    samples = build_samples(ds, spec.roles(cfg.na_tokens), &rows, ErrorCode::UnknownColumn);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownColumn) throw;
    row.status = FilterStatus::NoData;
    row.reason = e.what();
    return row;
  }
  row.n_h = samples.log.rows_h;
  row.n_k = samples.log.rows_k;
  const auto min_n = static_cast<std::size_t>(std::max(0, cfg.filters.min_group_size));
  if (row.n_h < min_n || row.n_k < min_n) {
    row.status = FilterStatus::GroupTooSmall;
    row.reason = "group sizes " + std::to_string(row.n_h) + "/" + std::to_string(row.n_k) + " below " +
                 std::to_string(min_n);
    return row;
  }

  GroupModel mh, mk;
  try {
    mh = fit_ols(samples.h, cfg.bootstrap_options.ols);
    mk = fit_ols(samples.k, cfg.bootstrap_options.ols);
  } catch (const Error& e) {
    row.status = FilterStatus::FitFailed;
    row.reason = e.what();
    return row;
  }
  row.decomposition = decompose_both(mh, mk);
  if (cfg.filters.magnitude_enabled(cfg.mode) && !detail::passes_magnitude(*row.decomposition, cfg.filters)) {
    row.status = FilterStatus::BelowMagnitude;
    row.reason = "|gap| or a component is not above " + format_double(cfg.filters.min_magnitude);
    return row;
  }
  row.flips = flip_report(mh, mk);
  row.status = FilterStatus::Kept;

  const bool want_boot = cfg.bootstrap_scope == BootstrapScope::All ||
                         (cfg.bootstrap_scope == BootstrapScope::FlipsOnly && row.any_flip());
  if (want_boot) {
    try {
      row.bootstrap = bootstrap_obd(samples.h, samples.k, cfg.bootstrap_B,
                                    derive_key(cfg.seed, static_cast<std::uint64_t>(row_index)),
                                    cfg.bootstrap_options);
    } catch (const Error& e) {
      row.bootstrap_error = e.what();
    }
  }
  return row;
}

/*!
 * Run every enumerated analysis and tally reference-dependent sign flips.
 *
 * Per-subset failures become excluded rows; only configuration errors
 * (unknown columns, empty dataset) abort. Rows are reported in enumeration
 * order.
 */
inline CensusReport run_flip_census(const Dataset& ds, const CensusConfig& cfg) {
  CensusReport report;
  report.mode = cfg.mode;
  report.seed = cfg.seed;
  const auto specs = enumerate_subgroups(ds, cfg);
  report.rows.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) report.rows.push_back(evaluate_subgroup(ds, specs[i], cfg, i));
  report.aggregates = recount(report.rows);
  return report;
}

}  // namespace obflip
