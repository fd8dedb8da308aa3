#pragma once

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "obflip/census.hpp"
#include "obflip/dataset.hpp"
#include "obflip/decomposition.hpp"
#include "obflip/inference.hpp"
#include "obflip/signflip.hpp"
#include "obflip/volume.hpp"

namespace obflip {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

enum class ReportKind { Decomposition, Flip, Volume, Census, Simulation };

constexpr std::string_view to_string(ReportKind k) {
  switch (k) {
    case ReportKind::Decomposition: return "decomposition";
    case ReportKind::Flip: return "flip";
    case ReportKind::Volume: return "volume";
    case ReportKind::Census: return "census";
    case ReportKind::Simulation: return "simulation";
  }
  return "?";
}

/// Names of the observed groups that play H and K.
struct GroupLabels {
  std::string h = "H";
  std::string k = "K";
  const std::string& of(Group g) const { return g == Group::H ? h : k; }
};

struct Report {
  ReportKind kind = ReportKind::Decomposition;
  Json body;

  Json document() const {
    Json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["kind"] = std::string(to_string(kind));
    doc["body"] = body;
    return doc;
  }
};

// ---------------------------------------------------------------------------
// JSON

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (std::ptrdiff_t i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const GroupModel& m) {
  return {{"group", std::string(to_string(m.label))}, {"alpha", m.alpha}, {"beta", vector_json(m.beta)},
          {"mu", vector_json(m.mu)}};
}

inline Json to_json(const DecompositionResult& r, const GroupLabels& labels = {}) {
  return {{"reference", std::string(to_string(r.reference))},
          {"reference_label", labels.of(r.reference)},
          {"explained", r.explained},
          {"unexplained", r.unexplained},
          {"total_gap", r.total_gap},
          {"counterfactual_mean", r.counterfactual_mean},
          {"explained_by_covariate", vector_json(r.explained_terms)}};
}

inline Json to_json(const DualDecomposition& d, const GroupLabels& labels = {}) {
  return {{"gap_orientation", labels.h + " minus " + labels.k},
          {"by_H", to_json(d.by_h, labels)},
          {"by_K", to_json(d.by_k, labels)}};
}

inline Json to_json(const FlipQuantities& q) {
  return {{"dmu_beta_H", q.dmu_beta_h}, {"dmu_beta_K", q.dmu_beta_k}, {"mu_H_dbeta", q.mu_h_dbeta},
          {"mu_K_dbeta", q.mu_k_dbeta}, {"dalpha", q.dalpha}};
}

inline Json to_json(const ComponentFlip& c) {
  return {{"verdict", std::string(to_string(c.verdict))},
          {"flip", c.flip()},
          {"interval_form", c.alternative_form},
          {"forms_agree", c.agree}};
}

inline Json to_json(const FlipReport& r) {
  Json trace = Json::array();
  for (const auto& s : r.branch_trace) {
    trace.push_back({{"predicate", s.predicate}, {"outcome", s.outcome}, {"values", s.detail}});
  }
  return {{"explained", to_json(r.explained)},
          {"unexplained", to_json(r.unexplained)},
          {"decision_tree_flip", r.tree_verdict},
          {"branch_trace", trace},
          {"alignment_holds", r.alignment},
          {"characterizations_agree", r.characterizations_agree()},
          {"quantities", to_json(r.quantities)},
          {"notes", r.notes}};
}

inline Json to_json(const ComponentStats& c) {
  return {{"estimate", c.estimate}, {"standard_error", c.standard_error}, {"bootstrap_mean", c.bootstrap_mean},
          {"p_value", c.p_value}, {"stars", c.stars}};
}

inline Json to_json(const ReferenceStats& r) {
  return {{"explained", to_json(r.explained)},
          {"unexplained", to_json(r.unexplained)},
          {"total_gap", to_json(r.total_gap)}};
}

inline Json to_json(const BootstrapSummary& s) {
  return {{"replicates_requested", s.requested},
          {"replicates_used", s.replicates},
          {"replicates_failed", s.failed},
          {"seed", s.seed},
          {"by_H", to_json(s.by_h)},
          {"by_K", to_json(s.by_k)}};
}

inline Json to_json(const VolumeEstimate& v) {
  Json j = {{"d", v.d},
            {"component", std::string(to_string(v.component))},
            {"method", std::string(to_string(v.method))},
            {"fraction", v.fraction},
            {"standard_error", v.standard_error}};
  if (v.method == VolumeMethod::MonteCarlo) {
    j["M"] = v.M;
    j["standardized"] = v.standardized;
    j["n_draws"] = v.n_draws;
    j["flips"] = v.flips;
    j["seed"] = v.seed;
  }
  return j;
}

inline Json to_json(const DeletionLog& log) {
  Json by_col = Json::object();
  for (const auto& [c, n] : log.missing_by_column) by_col[c] = n;
  return {{"rows_read", log.rows_read}, {"dropped_missing", log.dropped_missing},
          {"dropped_unmapped", log.dropped_unmapped}, {"rows_H", log.rows_h},
          {"rows_K", log.rows_k}, {"missing_by_column", by_col}};
}

inline Json to_json(const SubgroupSpec& s) {
  Json j = {{"name", s.name}, {"predicate", std::string(to_string(s.kind))}};
  switch (s.kind) {
    case PredicateKind::Whole: break;
    case PredicateKind::CategoricalEquals: j["column"] = s.column; j["value"] = s.value; break;
    case PredicateKind::QuantileBin: j["column"] = s.column; j["bin"] = s.bin; j["bins"] = s.bins; break;
    case PredicateKind::Threshold:
      j["column"] = s.column;
      j["op"] = std::string(to_string(s.op));
      j["cutoff"] = s.cutoff;
      break;
    case PredicateKind::RandomSubsample: j["fraction"] = s.fraction; j["draw"] = s.draw; break;
  }
  j["outcome"] = s.outcome;
  j["grouping"] = {{"column", s.grouping.column}, {"H", s.grouping.h_value}, {"K", s.grouping.k_value}};
  j["covariates"] = s.covariates;
  return j;
}

inline Json to_json(const CensusReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j = {{"subset", to_json(row.spec)},
              {"n_H", row.n_h},
              {"n_K", row.n_k},
              {"status", std::string(to_string(row.status))}};
    if (!row.reason.empty()) j["reason"] = row.reason;
    if (row.decomposition) j["decomposition"] = to_json(*row.decomposition, {row.spec.grouping.h_value, row.spec.grouping.k_value});
    if (row.flips) j["flips"] = to_json(*row.flips);
    if (row.bootstrap) j["bootstrap"] = to_json(*row.bootstrap);
    if (!row.bootstrap_error.empty()) j["bootstrap_error"] = row.bootstrap_error;
    rows.push_back(std::move(j));
  }
  const auto& a = r.aggregates;
  return {{"mode", r.mode == CensusMode::IcuStyle ? "icu-style" : "cross-design"},
          {"seed", r.seed},
          {"aggregates",
           {{"specs", a.specs},
            {"examined", a.examined},
            {"explained_flips", a.explained_flips},
            {"unexplained_flips", a.unexplained_flips},
            {"any_flip", a.any_flip},
            {"alignment_holds", a.alignment}}},
          {"rows", rows}};
}

// ---------------------------------------------------------------------------
// Human-readable tables. Values are rounded to 3 decimals for display only.

inline std::string fixed3(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

namespace detail {

inline void print_rows(std::ostream& os, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
  }
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j == 0) {
        os << std::left << std::setw(static_cast<int>(width[j])) << r[j];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[j])) << r[j];
      }
    }
    os << '\n';
  }
}

}  // namespace detail

/// One row per reference: Explained, Unexplained, Total gap; SEs in parentheses beneath.
inline void print_decomposition_table(std::ostream& os, const DualDecomposition& d, const GroupLabels& labels,
                                      const BootstrapSummary* boot = nullptr) {
  std::vector<std::vector<std::string>> rows{{"Reference", "Explained", "Unexplained", "Total gap"}};
  for (Group g : {Group::H, Group::K}) {
    const auto& r = d.by(g);
    if (boot) {
      const auto& s = boot->by(g);
      rows.push_back({labels.of(g), fixed3(r.explained) + s.explained.stars,
                      fixed3(r.unexplained) + s.unexplained.stars, fixed3(r.total_gap) + s.total_gap.stars});
      rows.push_back({"", "(" + fixed3(s.explained.standard_error) + ")",
                      "(" + fixed3(s.unexplained.standard_error) + ")",
                      "(" + fixed3(s.total_gap.standard_error) + ")"});
    } else {
      rows.push_back({labels.of(g), fixed3(r.explained), fixed3(r.unexplained), fixed3(r.total_gap)});
    }
  }
  os << "Gap orientation: " << labels.h << " minus " << labels.k << '\n';
  detail::print_rows(os, rows);
  if (boot) {
    os << "Bootstrap: " << boot->replicates << " of " << boot->requested << " replicates (seed " << boot->seed
       << "); * p<0.10, ** p<0.05, *** p<0.01\n";
  }
}

inline void print_flip_report(std::ostream& os, const FlipReport& r) {
  const auto& q = r.quantities;
  os << "Explained flip:   " << to_string(r.explained.verdict) << "  (E_H=" << fixed3(q.dmu_beta_h)
     << ", E_K=" << fixed3(q.dmu_beta_k) << ")\n";
  os << "Unexplained flip: " << to_string(r.unexplained.verdict) << "  (U_H=" << fixed3(q.unexplained_h())
     << ", U_K=" << fixed3(q.unexplained_k()) << ")\n";
  os << "Alignment holds:  " << (r.alignment ? "yes" : "no") << '\n';
  os << "Decision tree (unexplained):\n";
  for (const auto& s : r.branch_trace) {
    os << "  [" << (s.outcome ? "true " : "false") << "] " << s.predicate << "   {" << s.detail << "}\n";
  }
  os << "  => " << (r.tree_verdict ? "sign flip" : "no sign flip") << '\n';
  for (const auto& n : r.notes) os << "note: " << n << '\n';
}

inline void print_volume_table(std::ostream& os, const std::vector<VolumeEstimate>& series) {
  std::vector<std::vector<std::string>> rows{{"d", "component", "method", "fraction", "se"}};
  for (const auto& v : series) {
    char frac[32], se[32];
    std::snprintf(frac, sizeof frac, "%.6f", v.fraction);
    std::snprintf(se, sizeof se, "%.6f", v.standard_error);
    rows.push_back({std::to_string(v.d), std::string(to_string(v.component)), std::string(to_string(v.method)), frac,
                    se});
  }
  detail::print_rows(os, rows);
}

inline void print_census_table(std::ostream& os, const CensusReport& r) {
  std::vector<std::vector<std::string>> rows{
      {"Subset", "n_H", "n_K", "status", "Gap", "E(H)", "U(H)", "E(K)", "U(K)", "flip"}};
  for (const auto& row : r.rows) {
    std::vector<std::string> line{row.spec.name, std::to_string(row.n_h), std::to_string(row.n_k),
                                  std::string(to_string(row.status))};
    if (row.decomposition) {
      const auto& d = *row.decomposition;
      for (double v : {d.by_h.total_gap, d.by_h.explained, d.by_h.unexplained, d.by_k.explained, d.by_k.unexplained}) {
        line.push_back(fixed3(v));
      }
    } else {
      line.insert(line.end(), 5, "");
    }
    std::string flag;
    if (row.explained_flip()) flag += "E";
    if (row.unexplained_flip()) flag += "U";
    line.push_back(flag);
    rows.push_back(std::move(line));
  }
  detail::print_rows(os, rows);
  const auto& a = r.aggregates;
  os << "Examined " << a.examined << " of " << a.specs << " analyses: " << a.explained_flips
     << " explained flips, " << a.unexplained_flips << " unexplained flips, " << a.any_flip
     << " with at least one flip, " << a.alignment << " satisfying alignment.\n";
}

}  // namespace obflip
