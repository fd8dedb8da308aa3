#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obflip/census.hpp"
#include "obflip/report.hpp"
#include "obflip/simulation.hpp"

namespace obflip {

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::InvalidConfig, ctx + ": missing field '" + key + "'");
  }
  return j.at(key);
}

template <typename T>
T get_as(const Json& j, const std::string& ctx) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, ctx + ": " + e.what());
  }
}

inline Vector vector_from(const Json& j, const std::string& ctx) {
  if (j.is_number()) return Vector::Constant(1, get_as<double>(j, ctx));
  const auto v = get_as<std::vector<double>>(j, ctx);
  return Eigen::Map<const Vector>(v.data(), static_cast<std::ptrdiff_t>(v.size()));
}

inline Matrix matrix_from(const Json& j, const std::string& ctx) {
  const auto rows = get_as<std::vector<std::vector<double>>>(j, ctx);
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<std::ptrdiff_t>(rows.size()), static_cast<std::ptrdiff_t>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw Error(ErrorCode::DimensionMismatch, ctx + ": ragged matrix");
    for (std::size_t j2 = 0; j2 < rows[i].size(); ++j2) {
      m(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j2)) = rows[i][j2];
    }
  }
  return m;
}

}  // namespace detail

struct PopulationParams {
  GroupModel h;
  GroupModel k;
  GroupLabels labels;
  std::vector<std::string> covariates;
};

/*!
 * Parameter file:
 *   {"H": {"label": "men", "alpha": 1.0, "beta": [..], "mu": [..]},
 *    "K": {...}, "covariates": ["name", ...]}
 * "mu" may be replaced in H by "delta_mu" (mu_K then defaults to zero),
 * matching tables that publish only mean differences.
 */
inline PopulationParams parse_population_params(const Json& j) {
  PopulationParams p;
  auto group = [&](const char* key, Group g) {
    const std::string ctx = std::string("parameter group ") + key;
    const Json& gj = detail::require(j, key, "parameter file");
    GroupModel m;
    m.label = g;
    m.alpha = detail::get_as<double>(detail::require(gj, "alpha", ctx), ctx + ".alpha");
    m.beta = detail::vector_from(detail::require(gj, "beta", ctx), ctx + ".beta");
    if (gj.contains("mu")) m.mu = detail::vector_from(gj.at("mu"), ctx + ".mu");
    if (gj.contains("label")) (g == Group::H ? p.labels.h : p.labels.k) = detail::get_as<std::string>(gj.at("label"), ctx);
    return m;
  };
  p.h = group("H", Group::H);
  p.k = group("K", Group::K);
  if (p.k.mu.size() == 0 && p.h.mu.size() == 0) {
    const Json& hj = j.at("H");
    if (!hj.contains("delta_mu")) throw Error(ErrorCode::InvalidConfig, "parameter file: give mu for both groups or H.delta_mu");
    p.h.mu = detail::vector_from(hj.at("delta_mu"), "H.delta_mu");
    p.k.mu = Vector::Zero(p.h.mu.size());
  } else if (p.k.mu.size() == 0 || p.h.mu.size() == 0) {
    throw Error(ErrorCode::InvalidConfig, "parameter file: mu given for only one group");
  }
  if (j.contains("covariates")) p.covariates = detail::get_as<std::vector<std::string>>(j.at("covariates"), "covariates");
  require_same_dim(p.h, p.k);
  return p;
}

inline Grouping parse_grouping(const Json& j, const std::string& ctx) {
  return {detail::get_as<std::string>(detail::require(j, "column", ctx), ctx + ".column"),
          detail::get_as<std::string>(detail::require(j, "H", ctx), ctx + ".H"),
          detail::get_as<std::string>(detail::require(j, "K", ctx), ctx + ".K")};
}

inline SubgroupGenerator parse_generator(const Json& j, std::size_t index) {
  const std::string ctx = "generators[" + std::to_string(index) + "]";
  const auto type = detail::get_as<std::string>(detail::require(j, "type", ctx), ctx + ".type");
  SubgroupGenerator g;
  auto column = [&] { return detail::get_as<std::string>(detail::require(j, "column", ctx), ctx + ".column"); };
  if (j.contains("label")) g.label = detail::get_as<std::string>(j.at("label"), ctx + ".label");
  if (type == "whole") {
    g.kind = PredicateKind::Whole;
  } else if (type == "categorical") {
    g.kind = PredicateKind::CategoricalEquals;
    g.column = column();
    if (j.contains("levels")) g.levels = detail::get_as<std::vector<std::string>>(j.at("levels"), ctx + ".levels");
  } else if (type == "quantile") {
    g.kind = PredicateKind::QuantileBin;
    g.column = column();
    g.bins = detail::get_as<int>(detail::require(j, "bins", ctx), ctx + ".bins");
  } else if (type == "threshold") {
    g.kind = PredicateKind::Threshold;
    g.column = column();
    g.op = parse_threshold_op(detail::get_as<std::string>(detail::require(j, "op", ctx), ctx + ".op"));
    g.cutoff = detail::get_as<double>(detail::require(j, "cutoff", ctx), ctx + ".cutoff");
  } else if (type == "random") {
    g.kind = PredicateKind::RandomSubsample;
    g.fraction = detail::get_as<double>(detail::require(j, "fraction", ctx), ctx + ".fraction");
    g.count = detail::get_as<int>(detail::require(j, "count", ctx), ctx + ".count");
  } else {
    throw Error(ErrorCode::InvalidConfig, ctx + ": unknown generator type '" + type + "'");
  }
  return g;
}

struct CensusFile {
  CensusConfig config;
  std::optional<std::string> data_path;
  bool has_seed = false;
};

/// Census config file; see docs/config.md for the schema.
inline CensusFile parse_census_config(const Json& j) {
  CensusFile f;
  auto& c = f.config;
  const std::string ctx = "census config";
  const auto mode = j.value("mode", std::string("icu-style"));
  if (mode == "icu-style") {
    c.mode = CensusMode::IcuStyle;
  } else if (mode == "cross-design") {
    c.mode = CensusMode::CrossDesign;
  } else {
    throw Error(ErrorCode::InvalidConfig, ctx + ": mode must be icu-style or cross-design");
  }
  if (j.contains("data")) f.data_path = detail::get_as<std::string>(j.at("data"), "data");
  if (j.contains("outcome")) c.outcome = detail::get_as<std::string>(j.at("outcome"), "outcome");
  if (j.contains("group")) c.grouping = parse_grouping(j.at("group"), "group");
  if (j.contains("covariates")) c.covariates = detail::get_as<std::vector<std::string>>(j.at("covariates"), "covariates");
  if (j.contains("outcomes")) c.outcomes = detail::get_as<std::vector<std::string>>(j.at("outcomes"), "outcomes");
  if (j.contains("groupings")) {
    for (std::size_t i = 0; i < j.at("groupings").size(); ++i) {
      c.groupings.push_back(parse_grouping(j.at("groupings")[i], "groupings[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("covariate_sets")) {
    c.covariate_sets = detail::get_as<std::vector<std::vector<std::string>>>(j.at("covariate_sets"), "covariate_sets");
  }
  if (j.contains("generators")) {
    for (std::size_t i = 0; i < j.at("generators").size(); ++i) c.generators.push_back(parse_generator(j.at("generators")[i], i));
  }
  if (j.contains("na_tokens")) c.na_tokens = detail::get_as<std::vector<std::string>>(j.at("na_tokens"), "na_tokens");
  if (j.contains("filters")) {
    const Json& fj = j.at("filters");
    c.filters.min_group_size = fj.value("min_group_size", c.filters.min_group_size);
    if (fj.contains("magnitude_filter")) c.filters.magnitude_filter = detail::get_as<bool>(fj.at("magnitude_filter"), "filters.magnitude_filter");
    c.filters.min_magnitude = fj.value("min_magnitude", c.filters.min_magnitude);
    const auto ref_mode = fj.value("magnitude_reference", std::string("both"));
    if (ref_mode != "both" && ref_mode != "either") {
      throw Error(ErrorCode::InvalidConfig, "filters.magnitude_reference must be both or either");
    }
    c.filters.magnitude_either_reference = ref_mode == "either";
    if (c.filters.min_group_size < 0 || c.filters.min_magnitude < 0) {
      throw Error(ErrorCode::InvalidConfig, "filters must be nonnegative");
    }
  }
  if (j.contains("bootstrap")) {
    const Json& bj = j.at("bootstrap");
    c.bootstrap_B = bj.value("B", c.bootstrap_B);
    const auto scope = bj.value("scope", std::string("flips"));
    if (scope == "flips") {
      c.bootstrap_scope = BootstrapScope::FlipsOnly;
    } else if (scope == "all") {
      c.bootstrap_scope = BootstrapScope::All;
    } else if (scope == "none") {
      c.bootstrap_scope = BootstrapScope::None;
    } else {
      throw Error(ErrorCode::InvalidConfig, "bootstrap.scope must be flips, all or none");
    }
  }
  if (j.contains("seed")) {
    c.seed = detail::get_as<std::uint64_t>(j.at("seed"), "seed");
    f.has_seed = true;
  }
  if (c.mode == CensusMode::IcuStyle && (c.outcome.empty() || c.grouping.column.empty())) {
    throw Error(ErrorCode::InvalidConfig, ctx + ": icu-style needs outcome and group");
  }
  return f;
}

struct SimulationGroup {
  std::string value;
  std::ptrdiff_t n = 0;
  std::optional<LinearDGP> linear;
  std::optional<OvbDGP> ovb;
};

struct SimulationConfig {
  std::string group_column = "group";
  std::string outcome_column = "y";
  std::vector<std::string> covariate_columns;
  SimulationGroup h;
  SimulationGroup k;
  std::optional<std::uint64_t> seed;
};

/*!
 * DGP config:
 *   {"group_column": "group", "outcome_column": "sbp", "covariates": ["bmi"],
 *    "H": {"value": "H", "n": 2500, "mu_x": [25], "sigma_x": [4], "alpha": 110.4,
 *          "beta": [1.0], "noise_sd": 5},
 *    "K": {...}}
 * A group with "omega" is read as an omitted-variable DGP (theta, gamma,
 * zeta, psi, mu_x, sigma_x, z_noise_sd, noise_sd).
 */
inline SimulationConfig parse_simulation_config(const Json& j) {
  SimulationConfig s;
  s.group_column = j.value("group_column", s.group_column);
  s.outcome_column = j.value("outcome_column", s.outcome_column);
  if (j.contains("seed")) s.seed = detail::get_as<std::uint64_t>(j.at("seed"), "seed");
  auto group = [&](const char* key) {
    const std::string ctx = std::string("simulation group ") + key;
    const Json& gj = detail::require(j, key, "simulation config");
    SimulationGroup g;
    g.value = gj.value("value", std::string(key));
    g.n = detail::get_as<std::ptrdiff_t>(detail::require(gj, "n", ctx), ctx + ".n");
    if (gj.contains("omega")) {
      OvbDGP o;
      o.omega = detail::get_as<double>(gj.at("omega"), ctx + ".omega");
      o.theta = detail::vector_from(detail::require(gj, "theta", ctx), ctx + ".theta");
      o.gamma = detail::vector_from(detail::require(gj, "gamma", ctx), ctx + ".gamma");
      o.zeta = detail::vector_from(detail::require(gj, "zeta", ctx), ctx + ".zeta");
      o.psi = detail::matrix_from(detail::require(gj, "psi", ctx), ctx + ".psi");
      if (gj.contains("mu_x")) o.mu_x = detail::vector_from(gj.at("mu_x"), ctx + ".mu_x");
      if (gj.contains("sigma_x")) o.sigma_x = detail::vector_from(gj.at("sigma_x"), ctx + ".sigma_x");
      if (gj.contains("z_noise_sd")) o.z_noise_sd = detail::vector_from(gj.at("z_noise_sd"), ctx + ".z_noise_sd");
      o.noise_sd = gj.value("noise_sd", o.noise_sd);
      o.validate();
      g.ovb = std::move(o);
    } else {
      LinearDGP l;
      l.mu_x = detail::vector_from(detail::require(gj, "mu_x", ctx), ctx + ".mu_x");
      l.sigma_x = detail::vector_from(detail::require(gj, "sigma_x", ctx), ctx + ".sigma_x");
      l.alpha = detail::get_as<double>(detail::require(gj, "alpha", ctx), ctx + ".alpha");
      l.beta = detail::vector_from(detail::require(gj, "beta", ctx), ctx + ".beta");
      l.noise_sd = detail::get_as<double>(detail::require(gj, "noise_sd", ctx), ctx + ".noise_sd");
      l.validate();
      g.linear = std::move(l);
    }
    return g;
  };
  s.h = group("H");
  s.k = group("K");
  const auto dim = [](const SimulationGroup& g) { return g.linear ? g.linear->dim() : g.ovb->dim(); };
  if (dim(s.h) != dim(s.k)) throw Error(ErrorCode::DimensionMismatch, "H and K DGPs differ in dimension");
  if (j.contains("covariates")) {
    s.covariate_columns = detail::get_as<std::vector<std::string>>(j.at("covariates"), "covariates");
    if (static_cast<std::ptrdiff_t>(s.covariate_columns.size()) != dim(s.h)) {
      throw Error(ErrorCode::DimensionMismatch, "covariates list length does not match the DGP dimension");
    }
  } else {
    for (std::ptrdiff_t i = 0; i < dim(s.h); ++i) s.covariate_columns.push_back("x" + std::to_string(i + 1));
  }
  if (s.h.value == s.k.value) throw Error(ErrorCode::InvalidConfig, "H and K group values must differ");
  return s;
}

inline GroupSample simulate_group(const SimulationGroup& g, std::uint64_t seed, Group label) {
  return g.linear ? gen_linear_group(*g.linear, g.n, seed, label) : gen_ovb_group(*g.ovb, g.n, seed, label);
}

}  // namespace obflip
