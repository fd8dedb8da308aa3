#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "obflip/census.hpp"
#include "obflip/config.hpp"
#include "obflip/dataset.hpp"
#include "obflip/decomposition.hpp"
#include "obflip/inference.hpp"
#include "obflip/report.hpp"
#include "obflip/signflip.hpp"
#include "obflip/simulation.hpp"
#include "obflip/volume.hpp"

namespace obflip::cli {

enum ExitStatus : int { kOk = 0, kUsage = 1, kDataError = 2 };

struct CommandResult {
  int status = kOk;
  std::optional<Report> report;
};

namespace detail {

struct DataOptions {
  std::string params;
  std::string data;
  std::string outcome;
  std::string group;
  std::string h_value;
  std::string k_value;
  std::vector<std::string> covariates;
  std::vector<std::string> na_tokens{"", "NA"};
  std::string delimiter = ",";
};

inline void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--params", o.params, "JSON parameter file (population mode)");
  cmd->add_option("--data", o.data, "CSV file with a header row");
  cmd->add_option("--outcome", o.outcome, "outcome column");
  cmd->add_option("--group", o.group, "group column");
  cmd->add_option("--h-value", o.h_value, "group value treated as H");
  cmd->add_option("--k-value", o.k_value, "group value treated as K");
  cmd->add_option("--covariates", o.covariates, "covariate columns")->delimiter(',');
  cmd->add_option("--na", o.na_tokens, "tokens read as missing")->delimiter(',');
  cmd->add_option("--delimiter", o.delimiter, "CSV field delimiter");
}

inline void require_data_roles(const DataOptions& o) {
  if (o.outcome.empty() || o.group.empty() || o.h_value.empty() || o.k_value.empty() || o.covariates.empty()) {
    throw CLI::ValidationError("--data", "requires --outcome, --group, --h-value, --k-value and --covariates");
  }
  if (o.delimiter.size() != 1) throw CLI::ValidationError("--delimiter", "must be a single character");
}

inline IngestResult load_samples(const DataOptions& o) {
  IngestionSpec spec;
  spec.path = o.data;
  spec.delimiter = o.delimiter[0];
  spec.roles = {o.outcome, o.group, o.covariates, o.h_value, o.k_value, o.na_tokens};
  return ingest(spec);
}

inline void write_json(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + path + "'");
  out << report.document().dump(2) << '\n';
}

}  // namespace detail

/*!
 * Parse and run one command line (argv[0] is the program name).
 *
 * Exit status 0 on success, 1 on usage errors, 2 on data or fit errors.
 * Human tables go to `out`; `--out <path>` also writes the JSON document.
 */
inline CommandResult run_command(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                                 std::ostream& err = std::cerr) {
  CLI::App app{"Oaxaca-Blinder decompositions under both reference groups, with sign-flip diagnostics"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string out_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  detail::DataOptions data;
  bool with_bootstrap = false;
  int B = 1000;

  auto* decompose = app.add_subcommand("decompose", "Decompose the gap under both references and report flips");
  detail::add_data_options(decompose, data);
  decompose->add_flag("--bootstrap", with_bootstrap, "attach bootstrap standard errors");
  decompose->add_option("--B", B, "bootstrap replicates")->check(CLI::Range(100, 10000000));

  detail::DataOptions boot_data;
  auto* bootstrap = app.add_subcommand("bootstrap", "Decomposition with within-group bootstrap inference");
  detail::add_data_options(bootstrap, boot_data);
  bootstrap->add_option("--B", B, "bootstrap replicates")->check(CLI::Range(100, 10000000));

  std::string flip_params;
  auto* flipcheck = app.add_subcommand("flipcheck", "Evaluate sign-flip characterizations for explicit parameters");
  flipcheck->add_option("--params", flip_params, "JSON parameter file")->required();

  std::vector<int> dims;
  int d_max = 0;
  double M = 1.0;
  std::string component = "unexplained";
  bool standardized = true;
  long long draws = 1000000;
  bool exact = false;
  int exact_max_n = 40;
  auto* volume = app.add_subcommand("volume", "Fraction of parameter space producing sign flips");
  volume->add_option("--d", dims, "covariate dimensions (comma list)")->delimiter(',');
  volume->add_option("--d-max", d_max, "evaluate every d in 1..d-max");
  volume->add_option("--M", M, "cube half-width")->check(CLI::PositiveNumber);
  volume->add_option("--component", component, "explained or unexplained")
      ->check(CLI::IsMember({"explained", "unexplained"}));
  volume->add_flag("--standardized,!--unstandardized", standardized,
                   "pin mu_K=0, mu_H=1 (default) or draw the means too");
  volume->add_option("--draws", draws, "Monte Carlo draws")->check(CLI::Range(1000LL, 1000000000000LL));
  volume->add_flag("--exact", exact, "analytic value instead of Monte Carlo");
  volume->add_option("--exact-max-n", exact_max_n, "largest Irwin-Hall n evaluated exactly");

  std::string census_config;
  std::string census_data;
  auto* search = app.add_subcommand("search", "Run a subgroup sign-flip census");
  search->add_option("--config", census_config, "census config JSON")->required();
  search->add_option("--data", census_data, "CSV file (overrides the config's data path)");

  std::string sim_config;
  std::string sim_csv;
  auto* simulate = app.add_subcommand("simulate", "Generate a two-group CSV from a DGP config");
  simulate->add_option("--config", sim_config, "DGP config JSON")->required();
  simulate->add_option("--csv", sim_csv, "output CSV path")->required();

  for (auto* cmd : {decompose, bootstrap, flipcheck, volume, search, simulate}) {
    cmd->add_option("--out", out_path, "write the JSON report here");
  }
  for (auto* cmd : {decompose, bootstrap, volume, search, simulate}) {
    cmd->add_option("--seed", seed, "random seed (required for randomized runs)");
  }
  for (auto* cmd : {decompose, bootstrap, volume}) {
    cmd->add_option("--threads", threads, "worker threads (results do not depend on this)");
  }

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return {code == 0 ? kOk : kUsage, std::nullopt};
  }

  CommandResult result;
  try {
    Report report;
    if (*decompose || *bootstrap) {
      const auto& o = *bootstrap ? boot_data : data;
      const bool boot = *bootstrap || with_bootstrap;
      if (boot && !seed) throw CLI::RequiredError("--seed");
      if (o.params.empty() == o.data.empty()) {
        throw CLI::ValidationError("--params/--data", "give exactly one of --params or --data");
      }
      GroupLabels labels;
      GroupModel mh, mk;
      std::optional<IngestResult> samples;
      std::vector<std::string> covariates;
      if (!o.params.empty()) {
        if (boot) throw CLI::ValidationError("--bootstrap", "bootstrap needs --data, not population parameters");
        const auto p = parse_population_params(read_json_file(o.params));
        mh = p.h;
        mk = p.k;
        labels = p.labels;
        covariates = p.covariates;
      } else {
        detail::require_data_roles(o);
        samples = detail::load_samples(o);
        labels = {o.h_value, o.k_value};
        covariates = o.covariates;
        mh = fit_ols(samples->h);
        mk = fit_ols(samples->k);
      }
      const DualDecomposition dd = decompose_both(mh, mk);
      const FlipReport flips = flip_report(mh, mk);
      std::optional<BootstrapSummary> summary;
      if (boot) {
        BootstrapOptions bo;
        bo.threads = threads;
        summary = bootstrap_obd(samples->h, samples->k, B, *seed, bo);
      }

      report.kind = ReportKind::Decomposition;
      report.body["groups"] = {{"H", labels.h}, {"K", labels.k}};
      report.body["covariates"] = covariates;
      report.body["models"] = {{"H", to_json(mh)}, {"K", to_json(mk)}};
      report.body["decomposition"] = to_json(dd, labels);
      report.body["flips"] = to_json(flips);
      if (samples) report.body["ingestion"] = to_json(samples->log);
      if (summary) report.body["bootstrap"] = to_json(*summary);

      print_decomposition_table(out, dd, labels, summary ? &*summary : nullptr);
      out << '\n';
      print_flip_report(out, flips);
      if (samples) {
        out << "Rows: " << samples->log.rows_h << " " << labels.h << ", " << samples->log.rows_k << " " << labels.k
            << "; dropped " << samples->log.dropped_missing << " with missing values, "
            << samples->log.dropped_unmapped << " with other group values\n";
      }
    } else if (*flipcheck) {
      const auto p = parse_population_params(read_json_file(flip_params));
      const FlipReport flips = flip_report(p.h, p.k);
      report.kind = ReportKind::Flip;
      report.body["groups"] = {{"H", p.labels.h}, {"K", p.labels.k}};
      report.body["flips"] = to_json(flips);
      report.body["decomposition"] = to_json(decompose_both(p.h, p.k), p.labels);
      print_flip_report(out, flips);
    } else if (*volume) {
      std::vector<int> ds = dims;
      for (int d = 1; d <= d_max; ++d) ds.push_back(d);
      if (ds.empty()) throw CLI::RequiredError("--d or --d-max");
      if (std::any_of(ds.begin(), ds.end(), [](int d) { return d < 1; })) {
        throw CLI::ValidationError("--d", "dimensions must be >= 1");
      }
      const Component comp = component == "explained" ? Component::Explained : Component::Unexplained;
      if (!exact && !seed) throw CLI::RequiredError("--seed");
      if (exact && !standardized) {
        throw CLI::ValidationError("--exact", "analytic fractions exist only for standardized covariates");
      }
      std::vector<VolumeEstimate> series;
      for (int d : ds) {
        if (exact) {
          VolumeOptions vo;
          vo.exact_max_n = exact_max_n;
          VolumeEstimate v = comp == Component::Explained ? explained_flip_fraction() : unexplained_flip_fraction(d, vo);
          v.d = d;
          v.M = M;
          series.push_back(v);
        } else {
          series.push_back(monte_carlo_flip_fraction(d, M, comp, standardized, draws, *seed, {threads}));
        }
      }
      report.kind = ReportKind::Volume;
      Json rows = Json::array();
      for (const auto& v : series) rows.push_back(to_json(v));
      report.body["series"] = rows;
      print_volume_table(out, series);
    } else if (*search) {
      auto file = parse_census_config(read_json_file(census_config));
      if (seed) {
        file.config.seed = *seed;
        file.has_seed = true;
      }
      if (!file.has_seed) throw CLI::RequiredError("--seed (or \"seed\" in the config)");
      std::string path = census_data;
      if (path.empty() && file.data_path) {
        // Relative data paths resolve against the config file's directory.
        std::filesystem::path p(*file.data_path);
        path = p.is_absolute() ? p.string() : (std::filesystem::path(census_config).parent_path() / p).string();
      }
      if (path.empty()) throw CLI::RequiredError("--data (or \"data\" in the config)");
      const Dataset ds = read_csv(path);
      const CensusReport census = run_flip_census(ds, file.config);
      report.kind = ReportKind::Census;
      report.body = to_json(census);
      print_census_table(out, census);
    } else if (*simulate) {
      auto cfg = parse_simulation_config(read_json_file(sim_config));
      if (seed) cfg.seed = seed;
      if (!cfg.seed) throw CLI::RequiredError("--seed (or \"seed\" in the config)");
      const GroupSample h = simulate_group(cfg.h, *cfg.seed, Group::H);
      const GroupSample k = simulate_group(cfg.k, *cfg.seed, Group::K);
      std::ofstream csv(sim_csv);
      if (!csv) throw Error(ErrorCode::FileNotFound, "cannot write '" + sim_csv + "'");
      write_samples_csv(csv, h, k, cfg.covariate_columns, cfg.outcome_column, cfg.group_column, cfg.h.value,
                        cfg.k.value);
      report.kind = ReportKind::Simulation;
      report.body = {{"csv", sim_csv},
                     {"seed", *cfg.seed},
                     {"rows", {{cfg.h.value, h.rows()}, {cfg.k.value, k.rows()}}},
                     {"columns", cfg.covariate_columns}};
      out << "Wrote " << h.rows() << " " << cfg.h.value << " rows and " << k.rows() << " " << cfg.k.value
          << " rows to " << sim_csv << '\n';
    }
    if (!out_path.empty()) detail::write_json(out_path, report);
    result.report = std::move(report);
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help() << '\n';
    return {kUsage, std::nullopt};
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return {kDataError, std::nullopt};
  }
  return result;
}

}  // namespace obflip::cli
