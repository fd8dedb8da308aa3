#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "obflip/decomposition.hpp"
#include "obflip/error.hpp"
#include "obflip/irwin_hall.hpp"
#include "obflip/model.hpp"
#include "obflip/rng.hpp"

namespace obflip {

/// Two-sided normal-approximation p-value for estimate / se.
inline double wald_p(double estimate, double se) {
  if (!(se > 0.0)) throw Error(ErrorCode::ZeroStandardError, "standard error must be positive");
  const double p = std::erfc(std::abs(estimate) / se / std::sqrt(2.0));
  return std::clamp(p, 0.0, 1.0);
}

// *** p < 0.01, ** p < 0.05, * p < 0.10.
inline std::string stars_for(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

struct ComponentStats {
  double estimate = 0.0;
  double standard_error = 0.0;
  double bootstrap_mean = 0.0;
  double p_value = 1.0;
  std::string stars;
};

struct ReferenceStats {
  ComponentStats explained;
  ComponentStats unexplained;
  ComponentStats total_gap;
};

struct BootstrapSummary {
  DualDecomposition point;
  int requested = 0;  // B
  int replicates = 0;  // successful refits
  int failed = 0;
  std::uint64_t seed = 0;
  ReferenceStats by_h;
  ReferenceStats by_k;
  std::vector<DualDecomposition> replicate_values;  // filled only when requested

  const ReferenceStats& by(Group ref) const { return ref == Group::H ? by_h : by_k; }
};

struct BootstrapOptions {
  unsigned threads = 1;  // 0 = hardware concurrency
  bool keep_replicates = false;
  double max_failed_fraction = 0.05;
  int min_replicates = 100;
  OlsOptions ols;
};

/// Assign stars from p-values. Idempotent.
inline BootstrapSummary annotate(BootstrapSummary summary) {
  for (ReferenceStats* r : {&summary.by_h, &summary.by_k}) {
    for (ComponentStats* c : {&r->explained, &r->unexplained, &r->total_gap}) c->stars = stars_for(c->p_value);
  }
  return summary;
}

namespace detail {

inline GroupSample resample_rows(const GroupSample& s, KeyedStream& rng) {
  const auto n = s.rows();
  GroupSample out{Matrix(n, s.dim()), Vector(n), s.label};
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto src = static_cast<std::ptrdiff_t>(rng.below(static_cast<std::uint64_t>(n)));
    out.covariates.row(i) = s.covariates.row(src);
    out.outcome(i) = s.outcome(src);
  }
  return out;
}

// Replicate values for one component, in replicate order.
inline ComponentStats summarize(double estimate, const std::vector<double>& values) {
  ComponentStats c;
  c.estimate = estimate;
  const double b = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= b;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  c.bootstrap_mean = mean;
  c.standard_error = values.size() > 1 ? std::sqrt(ss / (b - 1.0)) : 0.0;
  // A degenerate zero-spread component has no Wald statistic; report it as
  // significant only when the point estimate itself is nonzero.
  c.p_value = c.standard_error > 0.0 ? wald_p(estimate, c.standard_error) : (estimate == 0.0 ? 1.0 : 0.0);
  return c;
}

}  // namespace detail

/*!
 * Within-group row bootstrap of the dual decomposition.
 *
 * Each replicate resamples both groups with replacement at their original
 * sizes (streams keyed by (seed, b, group)), refits, and decomposes.
 * Replicates whose refit fails are dropped and counted; more than
 * max_failed_fraction of them aborts. Standard errors use the B-1
 * denominator over the surviving replicates.
 */
inline BootstrapSummary bootstrap_obd(const GroupSample& sample_h, const GroupSample& sample_k, int B,
                                      std::uint64_t seed, const BootstrapOptions& opts = {}) {
  if (B < opts.min_replicates) {
    throw Error(ErrorCode::InvalidConfig,
                "B must be >= " + std::to_string(opts.min_replicates) + " (got " + std::to_string(B) + ")");
  }
  BootstrapSummary out;
  out.requested = B;
  out.seed = seed;
  try {
    out.point = decompose_both(fit_ols(sample_h, opts.ols), fit_ols(sample_k, opts.ols));
  } catch (const Error& e) {
    throw Error(ErrorCode::PointFitFailed, e.what());
  }

  std::vector<std::optional<DualDecomposition>> reps(static_cast<std::size_t>(B));
  auto run = [&](int begin, int end) {
    for (int b = begin; b < end; ++b) {
      auto rng_h = KeyedStream::from(seed, static_cast<std::uint64_t>(b), 0);
      auto rng_k = KeyedStream::from(seed, static_cast<std::uint64_t>(b), 1);
      try {
        const GroupModel mh = fit_ols(detail::resample_rows(sample_h, rng_h), opts.ols);
        const GroupModel mk = fit_ols(detail::resample_rows(sample_k, rng_k), opts.ols);
        reps[static_cast<std::size_t>(b)] = decompose_both(mh, mk);
      } catch (const Error&) {
        reps[static_cast<std::size_t>(b)].reset();
      }
    }
  };
  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(B));
  if (threads <= 1) {
    run(0, B);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (B + static_cast<int>(threads) - 1) / static_cast<int>(threads);
    for (unsigned t = 0; t < threads; ++t) {
      const int begin = std::min(B, static_cast<int>(t) * chunk);
      const int end = std::min(B, begin + chunk);
      pool.emplace_back(run, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::array<std::vector<double>, 6> values;
  for (const auto& r : reps) {
    if (!r) {
      ++out.failed;
      continue;
    }
    values[0].push_back(r->by_h.explained);
    values[1].push_back(r->by_h.unexplained);
    values[2].push_back(r->by_h.total_gap);
    values[3].push_back(r->by_k.explained);
    values[4].push_back(r->by_k.unexplained);
    values[5].push_back(r->by_k.total_gap);
    if (opts.keep_replicates) out.replicate_values.push_back(*r);
  }
  out.replicates = B - out.failed;
  if (static_cast<double>(out.failed) > opts.max_failed_fraction * B || out.replicates < 2) {
    throw Error(ErrorCode::TooManyFailedReplicates,
                std::to_string(out.failed) + " of " + std::to_string(B) + " bootstrap refits failed");
  }

  out.by_h.explained = detail::summarize(out.point.by_h.explained, values[0]);
  out.by_h.unexplained = detail::summarize(out.point.by_h.unexplained, values[1]);
  out.by_h.total_gap = detail::summarize(out.point.by_h.total_gap, values[2]);
  out.by_k.explained = detail::summarize(out.point.by_k.explained, values[3]);
  out.by_k.unexplained = detail::summarize(out.point.by_k.unexplained, values[4]);
  out.by_k.total_gap = detail::summarize(out.point.by_k.total_gap, values[5]);
  return annotate(std::move(out));
}

}  // namespace obflip
