#pragma once

#include <random>
#include <string>
#include <utility>

#include "obflip/error.hpp"
#include "obflip/model.hpp"
#include "obflip/rng.hpp"

namespace obflip {

/// Independent normal covariates, Y = alpha + X'beta + N(0, noise_sd^2).
struct LinearDGP {
  Vector mu_x;
  Vector sigma_x;
  double alpha = 0.0;
  Vector beta;
  double noise_sd = 1.0;

  std::ptrdiff_t dim() const { return mu_x.size(); }

  void validate() const {
    if (sigma_x.size() != mu_x.size() || beta.size() != mu_x.size()) {
      throw Error(ErrorCode::DimensionMismatch, "LinearDGP vectors must share one dimension");
    }
    if (!(sigma_x.array() > 0.0).all() || !(noise_sd > 0.0)) {
      throw Error(ErrorCode::NonPositiveParameter, "LinearDGP standard deviations must be positive");
    }
  }

  GroupModel population_model(Group label) const { return {alpha, beta, mu_x, label}; }
};

/*!
 * Long model with omitted covariates Z (dimension d'):
 *   E[Y | X, Z] = omega + X'theta + Z'gamma,   Z = zeta + Psi X + N(0, diag(z_noise_sd^2)).
 */
struct OvbDGP {
  double omega = 0.0;
  Vector theta;        // d
  Vector gamma;        // d'
  Vector zeta;         // d'
  Matrix psi;          // d' x d
  Vector mu_x;         // d
  Vector sigma_x;      // d
  Vector z_noise_sd;   // d'
  double noise_sd = 1.0;

  std::ptrdiff_t dim() const { return theta.size(); }
  std::ptrdiff_t omitted_dim() const { return gamma.size(); }

  void validate() const {
    const auto d = theta.size();
    const auto dz = gamma.size();
    if (zeta.size() != dz || psi.rows() != dz || psi.cols() != d) {
      throw Error(ErrorCode::DimensionMismatch, "OvbDGP: gamma, zeta, Psi dimensions are inconsistent");
    }
    if ((mu_x.size() != 0 && mu_x.size() != d) || (sigma_x.size() != 0 && sigma_x.size() != d) ||
        (z_noise_sd.size() != 0 && z_noise_sd.size() != dz)) {
      throw Error(ErrorCode::DimensionMismatch, "OvbDGP: covariate or Z-noise scales have wrong length");
    }
  }
};

struct ShortParams {
  double alpha = 0.0;
  Vector beta;
};

/// Short-regression (Y on X only) parameters implied by the long model.
inline ShortParams compose_short_params(const OvbDGP& dgp) {
  dgp.validate();
  return {dgp.omega + dgp.zeta.dot(dgp.gamma), dgp.theta + dgp.psi.transpose() * dgp.gamma};
}

struct OvbDeltas {
  // Difference-of-differences expressions dw + dzeta'dgamma, dtheta + dPsi'dgamma.
  double displayed_dalpha = 0.0;
  Vector displayed_dbeta;
  // alpha_H - alpha_K and beta_H - beta_K from compose_short_params.
  double exact_dalpha = 0.0;
  Vector exact_dbeta;

  double alpha_discrepancy() const { return displayed_dalpha - exact_dalpha; }
  double beta_discrepancy() const { return (displayed_dbeta - exact_dbeta).cwiseAbs().maxCoeff(); }
};

inline OvbDeltas ovb_deltas(const OvbDGP& dgp_h, const OvbDGP& dgp_k) {
  dgp_h.validate();
  dgp_k.validate();
  if (dgp_h.dim() != dgp_k.dim() || dgp_h.omitted_dim() != dgp_k.omitted_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "OvbDGPs have different dimensions");
  }
  const Vector dgamma = dgp_h.gamma - dgp_k.gamma;
  OvbDeltas out;
  out.displayed_dalpha = (dgp_h.omega - dgp_k.omega) + (dgp_h.zeta - dgp_k.zeta).dot(dgamma);
  out.displayed_dbeta = (dgp_h.theta - dgp_k.theta) + (dgp_h.psi - dgp_k.psi).transpose() * dgamma;
  const ShortParams sh = compose_short_params(dgp_h);
  const ShortParams sk = compose_short_params(dgp_k);
  out.exact_dalpha = sh.alpha - sk.alpha;
  out.exact_dbeta = sh.beta - sk.beta;
  return out;
}

// Rows are keyed by (seed, group, row) so the two groups never share a stream.
inline GroupSample gen_linear_group(const LinearDGP& dgp, std::ptrdiff_t n, std::uint64_t seed,
                                    Group label = Group::H) {
  dgp.validate();
  if (n < 1) throw Error(ErrorCode::TooFewRows, "n must be >= 1");
  const auto d = dgp.dim();
  GroupSample s{Matrix(n, d), Vector(n), label};
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto rng = KeyedStream::from(seed, static_cast<int>(label), static_cast<std::uint64_t>(i));
    std::normal_distribution<double> z;
    double y = dgp.alpha;
    for (std::ptrdiff_t j = 0; j < d; ++j) {
      const double x = dgp.mu_x(j) + dgp.sigma_x(j) * z(rng);
      s.covariates(i, j) = x;
      y += dgp.beta(j) * x;
    }
    s.outcome(i) = y + dgp.noise_sd * z(rng);
  }
  return s;
}

inline GroupSample gen_ovb_group(const OvbDGP& dgp, std::ptrdiff_t n, std::uint64_t seed, Group label = Group::H) {
  dgp.validate();
  if (n < 1) throw Error(ErrorCode::TooFewRows, "n must be >= 1");
  const auto d = dgp.dim();
  const auto dz = dgp.omitted_dim();
  const Vector mu = dgp.mu_x.size() ? dgp.mu_x : Vector::Zero(d);
  const Vector sd = dgp.sigma_x.size() ? dgp.sigma_x : Vector::Ones(d);
  const Vector zsd = dgp.z_noise_sd.size() ? dgp.z_noise_sd : Vector::Ones(dz);
  GroupSample s{Matrix(n, d), Vector(n), label};
  Vector x(d);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto rng = KeyedStream::from(seed, static_cast<int>(label), static_cast<std::uint64_t>(i));
    std::normal_distribution<double> z;
    for (std::ptrdiff_t j = 0; j < d; ++j) x(j) = mu(j) + sd(j) * z(rng);
    Vector zv = dgp.zeta + dgp.psi * x;
    for (std::ptrdiff_t j = 0; j < dz; ++j) zv(j) += zsd(j) * z(rng);
    s.covariates.row(i) = x.transpose();
    s.outcome(i) = dgp.omega + x.dot(dgp.theta) + zv.dot(dgp.gamma) + dgp.noise_sd * z(rng);
  }
  return s;
}

/*!
 * One keyed draw of a model pair with every alpha/beta coordinate
 * Uniform(-M, M). Standardized draws pin mu_K = 0 and mu_H = 1; otherwise
 * the means are drawn Uniform(-M, M) as well.
 */
inline std::pair<GroupModel, GroupModel> draw_uniform_params(std::ptrdiff_t d, double M, bool standardized,
                                                             std::uint64_t seed, std::uint64_t index) {
  if (d < 1) throw Error(ErrorCode::NonPositiveParameter, "d must be >= 1");
  if (!(M > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "M must be positive");
  auto rng = KeyedStream::from(seed, index);
  GroupModel h{0.0, Vector(d), Vector(d), Group::H};
  GroupModel k{0.0, Vector(d), Vector(d), Group::K};
  for (std::ptrdiff_t j = 0; j < d; ++j) h.beta(j) = rng.uniform(-M, M);
  for (std::ptrdiff_t j = 0; j < d; ++j) k.beta(j) = rng.uniform(-M, M);
  h.alpha = rng.uniform(-M, M);
  k.alpha = rng.uniform(-M, M);
  if (standardized) {
    h.mu.setOnes();
    k.mu.setZero();
  } else {
    for (std::ptrdiff_t j = 0; j < d; ++j) h.mu(j) = rng.uniform(-M, M);
    for (std::ptrdiff_t j = 0; j < d; ++j) k.mu(j) = rng.uniform(-M, M);
  }
  return {std::move(h), std::move(k)};
}

// SBP-on-BMI example: H mean BMI 25, K mean BMI 27, both sd 4, noise sd 5.
inline LinearDGP sbp_bmi_dgp(Group g) {
  LinearDGP dgp;
  dgp.mu_x = Vector::Constant(1, g == Group::H ? 25.0 : 27.0);
  dgp.sigma_x = Vector::Constant(1, 4.0);
  dgp.alpha = g == Group::H ? 110.4 : 100.0;
  dgp.beta = Vector::Constant(1, g == Group::H ? 1.0 : 1.4);
  dgp.noise_sd = 5.0;
  return dgp;
}

inline std::pair<GroupModel, GroupModel> sbp_bmi_population_models() {
  return {sbp_bmi_dgp(Group::H).population_model(Group::H), sbp_bmi_dgp(Group::K).population_model(Group::K)};
}

}  // namespace obflip
