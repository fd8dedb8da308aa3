#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>

#include "obflip/error.hpp"

namespace obflip {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Group { H, K };

constexpr std::string_view to_string(Group g) { return g == Group::H ? "H" : "K"; }
constexpr Group other(Group g) { return g == Group::H ? Group::K : Group::H; }

/// Observations for one group: n rows of d covariates plus the outcome.
struct GroupSample {
  Matrix covariates;
  Vector outcome;
  Group label = Group::H;

  std::ptrdiff_t rows() const { return covariates.rows(); }
  std::ptrdiff_t dim() const { return covariates.cols(); }

  void validate() const {
    if (covariates.rows() != outcome.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "covariate rows (" + std::to_string(covariates.rows()) + ") != outcome length (" +
                      std::to_string(outcome.size()) + ")");
    }
    if (!covariates.allFinite() || !outcome.allFinite()) {
      throw Error(ErrorCode::NonFiniteValue, "sample for group " + std::string(to_string(label)) +
                                                 " contains non-finite entries");
    }
  }
};

/// Linear conditional-mean model E_g[Y | X] = alpha + X^T beta with covariate mean mu.
struct GroupModel {
  double alpha = 0.0;
  Vector beta;
  Vector mu;
  Group label = Group::H;

  std::ptrdiff_t dim() const { return beta.size(); }

  double predict(const Vector& x) const { return alpha + x.dot(beta); }

  // Mean outcome implied by the model at its own covariate mean.
  double mean_outcome() const { return alpha + mu.dot(beta); }

  void validate() const {
    if (beta.size() != mu.size()) {
      throw Error(ErrorCode::DimensionMismatch, "beta has dimension " + std::to_string(beta.size()) +
                                                    " but mu has " + std::to_string(mu.size()));
    }
    if (!std::isfinite(alpha) || !beta.allFinite() || !mu.allFinite()) {
      throw Error(ErrorCode::NonFiniteValue, "model for group " + std::string(to_string(label)) +
                                                 " has non-finite parameters");
    }
  }
};

inline GroupModel make_model(double alpha, Vector beta, Vector mu, Group label) {
  GroupModel m{alpha, std::move(beta), std::move(mu), label};
  m.validate();
  return m;
}

inline void require_same_dim(const GroupModel& a, const GroupModel& b) {
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "models have dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
}

// ---------------------------------------------------------------------------
// Ordinary least squares

struct OlsOptions {
  double max_condition = 1e10;
};

struct OlsFit {
  GroupModel model;
  Vector residuals;
  Vector fitted;
  double condition_number = 0.0;  // of the column-equilibrated design [1 | X]
  // Linear probability model diagnostic: fitted values outside [0, 1] when
  // the outcome is 0/1. Predictions are never clipped.
  bool binary_outcome = false;
  std::ptrdiff_t fitted_outside_unit = 0;
};

/*!
 * Fit alpha, beta by least squares with an implicit intercept column.
 *
 * Solves through a column-pivoted Householder QR of the design with every
 * column scaled to unit norm; the condition number is taken from the
 * singular values of the resulting R factor. Constant covariate columns
 * duplicate the intercept and are rejected as rank deficient.
 */
inline OlsFit fit_ols_detailed(const GroupSample& sample, const OlsOptions& opts = {}) {
  sample.validate();
  const std::ptrdiff_t n = sample.rows();
  const std::ptrdiff_t d = sample.dim();
  if (n < d + 2) {
    throw Error(ErrorCode::TooFewRows, "group " + std::string(to_string(sample.label)) + " has " +
                                           std::to_string(n) + " rows; need at least " +
                                           std::to_string(d + 2));
  }

  Matrix design(n, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = sample.covariates;

  for (std::ptrdiff_t j = 0; j < d; ++j) {
    const auto col = sample.covariates.col(j);
    if ((col.array() == col(0)).all()) {
      throw Error(ErrorCode::RankDeficient,
                  "covariate column " + std::to_string(j) + " is constant (duplicates the intercept)");
    }
  }

  Vector col_norm = design.colwise().norm().transpose();
  for (std::ptrdiff_t j = 0; j <= d; ++j) {
    if (col_norm(j) == 0.0) col_norm(j) = 1.0;
  }
  const Matrix scaled = design * col_norm.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
  const Matrix r = qr.matrixR().topLeftCorner(d + 1, d + 1).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Matrix> svd(r);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < opts.max_condition)) {
    throw Error(ErrorCode::RankDeficient, "design condition number " + std::to_string(cond) +
                                              " exceeds " + std::to_string(opts.max_condition) +
                                              " (collinear covariates)");
  }

  const Vector coef_scaled = qr.solve(sample.outcome);
  const Vector coef = coef_scaled.cwiseQuotient(col_norm);

  OlsFit fit;
  fit.model.alpha = coef(0);
  fit.model.beta = coef.tail(d);
  fit.model.mu = sample.covariates.colwise().mean().transpose();
  fit.model.label = sample.label;
  fit.fitted = design * coef;
  fit.residuals = sample.outcome - fit.fitted;
  fit.condition_number = cond;
  fit.binary_outcome = (sample.outcome.array() == 0.0 || sample.outcome.array() == 1.0).all();
  if (fit.binary_outcome) {
    fit.fitted_outside_unit = (fit.fitted.array() < 0.0 || fit.fitted.array() > 1.0).count();
  }
  return fit;
}

inline GroupModel fit_ols(const GroupSample& sample, const OlsOptions& opts = {}) {
  return fit_ols_detailed(sample, opts).model;
}

// ---------------------------------------------------------------------------
// Units

/// Affine change of covariate units x -> (x - shift) / scale, elementwise.
struct UnitTransform {
  Vector shift;
  Vector scale;

  std::ptrdiff_t dim() const { return shift.size(); }

  Vector apply(const Vector& x) const { return (x - shift).cwiseQuotient(scale); }
  Vector invert(const Vector& xt) const { return xt.cwiseProduct(scale) + shift; }

  static UnitTransform identity(std::ptrdiff_t d) {
    return {Vector::Zero(d), Vector::Ones(d)};
  }
};

/// Units in which mu_K maps to 0 and mu_H maps to 1.
inline UnitTransform standardize_units(const Vector& mu_h, const Vector& mu_k) {
  if (mu_h.size() != mu_k.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mean vectors differ in length");
  }
  for (std::ptrdiff_t j = 0; j < mu_h.size(); ++j) {
    if (mu_h(j) == mu_k(j)) {
      throw Error(ErrorCode::DegenerateMeans,
                  "coordinate " + std::to_string(j + 1) + " has equal group means (" + std::to_string(mu_h(j)) + ")");
    }
  }
  return {mu_k, mu_h - mu_k};
}

inline GroupModel transform_model(const GroupModel& model, const UnitTransform& t) {
  model.validate();
  if (model.dim() != t.dim() || t.scale.size() != t.shift.size()) {
    throw Error(ErrorCode::DimensionMismatch, "transform dimension " + std::to_string(t.dim()) +
                                                  " does not match model dimension " +
                                                  std::to_string(model.dim()));
  }
  GroupModel out;
  out.label = model.label;
  out.beta = model.beta.cwiseProduct(t.scale);
  out.alpha = model.alpha + model.beta.dot(t.shift);
  out.mu = t.apply(model.mu);
  return out;
}

}  // namespace obflip
