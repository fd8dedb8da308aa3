#pragma once

#include <cmath>
#include <string>

#include "obflip/model.hpp"

namespace obflip {

/// One Oaxaca-Blinder decomposition. The gap is always E_H[Y] - E_K[Y].
struct DecompositionResult {
  Group reference = Group::H;
  double explained = 0.0;
  double unexplained = 0.0;
  double total_gap = 0.0;
  // alpha_ref + mu_other^T beta_ref: the other group's mean under the reference model.
  double counterfactual_mean = 0.0;
  // Per-covariate diagnostic dmu_c * beta_ref,c; sums to `explained`.
  Vector explained_terms;
};

struct DualDecomposition {
  DecompositionResult by_h;
  DecompositionResult by_k;

  const DecompositionResult& by(Group ref) const { return ref == Group::H ? by_h : by_k; }
};

/// M_{g',g} = alpha_g + mu_{g'}^T beta_g.
inline double counterfactual_mean(const GroupModel& model, const Vector& mu_other) {
  model.validate();
  if (mu_other.size() != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "mean vector has length " + std::to_string(mu_other.size()) +
                                                  ", model dimension is " + std::to_string(model.dim()));
  }
  return model.alpha + mu_other.dot(model.beta);
}

inline DecompositionResult decompose(const GroupModel& model_h, const GroupModel& model_k, Group reference) {
  require_same_dim(model_h, model_k);
  const Vector dmu = model_h.mu - model_k.mu;
  const Vector dbeta = model_h.beta - model_k.beta;
  const double dalpha = model_h.alpha - model_k.alpha;

  DecompositionResult r;
  r.reference = reference;
  r.total_gap = dalpha + model_h.mu.dot(model_h.beta) - model_k.mu.dot(model_k.beta);
  if (reference == Group::H) {
    r.explained_terms = dmu.cwiseProduct(model_h.beta);
    r.explained = dmu.dot(model_h.beta);
    r.unexplained = model_k.mu.dot(dbeta) + dalpha;
    r.counterfactual_mean = counterfactual_mean(model_h, model_k.mu);
  } else {
    r.explained_terms = dmu.cwiseProduct(model_k.beta);
    r.explained = dmu.dot(model_k.beta);
    r.unexplained = model_h.mu.dot(dbeta) + dalpha;
    r.counterfactual_mean = counterfactual_mean(model_k, model_h.mu);
  }
  return r;
}

inline DualDecomposition decompose_both(const GroupModel& model_h, const GroupModel& model_k) {
  return {decompose(model_h, model_k, Group::H), decompose(model_h, model_k, Group::K)};
}

}  // namespace obflip
