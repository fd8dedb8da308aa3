#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "obflip/decomposition.hpp"
#include "obflip/model.hpp"

namespace obflip {

enum class Sign { Negative = -1, Zero = 0, Positive = 1 };

constexpr std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::Negative: return "-";
    case Sign::Zero: return "0";
    case Sign::Positive: return "+";
  }
  return "?";
}

inline constexpr double kSignRelTol = 1e-12;

// |x| <= tol * max(1, scale) counts as Zero. `scale` is the magnitude of the
// terms that were summed to produce x, so cancellation noise is absorbed.
inline Sign sign_of(double x, double scale = 0.0, double rel_tol = kSignRelTol) {
  const double tau = rel_tol * std::max(1.0, std::abs(scale));
  if (std::abs(x) <= tau) return Sign::Zero;
  return x > 0 ? Sign::Positive : Sign::Negative;
}

enum class Verdict { NoFlip, Flip, Boundary };

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::NoFlip: return "no_flip";
    case Verdict::Flip: return "flip";
    case Verdict::Boundary: return "boundary";
  }
  return "?";
}

/// The scalar quantities every characterization is built from.
struct FlipQuantities {
  double dmu_beta_h = 0.0;  // explained under reference H
  double dmu_beta_k = 0.0;  // explained under reference K
  double mu_h_dbeta = 0.0;
  double mu_k_dbeta = 0.0;
  double dalpha = 0.0;
  // Sums of absolute term magnitudes, used as sign tolerance scales.
  double scale_dmu_beta_h = 0.0;
  double scale_dmu_beta_k = 0.0;
  double scale_mu_h_dbeta = 0.0;
  double scale_mu_k_dbeta = 0.0;

  double unexplained_h() const { return mu_k_dbeta + dalpha; }
  double unexplained_k() const { return mu_h_dbeta + dalpha; }
  double scale_unexplained_h() const { return scale_mu_k_dbeta + std::abs(dalpha); }
  double scale_unexplained_k() const { return scale_mu_h_dbeta + std::abs(dalpha); }
};

inline FlipQuantities flip_quantities(const GroupModel& model_h, const GroupModel& model_k) {
  require_same_dim(model_h, model_k);
  const Vector dmu = model_h.mu - model_k.mu;
  const Vector dbeta = model_h.beta - model_k.beta;
  FlipQuantities q;
  q.dmu_beta_h = dmu.dot(model_h.beta);
  q.dmu_beta_k = dmu.dot(model_k.beta);
  q.mu_h_dbeta = model_h.mu.dot(dbeta);
  q.mu_k_dbeta = model_k.mu.dot(dbeta);
  q.dalpha = model_h.alpha - model_k.alpha;
  q.scale_dmu_beta_h = dmu.cwiseProduct(model_h.beta).cwiseAbs().sum();
  q.scale_dmu_beta_k = dmu.cwiseProduct(model_k.beta).cwiseAbs().sum();
  q.scale_mu_h_dbeta = model_h.mu.cwiseProduct(dbeta).cwiseAbs().sum();
  q.scale_mu_k_dbeta = model_k.mu.cwiseProduct(dbeta).cwiseAbs().sum();
  return q;
}

struct ComponentFlip {
  Verdict verdict = Verdict::NoFlip;  // sign-comparison (definition) form
  bool alternative_form = false;      // interval characterization
  bool agree = true;
  bool flip() const { return verdict == Verdict::Flip; }
};

// Sign comparison of the two references' values. A Zero on either side is
// reported as Boundary rather than a flip.
inline Verdict compare_signs(Sign a, Sign b) {
  if (a == Sign::Zero || b == Sign::Zero) return Verdict::Boundary;
  return a != b ? Verdict::Flip : Verdict::NoFlip;
}

inline ComponentFlip explained_flip(const FlipQuantities& q) {
  ComponentFlip out;
  const Sign sh = sign_of(q.dmu_beta_h, q.scale_dmu_beta_h);
  const Sign sk = sign_of(q.dmu_beta_k, q.scale_dmu_beta_k);
  out.verdict = compare_signs(sh, sk);
  // Strict ordering form: values differ and zero lies strictly between them.
  const double lo = std::min(q.dmu_beta_h, q.dmu_beta_k);
  const double hi = std::max(q.dmu_beta_h, q.dmu_beta_k);
  out.alternative_form = q.dmu_beta_h != q.dmu_beta_k && lo < 0.0 && 0.0 < hi;
  out.agree = out.flip() == out.alternative_form;
  return out;
}

inline ComponentFlip explained_flip(const GroupModel& model_h, const GroupModel& model_k) {
  return explained_flip(flip_quantities(model_h, model_k));
}

inline ComponentFlip unexplained_flip(const FlipQuantities& q) {
  ComponentFlip out;
  const Sign sh = sign_of(q.unexplained_h(), q.scale_unexplained_h());
  const Sign sk = sign_of(q.unexplained_k(), q.scale_unexplained_k());
  out.verdict = compare_signs(sh, sk);
  // -dalpha strictly inside the open interval spanned by mu_H'dbeta and mu_K'dbeta.
  const double lo = std::min(q.mu_h_dbeta, q.mu_k_dbeta);
  const double hi = std::max(q.mu_h_dbeta, q.mu_k_dbeta);
  out.alternative_form = q.mu_h_dbeta != q.mu_k_dbeta && lo < -q.dalpha && -q.dalpha < hi;
  out.agree = out.flip() == out.alternative_form;
  return out;
}

inline ComponentFlip unexplained_flip(const GroupModel& model_h, const GroupModel& model_k) {
  return unexplained_flip(flip_quantities(model_h, model_k));
}

inline bool alignment_holds(const FlipQuantities& q) {
  const Sign sa = sign_of(q.dalpha);
  const Sign sh = sign_of(q.mu_h_dbeta, q.scale_mu_h_dbeta);
  const Sign sk = sign_of(q.mu_k_dbeta, q.scale_mu_k_dbeta);
  return sa != Sign::Zero && sa == sh && sh == sk;
}

inline bool alignment_holds(const GroupModel& model_h, const GroupModel& model_k) {
  return alignment_holds(flip_quantities(model_h, model_k));
}

struct BranchStep {
  std::string predicate;
  bool outcome = false;
  std::string detail;  // the numbers the predicate was evaluated on
};

struct FlipReport {
  FlipQuantities quantities;
  ComponentFlip explained;
  ComponentFlip unexplained;
  bool tree_verdict = false;
  std::vector<BranchStep> branch_trace;
  bool alignment = false;
  std::vector<std::string> notes;

  bool explained_flip() const { return explained.flip(); }
  bool unexplained_flip() const { return unexplained.flip(); }
  bool characterizations_agree() const {
    return explained.agree && unexplained.agree && tree_verdict == unexplained.flip();
  }
};

namespace detail {

inline std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace detail

/*!
 * Walk the published decision tree for an unexplained-component flip.
 *
 * Every predicate visited is appended to the trace in evaluation order.
 * Returns the tree's verdict.
 */
inline bool walk_unexplained_tree(const FlipQuantities& q, std::vector<BranchStep>* trace = nullptr) {
  using detail::fmt_num;
  const double a = q.mu_h_dbeta;
  const double b = q.mu_k_dbeta;
  const double aa = std::abs(a);
  const double ab = std::abs(b);
  const double ad = std::abs(q.dalpha);
  const Sign sa = sign_of(a, q.scale_mu_h_dbeta);
  const Sign sb = sign_of(b, q.scale_mu_k_dbeta);
  const Sign sd = sign_of(q.dalpha);

  auto record = [&](std::string pred, bool outcome, std::string detail) {
    if (trace) trace->push_back({std::move(pred), outcome, std::move(detail)});
    return outcome;
  };

  const bool differ = sign_of(a - b, q.scale_mu_h_dbeta + q.scale_mu_k_dbeta) != Sign::Zero;
  if (!record("mu_H'dbeta != mu_K'dbeta", differ, fmt_num(a) + " vs " + fmt_num(b))) {
    return false;
  }
  if (record("sign(mu_H'dbeta) == sign(mu_K'dbeta)", sa == sb,
             std::string(to_string(sa)) + " vs " + std::string(to_string(sb)))) {
    if (!record("sign(dalpha) != sign(mu_H'dbeta)", sd != sa,
                std::string(to_string(sd)) + " vs " + std::string(to_string(sa)))) {
      return false;
    }
    const bool inside = (aa < ad && ad < ab) || (ab < ad && ad < aa);
    return record("|mu_H'dbeta| < |dalpha| < |mu_K'dbeta| or |mu_K'dbeta| < |dalpha| < |mu_H'dbeta|", inside,
                  aa < ab ? fmt_num(aa) + " < " + fmt_num(ad) + " < " + fmt_num(ab)
                          : fmt_num(ab) + " < " + fmt_num(ad) + " < " + fmt_num(aa));
  }
  record("sign(mu_H'dbeta) != sign(mu_K'dbeta)", true,
         std::string(to_string(sa)) + " vs " + std::string(to_string(sb)));
  if (record("sign(dalpha) == sign(mu_H'dbeta) and |mu_K'dbeta| > |dalpha|", sd == sa && ab > ad,
             "|mu_K'dbeta|=" + fmt_num(ab) + ", |dalpha|=" + fmt_num(ad))) {
    return true;
  }
  return record("sign(dalpha) != sign(mu_H'dbeta) and |mu_H'dbeta| > |dalpha|", sd != sa && aa > ad,
                "|mu_H'dbeta|=" + fmt_num(aa) + ", |dalpha|=" + fmt_num(ad));
}

inline FlipReport decision_tree_unexplained(const GroupModel& model_h, const GroupModel& model_k) {
  FlipReport r;
  r.quantities = flip_quantities(model_h, model_k);
  r.explained = explained_flip(r.quantities);
  r.unexplained = unexplained_flip(r.quantities);
  r.tree_verdict = walk_unexplained_tree(r.quantities, &r.branch_trace);
  r.alignment = alignment_holds(r.quantities);
  if (r.explained.verdict == Verdict::Boundary) {
    r.notes.emplace_back("explained component is zero under at least one reference; reported as boundary");
  }
  if (r.unexplained.verdict == Verdict::Boundary) {
    r.notes.emplace_back("unexplained component is zero under at least one reference; reported as boundary");
  }
  if (!r.characterizations_agree()) {
    r.notes.emplace_back("characterizations disagree (values within rounding of a sign boundary)");
  }
  return r;
}

inline FlipReport flip_report(const GroupModel& model_h, const GroupModel& model_k) {
  return decision_tree_unexplained(model_h, model_k);
}

/// d = 1 pair with fixed gap 1 whose reference disagreement grows as L * eps.
/// alpha_H = -L*eps/2 offsets the slope difference so the gap stays at 1.
inline std::pair<GroupModel, GroupModel> unbounded_gap_instance(double L, double eps) {
  if (!(L > 0.0) || !(eps > 0.0)) {
    throw Error(ErrorCode::NonPositiveParameter,
                "L and eps must be positive (got L=" + detail::fmt_num(L) + ", eps=" + detail::fmt_num(eps) + ")");
  }
  GroupModel h{-L * eps / 2.0, Vector::Constant(1, 1.0 / L + eps / 2.0), Vector::Constant(1, L), Group::H};
  GroupModel k{0.0, Vector::Constant(1, 1.0 / L - eps / 2.0), Vector::Constant(1, 0.0), Group::K};
  return {std::move(h), std::move(k)};
}

}  // namespace obflip
