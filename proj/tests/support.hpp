#pragma once

#include <utility>

#include "obflip/model.hpp"
#include "obflip/rng.hpp"

namespace obflip::test {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<std::ptrdiff_t>(xs.size()));
  std::ptrdiff_t i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// SBP on BMI populations: H mean BMI 25, K mean BMI 27.
inline std::pair<GroupModel, GroupModel> sbp_bmi_models() {
  return {make_model(110.4, vec({1.0}), vec({25.0}), Group::H), make_model(100.0, vec({1.4}), vec({27.0}), Group::K)};
}

// HR quartile 2: H = men, K = women, mu_K = 0 so mu_H carries the mean differences.
inline std::pair<GroupModel, GroupModel> hr_quartile2_models() {
  const Vector dmu = vec({3.8938, 0.0095, 0.4982, -0.6669, 0.3604, -39.8976});
  const Vector beta_men = vec({-0.0000, 0.0173, -0.0026, 0.0004, -0.0230, -0.0001});
  const Vector beta_women = vec({0.0039, 0.0116, 0.0056, 0.0010, 0.0028, -0.0001});
  return {make_model(1.1813, beta_men, dmu, Group::H), make_model(-0.8515, beta_women, Vector::Zero(6), Group::K)};
}

// Independent uniform model pair on [-M, M] for property tests.
inline std::pair<GroupModel, GroupModel> random_pair(std::ptrdiff_t d, double M, KeyedStream& rng) {
  auto draw = [&] {
    Vector v(d);
    for (std::ptrdiff_t i = 0; i < d; ++i) v(i) = rng.uniform(-M, M);
    return v;
  };
  Vector bh = draw(), bk = draw(), mh = draw(), mk = draw();
  const double ah = rng.uniform(-M, M), ak = rng.uniform(-M, M);
  return {make_model(ah, bh, mh, Group::H), make_model(ak, bk, mk, Group::K)};
}

}  // namespace obflip::test
