#include <gtest/gtest.h>

#include <cmath>

#include "obflip/decomposition.hpp"
#include "obflip/signflip.hpp"
#include "support.hpp"

using namespace obflip;
using obflip::test::vec;

TEST(CounterfactualMean, SbpBmiCompositions) {
  const auto [h, k] = test::sbp_bmi_models();
  EXPECT_NEAR(counterfactual_mean(h, k.mu), 137.4, 1e-12);
  EXPECT_NEAR(counterfactual_mean(h, h.mu), 135.4, 1e-12);
  EXPECT_NEAR(h.mean_outcome(), 135.4, 1e-12);
}

TEST(CounterfactualMean, ZeroSlopeReturnsIntercept) {
  const auto m = make_model(3.5, vec({0, 0}), vec({1, 2}), Group::H);
  EXPECT_EQ(counterfactual_mean(m, vec({100, -7})), 3.5);
}

TEST(CounterfactualMean, DimensionMismatch) {
  const auto [h, k] = test::sbp_bmi_models();
  EXPECT_THROW(counterfactual_mean(h, vec({1, 2})), Error);
}

TEST(Decompose, SbpBmiReferenceH) {
  const auto [h, k] = test::sbp_bmi_models();
  const auto r = decompose(h, k, Group::H);
  EXPECT_NEAR(r.explained, -2.0, 1e-9);
  EXPECT_NEAR(r.unexplained, -0.4, 1e-9);
  EXPECT_NEAR(r.total_gap, -2.4, 1e-9);
}

TEST(Decompose, SbpBmiReferenceK) {
  const auto [h, k] = test::sbp_bmi_models();
  const auto r = decompose(h, k, Group::K);
  EXPECT_NEAR(r.explained, -2.8, 1e-9);
  EXPECT_NEAR(r.unexplained, 0.4, 1e-9);
  EXPECT_NEAR(r.total_gap, -2.4, 1e-9);
}

TEST(Decompose, IdenticalConditionalModels) {
  const auto h = make_model(1.0, vec({2, -1}), vec({3, 4}), Group::H);
  const auto k = make_model(1.0, vec({2, -1}), vec({1, 1}), Group::K);
  for (Group g : {Group::H, Group::K}) {
    const auto r = decompose(h, k, g);
    EXPECT_EQ(r.unexplained, 0.0);
    EXPECT_NEAR(r.explained, r.total_gap, 1e-12);
  }
}

TEST(Decompose, ExplainedTermsSumToExplained) {
  const auto [h, k] = test::hr_quartile2_models();
  const auto dd = decompose_both(h, k);
  EXPECT_NEAR(dd.by_h.explained_terms.sum(), dd.by_h.explained, 1e-12);
  EXPECT_NEAR(dd.by_k.explained_terms.sum(), dd.by_k.explained, 1e-12);
}

TEST(Decompose, UnboundedGapConstructionL20) {
  const auto [h, k] = unbounded_gap_instance(20, 0.1);
  const auto dd = decompose_both(h, k);
  EXPECT_NEAR(dd.by_h.explained, 2, 1e-12);
  EXPECT_NEAR(dd.by_k.explained, 0, 1e-12);
  EXPECT_NEAR(dd.by_h.unexplained, -1, 1e-12);
  EXPECT_NEAR(dd.by_k.unexplained, 1, 1e-12);
}

TEST(DecomposeBoth, SbpBmiBothRows) {
  const auto [h, k] = test::sbp_bmi_models();
  const auto dd = decompose_both(h, k);
  EXPECT_NEAR(dd.by_h.explained, -2.0, 1e-9);
  EXPECT_NEAR(dd.by_h.unexplained, -0.4, 1e-9);
  EXPECT_NEAR(dd.by_k.explained, -2.8, 1e-9);
  EXPECT_NEAR(dd.by_k.unexplained, 0.4, 1e-9);
  EXPECT_EQ(dd.by_h.total_gap, dd.by_k.total_gap);
}

TEST(DecomposeBoth, HrQuartile2Explained) {
  const auto [men, women] = test::hr_quartile2_models();
  const auto dd = decompose_both(men, women);
  EXPECT_NEAR(dd.by_k.explained, 0.021, 0.002);   // women reference
  EXPECT_NEAR(dd.by_h.explained, -0.007, 0.002);  // men reference
}

TEST(DecomposeBoth, IdenticalEverythingIsZero) {
  const auto h = make_model(2.0, vec({1, 3}), vec({0.5, 0.5}), Group::H);
  auto k = h;
  k.label = Group::K;
  const auto dd = decompose_both(h, k);
  for (Group g : {Group::H, Group::K}) {
    EXPECT_EQ(dd.by(g).explained, 0.0);
    EXPECT_EQ(dd.by(g).unexplained, 0.0);
    EXPECT_EQ(dd.by(g).total_gap, 0.0);
  }
}

TEST(DecompositionProperties, AdditivityCrossReferenceAndSymmetry) {
  auto rng = KeyedStream::from(31);
  for (int rep = 0; rep < 10000; ++rep) {
    const std::ptrdiff_t d = 1 + rep % 10;
    const auto [h, k] = test::random_pair(d, 5.0, rng);
    const auto dd = decompose_both(h, k);
    const double tol = 1e-9 * std::max(1.0, std::abs(dd.by_h.total_gap));
    EXPECT_NEAR(dd.by_h.explained + dd.by_h.unexplained, dd.by_h.total_gap, tol);
    EXPECT_NEAR(dd.by_k.explained + dd.by_k.unexplained, dd.by_k.total_gap, tol);
    EXPECT_EQ(dd.by_h.total_gap, dd.by_k.total_gap);

    const double dmu_dbeta = (h.mu - k.mu).dot(h.beta - k.beta);
    const double scale = std::max(1.0, std::abs(dmu_dbeta));
    EXPECT_NEAR(dd.by_h.explained - dd.by_k.explained, dmu_dbeta, 1e-9 * scale);
    EXPECT_NEAR(dd.by_k.unexplained - dd.by_h.unexplained, dmu_dbeta, 1e-9 * scale);

    // Swap the labels: the gap negates and the references trade places.
    auto h2 = k, k2 = h;
    h2.label = Group::H;
    k2.label = Group::K;
    const auto sw = decompose_both(h2, k2);
    EXPECT_NEAR(sw.by_h.total_gap, -dd.by_h.total_gap, tol);
    EXPECT_NEAR(sw.by_h.explained, -dd.by_k.explained, tol);
    EXPECT_NEAR(sw.by_k.explained, -dd.by_h.explained, tol);
    EXPECT_NEAR(sw.by_h.unexplained, -dd.by_k.unexplained, tol);
    EXPECT_NEAR(sw.by_k.unexplained, -dd.by_h.unexplained, tol);
    if (HasFailure()) FAIL() << "rep " << rep;
  }
}

TEST(DecompositionProperties, UnboundedGapScalingLaw) {
  struct Row {
    double L, eh, ek, uh, uk;
  };
  for (const Row& row : {Row{20, 2, 0, -1, 1}, Row{200, 11, -9, -10, 10}, Row{1000, 51, -49, -50, 50}}) {
    const auto [h, k] = unbounded_gap_instance(row.L, 0.1);
    const auto dd = decompose_both(h, k);
    const double tol = 1e-12 * row.L;
    EXPECT_NEAR(dd.by_h.explained - dd.by_k.explained, row.L * 0.1, tol) << row.L;
    EXPECT_NEAR(dd.by_h.explained, row.eh, tol) << row.L;
    EXPECT_NEAR(dd.by_k.explained, row.ek, tol) << row.L;
    EXPECT_NEAR(dd.by_h.unexplained, row.uh, tol) << row.L;
    EXPECT_NEAR(dd.by_k.unexplained, row.uk, tol) << row.L;
    EXPECT_NEAR(dd.by_h.total_gap, 1.0, tol) << row.L;
  }
}
