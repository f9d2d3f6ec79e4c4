#include <gtest/gtest.h>

#include "idemq/ring.hpp"

using namespace idemq;

namespace {

std::shared_ptr<const RingSpec> one_var(bool truncated, bool divisible = true) {
  std::vector<std::vector<Weight>> q;
  if (truncated) q.push_back({Weight(1)});
  return std::make_shared<const RingSpec>(FieldSpec::rationals(), 2, std::vector<Variable>{{"T", divisible}}, q);
}

std::shared_ptr<const RingSpec> two_var_truncated() {
  return std::make_shared<const RingSpec>(
      FieldSpec::rationals(), 2, std::vector<Variable>{{"T1", true}, {"T2", true}},
      std::vector<std::vector<Weight>>{{Weight(1), Weight(0)}, {Weight(0), Weight(1)}});
}

}  // namespace

TEST(LevelRing, TruncatedLevelOneBasis) {
  auto r = make_level_ring(one_var(true), 1);
  std::vector<Weight> weights;
  r->enumerate(r->spec().scale() * 10, [&](const Multidegree& m) { weights.push_back(r->spec().weight(m)); });
  ASSERT_EQ(weights.size(), 2u);
  EXPECT_EQ(weights[0], Weight(0));
  EXPECT_EQ(weights[1], Weight(1, 2));
  EXPECT_EQ(r->dim_of_weight(Weight(1, 2)), 1u);
  EXPECT_EQ(r->dim_of_weight(Weight(1)), 0u);
}

TEST(LevelRing, LevelZeroIsPolynomialRing) {
  auto r = make_level_ring(one_var(false), 0);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(r->dim_of_weight(Weight(k)), 1u);
  EXPECT_EQ(r->dim_of_weight(Weight(1, 2)), 0u);
}

TEST(LevelRing, TwoVariableHalfWeightPiece) {
  auto r = make_level_ring(two_var_truncated(), 1);
  const auto& b = r->basis_of_weight(Weight(1, 2));
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(r->spec().monomial_str(b[0]), "T2^{1/2}");
  EXPECT_EQ(r->spec().monomial_str(b[1]), "T1^{1/2}");
}

TEST(RingSpec, RejectsBadExponents) {
  auto s = one_var(true);
  EXPECT_THROW(s->from_exponents({Weight(1, 3)}), std::invalid_argument);
  EXPECT_THROW(RingSpec(FieldSpec::rationals(), 2, {{"T", true}}, {{Weight(1, 2)}}), std::invalid_argument);
  EXPECT_THROW(RingSpec(FieldSpec::rationals(), 2, {{"T", true}}, {{Weight(0)}}), std::invalid_argument);
}

TEST(Idempotency, RootFamilyIsIdempotent) {
  auto s = one_var(false);
  auto res = check_idempotent(IdealFamily::roots("I", 1), *s, 2);
  EXPECT_EQ(res.verdict, IdempotencyResult::Verdict::Idempotent);
  EXPECT_EQ(res.depth_needed, 1);
  ASSERT_FALSE(res.factorizations.empty());
  EXPECT_EQ(res.factorizations[0], "T in (T^{1/2})*(T^{1/2})");
}

TEST(Idempotency, PrincipalIdealWithoutRootsIsNot) {
  auto s = one_var(false, false);
  IdealFamily I{"I", {{IdealGenerator::Kind::Fixed, 0, s->from_exponents({Weight(1)})}}};
  auto res = check_idempotent(I, *s, 2);
  EXPECT_EQ(res.verdict, IdempotencyResult::Verdict::NotIdempotent);
  EXPECT_EQ(res.witness, "T");
}

TEST(Idempotency, UnitIdeal) {
  auto s = one_var(true);
  IdealFamily I{"R", {{IdealGenerator::Kind::Fixed, 0, Multidegree(1)}}};
  EXPECT_EQ(check_idempotent(I, *s, 1).verdict, IdempotencyResult::Verdict::Idempotent);
  EXPECT_THROW(check_idempotent(I, *s, 0), std::invalid_argument);
}

TEST(Idempotency, FixedGeneratorCoveredByRoots) {
  auto s = one_var(false);
  IdealFamily I{"I", {{IdealGenerator::Kind::Fixed, 0, s->from_exponents({Weight(1, 2)})},
                      {IdealGenerator::Kind::Roots, 0, Multidegree(1)}}};
  EXPECT_EQ(check_idempotent(I, *s, 1).verdict, IdempotencyResult::Verdict::Idempotent);
}

TEST(LevelInclusion, ExamplesAndErrors) {
  auto s = one_var(true);
  auto r1 = make_level_ring(s, 1), r2 = make_level_ring(s, 2), r0 = make_level_ring(s, 0);
  auto inc = level_inclusion(r1, r2);
  auto half = s->from_exponents({Weight(1, 2)});
  auto img = inc(half);
  ASSERT_TRUE(img);
  auto quarter = s->from_exponents({Weight(1, 4)});
  EXPECT_EQ(*img, quarter + quarter);
  EXPECT_FALSE(inc(half + half));  // T = 0 in the truncated ring
  EXPECT_EQ(*level_inclusion(r0, r0)(Multidegree(1)), Multidegree(1));
  EXPECT_THROW(level_inclusion(r2, r1), std::invalid_argument);
  EXPECT_THROW(level_inclusion(r1, make_level_ring(one_var(false), 2)), std::invalid_argument);
}

TEST(RingProperties, WeightAdditivityAndInclusionIsAlgebraMap) {
  auto s = two_var_truncated();
  auto r1 = make_level_ring(s, 1), r2 = make_level_ring(s, 2);
  auto inc = level_inclusion(r1, r2);
  std::vector<Multidegree> basis;
  r1->enumerate(s->scale() * 3, [&](const Multidegree& m) { basis.push_back(m); });
  ASSERT_EQ(basis.size(), 4u);
  for (auto& a : basis)
    for (auto& b : basis) {
      auto p = a + b;
      if (!s->in_truncation(p)) {
        EXPECT_EQ(s->weight(p), s->weight(a) + s->weight(b));
        EXPECT_TRUE(r1->is_basis(p));
      }
      // phi(ab) = phi(a) phi(b), with zero on both sides together
      auto lhs = inc(p);
      auto fa = inc(a), fb = inc(b);
      ASSERT_TRUE(fa && fb);
      bool rhs_zero = s->in_truncation(*fa + *fb);
      EXPECT_EQ(!lhs.has_value(), rhs_zero);
      if (lhs) {
        EXPECT_EQ(*lhs, *fa + *fb);
      }
    }
}

TEST(RingProperties, RootSquaresCoverPreviousGenerators) {
  auto s = two_var_truncated();
  auto I = IdealFamily::roots("I", 2);
  for (int l = 1; l <= 4; ++l) {
    auto prev = make_level_ring(s, l - 1), cur = make_level_ring(s, l);
    auto gens = I.generators_at(*cur);
    for (auto& g : I.generators_at(*prev)) {
      bool covered = false;
      for (auto& a : gens)
        for (auto& b : gens) covered = covered || (a + b).divides(g);
      EXPECT_TRUE(covered) << s->monomial_str(g) << " at level " << l;
    }
  }
}
