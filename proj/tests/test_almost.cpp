#include <gtest/gtest.h>

#include <random>

#include "idemq/almost.hpp"
#include "test_util.hpp"

using namespace idemq;
using namespace idemq::testing;

namespace {

using Q = RationalField;

Bounds bounds(int N) {
  Bounds b;
  b.deg_max = N;
  return b;
}

LevelSystem<Q> module_levels(std::shared_ptr<const RingSpec> s, ModuleFamily<Q> m, int d_max, const Bounds& b) {
  auto ms = std::make_shared<ModuleSystem<Q>>(s, std::move(m), d_max, b.cap(*s));
  return {[ms](int l) { return ms->res(l).complex; }, [ms](int l) { return ms->lambda(l); }};
}

IdealFamily fixed(const RingSpec& s, std::vector<Weight> e, std::string name = "J") {
  return {name, {{IdealGenerator::Kind::Fixed, 0, s.from_exponents(e)}}};
}

}  // namespace

TEST(AlmostZero, ResidueFieldAndUnit) {
  Q q;
  auto s = rn_spec(1, true);
  auto I = IdealFamily::roots("I", 1);
  auto b = bounds(1);
  auto k = module_levels(s, residue_family(q), 2, b);
  auto vk = is_almost_zero(k, I, 0, 1, b);
  EXPECT_TRUE(vk.all());
  EXPECT_TRUE(vk.all_stable());
  EXPECT_TRUE(tensor_zero_criterion(k, I, 0, 1, b).all());

  auto r = module_levels(s, free_family(q), 2, b);
  auto vr = is_almost_zero(r, I, 0, 0, b);
  EXPECT_FALSE(vr.all());
  EXPECT_FALSE(vr.witness[0].empty());
  EXPECT_FALSE(tensor_zero_criterion(r, I, 0, 0, b).all());
}

TEST(AlmostZero, QuotientByNonIdempotentSquare) {
  // R/T^2 over untruncated K[T^{1/2^oo}] with I = (T): T does not kill 1, so not almost zero.
  // R/T is killed by I = (T), yet I (x) R/T = I/I^2 != 0: without idempotency the criteria differ.
  Q q;
  auto s = rn_spec(1, false);
  auto T = fixed(*s, {Weight(1)}, "T");
  auto b = bounds(0);
  auto sq = module_levels(s, quotient_family(q, fixed(*s, {Weight(2)})), 1, b);
  EXPECT_FALSE(is_almost_zero(sq, T, 0, 0, b).all());
  EXPECT_FALSE(tensor_zero_criterion(sq, T, 0, 0, b).all());
  auto one = module_levels(s, quotient_family(q, fixed(*s, {Weight(1)})), 1, b);
  EXPECT_TRUE(is_almost_zero(one, T, 0, 0, b).all());
  EXPECT_FALSE(tensor_zero_criterion(one, T, 0, 0, b).all());
}

TEST(AlmostZero, RootQuotientIsNotAlmostZero) {
  // R/(T^{1/2}) is killed by T^{1/2} but not by T^{1/4}
  Q q;
  auto s = rn_spec(1, false);
  auto b = bounds(0);
  auto m = module_levels(s, quotient_family(q, fixed(*s, {Weight(1, 2)})), 1, b);
  auto I = IdealFamily::roots("I", 1);
  EXPECT_FALSE(is_almost_zero(m, I, 0, 0, b).all());
  EXPECT_FALSE(tensor_zero_criterion(m, I, 0, 0, b).all());
}

TEST(AlmostZero, CriteriaAgreeOnRandomModules) {
  Q q;
  std::mt19937_64 rng(17);
  auto b = bounds(0);
  b.weight_max = Weight(2);
  for (int it = 0; it < 12; ++it) {
    bool trunc = rng() % 2;
    auto s = rn_spec(1 + rng() % 2, trunc);
    std::size_t n = s->num_vars();
    IdealFamily J{"J", {}};
    std::uniform_int_distribution<int> ex(0, 4);
    for (int g = 0; g < 2; ++g) {
      std::vector<Weight> e(n);
      for (auto& w : e) w = Weight(ex(rng), 4);
      if (s->from_exponents(e).total() == 0) e[0] = Weight(1, 4);
      J.gens.push_back({IdealGenerator::Kind::Fixed, 0, s->from_exponents(e)});
    }
    auto m = module_levels(s, quotient_family(q, J), 1, b);
    auto I = IdealFamily::roots("I", n);
    auto a = is_almost_zero(m, I, 0, 0, b);
    auto t = tensor_zero_criterion(m, I, 0, 0, b);
    EXPECT_TRUE(a.same_verdicts(t)) << "instance " << it << ": " << a.witness[0] << " / " << t.witness[0];
  }
}

TEST(IinftyTensor, ResidueFieldVanishesButIdealTensorDoesNot) {
  Q q;
  auto s = rn_spec(1, true);
  auto I = IdealFamily::roots("I", 1);
  auto b = bounds(2);
  auto v = iinfty_tensor_vanishes(q, s, I, residue_family(q), b);
  EXPECT_TRUE(v.vanishes);
  auto tor = stabilized_tor(q, s, ideal_family(q, I), residue_family(q), b);
  EXPECT_GT(tor.total(1), 0u);
  // sums of shifted copies of K
  auto shifted = iinfty_tensor_vanishes(q, s, I, shifted_residue_family(q, {{Weight(0)}, {Weight(1, 2)}}), b);
  EXPECT_TRUE(shifted.vanishes);
  // M = R does not vanish
  EXPECT_FALSE(iinfty_tensor_vanishes(q, s, I, free_family(q), b).vanishes);
}

TEST(AlmostEquivalence, Examples) {
  Q q;
  auto s = rn_spec(1, true);
  auto I = IdealFamily::roots("I", 1);
  auto b = bounds(2);
  auto tower = std::make_shared<TowerBundle<Q>>(q, s, I, 4, 3, b.cap(*s));
  // eps_n: X_n -> R has cone Q_n, whose homology is almost zero
  EXPECT_TRUE(is_almost_equivalence(epsilon_map_system(tower, 4), I, 0, 2, b).all());
  auto k = module_levels(s, residue_family(q), 3, b);
  EXPECT_TRUE(is_almost_equivalence(identity_map_system(k), I, 0, 2, b).all());
  EXPECT_FALSE(is_almost_equivalence(zero_unit_map_system(q, s), I, 0, 1, b).all());
}

TEST(Localisation, QuotientModelIsIdempotent) {
  Q q;
  auto s = rn_spec(1, true);
  auto r = localisation_check(q, s, IdealFamily::roots("I", 1), bounds(2));
  EXPECT_TRUE(r.idempotent);
  EXPECT_TRUE(r.fibre_vanishes);
  EXPECT_EQ(r.q.totals(0, 2), (std::vector<std::size_t>{1, 1, 0}));
}

TEST(Gluing, Examples) {
  Q q;
  auto s = rn_spec(1, true);
  auto I = IdealFamily::roots("I", 1);
  auto b = bounds(2);
  EXPECT_TRUE(gluing_square_check(q, s, I, free_family(q), b).cartesian);
  EXPECT_TRUE(gluing_square_check(q, s, I, residue_family(q), b).cartesian);
  auto z = gluing_square_check(q, s, I, zero_family(q), b);
  EXPECT_TRUE(z.cartesian);
  EXPECT_TRUE(z.fibre.pruned().cells.empty());
  Bounds bad = b;
  bad.deg_max = -1;
  EXPECT_THROW(gluing_square_check(q, s, I, free_family(q), bad), std::invalid_argument);
}

TEST(AlmostZero, RandomizedAgreementHelper) {
  Q q;
  auto b = bounds(0);
  b.weight_max = Weight(2);
  auto r = criteria_agreement(q, rn_spec(2, true), IdealFamily::roots("I", 2), 10, 5, b);
  EXPECT_EQ(r.samples, 10);
  EXPECT_TRUE(r.ok()) << (r.disagreements.empty() ? "" : r.disagreements[0]);
}

TEST(ExteriorSum, JuxtaposesVariables) {
  auto a = rn_spec(1, true);
  EXPECT_THROW(exterior_sum(*a, IdealFamily::roots("I", 1), *a, IdealFamily::roots("I", 1)),
               std::invalid_argument);  // duplicate name T
  std::vector<Variable> v2{{"U", true}};
  auto b = std::make_shared<const RingSpec>(FieldSpec::rationals(), 2, v2,
                                            std::vector<std::vector<Weight>>{{Weight(1)}});
  auto sum = exterior_sum(*a, IdealFamily::roots("I", 1), *b, IdealFamily::roots("J", 1));
  EXPECT_EQ(sum.spec->num_vars(), 2u);
  EXPECT_EQ(sum.spec->truncation().size(), 2u);
  ASSERT_EQ(sum.ideal.gens.size(), 2u);
  EXPECT_EQ(sum.ideal.gens[1].var, 1u);
  // I (+) 0
  auto z = exterior_sum(*a, IdealFamily::roots("I", 1), *b, IdealFamily{"0", {}});
  EXPECT_EQ(z.ideal.gens.size(), 1u);
  EXPECT_THROW(exterior_sum(*a, IdealFamily::roots("I", 1), *rn_spec(1, true, FieldSpec::prime(7)),
                            IdealFamily::roots("I", 1)),
               std::invalid_argument);
}

TEST(ExteriorSum, KunnethForQuotientHomotopy) {
  Q q;
  auto a = rn_spec(1, true);
  std::vector<Variable> v2{{"U", true}};
  auto b = std::make_shared<const RingSpec>(FieldSpec::rationals(), 2, v2,
                                            std::vector<std::vector<Weight>>{{Weight(1)}});
  auto sum = exterior_sum(*a, IdealFamily::roots("I", 1), *b, IdealFamily::roots("J", 1));
  Bounds bd = bounds(3);
  auto one = quotient_homotopy(q, a, IdealFamily::roots("I", 1), bd);
  auto total = quotient_homotopy(q, sum.spec, sum.ideal, bd);
  auto conv = convolve(one.table, one.table, 3, bd.weight());
  EXPECT_TRUE(total.table.same_dims(conv));
  EXPECT_EQ(total.table.totals(0, 3), (std::vector<std::size_t>{1, 2, 1, 0}));
}
