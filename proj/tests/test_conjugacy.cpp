#include <gtest/gtest.h>

#include "forge/conjugacy.hpp"
#include "forge/errors.hpp"
#include "forge/reduction.hpp"

using namespace forge;

TEST(Conjugacy, UniformGrid) {
  const auto g = uniform_grid(5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g[1], Rational(1, 4));
  EXPECT_EQ(g.back(), Rational(1));
}

TEST(Conjugacy, InvertMonotone) {
  const FunctionCode f = build_dynamics(make_p_tree());
  for (const Rational y : {Rational(1, 5), Rational(1, 2), Rational(7, 8)}) {
    const Rational x = invert_monotone(f, RealCode::exact(y), 30);
    EXPECT_LE(abs(f.rational_eval(x).approx(34) - y), pow2(-28)) << y.get_str();
  }
  EXPECT_THROW(invert_monotone(f, RealCode::exact(Rational(2)), 10), DomainError);
}

TEST(Conjugacy, LocateFixedStructure) {
  const Tree p = make_p_tree();
  // Between 0^omega and 1 0^omega.
  const auto gap = locate_fixed_structure(p, Rational(1, 2), 12);
  EXPECT_EQ(gap.kind, FixedPointLocation::Kind::Gap);
  EXPECT_EQ(gap.a, Rational(1, 3));
  EXPECT_EQ(gap.b, Rational(5, 9));
  const auto fixed = locate_fixed_structure(p, Rational(5, 9), 12);
  EXPECT_EQ(fixed.kind, FixedPointLocation::Kind::Fixed);
  ASSERT_TRUE(fixed.point);
  EXPECT_EQ(*fixed.point, EventualForm::make(BitString("1"), false));
  const auto low = locate_fixed_structure(p, Rational(1, 10), 12);
  EXPECT_EQ(low.kind, FixedPointLocation::Kind::Gap);
  EXPECT_EQ(low.a, Rational(0));
  EXPECT_FALSE(low.a_path);
}

TEST(Conjugacy, IdentityWhenTreesAgree) {
  const Tree p = make_p_tree();
  const Homeo h = synth_conjugacy(p, p, identity_order_iso());
  for (const Rational x : {Rational(0), Rational(1, 7), Rational(1, 2), Rational(9, 10)}) {
    const RealCode y = h.fn.rational_eval(x);
    ASSERT_TRUE(y.exact_value()) << x.get_str();
    EXPECT_EQ(*y.exact_value(), x);
  }
  const auto c = Conjugacy::make(p, p, identity_order_iso());
  const auto g = c->gap_of(Rational(1, 2), 20);
  ASSERT_TRUE(g);
  EXPECT_TRUE(g->certified);
  EXPECT_TRUE(c->identity_on(*g));
}

TEST(Conjugacy, FixedPointsMapByHstar) {
  const CeSample a{{1}};
  const Tree p = make_p_tree();
  const Tree q = make_q_tree(a.enumeration);
  const Homeo h = synth_conjugacy(p, q, pq_order_iso(a));
  // 1 0^omega -> 1^2 0^omega since 1 is in A.
  const RealCode y = h.fn.rational_eval(cantor_endpoint(BitString("1"), false));
  ASSERT_TRUE(y.exact_value());
  EXPECT_EQ(*y.exact_value(), cantor_endpoint(BitString("11"), false));
  const RealCode back = h.inv.rational_eval(cantor_endpoint(BitString("11"), false));
  ASSERT_TRUE(back.exact_value());
  EXPECT_EQ(*back.exact_value(), cantor_endpoint(BitString("1"), false));
}

TEST(Conjugacy, EquationHoldsInOneGap) {
  const CeSample a{{1}};
  const Tree p = make_p_tree();
  const Tree q = make_q_tree(a.enumeration);
  const Homeo h = synth_conjugacy(p, q, pq_order_iso(a));
  // Points of the gap (5/9, c(1^2 0^omega)) away from its ends.
  const std::vector<Rational> grid{Rational(57, 100), Rational(3, 5), Rational(61, 100)};
  const VerifyReport r = verify_conjugacy(build_dynamics(p), build_dynamics(q), h, grid, 12);
  EXPECT_EQ(r.count(Verdict::Pass), grid.size()) << r.to_csv();
  EXPECT_TRUE(r.monotone);
}

TEST(Conjugacy, EncloseContainsPointValues) {
  const CeSample a{{1}};
  const auto c = Conjugacy::make(make_p_tree(), make_q_tree(a.enumeration), pq_order_iso(a));
  const Rational lo(29, 50);
  const Rational hi = lo + pow2(-20);
  const auto e = c->enclose(lo, hi, 12);
  if (e) {
    EXPECT_LE(e->hi - e->lo, pow2(-11));
    const Rational ylo = c->eval(lo, 14);
    const Rational yhi = c->eval(hi, 14);
    EXPECT_GE(ylo + pow2(-14), e->lo);
    EXPECT_LE(yhi - pow2(-14), e->hi);
  }
}

TEST(Conjugacy, ExtractRoundTrip) {
  const CeSample a{{0, 2}};
  const Tree p = make_p_tree();
  const Tree q = make_q_tree(a.enumeration);
  const OrderIso hstar = pq_order_iso(a);
  const OrderIso back = extract_order_iso(synth_conjugacy(p, q, hstar), p, q);
  for (std::size_t n = 0; n <= 6; ++n) {
    const Path x = Path::eventually(BitString::repeat(true, n), false);
    EXPECT_EQ(back.forward(x).prefix(40), hstar.forward(x).prefix(40)) << n;
  }
}

TEST(Conjugacy, NegativeControls) {
  const Tree p = make_p_tree();
  const Tree q = make_q_tree(std::vector<std::uint64_t>{1});
  const auto grid = uniform_grid(10);
  const VerifyReport id = verify_conjugacy(build_dynamics(p), build_dynamics(q), identity_homeo(), grid, 20);
  EXPECT_GE(id.count(Verdict::Fail), 1u);
  EXPECT_FALSE(id.all_pass());
  const VerifyReport refl = verify_conjugacy(build_dynamics(p), build_dynamics(p), reflection_homeo(), grid, 20);
  EXPECT_FALSE(refl.monotone);
  EXPECT_FALSE(refl.all_pass());
}

TEST(Conjugacy, VerifyCsvShape) {
  const Tree p = make_p_tree();
  const VerifyReport r = verify_conjugacy(build_dynamics(p), build_dynamics(p), identity_homeo(), uniform_grid(3), 10);
  EXPECT_TRUE(r.all_pass());
  const std::string csv = r.to_csv();
  EXPECT_NE(csv.find("grid_point,lhs,rhs,diff_bound,verdict"), std::string::npos);
  EXPECT_NE(csv.find("1/2,"), std::string::npos);
}
