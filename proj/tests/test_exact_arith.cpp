#include <gtest/gtest.h>

#include <atomic>

#include "forge/errors.hpp"
#include "forge/exact_arith.hpp"

using namespace forge;

TEST(ExactArith, Pow2Pow3) {
  EXPECT_EQ(pow2(10), Rational(1024));
  EXPECT_EQ(pow2(-3), Rational(1, 8));
  EXPECT_EQ(pow3(4), Rational(81));
  EXPECT_EQ(pow3(-2), Rational(1, 9));
  EXPECT_EQ(pow3(0), Rational(1));
}

TEST(ExactArith, DyadicRounding) {
  const Rational q(1, 3);
  EXPECT_EQ(floor_dyadic(q, 4), Rational(5, 16));
  EXPECT_EQ(ceil_dyadic(q, 4), Rational(3, 8));
  EXPECT_EQ(floor_dyadic(Rational(-1, 3), 2), Rational(-1, 2));
  EXPECT_EQ(ceil_dyadic(Rational(3, 8), 3), Rational(3, 8));
}

TEST(ExactArith, ParseAndPrint) {
  EXPECT_EQ(to_string(parse_rational("2/4")), "1/2");
  EXPECT_EQ(to_string(Rational(3)), "3/1");
  EXPECT_EQ(parse_rational("6/8"), Rational(3, 4));
  EXPECT_EQ(parse_rational("-5"), Rational(-5));
  EXPECT_EQ(parse_rational("+1/7"), Rational(1, 7));
  EXPECT_THROW(parse_rational("1/0"), ParseError);
  EXPECT_THROW(parse_rational("abc"), ParseError);
  EXPECT_THROW(parse_rational(""), ParseError);
  EXPECT_THROW(parse_rational("1/2x"), ParseError);
}

TEST(ExactArith, FloorLog2Lower) {
  for (long e = -40; e <= 40; e += 7) {
    const Rational q = pow2(e) * Rational(3, 2);
    const long l = floor_log2_lower(q);
    EXPECT_LE(l, e);
    EXPECT_GE(l, e - 1);
  }
}

TEST(ExactArith, RealCodeMemoizes) {
  auto calls = std::make_shared<std::atomic<int>>(0);
  const RealCode r = RealCode::from_query([calls](Precision p) {
    ++*calls;
    return floor_dyadic(Rational(1, 3), p);
  });
  const Rational a = r.approx(20);
  const Rational b = r.approx(20);
  EXPECT_EQ(a, b);
  EXPECT_EQ(*calls, 1);
  EXPECT_LE(abs(a - Rational(1, 3)), pow2(-20));
}

TEST(ExactArith, ExactCodes) {
  const RealCode r = RealCode::exact(Rational(2, 7));
  ASSERT_TRUE(r.exact_value());
  EXPECT_EQ(*r.exact_value(), Rational(2, 7));
  EXPECT_EQ(r.approx(5), Rational(2, 7));
}

TEST(ExactArith, SeparateIsSoundOnLessAndGreater) {
  const RealCode a = RealCode::exact(Rational(1, 3));
  const RealCode b = RealCode::exact(Rational(1, 3) + pow2(-30));
  EXPECT_EQ(separate(a, b, 40), Comparison::Less);
  EXPECT_EQ(separate(b, a, 40), Comparison::Greater);
  EXPECT_EQ(separate(a, b, 10), Comparison::Indistinguishable);
  EXPECT_EQ(separate(a, a, 60), Comparison::Indistinguishable);
}

TEST(ExactArith, EvalFnWithModulus) {
  // f(x) = x/2 + 1/4 with d(m) = m.
  FunctionCode f;
  f.rational_eval = [](const Rational& x) { return RealCode::exact(x / 2 + Rational(1, 4)); };
  f.modulus = [](unsigned m) { return m; };
  const RealCode x = RealCode::from_query([](Precision p) { return floor_dyadic(Rational(1, 3), p + 1); });
  const RealCode y = eval_fn(f, x);
  for (Precision p : {4u, 16u, 40u}) EXPECT_LE(abs(y.approx(p) - Rational(5, 12)), pow2(-static_cast<long>(p)));
}

TEST(ExactArith, EvalFnMonotoneBracketing) {
  FunctionCode f;
  f.rational_eval = [](const Rational& x) { return RealCode::exact(x * x); };
  f.increasing = true;
  const RealCode x = RealCode::from_query([](Precision p) { return floor_dyadic(Rational(2, 3), p + 1); });
  const RealCode y = eval_fn(f, x);
  EXPECT_LE(abs(y.approx(30) - Rational(4, 9)), pow2(-30));
}

TEST(ExactArith, EvalFnOutsideDomain) {
  EXPECT_THROW(eval_fn(identity_function(), RealCode::exact(Rational(3, 2))).approx(10), DomainError);
}
