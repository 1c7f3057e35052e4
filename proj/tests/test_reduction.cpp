#include <gtest/gtest.h>

#include "forge/errors.hpp"
#include "forge/reduction.hpp"

using namespace forge;

TEST(Reduction, ComplementPrefix) {
  const CeSample a{{1, 3}};
  EXPECT_EQ(a.complement_prefix(4), (std::vector<std::uint64_t>{0, 2, 4, 5}));
  EXPECT_TRUE(a.contains(3));
  EXPECT_FALSE(a.contains(0));
}

TEST(Reduction, PqIsoOnEventualPaths) {
  const CeSample a{{1, 3}};
  const OrderIso iso = pq_order_iso(a);
  for (std::size_t n = 0; n < 4; ++n) {
    const Path y = iso.forward(Path::eventually(BitString::repeat(true, n), false));
    ASSERT_TRUE(y.eventual());
    EXPECT_EQ(y.eventual()->prefix.size(), a.complement_prefix(n + 1).back());
    const Path x = iso.backward(y);
    ASSERT_TRUE(x.eventual());
    EXPECT_EQ(x.eventual()->prefix.size(), n);
  }
  EXPECT_EQ(iso.forward(Path::constant(true)).to_string(), "1^ω");
  EXPECT_THROW(iso.backward(Path::eventually(BitString("1"), false)), DomainError);
  EXPECT_THROW(iso.forward(Path::eventually(BitString("01"), false)), DomainError);
}

TEST(Reduction, PqIsoOnStreamsPreservesOrder) {
  const CeSample a{{0, 2}};
  const OrderIso iso = pq_order_iso(a);
  // 1^4 0^omega as a stream must map like the eventual path does.
  const Path s = Path::stream([](std::size_t i) { return i < 4; });
  const Path e = Path::eventually(BitString::repeat(true, 4), false);
  EXPECT_EQ(iso.forward(s).prefix(30), iso.forward(e).prefix(30));
}

TEST(Reduction, ExtractComplementBudget) {
  OrderIso ones;
  ones.forward = [](const Path&) { return Path::constant(true); };
  ones.backward = ones.forward;
  EXPECT_THROW(extract_complement_element(ones, 0, 32), BudgetExhausted);
  EXPECT_EQ(recover_ce_complement(pq_order_iso(CeSample{{2}}), 4), (std::vector<std::uint64_t>{0, 1, 3, 4}));
}

TEST(Reduction, ZeroOracle) {
  const ZeroOracle z = eventual_zero_oracle();
  EXPECT_TRUE(z(Path::eventually(BitString("1"), false), 5));
  EXPECT_TRUE(z(Path::eventually(BitString("1101"), true), 2));
  EXPECT_FALSE(z(Path::eventually(BitString("1101"), true), 3));
  EXPECT_THROW(z(Path::stream([](std::size_t) { return true; }), 0), DomainError);
}

TEST(Reduction, LabelIsomorphism) {
  auto less = [](ElementId a, ElementId b) { return a < b; };
  const LabeledTree r = build_order_tree(finite_order({2, 0, 1}, less), 6);
  const LabeledTree s = build_order_tree(finite_order({11, 12, 10}, less), 6);
  const auto m = label_isomorphism(r, s);
  EXPECT_EQ(m.at(0), ElementId{10});
  EXPECT_EQ(m.at(2), ElementId{12});
  const OrderIso iso = label_order_iso(r, s);
  const Path y = iso.forward(Path::eventually(*r.label(1), true));
  EXPECT_EQ(*y.eventual(), EventualForm::make(*s.label(11), true));
  const LabeledTree t = build_order_tree(finite_order({0, 1}, less), 6);
  EXPECT_THROW(label_isomorphism(r, t), std::invalid_argument);
}

TEST(Reduction, JumpExtractOnIdentity) {
  auto less = [](ElementId a, ElementId b) { return a < b; };
  const LabeledTree r = build_order_tree(finite_order({1, 0, 2}, less), 6);
  const auto m = jump_extract_order_iso(identity_homeo(), r, r, eventual_zero_oracle());
  for (const auto& [a, b] : m) EXPECT_EQ(a, b);
  EXPECT_EQ(m.size(), 3u);
}

TEST(Reduction, JumpExtractAcrossOrders) {
  auto less = [](ElementId a, ElementId b) { return a < b; };
  const LabeledTree r = build_order_tree(finite_order({2, 0, 1}, less), 6);
  const LabeledTree s = build_order_tree(finite_order({11, 12, 10}, less), 6);
  const Homeo h = synth_conjugacy(r.tree(), s.tree(), label_order_iso(r, s));
  const auto m = jump_extract_order_iso(h, r, s, eventual_zero_oracle());
  EXPECT_EQ(m, label_isomorphism(r, s));
}

TEST(Reduction, InconsistentOracleDetected) {
  auto less = [](ElementId a, ElementId b) { return a < b; };
  // 0 gets the label 00.
  const LabeledTree r = build_order_tree(finite_order({1, 0}, less), 5);
  // Denies any zero past the first.
  const ZeroOracle liar = [](const Path&, std::size_t k) { return k == 0; };
  EXPECT_THROW(jump_extract_order_iso(identity_homeo(), r, r, liar), InconsistentOracle);
}

TEST(Reduction, DemoReport) {
  const DemoReport rep = run_reduction_demo(CeSample{{1, 3}}, 4);
  EXPECT_TRUE(rep.all_match());
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows[3].extracted, 5u);
  EXPECT_NE(rep.to_text().find("# all rows match"), std::string::npos);
}
