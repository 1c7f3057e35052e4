#pragma once

// Reading a set back out of a conjugacy. For the trees P and Q built from an
// enumeration of A, any order isomorphism [P] -> [Q] sends 1^n 0^omega to
// 1^m 0^omega with m the n-th element outside A, so a conjugacy of f_P and
// f_Q answers membership questions about A. The samples here are finite;
// what carries over to an arbitrary c.e. set is the uniform procedure.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "forge/cantor_tree.hpp"
#include "forge/conjugacy.hpp"
#include "forge/order_encode.hpp"

namespace forge {

struct CeSample {
  /// Injective enumeration a_0, a_1, ...
  std::vector<std::uint64_t> enumeration;

  bool contains(std::uint64_t n) const;
  /// First `count` naturals outside the sample, by brute force.
  std::vector<std::uint64_t> complement_prefix(std::size_t count) const;
};

/// The order isomorphism [P] -> [Q]: 1^n 0^omega maps to 1^(m_n) 0^omega and
/// 1^omega to itself. Streams are mapped bit by bit.
OrderIso pq_order_iso(const CeSample& sample);

/// Leading 1s of hstar(1^n 0^omega) before its first 0. Throws
/// BudgetExhausted when no 0 appears in the first bit_budget bits.
std::uint64_t extract_complement_element(const OrderIso& hstar, std::size_t n, std::size_t bit_budget = 256);

std::vector<std::uint64_t> recover_ce_complement(const OrderIso& hstar, std::size_t count, std::size_t bit_budget = 256);

/// answer(X, k): does X have a 0 at some index >= k.
using ZeroOracle = std::function<bool(const Path&, std::size_t)>;

/// Truthful on eventually-constant paths; throws DomainError on streams,
/// where the question is not decidable.
ZeroOracle eventual_zero_oracle();

struct JumpOptions {
  /// Bits scanned while looking for the next 0 the oracle promised.
  std::size_t bit_budget = 512;
  /// Bits checked after a "no more zeros" answer.
  std::size_t recheck_bits = 64;
};

/// a -> b with h(c(l_R(a) 1^omega)) = c(l_S(b) 1^omega), finding the last 0 of
/// each image with the oracle. Throws InconsistentOracle, LabelNotFound or
/// BudgetExhausted.
std::map<ElementId, ElementId> jump_extract_order_iso(const Homeo& h, const LabeledTree& r, const LabeledTree& s,
                                                      const ZeroOracle& oracle, JumpOptions options = {});

/// The order isomorphism of two finite labelled orders of equal size: i-th
/// smallest to i-th smallest.
std::map<ElementId, ElementId> label_isomorphism(const LabeledTree& r, const LabeledTree& s);

/// The path isomorphism [T_R] -> [T_S] induced by label_isomorphism, with
/// 1^omega fixed.
OrderIso label_order_iso(const LabeledTree& r, const LabeledTree& s);

struct DemoRow {
  std::size_t n = 0;
  std::uint64_t extracted = 0;
  std::uint64_t expected = 0;
  bool match = false;
};

struct DemoReport {
  CeSample sample;
  std::vector<DemoRow> rows;
  bool all_match() const;
  std::string to_text() const;
};

/// tree -> dynamics -> synthesised conjugacy -> extracted isomorphism ->
/// complement prefix, compared with brute force.
DemoReport run_reduction_demo(const CeSample& sample, std::size_t count, SynthOptions options = {});

}  // namespace forge
