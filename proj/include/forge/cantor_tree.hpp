#pragma once

// Finite binary strings, decidable trees and their path sets, and the coding
// c : 2^omega -> C of Cantor space onto the middle-thirds Cantor set shrunk
// into [1/3, 2/3] (first ternary digit 1, digit k+1 equal to 2 X(k)).

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/exact_arith.hpp"

namespace forge {

class BitString {
 public:
  BitString() = default;
  /// From a literal such as "0110". Throws std::invalid_argument otherwise.
  explicit BitString(std::string_view bits);

  static BitString repeat(bool bit, std::size_t count);

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i] == '1'; }
  bool back() const { return bits_.back() == '1'; }

  void push_back(bool bit) { bits_.push_back(bit ? '1' : '0'); }
  void pop_back() { bits_.pop_back(); }
  BitString with(bool bit) const;
  BitString operator+(const BitString& tail) const;
  BitString prefix(std::size_t n) const;
  bool is_prefix_of(const BitString& other) const;

  /// Plain "0110"; the empty string prints as "".
  const std::string& str() const noexcept { return bits_; }

  /// Lexicographic order; on strings of equal length this is the order of
  /// the corresponding intervals in [1/3, 2/3].
  auto operator<=>(const BitString&) const = default;
  bool operator==(const BitString&) const = default;

 private:
  std::string bits_;
};

/// sigma followed by the constant tail bit, with trailing tail bits stripped
/// from the prefix so equal paths have equal forms.
struct EventualForm {
  BitString prefix;
  bool tail = false;

  static EventualForm make(BitString prefix, bool tail);
  bool operator==(const EventualForm&) const = default;
};

class Path {
 public:
  static Path eventually(BitString prefix, bool tail);
  static Path constant(bool bit) { return eventually(BitString{}, bit); }
  static Path stream(std::function<bool(std::size_t)> bit_at);

  bool operator[](std::size_t n) const;
  BitString prefix(std::size_t n) const;

  /// Present when the path is known to be sigma followed by a constant tail.
  const std::optional<EventualForm>& eventual() const noexcept { return eventual_; }

  /// Regex-like form, e.g. "1^3 0^ω" or "0 1^2 0 1^ω". Streams show a prefix.
  std::string to_string(std::size_t shown_bits = 32) const;

 private:
  std::optional<EventualForm> eventual_;
  std::shared_ptr<const std::function<bool(std::size_t)>> stream_;
};

/// Prefix-closed decidable set of binary strings.
///
/// The optional horizon S certifies that for every member sigma with
/// |sigma| >= S and every bit b, sigma^b in T implies sigma^b^j in T for all
/// j. It makes path membership, liveness and extreme paths exactly decidable.
/// Trees without a horizon fall back to a bounded lookahead.
class Tree {
 public:
  using Membership = std::function<bool(const BitString&)>;

  Tree(Membership member, std::string spec, std::optional<std::size_t> horizon);

  bool contains(const BitString& s) const { return (*member_)(s); }
  const std::string& spec() const noexcept { return spec_; }
  std::optional<std::size_t> horizon() const noexcept { return horizon_; }

  std::size_t lookahead() const noexcept { return lookahead_; }
  Tree with_lookahead(std::size_t depth) const;

  /// Some infinite path passes through s.
  bool alive(const BitString& s) const;
  /// Extreme paths of [T] through an alive node; always eventually constant
  /// for trees with a horizon. Throws forge::BudgetExhausted otherwise when
  /// the lookahead cannot certify a constant tail.
  EventualForm leftmost(const BitString& s) const;
  EventualForm rightmost(const BitString& s) const;
  /// sigma^b^omega in [T].
  bool contains_path(const EventualForm& x) const;

 private:
  EventualForm extreme(const BitString& s, bool prefer) const;

  std::shared_ptr<const Membership> member_;
  std::string spec_;
  std::optional<std::size_t> horizon_;
  std::size_t lookahead_ = 64;
};

Tree full_tree();
/// P = { 1^n 0^m : n, m >= 0 }.
Tree make_p_tree();
/// Q = { 1^n 0^m : n != a_i for all i < m } for an injective enumeration
/// a_0, a_1, ... of A; stages past the end of the enumeration return nothing.
Tree make_q_tree(std::function<std::optional<std::uint64_t>(std::size_t)> enum_a);
/// Q for a finite A-sample, which also certifies a horizon.
Tree make_q_tree(const std::vector<std::uint64_t>& sample);

/// "P", "FULL", or "Q:" followed by a comma-separated enumeration prefix of A.
/// "ORDER:" specs are resolved by the command-line layer.
Tree parse_tree_spec(std::string_view text);

/// c(sigma^b^omega) as an exact rational.
Rational cantor_endpoint(const BitString& sigma, bool b);
/// Exact c(X) for an eventually-constant path.
Rational cantor_value(const EventualForm& x);

RealCode cantor_encode(const Path& x);

struct DecodeOptions {
  /// Largest precision p ever queried; beyond it decoding reports
  /// PrecisionExhausted instead of looping.
  Precision precision_ceiling = 256;
};

/// c^-1 as a lazily decoded path. The range check and the first gap are
/// tested eagerly; later bits throw NotInCantorSet or PrecisionExhausted
/// from Path::operator[] when they fail.
Path cantor_decode(const RealCode& r, DecodeOptions options = {});

enum class PathOrder { Less, Greater, EqualUpToBudget };

PathOrder path_compare(const Path& x, const Path& y, std::size_t budget);

struct LevelInterval {
  BitString sigma;
  Rational left;   // c(sigma^0^omega)
  Rational right;  // c(sigma^1^omega)
};

struct OpenInterval {
  Rational left;
  Rational right;
};

using OpenIntervalList = std::vector<OpenInterval>;

/// All sigma in T with |sigma| = n and their intervals, sorted by position.
std::vector<LevelInterval> level_intervals(const Tree& t, std::size_t n);

/// Maximal open components of (0,1) minus the union of the level-n intervals.
OpenIntervalList complement_components(const Tree& t, std::size_t n);
OpenIntervalList complement_components(const std::vector<LevelInterval>& level);

/// The component of U_n containing x, or nothing when x lies in some I_sigma
/// with |sigma| = n. Found by searching the tree for the neighbouring
/// level-n members, so the level is never enumerated.
std::optional<OpenInterval> component_at(const Tree& t, std::size_t n, const Rational& x);

/// Members of T of length n strictly between lo and hi (lexicographically on
/// length-n prefixes); an absent bound is unbounded.
std::vector<BitString> members_between(const Tree& t, std::size_t n,
                                       const std::optional<BitString>& lo,
                                       const std::optional<BitString>& hi);

}  // namespace forge
