#pragma once

// Exact rationals and queryable codes for reals and continuous self-maps of
// the unit interval.
//
// A RealCode answers "give me a rational within 2^-p of the value" for every
// precision p. A FunctionCode evaluates a continuous f : [0,1] -> [0,1] at
// rational points and, optionally, carries a modulus of uniform continuity
// d with |f(x) - f(y)| < 2^-m whenever |x - y| < 2^-d(m).

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace forge {

using Integer = mpz_class;
using Rational = mpq_class;
using Precision = unsigned;

/// 2^e for any integer e.
Rational pow2(long e);
/// 3^e for any integer e.
Rational pow3(long e);

/// Largest multiple of 2^-bits that is <= q.
Rational floor_dyadic(const Rational& q, unsigned bits);
/// Smallest multiple of 2^-bits that is >= q.
Rational ceil_dyadic(const Rational& q, unsigned bits);

/// Canonical text form "num/den" (the denominator is always printed).
std::string to_string(const Rational& q);

/// Accepts "num/den", "num" or a leading sign. Throws forge::ParseError.
Rational parse_rational(std::string_view text);

/// Lower bound for floor(log2(q)) of a positive rational, exact to within one.
long floor_log2_lower(const Rational& q);

enum class Comparison { Less, Greater, Indistinguishable };

std::string to_string(Comparison c);

class RealCode {
 public:
  using Query = std::function<Rational(Precision)>;

  /// Code of an exact rational; every query returns the rational itself.
  static RealCode exact(Rational value);
  /// Wraps a query satisfying |query(p) - r| <= 2^-p. Answers are memoized.
  static RealCode from_query(Query query);

  RealCode();

  Rational approx(Precision p) const;

  /// The represented value when the code was built from an exact rational.
  std::optional<Rational> exact_value() const;

 private:
  struct Impl;
  explicit RealCode(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;
};

inline Rational approx(const RealCode& r, Precision p) { return r.approx(p); }

/// Partial comparison. Less / Greater are always correct; Indistinguishable
/// means |r1 - r2| <= 2^-(p-2).
Comparison separate(const RealCode& r1, const RealCode& r2, Precision p);

struct FunctionCode {
  std::function<RealCode(const Rational&)> rational_eval;
  /// Modulus of uniform continuity; may be empty for codes that are only
  /// known to be increasing.
  std::function<unsigned(unsigned)> modulus;
  bool increasing = false;
  /// Optional: an interval of width at most 2^(1-p) containing f([a, b]),
  /// or nothing when none is cheaply available. Monotone bracketing tries it
  /// before evaluating both ends.
  std::function<std::optional<std::pair<Rational, Rational>>(const Rational&, const Rational&, Precision)> enclose;
};

/// f(x) as a code. Uses the modulus when present, otherwise monotone
/// bracketing for increasing codes. Throws forge::DomainError once x is
/// certified outside [0,1].
RealCode eval_fn(const FunctionCode& f, const RealCode& x);

FunctionCode identity_function();

}  // namespace forge
