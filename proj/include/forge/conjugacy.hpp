#pragma once

// Conjugacies h with h o f_P = f_Q o h, built from an order isomorphism
// h* : [P] -> [Q] of path sets, and the reverse extraction of h* from h.
//
// On fixed points h(c(X)) = c(h*(X)). A gap (a, b) between consecutive fixed
// points is cut into fundamental domains [f_P^n(x0), f_P^(n+1)(x0)) around
// its midpoint x0, and h(x) = f_Q^n(i(f_P^-n(x))) with i the affine map of
// [x0, f_P(x0)) onto [y0, f_Q(y0)), y0 the midpoint of (h(a), h(b)).

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/cantor_tree.hpp"
#include "forge/dynamics.hpp"
#include "forge/exact_arith.hpp"

namespace forge {

struct OrderIso {
  std::function<Path(const Path&)> forward;
  std::function<Path(const Path&)> backward;
};

OrderIso identity_order_iso();

struct Homeo {
  FunctionCode fn;
  FunctionCode inv;
};

Homeo identity_homeo();
/// x -> 1 - x. Order reversing, so never a conjugacy of increasing maps.
Homeo reflection_homeo();

/// F^-1(y) within 2^-p for an increasing F with F(0) = 0 and F(1) = 1, by
/// bisection driven by separate(). Throws DomainError when y is certified
/// outside [0,1] and PrecisionExhausted when a comparison never resolves.
Rational invert_monotone(const FunctionCode& f, const RealCode& y, Precision p);

/// Where x sits among the fixed points {0, 1} and c([T]).
struct FixedPointLocation {
  enum class Kind { Fixed, Gap, Unresolved };
  Kind kind = Kind::Fixed;
  /// Fixed: the path X with c(X) = x; empty when x is 0 or 1.
  std::optional<EventualForm> point;
  /// Gap: consecutive fixed points a < x < b. Unresolved: fixed points
  /// a < x < b that share the first `depth` bits, with fixed points possibly
  /// in between. The paths are empty for a = 0 and b = 1.
  Rational a;
  Rational b;
  std::optional<EventualForm> a_path;
  std::optional<EventualForm> b_path;
};

FixedPointLocation locate_fixed_structure(const Tree& t, const Rational& x, std::size_t depth);

struct GapInterval {
  Rational a;
  Rational b;
  std::optional<EventualForm> a_path;
  std::optional<EventualForm> b_path;
  /// The tree has a horizon, so a and b were found exactly rather than by
  /// bounded lookahead.
  bool certified = false;
};

struct SynthOptions {
  /// Iterates per orbit and per evaluated point.
  std::size_t iteration_budget = 10000;
  /// Working precision runs from p + guard_bits to p + max_guard_bits.
  /// 16 bits absorb the rounding of about 10^4 steps.
  unsigned guard_bits = 16;
  unsigned guard_step = 16;
  unsigned max_guard_bits = 128;
};

struct Enclosure {
  Rational lo;
  Rational hi;
};

class Conjugacy : public std::enable_shared_from_this<Conjugacy> {
 public:
  static std::shared_ptr<Conjugacy> make(Tree p, Tree q, OrderIso hstar, SynthOptions options = {});
  ~Conjugacy();

  const Tree& source() const noexcept;
  const Tree& target() const noexcept;
  const SynthOptions& options() const noexcept { return options_; }

  /// h(x) within 2^-p. Throws BudgetExhausted when the iteration budget runs
  /// out before h(x) is pinned down, UnsupportedEndpoint when a gap endpoint
  /// maps to a path that is not eventually constant.
  Rational eval(const Rational& x, Precision p) const;

  /// An interval of width at most 2^(1-p) containing h([a, b]), when a and b
  /// lie in one gap on the same side of its midpoint and a single iteration
  /// pins the image down; nothing otherwise.
  std::optional<Enclosure> enclose(const Rational& a, const Rational& b, Precision p) const;

  /// h(x) as a code; exact on fixed points and on gaps where h is the identity.
  RealCode eval_code(const Rational& x) const;

  /// The gap containing x, if x is not a fixed point at localisation depth p+4.
  std::optional<GapInterval> gap_of(const Rational& x, Precision p) const;

  /// Enclosures of f_P^n(x0) and f_Q^n(y0) for the gap, at working precision
  /// w. n may be negative.
  Enclosure source_orbit(const GapInterval& gap, long n, unsigned w) const;
  Enclosure target_orbit(const GapInterval& gap, long n, unsigned w) const;

  /// True when f_P and f_Q agree on the gap and h fixes its ends, so h is the
  /// identity there.
  bool identity_on(const GapInterval& gap) const;

 private:
  struct Impl;
  Conjugacy(Tree p, Tree q, OrderIso hstar, SynthOptions options);
  /// h(x) and the precision it is known to.
  std::pair<Rational, Precision> eval_uncached(const Rational& x, Precision p) const;

  SynthOptions options_;
  std::unique_ptr<Impl> impl_;
};

/// The homeomorphism with h o f_P = f_Q o h induced by hstar. The inverse
/// is synthesised from the swapped roles and hstar.backward. Neither code
/// has a modulus; both evaluate on reals by monotone bracketing, using
/// Conjugacy::enclose for the bracket when it succeeds.
Homeo synth_conjugacy(const Tree& p, const Tree& q, const OrderIso& hstar, SynthOptions options = {});

/// h*(X) = c^-1(h(c(X))), and symmetrically through h.inv.
OrderIso extract_order_iso(const Homeo& h, const Tree& p, const Tree& q);

enum class Verdict { Pass, Fail, Exhausted, Undetermined };

std::string to_string(Verdict v);

struct VerifyRow {
  Rational x;
  std::optional<Rational> lhs;
  std::optional<Rational> rhs;
  /// Upper bound for |h(f(x)) - g(h(x))| when both sides were computed.
  std::optional<Rational> diff_bound;
  Verdict verdict = Verdict::Undetermined;
  std::string note;
};

struct VerifyReport {
  Precision precision = 0;
  std::vector<VerifyRow> rows;
  /// Certified h(x_i) < h(x_(i+1)) for consecutive grid points.
  bool monotone = true;
  /// h(0) = 0 and h(1) = 1 within 2^-p.
  bool endpoints_fixed = true;
  std::vector<std::string> sanity_notes;

  std::size_t count(Verdict v) const;
  bool all_pass() const;
  /// Header comment lines, then grid_point,lhs,rhs,diff_bound,verdict.
  std::string to_csv() const;
};

/// Checks h(f(x)) = g(h(x)) on the grid: both sides to precision p+2, pass
/// when |diff| <= 2^-p is certified, fail when |diff| > 2^-p is certified.
VerifyReport verify_conjugacy(const FunctionCode& f, const FunctionCode& g, const Homeo& h,
                              const std::vector<Rational>& grid, Precision p);

/// k / (points - 1) for k = 0 .. points - 1.
std::vector<Rational> uniform_grid(std::size_t points);

}  // namespace forge
