#pragma once

// The interval map f_T(x) = x + sum_{n>=1} h_n(x) whose fixed points are
// exactly {0, 1} together with c([T]). h_n places a bump of height
// 3^-n * width * b on every component of U_n, with
// b(u) = exp(-1 / (u (1 - u))) (scaling constant K = 1).

#include <cstddef>
#include <memory>
#include <optional>

#include "forge/cantor_tree.hpp"
#include "forge/exact_arith.hpp"

namespace forge {

/// e^-t for rational t >= 0 within 2^-p. Fixed-point Taylor series after
/// halving t below 1/2, followed by repeated squaring, with a worst-case
/// error count carried through every step.
Rational exp_neg(const Rational& t, Precision p);

/// b(x) = exp(-1/(x(1-x))) within 2^-p, exactly 0 at and outside the ends.
Rational bump_eval(const Rational& x, Precision p);

/// (c-a) b((x-a)/(c-a)) within 2^-p; exactly 0 outside (a, c).
Rational scaled_bump_eval(const Rational& a, const Rational& c, const Rational& x, Precision p);

/// h_n(x) within 2^-p.
Rational level_bump_sum(const Tree& t, std::size_t n, const Rational& x, Precision p);

class Dynamics {
 public:
  explicit Dynamics(Tree tree);
  ~Dynamics();
  Dynamics(const Dynamics&) = delete;
  Dynamics& operator=(const Dynamics&) = delete;

  const Tree& tree() const noexcept { return tree_; }

  /// Component of U_n containing x; cached per level while levels are small.
  std::optional<OpenInterval> component(std::size_t n, const Rational& x) const;

  /// h_n(x) within 2^-p.
  Rational level_term(std::size_t n, const Rational& x, Precision p) const;

  /// x + h_1(x) + ... + h_N(x) within 2^-p.
  Rational partial_sum(std::size_t N, const Rational& x, Precision p) const;

  /// Smallest N with 3^N >= 2^p, so the omitted tail is below 2^-(p+1).
  static std::size_t terms_for(Precision p);

  /// f_T(x) within 2^-p, skipping the fixed-point fast path of eval.
  Rational approx(const Rational& x, Precision p) const;

  /// f_T(x); exact when x is 0, 1 or a triadic point of c([T]). The code
  /// refers back to this object, which must outlive it.
  RealCode eval(const Rational& x) const;

 private:
  struct Cache;
  Tree tree_;
  std::unique_ptr<Cache> cache_;
};

/// f_T with modulus d(m) = m + 1, from |f_T'| < 3/2.
FunctionCode build_dynamics(const Tree& t);
FunctionCode dynamics_function(std::shared_ptr<const Dynamics> d);

enum class FixedVerdict { FixedUpToP, NotFixed };

std::string to_string(FixedVerdict v);

/// NotFixed certifies f(x) > x; FixedUpToP means |f(x) - x| <= 2^-p. Relies
/// on f(x) >= x, which holds for every f_T.
FixedVerdict is_fixed(const FunctionCode& f, const Rational& x, Precision p);

}  // namespace forge
