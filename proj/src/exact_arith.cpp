#include "forge/exact_arith.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <mutex>
#include <stdexcept>

#include "forge/errors.hpp"

namespace forge {

Rational pow2(long e) {
  Integer m = 1;
  if (e >= 0) {
    mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(e));
    return Rational(m);
  }
  mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(-e));
  return Rational(Integer(1), m);
}

Rational pow3(long e) {
  Integer m;
  mpz_ui_pow_ui(m.get_mpz_t(), 3, static_cast<unsigned long>(e >= 0 ? e : -e));
  if (e >= 0) return Rational(m);
  return Rational(Integer(1), m);
}

Rational floor_dyadic(const Rational& q, unsigned bits) {
  Integer num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), bits);
  Integer k;
  mpz_fdiv_q(k.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
  Rational out(k);
  mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), bits);
  return out;
}

Rational ceil_dyadic(const Rational& q, unsigned bits) {
  Integer num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), bits);
  Integer k;
  mpz_cdiv_q(k.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
  Rational out(k);
  mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), bits);
  return out;
}

std::string to_string(const Rational& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Rational parse_rational(std::string_view text) {
  auto fail = [&](std::size_t col, const std::string& msg) -> Rational {
    throw ParseError(msg + " in rational '" + std::string(text) + "'", 1, col + 1);
  };
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t end = text.size();
  while (end > i && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  if (i == end) return fail(i, "empty input");

  std::string num;
  std::string den;
  std::size_t pos = i;
  // mpz_set_str rejects a leading '+'.
  if (text[pos] == '-') num.push_back('-');
  if (text[pos] == '+' || text[pos] == '-') ++pos;
  std::size_t digits = 0;
  while (pos < end && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    num.push_back(text[pos++]);
    ++digits;
  }
  if (digits == 0) return fail(pos, "expected digits");
  if (pos < end) {
    if (text[pos] != '/') return fail(pos, "unexpected character");
    ++pos;
    while (pos < end && std::isdigit(static_cast<unsigned char>(text[pos]))) den.push_back(text[pos++]);
    if (den.empty()) return fail(pos, "expected denominator digits");
    if (pos != end) return fail(pos, "unexpected character");
  } else {
    den = "1";
  }
  Integer n(num, 10);
  Integer d(den, 10);
  if (d == 0) return fail(i, "zero denominator");
  Rational q(n, d);
  q.canonicalize();
  return q;
}

long floor_log2_lower(const Rational& q) {
  if (q <= 0) throw std::invalid_argument("floor_log2_lower: non-positive argument");
  const long nb = static_cast<long>(mpz_sizeinbase(q.get_num_mpz_t(), 2));
  const long db = static_cast<long>(mpz_sizeinbase(q.get_den_mpz_t(), 2));
  return nb - db - 1;
}

std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::Less: return "Less";
    case Comparison::Greater: return "Greater";
    case Comparison::Indistinguishable: return "Indistinguishable";
  }
  return "?";
}

struct RealCode::Impl {
  std::optional<Rational> exact;
  Query query;
  mutable std::mutex mutex;
  mutable std::map<Precision, Rational> memo;
};

RealCode::RealCode() : RealCode(exact(Rational(0))) {}

RealCode RealCode::exact(Rational value) {
  auto impl = std::make_shared<Impl>();
  impl->exact = std::move(value);
  return RealCode(std::move(impl));
}

RealCode RealCode::from_query(Query query) {
  auto impl = std::make_shared<Impl>();
  impl->query = std::move(query);
  return RealCode(std::move(impl));
}

Rational RealCode::approx(Precision p) const {
  if (impl_->exact) return *impl_->exact;
  {
    std::lock_guard lock(impl_->mutex);
    if (auto it = impl_->memo.find(p); it != impl_->memo.end()) return it->second;
  }
  // Evaluated outside the lock: queries may recurse into other codes. Two
  // racing callers compute the same deterministic answer.
  Rational q = impl_->query(p);
  std::lock_guard lock(impl_->mutex);
  return impl_->memo.emplace(p, std::move(q)).first->second;
}

std::optional<Rational> RealCode::exact_value() const { return impl_->exact; }

Comparison separate(const RealCode& r1, const RealCode& r2, Precision p) {
  const Rational q1 = r1.approx(p);
  const Rational q2 = r2.approx(p);
  const Rational slack = pow2(-static_cast<long>(p)) * 2;
  if (q2 - q1 > slack) return Comparison::Less;
  if (q1 - q2 > slack) return Comparison::Greater;
  return Comparison::Indistinguishable;
}

namespace {

void check_unit_interval(const Rational& q, const Rational& radius) {
  if (q + radius < 0 || q - radius > 1) {
    throw DomainError("argument " + to_string(q) + " certified outside [0,1]");
  }
}

Rational clamp_unit(const Rational& q) {
  if (q < 0) return Rational(0);
  if (q > 1) return Rational(1);
  return q;
}

}  // namespace

RealCode eval_fn(const FunctionCode& f, const RealCode& x) {
  if (auto v = x.exact_value()) {
    check_unit_interval(*v, Rational(0));
    return f.rational_eval(*v);
  }
  if (f.modulus) {
    return RealCode::from_query([f, x](Precision p) {
      const unsigned d = f.modulus(p + 1);
      const Rational radius = pow2(-static_cast<long>(d) - 1);
      const Rational q = x.approx(d + 1);
      check_unit_interval(q, radius);
      return f.rational_eval(clamp_unit(q)).approx(p + 1);
    });
  }
  if (f.increasing) {
    return RealCode::from_query([f, x](Precision p) {
      const Rational slack = pow2(-static_cast<long>(p) - 2);
      const Rational target = pow2(-static_cast<long>(p)) * 2;
      for (Precision j = p + 2; j <= p + 512; j += 2 + j / 4) {
        const Rational radius = pow2(-static_cast<long>(j));
        const Rational q = x.approx(j);
        check_unit_interval(q, radius);
        if (f.enclose) {
          if (auto e = f.enclose(clamp_unit(q - radius), clamp_unit(q + radius), p)) {
            return Rational((e->first + e->second) / 2);
          }
        }
        const Rational lo = f.rational_eval(clamp_unit(q - radius)).approx(p + 2) - slack;
        const Rational hi = f.rational_eval(clamp_unit(q + radius)).approx(p + 2) + slack;
        if (hi - lo <= target) return Rational((lo + hi) / 2);
      }
      throw PrecisionExhausted("monotone bracketing did not reach 2^-" + std::to_string(p));
    });
  }
  throw std::invalid_argument("eval_fn: function code has neither a modulus nor monotonicity");
}

FunctionCode identity_function() {
  FunctionCode f;
  f.rational_eval = [](const Rational& q) { return RealCode::exact(q); };
  f.modulus = [](unsigned m) { return m; };
  f.increasing = true;
  return f;
}

}  // namespace forge
