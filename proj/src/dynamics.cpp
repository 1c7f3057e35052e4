#include "forge/dynamics.hpp"

#include <algorithm>
#include <mutex>
#include <vector>

#include "forge/errors.hpp"

namespace forge {

namespace {

unsigned bit_length(unsigned long v) {
  unsigned n = 0;
  while (v != 0) {
    v >>= 1;
    ++n;
  }
  return n;
}

constexpr std::size_t kPow3Table = 1024;

const std::vector<Integer>& pow3_table() {
  static const std::vector<Integer> table = [] {
    std::vector<Integer> t(kPow3Table);
    t[0] = 1;
    for (std::size_t n = 1; n < kPow3Table; ++n) t[n] = t[n - 1] * 3;
    return t;
  }();
  return table;
}

Integer pow3_int(std::size_t n) {
  if (n < kPow3Table) return pow3_table()[n];
  Integer t;
  mpz_ui_pow_ui(t.get_mpz_t(), 3, n);
  return t;
}

// floor(log2(3^n)), exact.
long floor_log2_pow3(std::size_t n) {
  if (n < kPow3Table) return static_cast<long>(mpz_sizeinbase(pow3_table()[n].get_mpz_t(), 2)) - 1;
  return static_cast<long>(mpz_sizeinbase(pow3_int(n).get_mpz_t(), 2)) - 1;
}

}  // namespace

namespace {

struct Fixed {
  Integer value;  // the number is value / 2^bits
  unsigned bits = 0;
};

// e^-(num/den) within 2^-p for num >= 0, den > 0 (not necessarily in lowest
// terms).
Fixed exp_neg_fixed(const Integer& num, const Integer& den, Precision p) {
  if (num == 0) return Fixed{Integer(1), 0};
  {
    Integer bound = den;
    bound *= p + 1;
    if (num >= bound) return Fixed{Integer(0), 0};  // e^-t < 2^-(p+1)
  }

  // s = t / 2^k <= 1/2
  unsigned k = 0;
  {
    Integer twice = num;
    mpz_mul_2exp(twice.get_mpz_t(), twice.get_mpz_t(), 1);
    Integer scaled = den;
    while (twice > scaled) {
      mpz_mul_2exp(scaled.get_mpz_t(), scaled.get_mpz_t(), 1);
      ++k;
    }
  }

  // Error ledger in units of 2^-W: truncating s costs 1, each series term at
  // most 4 (two floors per step, halved by s <= 1/2), the alternating tail at
  // most 3 once a term drops to <= 1, and each squaring doubles the error and
  // adds 2. Total <= 2^k (4J + 6) with J <= W + 1 terms.
  const Precision pe = std::max<Precision>(p, 16);
  unsigned W = pe + k + 8;
  for (int iter = 0; iter < 4; ++iter) W = pe + 1 + k + bit_length(4UL * (W + 1) + 6);

  Integer S;
  {
    Integer n = num;
    mpz_mul_2exp(n.get_mpz_t(), n.get_mpz_t(), W);
    Integer d = den;
    mpz_mul_2exp(d.get_mpz_t(), d.get_mpz_t(), k);
    mpz_fdiv_q(S.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
  }
  Integer one;
  mpz_setbit(one.get_mpz_t(), W);

  Integer sum = one;
  Integer term = one;
  for (unsigned j = 1; term > 1; ++j) {
    term *= S;
    mpz_fdiv_q_2exp(term.get_mpz_t(), term.get_mpz_t(), W);
    mpz_fdiv_q_ui(term.get_mpz_t(), term.get_mpz_t(), j);
    if (j % 2 == 1) {
      sum -= term;
    } else {
      sum += term;
    }
  }
  for (unsigned i = 0; i < k; ++i) {
    sum *= sum;
    mpz_fdiv_q_2exp(sum.get_mpz_t(), sum.get_mpz_t(), W);
  }
  if (sum < 0) sum = 0;
  return Fixed{std::move(sum), W};
}

}  // namespace

Rational exp_neg(const Rational& t, Precision p) {
  if (t < 0) throw DomainError("exp_neg: negative argument " + to_string(t));
  const Fixed e = exp_neg_fixed(t.get_num(), t.get_den(), p);
  Rational out(e.value);
  mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), e.bits);
  return out;
}

Rational bump_eval(const Rational& x, Precision p) {
  if (x <= 0 || x >= 1) return Rational(0);
  return exp_neg(1 / (x * (1 - x)), p);
}

Rational scaled_bump_eval(const Rational& a, const Rational& c, const Rational& x, Precision p) {
  if (!(a < c)) throw std::invalid_argument("scaled_bump_eval: empty support");
  if (x <= a || x >= c) return Rational(0);
  const Rational w = c - a;
  // Multiplying by w <= 2^(L+2) loosens the needed precision by L+2.
  const long q = static_cast<long>(p) + floor_log2_lower(w) + 2;
  const Precision pq = q < 0 ? 0 : static_cast<Precision>(q);
  return w * exp_neg(w * w / ((x - a) * (c - x)), pq);
}

namespace {

Rational bump_term(std::size_t n, const OpenInterval& comp, const Rational& x, Precision p) {
  // 3^-n * value: the factor buys floor(log2 3^n) bits of slack.
  const long q = static_cast<long>(p) - floor_log2_pow3(n);
  const Precision pq = q < 0 ? 0 : static_cast<Precision>(q);
  return scaled_bump_eval(comp.left, comp.right, x, pq) / pow3(static_cast<long>(n));
}

}  // namespace

Rational level_bump_sum(const Tree& t, std::size_t n, const Rational& x, Precision p) {
  const auto comp = component_at(t, n, x);
  if (!comp) return Rational(0);
  return bump_term(n, *comp, x, p);
}

struct Dynamics::Cache {
  static constexpr std::size_t kMaxLevel = 4096;

  std::mutex mutex;
  // members[n] and components[n] exist while level n has at most kMaxLevel strings.
  std::vector<std::vector<BitString>> members;
  std::vector<OpenIntervalList> components;
  bool overflow = false;
};

Dynamics::Dynamics(Tree tree) : tree_(std::move(tree)), cache_(std::make_unique<Cache>()) {}

Dynamics::~Dynamics() = default;

std::optional<OpenInterval> Dynamics::component(std::size_t n, const Rational& x) const {
  {
    std::lock_guard lock(cache_->mutex);
    auto& c = *cache_;
    if (c.members.empty()) {
      c.members.emplace_back();
      if (tree_.contains(BitString{})) c.members[0].emplace_back();
      c.components.push_back(complement_components(level_intervals(tree_, 0)));
    }
    while (!c.overflow && c.members.size() <= n) {
      std::vector<BitString> next;
      for (const auto& s : c.members.back()) {
        for (bool b : {false, true}) {
          BitString child = s.with(b);
          if (tree_.contains(child)) next.push_back(std::move(child));
        }
      }
      if (next.size() > Cache::kMaxLevel) {
        c.overflow = true;
        break;
      }
      std::vector<LevelInterval> level;
      level.reserve(next.size());
      for (const auto& s : next) level.push_back(LevelInterval{s, cantor_endpoint(s, false), cantor_endpoint(s, true)});
      c.components.push_back(complement_components(level));
      c.members.push_back(std::move(next));
    }
    // Searched under the lock: growing the outer vector relocates the lists.
    if (n < c.components.size()) {
      const OpenIntervalList& list = c.components[n];
      const auto it = std::upper_bound(list.begin(), list.end(), x,
                                       [](const Rational& v, const OpenInterval& iv) { return v < iv.left; });
      if (it == list.begin()) return std::nullopt;
      const auto& iv = *std::prev(it);
      if (x > iv.left && x < iv.right) return iv;
      return std::nullopt;
    }
  }
  return component_at(tree_, n, x);
}

Rational Dynamics::level_term(std::size_t n, const Rational& x, Precision p) const {
  // h_n <= 3^-n, so a term below the requested precision can be dropped.
  if (floor_log2_pow3(n) >= static_cast<long>(p)) return Rational(0);
  const auto comp = component(n, x);
  if (!comp) return Rational(0);
  return bump_term(n, *comp, x, p);
}

namespace {

// floor(2^G h) for the level-n bump h on (a, c), where h is first computed
// within 2^-G, so the result is within 2^-(G-1) of 2^G h. Integer-only
// version of bump_term: no rational is normalised on the way.
Integer bump_term_fixed(std::size_t n, const OpenInterval& comp, const Rational& x, unsigned G) {
  const long q0 = static_cast<long>(G) - floor_log2_pow3(n);
  const Precision pq = q0 < 0 ? 0 : static_cast<Precision>(q0);
  const Integer& an = comp.left.get_num();
  const Integer& ad = comp.left.get_den();
  const Integer& cn = comp.right.get_num();
  const Integer& cd = comp.right.get_den();
  const Integer& xn = x.get_num();
  const Integer& xd = x.get_den();
  const Integer left = xn * ad - an * xd;   // (x - a) xd ad
  const Integer right = cn * xd - xn * cd;  // (c - x) cd xd
  if (left <= 0 || right <= 0) return Integer(0);
  const Integer wn = cn * ad - an * cd;  // w = wn / (ad cd)
  const Integer wd = ad * cd;
  const long L = static_cast<long>(mpz_sizeinbase(wn.get_mpz_t(), 2)) - static_cast<long>(mpz_sizeinbase(wd.get_mpz_t(), 2)) - 1;
  const long q = static_cast<long>(pq) + L + 2;
  const Precision pe = q < 0 ? 0 : static_cast<Precision>(q);
  // t = w^2 / ((x - a)(c - x))
  Integer tn = wn * wn * xd * xd;
  Integer td = wd * left * right;
  const Fixed e = exp_neg_fixed(tn, td, pe);
  if (e.value == 0) return Integer(0);
  Integer num = wn * e.value;
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), G);
  Integer den = wd * pow3_int(n);
  mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), e.bits);
  Integer out;
  mpz_fdiv_q(out.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return out;
}

}  // namespace

Rational Dynamics::partial_sum(std::size_t N, const Rational& x, Precision p) const {
  // Each term within 2^-(per_term+1) and floored to that grid, so within
  // 2^-per_term, and N 2^-per_term < 2^-p.
  const Precision per_term = p + bit_length(N);
  const unsigned G = per_term + 1;
  Integer acc = 0;
  for (std::size_t n = 1; n <= N; ++n) {
    if (floor_log2_pow3(n) >= static_cast<long>(G)) break;  // h_n <= 3^-n
    const auto comp = component(n, x);
    if (comp) acc += bump_term_fixed(n, *comp, x, G);
  }
  Rational sum(acc);
  mpq_div_2exp(sum.get_mpq_t(), sum.get_mpq_t(), G);
  return sum + x;
}

std::size_t Dynamics::terms_for(Precision p) {
  std::size_t N = 0;
  while (floor_log2_pow3(N) + 1 < static_cast<long>(p)) ++N;
  // 3^N > 2^floor_log2(3^N) >= 2^(p-1); bump once more when not yet >= 2^p.
  Integer three;
  mpz_ui_pow_ui(three.get_mpz_t(), 3, N);
  Integer two;
  mpz_setbit(two.get_mpz_t(), p);
  if (three < two) ++N;
  return N;
}

Rational Dynamics::approx(const Rational& x, Precision p) const {
  return partial_sum(terms_for(p + 1), x, p + 1);
}

RealCode Dynamics::eval(const Rational& x) const {
  if (x < 0 || x > 1) throw DomainError("f_T evaluated at " + to_string(x) + " outside [0,1]");
  if (x == 0 || x == 1) return RealCode::exact(x);
  if (x >= Rational(1, 3) && x <= Rational(2, 3)) {
    Integer den = x.get_den();
    while (den % 3 == 0) den /= 3;
    if (den == 1) {
      try {
        const Path path = cantor_decode(RealCode::exact(x));
        if (path.eventual() && tree_.contains_path(*path.eventual())) return RealCode::exact(x);
      } catch (const NotInCantorSet&) {
      }
    }
  }
  return RealCode::from_query([this, x](Precision p) { return approx(x, p); });
}

FunctionCode dynamics_function(std::shared_ptr<const Dynamics> d) {
  FunctionCode f;
  f.rational_eval = [d](const Rational& x) {
    RealCode inner = d->eval(x);
    if (inner.exact_value()) return inner;
    return RealCode::from_query([d, inner](Precision p) { return inner.approx(p); });
  };
  f.modulus = [](unsigned m) { return m + 1; };
  f.increasing = true;
  return f;
}

FunctionCode build_dynamics(const Tree& t) { return dynamics_function(std::make_shared<const Dynamics>(t)); }

std::string to_string(FixedVerdict v) { return v == FixedVerdict::NotFixed ? "NotFixed" : "FixedUpToP"; }

FixedVerdict is_fixed(const FunctionCode& f, const Rational& x, Precision p) {
  const Rational q = f.rational_eval(x).approx(p + 2);
  if (q - pow2(-static_cast<long>(p) - 2) > x) return FixedVerdict::NotFixed;
  return FixedVerdict::FixedUpToP;
}

}  // namespace forge
