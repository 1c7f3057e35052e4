#include "forge/cantor_tree.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <set>
#include <stdexcept>

#include "forge/errors.hpp"

namespace forge {

BitString::BitString(std::string_view bits) : bits_(bits) {
  for (char c : bits_) {
    if (c != '0' && c != '1') throw std::invalid_argument("BitString: not a bit literal: " + bits_);
  }
}

BitString BitString::repeat(bool bit, std::size_t count) {
  BitString s;
  s.bits_.assign(count, bit ? '1' : '0');
  return s;
}

BitString BitString::with(bool bit) const {
  BitString s = *this;
  s.push_back(bit);
  return s;
}

BitString BitString::operator+(const BitString& tail) const {
  BitString s = *this;
  s.bits_ += tail.bits_;
  return s;
}

BitString BitString::prefix(std::size_t n) const {
  BitString s;
  s.bits_ = bits_.substr(0, std::min(n, bits_.size()));
  return s;
}

bool BitString::is_prefix_of(const BitString& other) const {
  return bits_.size() <= other.bits_.size() && other.bits_.compare(0, bits_.size(), bits_) == 0;
}

EventualForm EventualForm::make(BitString prefix, bool tail) {
  while (!prefix.empty() && prefix.back() == tail) prefix.pop_back();
  return EventualForm{std::move(prefix), tail};
}

Path Path::eventually(BitString prefix, bool tail) {
  Path p;
  p.eventual_ = EventualForm::make(std::move(prefix), tail);
  return p;
}

Path Path::stream(std::function<bool(std::size_t)> bit_at) {
  Path p;
  p.stream_ = std::make_shared<const std::function<bool(std::size_t)>>(std::move(bit_at));
  return p;
}

bool Path::operator[](std::size_t n) const {
  if (eventual_) return n < eventual_->prefix.size() ? eventual_->prefix[n] : eventual_->tail;
  return (*stream_)(n);
}

BitString Path::prefix(std::size_t n) const {
  BitString s;
  for (std::size_t i = 0; i < n; ++i) s.push_back((*this)[i]);
  return s;
}

namespace {

void append_runs(std::string& out, const BitString& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    if (!out.empty()) out += ' ';
    out += s[i] ? '1' : '0';
    if (j - i > 1) out += "^" + std::to_string(j - i);
    i = j;
  }
}

}  // namespace

std::string Path::to_string(std::size_t shown_bits) const {
  std::string out;
  if (eventual_) {
    append_runs(out, eventual_->prefix);
    if (!out.empty()) out += ' ';
    out += eventual_->tail ? "1^ω" : "0^ω";
    return out;
  }
  append_runs(out, prefix(shown_bits));
  out += " ...";
  return out;
}

Tree::Tree(Membership member, std::string spec, std::optional<std::size_t> horizon)
    : member_(std::make_shared<const Membership>(std::move(member))),
      spec_(std::move(spec)),
      horizon_(horizon) {}

Tree Tree::with_lookahead(std::size_t depth) const {
  Tree t = *this;
  t.lookahead_ = depth;
  return t;
}

namespace {

bool reaches(const Tree& t, BitString& s, std::size_t depth) {
  if (!t.contains(s)) return false;
  if (s.size() >= depth) return true;
  for (bool b : {false, true}) {
    s.push_back(b);
    const bool ok = reaches(t, s, depth);
    s.pop_back();
    if (ok) return true;
  }
  return false;
}

}  // namespace

bool Tree::alive(const BitString& s) const {
  if (!contains(s)) return false;
  if (horizon_ && s.size() >= *horizon_) return contains(s.with(false)) || contains(s.with(true));
  BitString work = s;
  const std::size_t depth = horizon_ ? std::max(*horizon_, s.size()) + 1 : s.size() + lookahead_;
  return reaches(*this, work, depth);
}

EventualForm Tree::extreme(const BitString& s, bool prefer) const {
  if (!alive(s)) throw DomainError("no path of " + spec_ + " passes through '" + s.str() + "'");
  BitString cur = s;
  if (horizon_) {
    while (cur.size() < *horizon_) cur.push_back(alive(cur.with(prefer)) ? prefer : !prefer);
    const bool b = contains(cur.with(prefer)) ? prefer : !prefer;
    return EventualForm::make(cur.with(b), b);
  }
  // Without a certificate, accept a tail that stays constant over the second
  // half of the lookahead window.
  const std::size_t end = s.size() + lookahead_;
  while (cur.size() < end) {
    cur.push_back(prefer);
    if (!alive(cur)) {
      cur.pop_back();
      cur.push_back(!prefer);
    }
  }
  const bool tail = cur.back();
  for (std::size_t i = s.size() + lookahead_ / 2; i < end; ++i) {
    if (cur[i] != tail) throw BudgetExhausted("extreme path of " + spec_ + " not constant within lookahead");
  }
  return EventualForm::make(cur, tail);
}

EventualForm Tree::leftmost(const BitString& s) const { return extreme(s, false); }
EventualForm Tree::rightmost(const BitString& s) const { return extreme(s, true); }

bool Tree::contains_path(const EventualForm& x) const {
  std::size_t depth = x.prefix.size() + 1;
  if (horizon_) {
    depth = std::max(depth, *horizon_ + 1);
  } else {
    depth += lookahead_;
  }
  BitString s = x.prefix;
  while (s.size() < depth) s.push_back(x.tail);
  return contains(s);
}

Tree full_tree() {
  return Tree([](const BitString&) { return true; }, "FULL", 0);
}

namespace {

// Splits sigma as 1^n 0^m; nothing if sigma has another shape.
std::optional<std::pair<std::size_t, std::size_t>> ones_then_zeros(const BitString& s) {
  std::size_t n = 0;
  while (n < s.size() && s[n]) ++n;
  for (std::size_t i = n; i < s.size(); ++i) {
    if (s[i]) return std::nullopt;
  }
  return std::make_pair(n, s.size() - n);
}

}  // namespace

Tree make_p_tree() {
  return Tree([](const BitString& s) { return ones_then_zeros(s).has_value(); }, "P", 0);
}

Tree make_q_tree(std::function<std::optional<std::uint64_t>(std::size_t)> enum_a) {
  auto member = [enum_a = std::move(enum_a)](const BitString& s) {
    const auto shape = ones_then_zeros(s);
    if (!shape) return false;
    const auto [n, m] = *shape;
    for (std::size_t i = 0; i < m; ++i) {
      const auto a = enum_a(i);
      if (a && *a == n) return false;
    }
    return true;
  };
  return Tree(std::move(member), "Q:enumerated", std::nullopt);
}

Tree make_q_tree(const std::vector<std::uint64_t>& sample) {
  std::set<std::uint64_t> seen;
  for (auto a : sample) {
    if (!seen.insert(a).second) throw std::invalid_argument("A-sample enumeration repeats " + std::to_string(a));
  }
  auto member = [sample](const BitString& s) {
    const auto shape = ones_then_zeros(s);
    if (!shape) return false;
    const auto [n, m] = *shape;
    for (std::size_t i = 0; i < std::min(m, sample.size()); ++i) {
      if (sample[i] == n) return false;
    }
    return true;
  };
  std::string spec = "Q:";
  std::size_t horizon = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    spec += (i == 0 ? " " : ",") + std::to_string(sample[i]);
  }
  if (!sample.empty()) {
    horizon = static_cast<std::size_t>(*std::max_element(sample.begin(), sample.end())) + sample.size() + 1;
  }
  return Tree(std::move(member), spec, horizon);
}

Tree parse_tree_spec(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  const std::string_view body = text.substr(b, e - b);
  if (body == "P") return make_p_tree();
  if (body == "FULL") return full_tree();
  if (body.substr(0, 2) != "Q:") {
    throw ParseError("unknown tree spec '" + std::string(body) + "' (expected P, FULL or Q:...)", 1, b + 1);
  }
  std::vector<std::uint64_t> sample;
  std::set<std::uint64_t> seen;
  std::size_t i = 2;
  auto skip_space = [&] {
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
  };
  skip_space();
  if (i == body.size()) return make_q_tree(sample);
  while (true) {
    skip_space();
    const std::size_t start = i;
    std::uint64_t v = 0;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
      v = v * 10 + static_cast<std::uint64_t>(body[i] - '0');
      if (v > (1ULL << 32)) throw ParseError("A-sample element too large", 1, b + start + 1);
      ++i;
    }
    if (i == start) throw ParseError("expected a natural number", 1, b + i + 1);
    if (!seen.insert(v).second) throw ParseError("A-sample repeats " + std::to_string(v), 1, b + start + 1);
    sample.push_back(v);
    skip_space();
    if (i == body.size()) break;
    if (body[i] != ',') throw ParseError("expected ','", 1, b + i + 1);
    ++i;
  }
  return make_q_tree(sample);
}

Rational cantor_endpoint(const BitString& sigma, bool b) {
  const std::size_t n = sigma.size();
  Integer num;
  mpz_ui_pow_ui(num.get_mpz_t(), 3, n);
  Integer digit_sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    digit_sum *= 3;
    if (sigma[k]) digit_sum += 2;
  }
  num += digit_sum;
  if (b) num += 1;
  Integer den;
  mpz_ui_pow_ui(den.get_mpz_t(), 3, n + 1);
  Rational q(num, den);
  q.canonicalize();
  return q;
}

Rational cantor_value(const EventualForm& x) { return cantor_endpoint(x.prefix, x.tail); }

RealCode cantor_encode(const Path& x) {
  if (const auto& ev = x.eventual()) return RealCode::exact(cantor_value(*ev));
  return RealCode::from_query([x](Precision p) {
    // I_sigma has width 3^-(k+1); its midpoint is within half of that.
    Integer bound;
    mpz_ui_pow_ui(bound.get_mpz_t(), 2, p);
    std::size_t k = 0;
    Integer width = 3;
    while (width * 2 < bound) {
      width *= 3;
      ++k;
    }
    const BitString sigma = x.prefix(k);
    return Rational((cantor_endpoint(sigma, false) + cantor_endpoint(sigma, true)) / 2);
  });
}

namespace {

// Smallest p with 2^-p < 3^-(k+3).
Precision decode_precision(std::size_t k) {
  Integer t;
  mpz_ui_pow_ui(t.get_mpz_t(), 3, k + 3);
  return static_cast<Precision>(mpz_sizeinbase(t.get_mpz_t(), 2));
}

std::optional<EventualForm> decode_ternary_exact(const Rational& r) {
  const Rational y = r * 3 - 1;
  if (y < 0 || y > 1) throw NotInCantorSet(to_string(r) + " lies outside [1/3, 2/3]");
  if (y == 1) return EventualForm::make(BitString{}, true);
  Integer den = y.get_den();
  std::size_t len = 0;
  while (den % 3 == 0) {
    den /= 3;
    ++len;
  }
  if (den != 1) return std::nullopt;
  Integer num = y.get_num();
  std::string digits(len, '0');
  for (std::size_t i = len; i-- > 0;) {
    const Integer d = num % 3;
    digits[i] = static_cast<char>('0' + d.get_ui());
    num /= 3;
  }
  BitString prefix;
  for (std::size_t i = 0; i < len; ++i) {
    if (digits[i] == '1') {
      if (i + 1 != len) throw NotInCantorSet(to_string(r) + " lies in a removed gap");
      prefix.push_back(false);
      return EventualForm::make(prefix, true);
    }
    prefix.push_back(digits[i] == '2');
  }
  return EventualForm::make(prefix, false);
}

struct DecodeState {
  RealCode r;
  DecodeOptions options;
  std::mutex mutex;
  std::vector<bool> bits;
  Rational left = Rational(1, 3);
  Rational width = Rational(1, 3);

  void decode_through(std::size_t n) {
    while (bits.size() <= n) {
      const std::size_t k = bits.size();
      const Precision p = decode_precision(k);
      if (p > options.precision_ceiling) {
        throw PrecisionExhausted("cantor_decode: bit " + std::to_string(k) + " needs precision " + std::to_string(p));
      }
      const Rational eps = pow2(-static_cast<long>(p));
      const Rational q = r.approx(p);
      if (q + eps < left || q - eps > left + width) {
        throw NotInCantorSet("value " + to_string(q) + " outside I_sigma at depth " + std::to_string(k));
      }
      const Rational third = width / 3;
      if (q - eps > left + third && q + eps < left + third * 2) {
        throw NotInCantorSet("value " + to_string(q) + " inside the removed gap at depth " + std::to_string(k));
      }
      const bool bit = q >= left + width / 2;
      if (bit) left += third * 2;
      width = third;
      bits.push_back(bit);
    }
  }
};

}  // namespace

Path cantor_decode(const RealCode& r, DecodeOptions options) {
  if (auto v = r.exact_value()) {
    if (auto ev = decode_ternary_exact(*v)) return Path::eventually(ev->prefix, ev->tail);
  }
  auto state = std::make_shared<DecodeState>();
  state->r = r;
  state->options = options;
  state->decode_through(0);
  return Path::stream([state](std::size_t n) {
    std::lock_guard lock(state->mutex);
    state->decode_through(n);
    return static_cast<bool>(state->bits[n]);
  });
}

PathOrder path_compare(const Path& x, const Path& y, std::size_t budget) {
  std::size_t scan = budget;
  if (x.eventual() && y.eventual()) {
    scan = std::min(budget, std::max(x.eventual()->prefix.size(), y.eventual()->prefix.size()) + 1);
  }
  for (std::size_t i = 0; i < scan; ++i) {
    const bool a = x[i];
    const bool b = y[i];
    if (a != b) return a ? PathOrder::Greater : PathOrder::Less;
  }
  return PathOrder::EqualUpToBudget;
}

namespace {

std::vector<BitString> level_members(const Tree& t, std::size_t n) {
  std::vector<BitString> level;
  if (!t.contains(BitString{})) return level;
  level.emplace_back();
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<BitString> next;
    for (const auto& s : level) {
      for (bool b : {false, true}) {
        BitString c = s.with(b);
        if (t.contains(c)) next.push_back(std::move(c));
      }
    }
    level = std::move(next);
  }
  return level;
}

// Lexicographically least (greatest when `down`) member of length n that is
// >= v (<= v when `down`), searching below s.
std::optional<BitString> bounded_member(const Tree& t, std::size_t n, BitString& s, const BitString& v,
                                        bool tight, bool down) {
  if (!t.contains(s)) return std::nullopt;
  if (s.size() == n) return s;
  const bool limit = v[s.size()];
  const bool order[2] = {down, !down};
  for (bool b : order) {
    if (tight && (down ? b > limit : b < limit)) continue;
    s.push_back(b);
    auto r = bounded_member(t, n, s, v, tight && b == limit, down);
    s.pop_back();
    if (r) return r;
  }
  return std::nullopt;
}

std::optional<BitString> member_at_least(const Tree& t, std::size_t n, const BitString& v) {
  BitString s;
  return bounded_member(t, n, s, v, true, false);
}

std::optional<BitString> member_at_most(const Tree& t, std::size_t n, const BitString& v) {
  BitString s;
  return bounded_member(t, n, s, v, true, true);
}

}  // namespace

std::vector<LevelInterval> level_intervals(const Tree& t, std::size_t n) {
  std::vector<LevelInterval> out;
  for (auto& s : level_members(t, n)) {
    Rational l = cantor_endpoint(s, false);
    Rational r = cantor_endpoint(s, true);
    out.push_back(LevelInterval{std::move(s), std::move(l), std::move(r)});
  }
  // Level extension preserves lexicographic order, which is positional order.
  return out;
}

OpenIntervalList complement_components(const std::vector<LevelInterval>& level) {
  OpenIntervalList out;
  Rational left = 0;
  for (const auto& iv : level) {
    out.push_back(OpenInterval{left, iv.left});
    left = iv.right;
  }
  out.push_back(OpenInterval{left, Rational(1)});
  return out;
}

OpenIntervalList complement_components(const Tree& t, std::size_t n) {
  return complement_components(level_intervals(t, n));
}

std::optional<OpenInterval> component_at(const Tree& t, std::size_t n, const Rational& x) {
  std::optional<BitString> pred;
  std::optional<BitString> succ;
  if (x < Rational(1, 3)) {
    succ = member_at_least(t, n, BitString::repeat(false, n));
  } else if (x > Rational(2, 3)) {
    pred = member_at_most(t, n, BitString::repeat(true, n));
  } else if (!t.contains(BitString{})) {
    return OpenInterval{Rational(0), Rational(1)};
  } else {
    BitString sigma;
    Rational left(1, 3);
    Rational width(1, 3);
    while (sigma.size() < n) {
      const Rational third = width / 3;
      const std::size_t rest = n - sigma.size() - 1;
      if (x > left + third && x < left + third * 2) {
        pred = member_at_most(t, n, sigma.with(false) + BitString::repeat(true, rest));
        succ = member_at_least(t, n, sigma.with(true) + BitString::repeat(false, rest));
        break;
      }
      const bool b = x >= left + third * 2;
      BitString child = sigma.with(b);
      if (!t.contains(child)) {
        pred = member_at_most(t, n, child + BitString::repeat(true, rest));
        succ = member_at_least(t, n, child + BitString::repeat(false, rest));
        break;
      }
      sigma = std::move(child);
      if (b) left += third * 2;
      width = third;
    }
    if (sigma.size() == n) return std::nullopt;
  }
  OpenInterval out{Rational(0), Rational(1)};
  if (pred) out.left = cantor_endpoint(*pred, true);
  if (succ) out.right = cantor_endpoint(*succ, false);
  return out;
}

std::vector<BitString> members_between(const Tree& t, std::size_t n, const std::optional<BitString>& lo,
                                       const std::optional<BitString>& hi) {
  std::vector<BitString> out;
  for (auto& s : level_members(t, n)) {
    if (lo && !(*lo < s)) continue;
    if (hi && !(s < *hi)) continue;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace forge
