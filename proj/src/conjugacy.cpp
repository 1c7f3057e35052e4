#include "forge/conjugacy.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

#include "forge/errors.hpp"

namespace forge {

OrderIso identity_order_iso() {
  OrderIso iso;
  iso.forward = [](const Path& x) { return x; };
  iso.backward = [](const Path& x) { return x; };
  return iso;
}

Homeo identity_homeo() { return Homeo{identity_function(), identity_function()}; }

Homeo reflection_homeo() {
  FunctionCode f;
  f.rational_eval = [](const Rational& x) { return RealCode::exact(Rational(1 - x)); };
  f.modulus = [](unsigned m) { return m; };
  f.increasing = false;
  return Homeo{f, f};
}

Rational invert_monotone(const FunctionCode& f, const RealCode& y, Precision p) {
  {
    const Rational q = y.approx(p + 2);
    const Rational r = pow2(-static_cast<long>(p) - 2);
    if (q + r < 0 || q - r > 1) throw DomainError("invert_monotone: target " + to_string(q) + " outside [0,1]");
  }
  const Precision base = p + 4;
  auto compare = [&](const Rational& x) {
    Comparison c = Comparison::Indistinguishable;
    for (Precision w = base; w <= base + 64 && c == Comparison::Indistinguishable; w += 16) {
      c = separate(f.rational_eval(x), y, w);
    }
    return c;
  };
  Rational lo = 0;
  Rational hi = 1;
  const Rational width = pow2(-static_cast<long>(p));
  while (hi - lo > width) {
    const Rational mid = (lo + hi) / 2;
    const Comparison c = compare(mid);
    if (c == Comparison::Less) {
      lo = mid;
    } else if (c == Comparison::Greater) {
      hi = mid;
    } else {
      // F(mid) is too close to y to order; bracket the root around mid.
      const Rational delta = width / 2;
      if (compare(mid - delta) == Comparison::Less && compare(mid + delta) == Comparison::Greater) return mid;
      throw PrecisionExhausted("invert_monotone: comparison at " + to_string(mid) + " never resolved");
    }
  }
  return (lo + hi) / 2;
}

FixedPointLocation locate_fixed_structure(const Tree& t, const Rational& x, std::size_t depth) {
  FixedPointLocation loc;
  auto fixed = [&](std::optional<EventualForm> point) {
    loc.kind = FixedPointLocation::Kind::Fixed;
    loc.point = std::move(point);
    loc.a = loc.b = x;
    return loc;
  };
  auto between = [&](FixedPointLocation::Kind kind, const std::optional<EventualForm>& ap,
                     const std::optional<EventualForm>& bp) {
    loc.kind = kind;
    loc.a_path = ap;
    loc.b_path = bp;
    loc.a = ap ? cantor_value(*ap) : Rational(0);
    loc.b = bp ? cantor_value(*bp) : Rational(1);
    return loc;
  };
  if (x == 0 || x == 1) return fixed(std::nullopt);
  if (!t.alive(BitString{})) return between(FixedPointLocation::Kind::Gap, std::nullopt, std::nullopt);

  EventualForm lm = t.leftmost(BitString{});
  EventualForm rm = t.rightmost(BitString{});
  {
    const Rational l = cantor_value(lm);
    const Rational r = cantor_value(rm);
    if (x < l) return between(FixedPointLocation::Kind::Gap, std::nullopt, lm);
    if (x == l) return fixed(lm);
    if (x > r) return between(FixedPointLocation::Kind::Gap, rm, std::nullopt);
    if (x == r) return fixed(rm);
  }
  // Invariant: c(lm) < x < c(rm), both extreme paths through sigma.
  BitString sigma;
  while (true) {
    if (sigma.size() >= depth) return between(FixedPointLocation::Kind::Unresolved, lm, rm);
    const BitString s0 = sigma.with(false);
    const BitString s1 = sigma.with(true);
    const bool alive0 = t.alive(s0);
    const bool alive1 = t.alive(s1);
    if (alive0 && alive1) {
      EventualForm r0 = t.rightmost(s0);
      EventualForm l1 = t.leftmost(s1);
      const Rational m0 = cantor_value(r0);
      const Rational m1 = cantor_value(l1);
      if (x < m0) {
        sigma = s0;
        rm = std::move(r0);
      } else if (x == m0) {
        return fixed(r0);
      } else if (x < m1) {
        return between(FixedPointLocation::Kind::Gap, r0, l1);
      } else if (x == m1) {
        return fixed(l1);
      } else {
        sigma = s1;
        lm = std::move(l1);
      }
    } else {
      sigma = alive0 ? s0 : s1;
    }
  }
}

namespace {

struct Orbits {
  // f^k(x0) forward and f^-k(x0) backward, index 0 being x0 itself.
  std::vector<Enclosure> pf, pb, qf, qb;
};

struct GapState {
  GapInterval gap;
  Rational ha, hb, x0, y0;
  bool identity = false;
  std::mutex mutex;
  std::map<unsigned, Orbits> orbits;
};

Rational image_value(const OrderIso& iso, const std::optional<EventualForm>& x, const Rational& missing) {
  if (!x) return missing;
  const Path out = iso.forward(Path::eventually(x->prefix, x->tail));
  if (!out.eventual()) {
    throw UnsupportedEndpoint("image of fixed point " + Path::eventually(x->prefix, x->tail).to_string() +
                              " is not eventually constant");
  }
  return cantor_value(*out.eventual());
}

std::optional<BitString> prefix_of(const std::optional<EventualForm>& x, std::size_t n) {
  if (!x) return std::nullopt;
  return Path::eventually(x->prefix, x->tail).prefix(n);
}

// One more guard byte than the working precision for stored endpoints.
unsigned grid_bits(unsigned w) { return w + 8; }

// Precisions are snapped up to multiples of 16 (with 4 spare bits) so that
// requests a few bits apart share the cached orbits.
Precision snapped(Precision p) { return (p + 4 + 15) / 16 * 16; }

// Largest q with hi - lo <= 2^(1-q), i.e. the midpoint is within 2^-q.
Precision achieved(const Enclosure& e, Precision at_least) {
  Precision q = at_least;
  while (q < at_least + 64 && e.hi - e.lo <= pow2(-static_cast<long>(q))) ++q;
  return q;
}

}  // namespace

struct Conjugacy::Impl {
  Tree p = full_tree();
  Tree q = full_tree();
  OrderIso hstar;
  std::shared_ptr<const Dynamics> fp;
  std::shared_ptr<const Dynamics> fq;
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<GapState>> gaps;
  // x -> (p, h(x) within 2^-p)
  std::map<Rational, std::pair<Precision, Rational>> memo;

  std::shared_ptr<GapState> state_for(const GapInterval& gap) {
    const std::string key = to_string(gap.a) + "," + to_string(gap.b);
    {
      std::lock_guard lock(mutex);
      if (auto it = gaps.find(key); it != gaps.end()) return it->second;
    }
    auto st = std::make_shared<GapState>();
    st->gap = gap;
    st->ha = image_value(hstar, gap.a_path, Rational(0));
    st->hb = image_value(hstar, gap.b_path, Rational(1));
    st->x0 = (gap.a + gap.b) / 2;
    st->y0 = (st->ha + st->hb) / 2;
    st->identity = same_dynamics_on(*st);
    std::lock_guard lock(mutex);
    return gaps.emplace(key, st).first->second;
  }

  bool same_dynamics_on(const GapState& st) const {
    if (st.ha != st.gap.a || st.hb != st.gap.b) return false;
    if (!p.horizon() || !q.horizon()) return false;
    // Past both horizons no member lies strictly between the end paths.
    const std::size_t last = std::max(*p.horizon(), *q.horizon()) + 1;
    for (std::size_t n = 0; n <= last; ++n) {
      const auto lo = prefix_of(st.gap.a_path, n);
      const auto hi = prefix_of(st.gap.b_path, n);
      if (members_between(p, n, lo, hi) != members_between(q, n, lo, hi)) return false;
    }
    return true;
  }

  // f([lo, hi]) for f increasing with f(z) >= z and f(top) = top.
  static Enclosure forward_step(const Dynamics& f, const Enclosure& e, const Rational& top, unsigned w) {
    const Rational eps = pow2(-static_cast<long>(w));
    const unsigned g = grid_bits(w);
    const Rational flo = f.approx(e.lo, w);
    const Rational fhi = e.hi == e.lo ? flo : f.approx(e.hi, w);
    Enclosure out{floor_dyadic(flo - eps, g), ceil_dyadic(fhi + eps, g)};
    if (out.lo < e.lo) out.lo = e.lo;
    if (out.hi > top) out.hi = top;
    return out;
  }

  // z with f(z) close to y, and the residual |f~(z) - y| of its last
  // evaluation. slope estimates 1/f'; the certificate below does not depend
  // on how z was found.
  static std::pair<Rational, Rational> solve(const Dynamics& f, const Rational& y, const Rational& bottom, unsigned w,
                                             const Rational& guess, const Rational& slope) {
    const Rational eps = pow2(-static_cast<long>(w));
    const unsigned g = grid_bits(w);
    Rational z = std::min<Rational>(std::max<Rational>(guess, bottom), y);
    std::optional<std::pair<Rational, Rational>> last;
    for (int it = 0;; ++it) {
      const Rational r = f.approx(z, w) - y;
      if (abs(r) <= eps * 2 || it == 64) return {z, abs(r)};
      // Secant step once two residuals are known.
      Rational next = z - r * slope;
      if (last && last->second != r) next = z - r * (z - last->first) / (r - last->second);
      next = floor_dyadic(next, g);
      if (next < bottom) next = bottom;
      if (next > y) next = y;
      if (next == z) return {z, abs(r)};
      last.emplace(z, r);
      z = std::move(next);
    }
  }

  // Recent displacements of a backward orbit. Displacements shrink roughly
  // geometrically, by 1/f', which gives the next preimage to a few bits.
  struct Trend {
    Rational d1;  // last displacement
    Rational d2;  // the one before
    Rational guess(const Rational& y) const {
      if (d1 == 0) return y;
      if (d2 == 0) return y - d1;
      return y - d1 * d1 / d2;
    }
    Rational slope() const { return d1 != 0 && d2 != 0 ? Rational(d1 / d2) : Rational(1); }
    void push(const Rational& d) {
      d2 = d1;
      d1 = d;
    }
  };

  // f^-1([lo, hi]). Since |f' - 1| <= 1/2 (the bump derivative certificate),
  // |z - f^-1(y)| <= 2 |f(z) - y|.
  static Enclosure inverse_step(const Dynamics& f, const Enclosure& e, const Rational& bottom, unsigned w,
                                const Trend& trend = {}) {
    const Rational eps = pow2(-static_cast<long>(w));
    const unsigned g = grid_bits(w);
    const Rational slope = trend.slope();
    const auto [zl, rl] = solve(f, e.lo, bottom, w, floor_dyadic(trend.guess(e.lo), g), slope);
    Enclosure out;
    out.lo = floor_dyadic(zl - (rl + eps) * 2, g);
    if (e.hi == e.lo) {
      out.hi = ceil_dyadic(zl + (rl + eps) * 2, g);
    } else {
      // f' is close to 1 on thin enclosures, so this guess is usually
      // accepted after one evaluation.
      const auto [zh, rh] = solve(f, e.hi, bottom, w, ceil_dyadic(zl + (e.hi - e.lo), g), slope);
      out.hi = ceil_dyadic(zh + (rh + eps) * 2, g);
    }
    if (out.lo < bottom) out.lo = bottom;
    if (out.hi > e.hi) out.hi = e.hi;
    return out;
  }

  static void extend(std::vector<Enclosure>& orbit, std::size_t n,
                     const std::function<Enclosure(const Enclosure&, const Trend&)>& step) {
    while (orbit.size() <= n) {
      const std::size_t k = orbit.size();
      Trend trend;
      if (k >= 3) trend.push(orbit[k - 3].lo - orbit[k - 2].lo);
      if (k >= 2) trend.push(orbit[k - 2].lo - orbit[k - 1].lo);
      orbit.push_back(step(orbit.back(), trend));
    }
  }

  Orbits& orbits_at(GapState& st, unsigned w) {
    auto [it, fresh] = st.orbits.try_emplace(w);
    if (fresh) {
      it->second.pf = it->second.pb = {Enclosure{st.x0, st.x0}};
      it->second.qf = it->second.qb = {Enclosure{st.y0, st.y0}};
    }
    return it->second;
  }

  void ensure(GapState& st, Orbits& o, char which, std::size_t n, unsigned w) {
    switch (which) {
      case 'p':
        extend(o.pf, n, [&](const Enclosure& e, const Trend&) { return forward_step(*fp, e, st.gap.b, w); });
        break;
      case 'P':
        extend(o.pb, n, [&](const Enclosure& e, const Trend& t) { return inverse_step(*fp, e, st.gap.a, w, t); });
        break;
      case 'q':
        extend(o.qf, n, [&](const Enclosure& e, const Trend&) { return forward_step(*fq, e, st.hb, w); });
        break;
      default:
        extend(o.qb, n, [&](const Enclosure& e, const Trend& t) { return inverse_step(*fq, e, st.ha, w, t); });
        break;
    }
  }

  // i maps [x0, f_P(x0)) affinely onto [y0, f_Q(y0)).
  static std::optional<Enclosure> affine(const GapState& st, const Orbits& o, const Enclosure& phi, unsigned w) {
    const Rational dlo = o.pf[1].lo - st.x0;
    const Rational dhi = o.pf[1].hi - st.x0;
    const Rational nlo = o.qf[1].lo - st.y0;
    const Rational nhi = o.qf[1].hi - st.y0;
    if (dlo <= 0 || nlo <= 0) return std::nullopt;
    const Rational slo = nlo / dhi;
    const Rational shi = nhi / dlo;
    const Rational ulo = phi.lo - st.x0;
    const Rational uhi = phi.hi - st.x0;
    Rational lo = ulo >= 0 ? Rational(ulo * slo) : Rational(ulo * shi);
    Rational hi = uhi >= 0 ? Rational(uhi * shi) : Rational(uhi * slo);
    const unsigned g = grid_bits(w);
    return Enclosure{floor_dyadic(lo + st.y0, g), ceil_dyadic(hi + st.y0, g)};
  }

  struct GapResult {
    std::optional<Enclosure> image;
    // xs meets an orbit point, so no single fundamental domain holds it.
    bool straddle = false;
  };

  // Encloses h(xs) for xs inside the gap on one side of x0, with width at
  // most 2^(1-prec), working at precision w.
  GapResult try_gap(GapState& st, const Enclosure& xs, Precision prec, unsigned w, std::size_t budget) {
    std::lock_guard lock(st.mutex);
    Orbits& o = orbits_at(st, w);
    const Rational target = pow2(1 - static_cast<long>(prec));
    auto narrow = [&](const Enclosure& e) { return e.hi - e.lo <= target ? GapResult{e} : GapResult{}; };
    ensure(st, o, 'p', 1, w);
    ensure(st, o, 'q', 1, w);

    if (xs.lo > st.x0) {
      std::size_t n = 0;
      for (;; ++n) {
        if (n + 1 > budget) {
          throw BudgetExhausted("x = " + to_string(xs.lo) + " lies beyond " + std::to_string(budget) +
                                " forward iterates of the gap midpoint");
        }
        ensure(st, o, 'p', n + 1, w);
        ensure(st, o, 'q', n + 1, w);
        // x >= f_P^n(x0) gives f_Q^n(y0) <= h(x) < h(b).
        if (xs.lo >= o.pf[n].hi && st.hb - o.qf[n].lo <= target) return GapResult{Enclosure{o.qf[n].lo, st.hb}};
        if (xs.hi < o.pf[n + 1].lo) {
          if (xs.lo < o.pf[n].hi) return GapResult{std::nullopt, true};
          break;
        }
        if (xs.lo < o.pf[n + 1].hi) return GapResult{std::nullopt, true};
      }
      const Enclosure domain{o.qf[n].lo, o.qf[n + 1].hi};
      if (domain.hi - domain.lo <= target) return GapResult{domain};
      Enclosure e = xs;
      Trend trend;
      for (std::size_t k = 0; k < n; ++k) {
        Enclosure next = inverse_step(*fp, e, st.gap.a, w, trend);
        trend.push(e.lo - next.lo);
        e = std::move(next);
      }
      auto mapped = affine(st, o, e, w);
      if (!mapped) return {};
      e = *mapped;
      for (std::size_t k = 0; k < n; ++k) e = forward_step(*fq, e, st.hb, w);
      e.lo = std::max<Rational>(e.lo, domain.lo);
      e.hi = std::min<Rational>(e.hi, domain.hi);
      return narrow(e);
    }
    if (xs.hi >= st.x0) return GapResult{std::nullopt, true};

    std::size_t m = 1;
    for (;; ++m) {
      if (m > budget) {
        throw BudgetExhausted("x = " + to_string(xs.hi) + " lies beyond " + std::to_string(budget) +
                              " backward iterates of the gap midpoint");
      }
      ensure(st, o, 'P', m, w);
      ensure(st, o, 'Q', m, w);
      // x < f_P^-(m-1)(x0) gives h(a) < h(x) < f_Q^-(m-1)(y0).
      if (xs.hi < o.pb[m - 1].lo && o.qb[m - 1].hi - st.ha <= target) return GapResult{Enclosure{st.ha, o.qb[m - 1].hi}};
      if (xs.lo >= o.pb[m].hi) {
        if (xs.hi >= o.pb[m - 1].lo) return GapResult{std::nullopt, true};
        break;
      }
      if (xs.hi >= o.pb[m].lo) return GapResult{std::nullopt, true};
    }
    const Enclosure domain{o.qb[m].lo, o.qb[m - 1].hi};
    if (domain.hi - domain.lo <= target) return GapResult{domain};
    Enclosure e = xs;
    for (std::size_t k = 0; k < m; ++k) e = forward_step(*fp, e, st.gap.b, w);
    auto mapped = affine(st, o, e, w);
    if (!mapped) return {};
    e = *mapped;
    for (std::size_t k = 0; k < m; ++k) e = inverse_step(*fq, e, st.ha, w);
    e.lo = std::max<Rational>(e.lo, domain.lo);
    e.hi = std::min<Rational>(e.hi, domain.hi);
    return narrow(e);
  }
};

Conjugacy::Conjugacy(Tree p, Tree q, OrderIso hstar, SynthOptions options)
    : options_(options), impl_(std::make_unique<Impl>()) {
  impl_->fp = std::make_shared<const Dynamics>(p);
  impl_->fq = std::make_shared<const Dynamics>(q);
  impl_->p = std::move(p);
  impl_->q = std::move(q);
  impl_->hstar = std::move(hstar);
}

Conjugacy::~Conjugacy() = default;

std::shared_ptr<Conjugacy> Conjugacy::make(Tree p, Tree q, OrderIso hstar, SynthOptions options) {
  return std::shared_ptr<Conjugacy>(new Conjugacy(std::move(p), std::move(q), std::move(hstar), options));
}

const Tree& Conjugacy::source() const noexcept { return impl_->p; }
const Tree& Conjugacy::target() const noexcept { return impl_->q; }

namespace {

GapInterval as_gap(const FixedPointLocation& loc, const Tree& t) {
  return GapInterval{loc.a, loc.b, loc.a_path, loc.b_path, t.horizon().has_value()};
}

}  // namespace

std::optional<GapInterval> Conjugacy::gap_of(const Rational& x, Precision p) const {
  const auto loc = locate_fixed_structure(impl_->p, x, p + 4);
  if (loc.kind != FixedPointLocation::Kind::Gap) return std::nullopt;
  return as_gap(loc, impl_->p);
}

bool Conjugacy::identity_on(const GapInterval& gap) const { return impl_->state_for(gap)->identity; }

Enclosure Conjugacy::source_orbit(const GapInterval& gap, long n, unsigned w) const {
  auto st = impl_->state_for(gap);
  std::lock_guard lock(st->mutex);
  Orbits& o = impl_->orbits_at(*st, w);
  const auto k = static_cast<std::size_t>(n < 0 ? -n : n);
  impl_->ensure(*st, o, n < 0 ? 'P' : 'p', k, w);
  return n < 0 ? o.pb[k] : o.pf[k];
}

Enclosure Conjugacy::target_orbit(const GapInterval& gap, long n, unsigned w) const {
  auto st = impl_->state_for(gap);
  std::lock_guard lock(st->mutex);
  Orbits& o = impl_->orbits_at(*st, w);
  const auto k = static_cast<std::size_t>(n < 0 ? -n : n);
  impl_->ensure(*st, o, n < 0 ? 'Q' : 'q', k, w);
  return n < 0 ? o.qb[k] : o.qf[k];
}

Rational Conjugacy::eval(const Rational& x, Precision requested) const {
  if (x < 0 || x > 1) throw DomainError("conjugacy evaluated at " + to_string(x) + " outside [0,1]");
  if (x == 0 || x == 1) return x;
  {
    std::lock_guard lock(impl_->mutex);
    if (auto it = impl_->memo.find(x); it != impl_->memo.end() && it->second.first >= requested) return it->second.second;
  }
  // The memo records the precision actually reached, which usually covers
  // the slightly higher precisions callers ask for next.
  const auto [value, reached] = eval_uncached(x, snapped(requested));
  std::lock_guard lock(impl_->mutex);
  auto& slot = impl_->memo[x];
  if (slot.first < reached) slot = {reached, value};
  return value;
}

std::pair<Rational, Precision> Conjugacy::eval_uncached(const Rational& x, Precision p) const {
  const Rational target = pow2(1 - static_cast<long>(p));
  std::size_t depth = p + 4;
  const std::size_t max_depth = p + 4 + 256;
  auto image = [&](const EventualForm& point) {
    const Path out = impl_->hstar.forward(Path::eventually(point.prefix, point.tail));
    if (out.eventual()) return cantor_value(*out.eventual());
    return cantor_encode(out).approx(p + 2);
  };
  while (true) {
    const auto loc = locate_fixed_structure(impl_->p, x, depth);
    switch (loc.kind) {
      case FixedPointLocation::Kind::Fixed:
        return {image(*loc.point), p};
      case FixedPointLocation::Kind::Unresolved: {
        // Both ends are fixed points, so h(x) lies between their images.
        const Rational lo = image(*loc.a_path) - pow2(-static_cast<long>(p) - 2);
        const Rational hi = image(*loc.b_path) + pow2(-static_cast<long>(p) - 2);
        if (hi - lo <= target) return {(lo + hi) / 2, p};
        if (depth >= max_depth) throw BudgetExhausted("fixed-point structure near " + to_string(x) + " not resolved");
        depth += 16;
        continue;
      }
      case FixedPointLocation::Kind::Gap:
        break;
    }
    auto st = impl_->state_for(as_gap(loc, impl_->p));
    if (st->identity) return {x, p};
    if (st->hb - st->ha <= target) return {(st->ha + st->hb) / 2, p};
    if (x == st->x0) return {st->y0, p};
    for (unsigned g = options_.guard_bits; g <= options_.max_guard_bits; g += options_.guard_step) {
      const auto r = impl_->try_gap(*st, Enclosure{x, x}, p, p + g, options_.iteration_budget);
      if (r.image) return {(r.image->lo + r.image->hi) / 2, achieved(*r.image, p)};
    }
    throw PrecisionExhausted("conjugacy at " + to_string(x) + " not resolved with " +
                             std::to_string(options_.max_guard_bits) + " guard bits");
  }
}

std::optional<Enclosure> Conjugacy::enclose(const Rational& a, const Rational& b, Precision p) const {
  if (a > b) throw std::invalid_argument("Conjugacy::enclose: empty interval");
  if (a < 0 || b > 1) throw DomainError("conjugacy enclosure of an interval outside [0,1]");
  if (a == b) {
    const Rational v = eval(a, p + 1);
    const Rational r = pow2(-static_cast<long>(p) - 1);
    return Enclosure{v - r, v + r};
  }
  const Rational target = pow2(1 - static_cast<long>(p));
  const Precision snap = snapped(p);
  const auto la = locate_fixed_structure(impl_->p, a, snap + 4);
  const auto lb = locate_fixed_structure(impl_->p, b, snap + 4);
  if (la.kind != FixedPointLocation::Kind::Gap || lb.kind != FixedPointLocation::Kind::Gap || la.a != lb.a) {
    return std::nullopt;
  }
  auto st = impl_->state_for(as_gap(la, impl_->p));
  if (st->identity) return b - a <= target ? std::optional<Enclosure>(Enclosure{a, b}) : std::nullopt;
  if (st->hb - st->ha <= target) return Enclosure{st->ha, st->hb};
  for (unsigned g = options_.guard_bits; g <= options_.max_guard_bits; g += options_.guard_step) {
    const auto r = impl_->try_gap(*st, Enclosure{a, b}, p, snap + g, options_.iteration_budget);
    if (r.image) return r.image;
    if (r.straddle) return std::nullopt;
  }
  return std::nullopt;
}

RealCode Conjugacy::eval_code(const Rational& x) const {
  if (x < 0 || x > 1) throw DomainError("conjugacy evaluated at " + to_string(x) + " outside [0,1]");
  if (x == 0 || x == 1) return RealCode::exact(x);
  const auto loc = locate_fixed_structure(impl_->p, x, 64);
  if (loc.kind == FixedPointLocation::Kind::Fixed) {
    const Path out = impl_->hstar.forward(Path::eventually(loc.point->prefix, loc.point->tail));
    if (out.eventual()) return RealCode::exact(cantor_value(*out.eventual()));
    return cantor_encode(out);
  }
  if (loc.kind == FixedPointLocation::Kind::Gap) {
    auto st = impl_->state_for(as_gap(loc, impl_->p));
    if (st->identity) return RealCode::exact(x);
    if (x == st->x0) return RealCode::exact(st->y0);
  }
  return RealCode::from_query([self = shared_from_this(), x](Precision p) { return self->eval(x, p); });
}

Homeo synth_conjugacy(const Tree& p, const Tree& q, const OrderIso& hstar, SynthOptions options) {
  auto forward = Conjugacy::make(p, q, hstar, options);
  auto backward = Conjugacy::make(q, p, OrderIso{hstar.backward, hstar.forward}, options);
  auto code = [](std::shared_ptr<Conjugacy> c) {
    FunctionCode f;
    f.rational_eval = [c](const Rational& x) { return c->eval_code(x); };
    f.enclose = [c](const Rational& a, const Rational& b, Precision p) -> std::optional<std::pair<Rational, Rational>> {
      if (auto e = c->enclose(a, b, p)) return std::make_pair(e->lo, e->hi);
      return std::nullopt;
    };
    f.increasing = true;
    return f;
  };
  return Homeo{code(forward), code(backward)};
}

OrderIso extract_order_iso(const Homeo& h, const Tree& p, const Tree& q) {
  auto through = [](const FunctionCode& f, const Tree& domain) {
    return [f, domain](const Path& x) {
      if (x.eventual() && !domain.contains_path(*x.eventual())) {
        throw DomainError("path " + x.to_string() + " is not in [" + domain.spec() + "]");
      }
      return cantor_decode(eval_fn(f, cantor_encode(x)));
    };
  };
  return OrderIso{through(h.fn, p), through(h.inv, q)};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Exhausted: return "exhausted";
    case Verdict::Undetermined: return "undetermined";
  }
  return "?";
}

std::size_t VerifyReport::count(Verdict v) const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [v](const VerifyRow& r) { return r.verdict == v; }));
}

bool VerifyReport::all_pass() const { return monotone && endpoints_fixed && count(Verdict::Pass) == rows.size(); }

std::string VerifyReport::to_csv() const {
  std::ostringstream out;
  out << "# check: h(f(x)) = g(h(x)) on rational grid points, tolerance 2^-" << precision << "\n";
  out << "# orientation: h o f = g o h, f the source map, g the target map\n";
  out << "# sanity: monotone=" << (monotone ? "yes" : "no") << " endpoints_fixed=" << (endpoints_fixed ? "yes" : "no")
      << "\n";
  for (const auto& note : sanity_notes) out << "# " << note << "\n";
  out << "# pass=" << count(Verdict::Pass) << " fail=" << count(Verdict::Fail) << " exhausted=" << count(Verdict::Exhausted)
      << " undetermined=" << count(Verdict::Undetermined) << "\n";
  out << "grid_point,lhs,rhs,diff_bound,verdict\n";
  for (const auto& r : rows) {
    out << to_string(r.x) << ',' << (r.lhs ? to_string(*r.lhs) : "") << ',' << (r.rhs ? to_string(*r.rhs) : "") << ','
        << (r.diff_bound ? to_string(*r.diff_bound) : "") << ',' << to_string(r.verdict) << "\n";
  }
  return out.str();
}

VerifyReport verify_conjugacy(const FunctionCode& f, const FunctionCode& g, const Homeo& h,
                              const std::vector<Rational>& grid, Precision p) {
  VerifyReport report;
  report.precision = p;
  const Rational tol = pow2(-static_cast<long>(p));
  std::vector<std::optional<Rational>> hvals;
  for (const Rational& x : grid) {
    VerifyRow row;
    row.x = x;
    std::optional<Rational> hx_value;
    try {
      const RealCode hx = h.fn.rational_eval(x);
      const RealCode lhs = eval_fn(h.fn, f.rational_eval(x));
      const RealCode rhs = eval_fn(g, hx);
      for (Precision q : {p + 2, p + 12}) {
        const Rational l = lhs.approx(q);
        const Rational r = rhs.approx(q);
        const Rational err = pow2(1 - static_cast<long>(q));
        const Rational d = abs(l - r);
        row.lhs = l;
        row.rhs = r;
        row.diff_bound = d + err;
        if (d + err <= tol) {
          row.verdict = Verdict::Pass;
          break;
        }
        if (d - err > tol) {
          row.verdict = Verdict::Fail;
          break;
        }
      }
      hx_value = hx.approx(p + 2);
    } catch (const BudgetExhausted& e) {
      row.verdict = Verdict::Exhausted;
      row.note = e.what();
    } catch (const PrecisionExhausted& e) {
      row.verdict = Verdict::Exhausted;
      row.note = e.what();
    } catch (const UnsupportedEndpoint& e) {
      row.verdict = Verdict::Exhausted;
      row.note = e.what();
    } catch (const DomainError& e) {
      row.verdict = Verdict::Fail;
      row.note = e.what();
    }
    hvals.push_back(hx_value);
    report.rows.push_back(std::move(row));
  }

  const Rational slack = pow2(-static_cast<long>(p) - 1);
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!hvals[i]) continue;
    if (prev && !(*hvals[i] - *hvals[*prev] > slack)) {
      report.monotone = false;
      report.sanity_notes.push_back("not certified increasing between " + to_string(grid[*prev]) + " and " +
                                    to_string(grid[i]));
    }
    prev = i;
  }
  try {
    const Rational h0 = h.fn.rational_eval(Rational(0)).approx(p + 2);
    const Rational h1 = h.fn.rational_eval(Rational(1)).approx(p + 2);
    const Rational err = pow2(-static_cast<long>(p) - 2);
    if (abs(h0) + err > tol || abs(h1 - 1) + err > tol) {
      report.endpoints_fixed = false;
      report.sanity_notes.push_back("h(0) = " + to_string(h0) + ", h(1) = " + to_string(h1));
    }
  } catch (const Error& e) {
    report.endpoints_fixed = false;
    report.sanity_notes.push_back(std::string("endpoint evaluation failed: ") + e.what());
  }
  return report;
}

std::vector<Rational> uniform_grid(std::size_t points) {
  std::vector<Rational> grid;
  if (points < 2) throw std::invalid_argument("uniform_grid needs at least two points");
  for (std::size_t k = 0; k < points; ++k) {
    Rational q(static_cast<long>(k), static_cast<long>(points - 1));
    q.canonicalize();
    grid.push_back(q);
  }
  return grid;
}

}  // namespace forge
