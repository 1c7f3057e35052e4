#include "bump_certificate.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <algorithm>
#include <sstream>

namespace forge::testing {

namespace {

constexpr mpfr_prec_t kBits = 128;

// With s = u(1-u), |b'(u)| = g(s) |1 - 2u| where g(s) = exp(-1/s) / s^2 is
// increasing on (0, 1/4]. On a cell, s is largest at the end nearest 1/2
// and |1 - 2u| at the end farthest from it.
std::string cell_bound(std::size_t k, std::size_t cells, double* value) {
  mpq_t u0, u1, s, m, tmp;
  mpq_inits(u0, u1, s, m, tmp, nullptr);
  mpq_set_ui(u0, k, cells);
  mpq_set_ui(u1, k + 1, cells);
  mpq_canonicalize(u0);
  mpq_canonicalize(u1);
  mpq_t half;
  mpq_init(half);
  mpq_set_ui(half, 1, 2);
  // s_max: the cell end nearest 1/2, or 1/2 itself.
  mpq_t near, far;
  mpq_inits(near, far, nullptr);
  if (mpq_cmp(u1, half) <= 0) {
    mpq_set(near, u1);
    mpq_set(far, u0);
  } else if (mpq_cmp(u0, half) >= 0) {
    mpq_set(near, u0);
    mpq_set(far, u1);
  } else {
    mpq_set(near, half);
    mpq_set(far, u0);
  }
  mpq_set_ui(tmp, 1, 1);
  mpq_sub(tmp, tmp, near);
  mpq_mul(s, near, tmp);
  // m = |1 - 2 far|
  mpq_add(m, far, far);
  mpq_set_ui(tmp, 1, 1);
  mpq_sub(m, tmp, m);
  mpq_abs(m, m);

  mpfr_t s_hi, t, e, s2, inv, mb, out;
  mpfr_inits2(kBits, s_hi, t, e, s2, inv, mb, out, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_q(s_hi, s, MPFR_RNDU);
  // exp(-1/s_hi) from above: 1/s_hi rounded down.
  mpfr_ui_div(t, 1, s_hi, MPFR_RNDD);
  mpfr_neg(t, t, MPFR_RNDN);
  mpfr_exp(e, t, MPFR_RNDU);
  // s_hi^-2 from above: s_hi^2 rounded down. g is increasing, so g(s_hi)
  // bounds g on the cell even though s^-2 decreases.
  mpfr_sqr(s2, s_hi, MPFR_RNDD);
  mpfr_ui_div(inv, 1, s2, MPFR_RNDU);
  mpfr_set_q(mb, m, MPFR_RNDU);
  mpfr_mul(out, e, inv, MPFR_RNDU);
  mpfr_mul(out, out, mb, MPFR_RNDU);

  char buf[64];
  mpfr_snprintf(buf, sizeof buf, "%.6RUe", out);
  *value = mpfr_get_d(out, MPFR_RNDU);
  mpfr_clears(s_hi, t, e, s2, inv, mb, out, static_cast<mpfr_ptr>(nullptr));
  mpq_clears(u0, u1, s, m, tmp, half, near, far, nullptr);
  return buf;
}

}  // namespace

std::vector<CellBound> bump_derivative_bounds(std::size_t cells) {
  std::vector<CellBound> out;
  out.reserve(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    CellBound c;
    c.cell = k;
    c.bound = cell_bound(k, cells, &c.value);
    out.push_back(std::move(c));
  }
  return out;
}

std::string bump_certificate(std::size_t cells) {
  const auto bounds = bump_derivative_bounds(cells);
  const auto worst = std::max_element(bounds.begin(), bounds.end(),
                                      [](const CellBound& a, const CellBound& b) { return a.value < b.value; });
  std::ostringstream out;
  out << "# sup |b'(u)| on (0,1), b(u) = exp(-1/(u(1-u))), scaling constant K = 1\n";
  out << "# cell k is [k/" << cells << ", (k+1)/" << cells << "]; bounds are MPFR " << kBits
      << "-bit, rounded outward\n";
  out << "cells " << cells << "\n";
  out << "max " << worst->bound << " cell " << worst->cell << "\n";
  out << "k,bound\n";
  for (const auto& c : bounds) out << c.cell << ',' << c.bound << "\n";
  return out.str();
}

}  // namespace forge::testing
