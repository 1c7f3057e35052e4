#pragma once

// Outward-rounded bounds for |b'| on the cells [k/N, (k+1)/N] of (0,1),
// b(u) = exp(-1/(u(1-u))). Computed with MPFR, independently of the library
// bump code.

#include <cstddef>
#include <string>
#include <vector>

namespace forge::testing {

struct CellBound {
  std::size_t cell = 0;
  /// Upper bound for sup |b'| on the cell, as a decimal rounded up.
  std::string bound;
  double value = 0;
};

std::vector<CellBound> bump_derivative_bounds(std::size_t cells);

/// The certificate text stored under tests/data.
std::string bump_certificate(std::size_t cells);

}  // namespace forge::testing
