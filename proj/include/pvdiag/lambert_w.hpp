#pragma once

namespace pvdiag {

/// Principal branch W0 of the Lambert W function on [0, inf).
///
/// Halley iteration seeded with ln(1+z) below e and ln(z) - ln(ln(z)) above.
/// Throws DomainError for negative or NaN input.
[[nodiscard]] double lambert_w(double z);

/// W0(exp(x)) evaluated without forming exp(x).
///
/// Large arguments (x > 700) are handled in log space: seeded with the
/// asymptotic expansion x - ln x + ln x / x and refined with Newton steps on
/// w + ln w = x, so the result stays accurate where exp(x) overflows.
[[nodiscard]] double lambert_w_exp(double x);

}  // namespace pvdiag
