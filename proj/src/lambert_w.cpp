#include "pvdiag/lambert_w.hpp"

#include <cmath>
#include <limits>

#include "pvdiag/errors.hpp"

namespace pvdiag {

namespace {
constexpr int kMaxHalleyIterations = 6;
constexpr int kMaxLogNewtonIterations = 6;
constexpr double kLogSpaceThreshold = 700.0;
constexpr double kE = 2.718281828459045;

double halley_seed(double z) {
    if (z < kE) return std::log1p(z);
    const double l = std::log(z);
    return l - std::log(l);
}
}  // namespace

double lambert_w(double z) {
    if (std::isnan(z) || z < 0.0) {
        throw DomainError("lambert_w: argument must be >= 0 (principal branch only)");
    }
    if (z == 0.0) return 0.0;
    if (std::isinf(z)) return z;

    double w = halley_seed(z);
    for (int i = 0; i < kMaxHalleyIterations; ++i) {
        const double ew = std::exp(w);
        const double f = w * ew - z;
        const double wp1 = w + 1.0;
        const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
            break;
        }
    }
    return w;
}

double lambert_w_exp(double x) {
    if (std::isnan(x)) throw DomainError("lambert_w_exp: NaN argument");
    if (x <= kLogSpaceThreshold) return lambert_w(std::exp(x));

    // w + ln(w) = x; Newton converges quadratically from the asymptotic seed.
    const double lx = std::log(x);
    double w = x - lx + lx / x;
    for (int i = 0; i < kMaxLogNewtonIterations; ++i) {
        const double step = (w + std::log(w) - x) / (1.0 + 1.0 / w);
        w -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * w) break;
    }
    return w;
}

}  // namespace pvdiag
