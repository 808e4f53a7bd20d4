#include "pvdiag/projection.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pvdiag/errors.hpp"

namespace pvdiag {

namespace {
constexpr double kJointTolerance = 1e-9;
constexpr int kWaterFillIterations = 200;

/// Shift n_s by a common offset tau (clipped to its box) so that sum(n_s) == target.
void water_fill(Eigen::Ref<Eigen::VectorXd> ns, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                double target) {
    auto total = [&](double tau) {
        return (ns.array() - tau).max(lo.array()).min(hi.array()).sum();
    };
    double a = 0.0;
    double b = ns.maxCoeff() - lo.minCoeff();
    for (int i = 0; i < kWaterFillIterations && b - a > 0.0; ++i) {
        const double mid = 0.5 * (a + b);
        if (total(mid) > target) a = mid; else b = mid;
    }
    ns = (ns.array() - b).max(lo.array()).min(hi.array()).matrix();
}
}  // namespace

void FeasibleRegion::validate() const {
    const Eigen::Index dim = 3 * N_ps + 2;
    if (N_ps < 1 || N_sub < 1) throw ConfigError("region: N_ps and N_sub must be >= 1");
    if (lower.size() != dim || upper.size() != dim) throw ConfigError("region: bound length mismatch");
    if ((lower.array() > upper.array()).any()) throw ConfigError("region: lower bound exceeds upper bound");
    if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("region: lambda must lie in (0, 1)");
}

FeasibleRegion FeasibleRegion::physical() const {
    FeasibleRegion out = *this;
    out.lower.setZero();
    return out;
}

bool FeasibleRegion::contains(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != lower.size()) return false;
    if (((x - lower).array() < -tol).any() || ((x - upper).array() > tol).any()) return false;
    const int p = N_ps;
    if (x.head(p).sum() + x(3 * p) > N_sub + tol) return false;
    for (int i = 1; i < p; ++i) {
        const double r_prev = x(2 * p + i - 1);
        const double r_i = x(2 * p + i);
        if (r_i > lambda * r_prev + tol && r_i > lower(2 * p + i) + tol) return false;
    }
    return true;
}

FeasibleRegion make_default_region(const StringTopology& topology, double r_max, double R_c_max,
                                   double lambda, double n_s_min, double n_c_min) {
    const int p = topology.N_ps;
    FeasibleRegion region;
    region.N_ps = p;
    region.N_sub = topology.N_sub();
    region.lambda = lambda;
    region.lower = Eigen::VectorXd::Zero(3 * p + 2);
    region.upper.resize(3 * p + 2);
    for (int i = 0; i < p; ++i) {
        region.lower(i) = n_s_min;
        region.lower(p + i) = n_c_min;
        region.upper(i) = topology.N_sub();
        region.upper(p + i) = topology.N_cs;
        region.upper(2 * p + i) = r_max;
    }
    region.upper(3 * p) = topology.N_sub();
    region.upper(3 * p + 1) = R_c_max;
    region.validate();
    return region;
}

Eigen::VectorXd project(const Eigen::VectorXd& x, const FeasibleRegion& region) {
    if (x.size() != region.lower.size()) throw DomainError("project: dimension mismatch");
    const int p = region.N_ps;
    const double n_env = p + 1;
    const int sc = 3 * p;

    // individual bounds
    Eigen::VectorXd y = x.cwiseMax(region.lower).cwiseMin(region.upper);

    // joint constraint sum(n_s) + N_sc <= N_sub
    const double excess = y.head(p).sum() + y(sc) - region.N_sub;
    if (excess > kJointTolerance) {
        y.head(p).array() -= excess / n_env;
        y.head(p) = y.head(p).cwiseMax(region.lower.head(p)).cwiseMin(region.upper.head(p));
        y(sc) = std::clamp(region.N_sub - y.head(p).sum(), region.lower(sc), region.upper(sc));
        if (y.head(p).sum() + y(sc) > region.N_sub + kJointTolerance) {
            water_fill(y.head(p), region.lower.head(p), region.upper.head(p), region.N_sub - y(sc));
        }
    }

    // monotone shading ratios
    for (int i = 1; i < p; ++i) {
        const int k = 2 * p + i;
        y(k) = std::max(std::min(y(k), region.lambda * y(k - 1)), region.lower(k));
    }
    return y;
}

FaultVector project(const FaultVector& x, const FeasibleRegion& region) {
    return FaultVector::from_flat(project(x.to_flat(), region), region.N_ps);
}

FaultVector correct(const FaultVector& x_raw, const FeasibleRegion& region,
                    const CorrectionThresholds& thresholds) {
    const int p = region.N_ps;
    if (x_raw.n_ps() != p) throw DomainError("correct: fault vector has wrong N_ps");

    struct Shadow {
        double n_s, n_c, r;
    };
    // Surviving shadows move up to the first slots; ratios were already in
    // decreasing order, so dropping one keeps the order constraint satisfied.
    std::vector<Shadow> kept;
    for (int i = 0; i < p; ++i) {
        const double ns = std::round(x_raw.n_s[i]);
        const double nc = std::round(x_raw.n_c[i]);
        if (x_raw.r[i] < thresholds.r_negligible || ns == 0.0 || nc == 0.0) continue;
        kept.push_back({ns, nc, x_raw.r[i]});
    }

    FaultVector out = FaultVector::zero(p);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.n_s[i] = kept[i].n_s;
        out.n_c[i] = kept[i].n_c;
        out.r[i] = kept[i].r;
    }
    out.N_sc = std::round(x_raw.N_sc);
    out.R_c = x_raw.R_c;

    // Re-project onto the physical box; every bound on a count is integral, so
    // clipping keeps counts integral.
    const FeasibleRegion phys = region.physical();
    Eigen::VectorXd y = out.to_flat().cwiseMax(phys.lower).cwiseMin(phys.upper);
    for (int i = 0; i < p; ++i) {
        y(i) = std::floor(y(i));
        y(p + i) = std::floor(y(p + i));
    }
    y(3 * p) = std::floor(y(3 * p));
    double shaded = y.head(p).sum();
    if (shaded + y(3 * p) > phys.N_sub) y(3 * p) = std::max(0.0, phys.N_sub - shaded);
    for (int i = p - 1; i >= 0 && shaded + y(3 * p) > phys.N_sub; --i) {
        const double cut = std::min(y(i), shaded + y(3 * p) - phys.N_sub);
        y(i) -= cut;
        shaded -= cut;
        if (y(i) == 0.0) {
            y(p + i) = 0.0;
            y(2 * p + i) = 0.0;
        }
    }
    return FaultVector::from_flat(y, p);
}

}  // namespace pvdiag
