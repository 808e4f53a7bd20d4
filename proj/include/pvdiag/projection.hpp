#pragma once

#include <Eigen/Dense>

#include "pvdiag/string_model.hpp"

namespace pvdiag {

/// Box bounds plus the joint and shading-order constraints on a fault vector.
struct FeasibleRegion {
    Eigen::VectorXd lower;  ///< flat fault layout
    Eigen::VectorXd upper;
    double lambda = 0.9;    ///< r_{i+1} <= lambda r_i
    int N_sub = 39;
    int N_ps = 2;

    void validate() const;

    /// Same region with every lower bound at zero (the physical box).
    [[nodiscard]] FeasibleRegion physical() const;

    /// True when x satisfies every constraint to within `tol`.
    [[nodiscard]] bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;
};

/// Bounds used by identification.
///
/// Upper bounds are [N_sub, N_cs, r_max, N_sub, R_c_max]. The lower bounds for
/// n_s and n_c are small and positive: the shading block of the gradient is
/// identically zero whenever two of (n_s, n_c, r) vanish, so an all-zero
/// start would never leave the healthy point.
[[nodiscard]] FeasibleRegion make_default_region(const StringTopology& topology,
                                                 double r_max = 0.999, double R_c_max = 50.0,
                                                 double lambda = 0.9, double n_s_min = 0.1,
                                                 double n_c_min = 0.1);

/// Projection onto the feasible region, applied in order:
///  1. clip each component to [lower, upper];
///  2. if sum(n_s) + N_sc > N_sub, shift every n_s by -excess/N_env, set
///     N_sc = N_sub - sum(n_s), re-clip (water-filling n_s if N_sc hits zero);
///  3. r_{i+1} = min(r_{i+1}, lambda r_i).
/// Total: accepts any finite x.
[[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& x, const FeasibleRegion& region);
[[nodiscard]] FaultVector project(const FaultVector& x, const FeasibleRegion& region);

struct CorrectionThresholds {
    double r_negligible = 0.05;
};

/// Final output correction: round counts, drop negligible shadows, zero N_sc
/// when it rounds to zero, then re-project onto the physical region keeping
/// counts integral.
[[nodiscard]] FaultVector correct(const FaultVector& x_raw, const FeasibleRegion& region,
                                  const CorrectionThresholds& thresholds = {});

}  // namespace pvdiag
