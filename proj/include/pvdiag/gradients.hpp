#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pvdiag/string_model.hpp"

namespace pvdiag {

struct LossValue {
    double mse = 0.0;                   ///< V^2
    Eigen::VectorXd per_point_residual; ///< V - V_measured
};

/// dL/dx laid out like FaultVector.
struct GradientVector {
    std::vector<double> d_ns;
    std::vector<double> d_nc;
    std::vector<double> d_r;
    double d_Nsc = 0.0;
    double d_Rc = 0.0;

    [[nodiscard]] static GradientVector from_flat(const Eigen::VectorXd& flat, int n_ps);
    [[nodiscard]] Eigen::VectorXd to_flat() const;
};

/// Mean squared error between simulated and measured voltages.
[[nodiscard]] LossValue loss(const Eigen::VectorXd& V, const Eigen::VectorXd& V_measured);

/// dV_c/dr for a shaded cell at its root, by implicit differentiation of the
/// diode residual through I_ph(r) and R_sh(r). Zero once the effective
/// irradiance sits on the G_min floor.
[[nodiscard]] double implicit_dvc_dr(const CellStcParams& stc, const PhysicalConstants& consts,
                                     double G, double T, double r, double V_c, double I_c);

/// Per-point voltage sensitivities, N x (3 N_ps + 2), columns in flat fault order.
///
/// `state` must come from sim.forward(x). Substring types clamped by the bypass
/// diode contribute nothing through n_c and r.
[[nodiscard]] Eigen::MatrixXd grad_voltage(const VoltageState& state, const FaultVector& x,
                                           const StringSimulator& sim);

/// Chain rule over points: dL/dx = (2/N) sum_i residual_i dV_i/dx.
[[nodiscard]] GradientVector grad_loss(const LossValue& lossval, const Eigen::MatrixXd& grad_v);

struct Evaluation {
    VoltageState state;
    LossValue loss;
    GradientVector gradient;
};

/// Forward, loss and backward in one call.
[[nodiscard]] Evaluation evaluate(const StringSimulator& sim, const FaultVector& x,
                                  const Eigen::VectorXd& V_measured, bool check = true);

}  // namespace pvdiag
