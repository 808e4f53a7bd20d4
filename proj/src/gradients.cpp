#include "pvdiag/gradients.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pvdiag/errors.hpp"

namespace pvdiag {

GradientVector GradientVector::from_flat(const Eigen::VectorXd& flat, int n_ps) {
    const FaultVector x = FaultVector::from_flat(flat, n_ps);
    return {x.n_s, x.n_c, x.r, x.N_sc, x.R_c};
}

Eigen::VectorXd GradientVector::to_flat() const {
    return FaultVector{d_ns, d_nc, d_r, d_Nsc, d_Rc}.to_flat();
}

LossValue loss(const Eigen::VectorXd& V, const Eigen::VectorXd& V_measured) {
    if (V.size() != V_measured.size()) throw DomainError("loss: length mismatch");
    if (V.size() < 1) throw DomainError("loss: empty sequence");
    LossValue out;
    out.per_point_residual = V - V_measured;
    out.mse = out.per_point_residual.squaredNorm() / static_cast<double>(V.size());
    return out;
}

namespace {
/// dV_c/dr with the shaded-condition parameters already translated.
double dvc_dr_at(const CellOperatingParams& p, const CellStcParams& stc,
                 const PhysicalConstants& consts, double G, double G_j, double T, double V_c,
                 double I_c) {
    const Residual res = rsdm_residual(p, consts, V_c, I_c);

    const double dIph_dr = -(G / consts.G_stc) * (stc.I_ph_stc + stc.alpha * (T - consts.T_stc));
    // R_sh = R_sh_stc G_stc / G_j and dG_j/dr = -G
    const double dRsh_dr = G * consts.G_stc * stc.R_sh_stc / (G_j * G_j);

    const double u = V_c + I_c * p.R_s;
    const double base = 1.0 - u / consts.V_br;
    const double dF_dRsh = u / (p.R_sh * p.R_sh) * (1.0 + consts.a * std::pow(base, -consts.m));

    return -(dIph_dr + dF_dRsh * dRsh_dr) / res.dF_dVc;
}
}  // namespace

double implicit_dvc_dr(const CellStcParams& stc, const PhysicalConstants& consts, double G,
                       double T, double r, double V_c, double I_c) {
    const double G_j = (1.0 - r) * G;
    if (!(G_j > consts.G_min)) return 0.0;
    const CellOperatingParams p = translate_to_condition(stc, {G_j, T}, consts);
    return dvc_dr_at(p, stc, consts, G, G_j, T, V_c, I_c);
}

Eigen::MatrixXd grad_voltage(const VoltageState& state, const FaultVector& x,
                             const StringSimulator& sim) {
    const ModelContext& ctx = sim.context();
    const int p = ctx.topology.N_ps;
    const Eigen::Index n = sim.currents().size();

    if (x.n_ps() != p || state.v_cell.rows() != n || state.v_cell.cols() != p + 1 ||
        state.v_sub.rows() != n || state.v_sub.cols() != p + 2 || state.relu_mask.rows() != n ||
        state.relu_mask.cols() != p + 2) {
        throw ContractError("grad_voltage: voltage state shape does not match the fault vector");
    }

    const int col_nsc = 3 * p;
    const int col_rc = 3 * p + 1;
    const int norm = p + 1;  // normal substring column in v_sub
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, 3 * p + 2);

    const double G = sim.irradiance();
    const double T = sim.temperature();
    std::vector<double> shadow_irradiance(static_cast<std::size_t>(p));
    std::vector<CellOperatingParams> shadow_params(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        shadow_irradiance[j] = (1.0 - x.r[j]) * G;
        shadow_params[j] = sim.condition_params(x, j);
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < p + 2; ++c) {
            if (state.relu_mask(i, c) && state.v_sub(i, c) != 0.0) {
                throw ContractError("grad_voltage: clamped substring with nonzero voltage at row " +
                                    std::to_string(i));
            }
        }
        const double I_c = sim.currents()(i);
        const double v_sub_norm = state.v_sub(i, norm);
        const double v_cell_norm = state.v_cell(i, p);
        for (int j = 0; j < p; ++j) {
            grad(i, j) = state.v_sub(i, j) - v_sub_norm;
            if (state.relu_mask(i, j)) continue;
            grad(i, p + j) = x.n_s[j] * (state.v_cell(i, j) - v_cell_norm);
            const double dvc = shadow_irradiance[j] > ctx.consts.G_min
                                   ? dvc_dr_at(shadow_params[j], ctx.stc, ctx.consts, G,
                                               shadow_irradiance[j], T, state.v_cell(i, j), I_c)
                                   : 0.0;
            grad(i, 2 * p + j) = x.n_s[j] * x.n_c[j] * dvc;
        }
        grad(i, col_nsc) = -v_sub_norm;
        grad(i, col_rc) = -I_c;
    }
    if (!grad.allFinite()) throw NumericError("grad_voltage: non-finite sensitivity");
    return grad;
}

GradientVector grad_loss(const LossValue& lossval, const Eigen::MatrixXd& grad_v) {
    const Eigen::Index n = lossval.per_point_residual.size();
    if (grad_v.rows() != n || n < 1) throw DomainError("grad_loss: shape mismatch");
    if ((grad_v.cols() - 2) % 3 != 0 || grad_v.cols() < 5) {
        throw DomainError("grad_loss: column count is not 3 N_ps + 2");
    }
    const Eigen::VectorXd flat =
        (2.0 / static_cast<double>(n)) * (grad_v.transpose() * lossval.per_point_residual);
    return GradientVector::from_flat(flat, static_cast<int>((grad_v.cols() - 2) / 3));
}

Evaluation evaluate(const StringSimulator& sim, const FaultVector& x,
                    const Eigen::VectorXd& V_measured, bool check) {
    Evaluation ev;
    ev.state = sim.forward(x, check);
    ev.loss = loss(ev.state.v, V_measured);
    ev.gradient = grad_loss(ev.loss, grad_voltage(ev.state, x, sim));
    return ev;
}

}  // namespace pvdiag
