#include "pvdiag/cell_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pvdiag/errors.hpp"
#include "pvdiag/lambert_w.hpp"

namespace pvdiag {

namespace {
constexpr double kBandgapStcEv = 1.121;
constexpr double kBandgapTempCoeff = 0.0002677;
constexpr double kSeedClampFraction = 1e-6;
constexpr int kAvalancheSeedRefinements = 3;

/// base^-m, with a multiplication fast path for small integral exponents.
inline double inverse_power(double base, double m) {
    if (m == 3.0) return 1.0 / (base * base * base);
    return std::pow(base, -m);
}

/// Voltage where the avalanche term alone carries the excess current
/// I_c - I_ph - I_0. Returns false when avalanche does not dominate.
bool avalanche_seed(const CellOperatingParams& p, const PhysicalConstants& c, double I_c,
                    double& V_out) {
    const double excess = I_c - p.I_ph - p.I_0;
    if (!(excess > 0.0)) return false;
    const double ratio = c.a * std::abs(c.V_br) / (p.R_sh * excess);
    if (!(ratio < 1.0)) return false;
    double s = std::pow(ratio, 1.0 / c.m);
    for (int i = 0; i < kAvalancheSeedRefinements; ++i) {
        s = std::pow(ratio * (1.0 - s), 1.0 / c.m);
    }
    V_out = c.V_br * (1.0 - s) - I_c * p.R_s;
    return std::isfinite(V_out);
}
}  // namespace

void PhysicalConstants::validate() const {
    if (!(k > 0.0) || !(q > 0.0)) throw ConfigError("constants: k and q must be positive");
    if (!(V_br < 0.0)) throw ConfigError("constants: V_br must be negative");
    if (!(m >= 1.0)) throw ConfigError("constants: m must be >= 1");
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("constants: a must lie in (0, 1)");
    if (!(G_stc > 0.0) || !(T_stc > 0.0)) throw ConfigError("constants: G_stc and T_stc must be positive");
    if (!(G_min > 0.0)) throw ConfigError("constants: G_min must be positive");
}

void CellStcParams::validate() const {
    if (!(I_ph_stc > 0.0)) throw ConfigError("cell: I_ph_stc must be positive");
    if (!(I_0_stc > 0.0)) throw ConfigError("cell: I_0_stc must be positive");
    if (!(n_stc >= 0.5 && n_stc <= 2.5)) throw ConfigError("cell: n_stc must lie in [0.5, 2.5]");
    if (!(R_s_stc > 0.0) || !(R_sh_stc > 0.0)) throw ConfigError("cell: resistances must be positive");
    if (!std::isfinite(alpha)) throw ConfigError("cell: alpha must be finite");
}

CellOperatingParams translate_to_condition(const CellStcParams& stc,
                                           const EnvironmentalCondition& env,
                                           const PhysicalConstants& consts) {
    if (!(env.G >= 0.0) || !(env.T > 0.0)) {
        throw DomainError("translate_to_condition: requires G >= 0 and T > 0");
    }
    const double G = std::max(env.G, consts.G_min);
    const double T = env.T;
    const double dT = T - consts.T_stc;
    const double k_ev = consts.k / consts.q;

    CellOperatingParams out;
    out.I_ph = (G / consts.G_stc) * (stc.I_ph_stc + stc.alpha * dT);
    const double eg = kBandgapStcEv * (1.0 - kBandgapTempCoeff * dT);
    const double t_ratio = T / consts.T_stc;
    out.I_0 = stc.I_0_stc * t_ratio * t_ratio * t_ratio *
              std::exp(kBandgapStcEv / (k_ev * consts.T_stc) - eg / (k_ev * T));
    out.n = stc.n_stc;
    out.R_s = stc.R_s_stc;
    out.R_sh = stc.R_sh_stc * consts.G_stc / G;
    out.V_th = consts.k * T / consts.q;

    if (!std::isfinite(out.I_0) || !std::isfinite(out.I_ph) || !std::isfinite(out.R_sh)) {
        throw DomainError("translate_to_condition: non-finite operating parameter");
    }
    return out;
}

double initial_cell_voltage(const CellOperatingParams& p, double I_c) {
    const double nvth = p.n_vth();
    // ln of the W argument: I_0 R_sh/(n V_th) * exp(R_sh (I_ph + I_0 - I_c)/(n V_th))
    const double log_arg = std::log(p.I_0 * p.R_sh / nvth) + p.R_sh * (p.I_ph + p.I_0 - I_c) / nvth;
    const double w = lambert_w_exp(log_arg);
    const double v0 = p.I_ph * p.R_sh + p.I_0 * p.R_sh - I_c * p.R_s - I_c * p.R_sh - nvth * w;
    if (!std::isfinite(v0)) throw NumericError("initial_cell_voltage: non-finite seed");
    return v0;
}

Residual rsdm_residual(const CellOperatingParams& p, const PhysicalConstants& c, double V_c,
                       double I_c) {
    const double u = V_c + I_c * p.R_s;
    const double base = 1.0 - u / c.V_br;
    if (!(base > 0.0)) {
        throw SingularityError("rsdm_residual: avalanche base 1 - (V_c + I_c R_s)/V_br <= 0");
    }
    const double nvth = p.n_vth();
    const double diode_exp = std::exp(u / nvth);
    const double aval = inverse_power(base, c.m);

    Residual r;
    r.F = p.I_ph - p.I_0 * (diode_exp - 1.0) - (u / p.R_sh) * (1.0 + c.a * aval) - I_c;
    r.dF_dVc = -p.I_0 / nvth * diode_exp - 1.0 / p.R_sh - c.a / p.R_sh * aval -
               c.a * c.m * u / (p.R_sh * c.V_br) * aval / base;
    return r;
}

double newton_solve(const CellOperatingParams& p, const PhysicalConstants& c, double I_c,
                    int iterations) {
    if (iterations < 1) throw DomainError("newton_solve: iteration count must be >= 1");

    // Breakdown singularity sits at V_c + I_c R_s = V_br.
    const double v_floor = c.V_br - I_c * p.R_s;
    double v = initial_cell_voltage(p, I_c);
    if (double v_av = 0.0; avalanche_seed(p, c, I_c, v_av)) v = std::max(v, v_av);
    if (!(v > v_floor)) v = v_floor + kSeedClampFraction * std::abs(c.V_br);

    for (int it = 0; it < iterations; ++it) {
        const Residual r = rsdm_residual(p, c, v, I_c);
        if (!std::isfinite(r.F) || !std::isfinite(r.dF_dVc) || r.dF_dVc == 0.0) {
            throw NumericError("newton_solve: non-finite residual at iteration " +
                                   std::to_string(it + 1),
                               it + 1);
        }
        double next = v - r.F / r.dF_dVc;
        if (!(next > v_floor)) next = v_floor + 0.5 * (v - v_floor);
        v = next;
    }
    return v;
}

Eigen::VectorXd solve_cell_voltages(const CellOperatingParams& params,
                                    const PhysicalConstants& consts,
                                    const Eigen::VectorXd& currents, int iterations) {
    Eigen::VectorXd out(currents.size());
    for (Eigen::Index i = 0; i < currents.size(); ++i) {
        out(i) = newton_solve(params, consts, currents(i), iterations);
    }
    return out;
}

Eigen::MatrixXd solve_cell_voltage_matrix(const CellStcParams& stc,
                                          std::span<const EnvironmentalCondition> envs,
                                          const Eigen::VectorXd& currents, int iterations,
                                          const PhysicalConstants& consts) {
    if (currents.size() < 1) throw DomainError("solve_cell_voltage_matrix: empty current vector");
    Eigen::MatrixXd out(currents.size(), static_cast<Eigen::Index>(envs.size()));
    for (std::size_t col = 0; col < envs.size(); ++col) {
        const CellOperatingParams params = translate_to_condition(stc, envs[col], consts);
        for (Eigen::Index row = 0; row < currents.size(); ++row) {
            try {
                out(row, static_cast<Eigen::Index>(col)) =
                    newton_solve(params, consts, currents(row), iterations);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at (row " + std::to_string(row) +
                                       ", column " + std::to_string(col) + ")",
                                   e.iteration());
            }
        }
    }
    return out;
}

}  // namespace pvdiag
