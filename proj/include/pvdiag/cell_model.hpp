#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pvdiag {

/// Physical and avalanche-breakdown constants shared by every cell.
struct PhysicalConstants {
    double k = 1.38e-23;     ///< Boltzmann constant (J/K)
    double q = 1.602e-19;    ///< elementary charge (C)
    double a = 0.002;        ///< fraction of ohmic current in avalanche breakdown
    double V_br = -21.29;    ///< breakdown voltage (V)
    double m = 3.0;          ///< avalanche breakdown exponent
    double G_stc = 1000.0;   ///< W/m^2
    double T_stc = 298.15;   ///< K
    double G_min = 1.0;      ///< floor on effective irradiance (W/m^2)

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Five single-diode parameters at STC plus the Isc temperature coefficient.
struct CellStcParams {
    double I_ph_stc = 0.0;   ///< A
    double I_0_stc = 0.0;    ///< A
    double n_stc = 1.0;
    double R_s_stc = 0.0;    ///< ohm
    double R_sh_stc = 0.0;   ///< ohm
    double alpha = 0.0;      ///< A/K

    void validate() const;
};

/// Single-diode parameters translated to one environmental condition.
struct CellOperatingParams {
    double I_ph = 0.0;
    double I_0 = 0.0;
    double n = 1.0;
    double R_s = 0.0;
    double R_sh = 0.0;
    double V_th = 0.0;

    [[nodiscard]] double n_vth() const noexcept { return n * V_th; }
};

struct EnvironmentalCondition {
    double G = 1000.0;  ///< effective in-plane irradiance (W/m^2)
    double T = 298.15;  ///< cell temperature (K)
};

/// CEC / De Soto translation of STC parameters to (G, T).
///
///   I_ph = (G/G_stc) [I_ph_stc + alpha (T - T_stc)]
///   I_0  = I_0_stc (T/T_stc)^3 exp[E_g,stc/(k T_stc) - E_g(T)/(k T)]
///   R_sh = R_sh_stc G_stc / G,  n and R_s unchanged,  V_th = kT/q
///
/// with E_g(T) = 1.121 (1 - 0.0002677 (T - T_stc)) eV. G is floored at G_min.
[[nodiscard]] CellOperatingParams translate_to_condition(const CellStcParams& stc,
                                                         const EnvironmentalCondition& env,
                                                         const PhysicalConstants& consts);

/// Explicit Lambert-W voltage of the plain single-diode model at current I_c.
/// Used as the Newton seed; no avalanche term.
[[nodiscard]] double initial_cell_voltage(const CellOperatingParams& params, double I_c);

struct Residual {
    double F = 0.0;       ///< A
    double dF_dVc = 0.0;  ///< A/V
};

/// Residual of the reverse-biased single-diode equation and its V_c derivative.
/// Throws SingularityError when 1 - (V_c + I_c R_s)/V_br <= 0.
[[nodiscard]] Residual rsdm_residual(const CellOperatingParams& params,
                                     const PhysicalConstants& consts, double V_c, double I_c);

/// Cell voltage after exactly `iterations` Newton steps.
///
/// The start point is the Lambert-W seed. Where the cell is driven past its
/// photocurrent hard enough that the seed lands beyond breakdown, the seed is
/// raised to the avalanche-dominated asymptote instead. A step that would cross
/// the breakdown singularity is replaced by halving the remaining distance to it.
[[nodiscard]] double newton_solve(const CellOperatingParams& params,
                                  const PhysicalConstants& consts, double I_c, int iterations);

/// Cell voltages for every (current, condition) pair; column i is condition i.
/// Points are independent of each other.
[[nodiscard]] Eigen::MatrixXd solve_cell_voltage_matrix(
    const CellStcParams& stc, std::span<const EnvironmentalCondition> envs,
    const Eigen::VectorXd& currents, int iterations, const PhysicalConstants& consts);

/// Column version for one already-translated condition.
[[nodiscard]] Eigen::VectorXd solve_cell_voltages(const CellOperatingParams& params,
                                                  const PhysicalConstants& consts,
                                                  const Eigen::VectorXd& currents,
                                                  int iterations);

}  // namespace pvdiag
