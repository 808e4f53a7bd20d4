#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "pvdiag/cell_model.hpp"
#include "pvdiag/curve_io.hpp"
#include "pvdiag/string_model.hpp"

namespace pvdiag {

/// Reference cell voltage by bisection on u = V_c + I_c R_s over
/// (V_br + eps, 1.5 V_oc] down to a 1e-12 V bracket. Throws OracleError when
/// the residual does not change sign across the bracket.
[[nodiscard]] double oracle_cell_voltage(const CellOperatingParams& params,
                                         const PhysicalConstants& consts, double I_c);

/// Reference string voltages. Builds every substring explicitly, clamps each
/// one at zero and sums. Needs integral n_s, n_c and N_sc (DomainError otherwise).
[[nodiscard]] Eigen::VectorXd oracle_solve(const StringTopology& topology, const CellStcParams& stc,
                                           const PhysicalConstants& consts, double G, double T,
                                           const FaultVector& x, const Eigen::VectorXd& currents);

/// Short-circuit current of a healthy cell at (G, T), by bisection.
[[nodiscard]] double healthy_short_circuit_current(const CellStcParams& stc,
                                                   const PhysicalConstants& consts, double G, double T);

/// Open-circuit voltage of a healthy string at (G, T).
[[nodiscard]] double healthy_open_circuit_voltage(const StringTopology& topology,
                                                  const CellStcParams& stc,
                                                  const PhysicalConstants& consts, double G, double T);

/// `points` currents evenly spaced over [0, 1.02 I_sc].
[[nodiscard]] Eigen::VectorXd table1_current_grid(const CellStcParams& stc,
                                                  const PhysicalConstants& consts, double G, double T,
                                                  Eigen::Index points = 200);

/// The 150 labelled fault vectors of the benchmark grid: first shadow x second
/// shadow x shorted diodes {0, 3, 6} x R_c {0, 5}. Shadows are packed into the
/// first slots, so a lone second-shadow entry lands in slot 1.
[[nodiscard]] std::vector<FaultVector> table1_labels();

/// Synthetic curves for every label at STC, computed with oracle_solve.
/// noise_sigma > 0 adds Gaussian voltage noise drawn from `seed`.
[[nodiscard]] std::vector<IVCurve> generate_table1_suite(const StringTopology& topology,
                                                         const CellStcParams& stc,
                                                         const PhysicalConstants& consts,
                                                         double noise_sigma = 0.0,
                                                         std::uint64_t seed = 42);

/// Writes curve_NNN.csv files plus manifest.json listing (path, label) pairs.
void write_suite(const std::vector<IVCurve>& suite, const std::filesystem::path& dir);

}  // namespace pvdiag
