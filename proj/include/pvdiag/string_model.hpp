#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pvdiag/cell_model.hpp"

namespace pvdiag {

/// Series layout of one PV string.
struct StringTopology {
    int modules_per_string = 13;
    int diodes_per_module = 3;
    int N_cs = 20;  ///< cells per substring
    int N_ps = 2;   ///< maximum number of rectangular shadows

    [[nodiscard]] int N_sub() const noexcept { return modules_per_string * diodes_per_module; }
    [[nodiscard]] int N_env() const noexcept { return N_ps + 1; }
    /// Length of the flattened fault vector.
    [[nodiscard]] int fault_dim() const noexcept { return 3 * N_ps + 2; }

    void validate() const;
};

/// Quantified faults of a string: shadows, shorted bypass diodes, extra series resistance.
///
/// Counts are real-valued during optimization; only the final correction makes
/// them integral. The flat layout is [n_s..., n_c..., r..., N_sc, R_c].
struct FaultVector {
    std::vector<double> n_s;  ///< substrings covered by each shadow
    std::vector<double> n_c;  ///< shaded cells per covered substring
    std::vector<double> r;    ///< fraction of irradiance blocked by each shadow
    double N_sc = 0.0;        ///< short-circuited substrings
    double R_c = 0.0;         ///< added string series resistance (ohm)

    [[nodiscard]] static FaultVector zero(int n_ps);
    [[nodiscard]] static FaultVector from_flat(const Eigen::VectorXd& flat, int n_ps);
    [[nodiscard]] Eigen::VectorXd to_flat() const;
    [[nodiscard]] int n_ps() const noexcept { return static_cast<int>(n_s.size()); }

    bool operator==(const FaultVector&) const = default;
};

/// Throws DomainError or InfeasibleFault when x leaves the physical region.
void check_fault_vector(const FaultVector& x, const StringTopology& topology, double r_max = 1.0);

/// Per-substring-type aggregation operators.
///
/// Columns of q_cell and entries of q_sub are ordered
/// [shadow 1 .. shadow N_ps, short-circuited, normal]; rows of q_cell are
/// [shadow 1 .. shadow N_ps, normal] conditions.
struct StructuralMatrices {
    Eigen::VectorXd q_sub;
    Eigen::MatrixXd q_cell;
};

/// Everything forward computes, kept for the backward pass.
struct VoltageState {
    Eigen::MatrixXd v_cell;   ///< N x N_env
    Eigen::MatrixXd v_sub;    ///< N x (N_env + 1), bypass-clamped
    Eigen::VectorXd v;        ///< N, string voltage
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> relu_mask;  ///< true where clamped
};

/// Irradiance per condition: [(1-r_1)G, ..., (1-r_Nps)G, G], floored at G_min.
[[nodiscard]] std::vector<EnvironmentalCondition> build_ambient_vectors(
    double G, double T, const FaultVector& x, const PhysicalConstants& consts);

/// Fills q_sub and q_cell with canonical fault placement.
/// Throws InfeasibleFault when sum(n_s) + N_sc exceeds N_sub.
[[nodiscard]] StructuralMatrices build_structural_matrices(const StringTopology& topology,
                                                           const FaultVector& x);

/// Same fill without the joint-constraint check; used for perturbed points.
[[nodiscard]] StructuralMatrices assemble_structural_matrices(const StringTopology& topology,
                                                              const FaultVector& x);

/// Everything that stays fixed while a fault vector is being fitted.
struct ModelContext {
    StringTopology topology;
    CellStcParams stc;
    PhysicalConstants consts;
    int newton_iterations = 8;

    void validate() const;
};

/// Forward string model bound to one measured current sequence.
///
/// The normal-condition column of V_cell does not depend on the fault vector,
/// so it is solved once at construction.
class StringSimulator {
public:
    StringSimulator(ModelContext ctx, Eigen::VectorXd currents, double G, double T);

    /// String voltages for x. With `check` false the joint constraint is not
    /// enforced, which lets finite-difference probes step slightly outside.
    [[nodiscard]] VoltageState forward(const FaultVector& x, bool check = true) const;

    [[nodiscard]] const ModelContext& context() const noexcept { return ctx_; }
    [[nodiscard]] const Eigen::VectorXd& currents() const noexcept { return currents_; }
    [[nodiscard]] double irradiance() const noexcept { return G_; }
    [[nodiscard]] double temperature() const noexcept { return T_; }
    [[nodiscard]] const Eigen::VectorXd& normal_cell_voltages() const noexcept { return v_norm_; }

    /// Operating parameters of condition `index` (N_ps means the normal condition).
    [[nodiscard]] CellOperatingParams condition_params(const FaultVector& x, int index) const;

private:
    ModelContext ctx_;
    Eigen::VectorXd currents_;
    double G_;
    double T_;
    Eigen::VectorXd v_norm_;
};

/// One-shot forward pass: V = ReLU(V_cell Q_cell) Q_sub - R_c I.
[[nodiscard]] VoltageState forward(const Eigen::VectorXd& currents, double G, double T,
                                   const FaultVector& x, const ModelContext& ctx);

}  // namespace pvdiag
