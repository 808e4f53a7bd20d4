#include "pvdiag/string_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pvdiag/errors.hpp"

namespace pvdiag {

namespace {
constexpr double kJointTolerance = 1e-9;

VoltageState compose(const StringTopology& topology, const FaultVector& x,
                     Eigen::MatrixXd v_cell, const Eigen::VectorXd& currents, bool check) {
    const StructuralMatrices q =
        check ? build_structural_matrices(topology, x) : assemble_structural_matrices(topology, x);

    VoltageState state;
    state.v_cell = std::move(v_cell);
    const Eigen::MatrixXd pre = state.v_cell * q.q_cell;
    state.relu_mask = (pre.array() <= 0.0);
    state.v_sub = pre.cwiseMax(0.0);
    state.v = state.v_sub * q.q_sub - x.R_c * currents;
    return state;
}
}  // namespace

void StringTopology::validate() const {
    if (modules_per_string < 1 || diodes_per_module < 1) {
        throw ConfigError("topology: modules_per_string and diodes_per_module must be >= 1");
    }
    if (N_cs < 1) throw ConfigError("topology: N_cs must be >= 1");
    if (N_ps < 1) throw ConfigError("topology: N_ps must be >= 1");
}

FaultVector FaultVector::zero(int n_ps) {
    FaultVector x;
    x.n_s.assign(static_cast<std::size_t>(n_ps), 0.0);
    x.n_c.assign(static_cast<std::size_t>(n_ps), 0.0);
    x.r.assign(static_cast<std::size_t>(n_ps), 0.0);
    return x;
}

FaultVector FaultVector::from_flat(const Eigen::VectorXd& flat, int n_ps) {
    if (flat.size() != 3 * n_ps + 2) {
        throw DomainError("FaultVector::from_flat: expected length " + std::to_string(3 * n_ps + 2));
    }
    FaultVector x = zero(n_ps);
    for (int i = 0; i < n_ps; ++i) {
        x.n_s[i] = flat(i);
        x.n_c[i] = flat(n_ps + i);
        x.r[i] = flat(2 * n_ps + i);
    }
    x.N_sc = flat(3 * n_ps);
    x.R_c = flat(3 * n_ps + 1);
    return x;
}

Eigen::VectorXd FaultVector::to_flat() const {
    const int p = n_ps();
    Eigen::VectorXd flat(3 * p + 2);
    for (int i = 0; i < p; ++i) {
        flat(i) = n_s[i];
        flat(p + i) = n_c[i];
        flat(2 * p + i) = r[i];
    }
    flat(3 * p) = N_sc;
    flat(3 * p + 1) = R_c;
    return flat;
}

void check_fault_vector(const FaultVector& x, const StringTopology& topology, double r_max) {
    const int p = topology.N_ps;
    if (x.n_ps() != p || static_cast<int>(x.n_c.size()) != p || static_cast<int>(x.r.size()) != p) {
        throw DomainError("fault vector: shadow arrays must have length N_ps = " + std::to_string(p));
    }
    const double n_sub = topology.N_sub();
    auto in_range = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
    for (int i = 0; i < p; ++i) {
        if (!in_range(x.n_s[i], 0.0, n_sub)) throw DomainError("fault vector: n_s out of [0, N_sub]");
        if (!in_range(x.n_c[i], 0.0, topology.N_cs)) throw DomainError("fault vector: n_c out of [0, N_cs]");
        if (!in_range(x.r[i], 0.0, r_max)) {
            throw DomainError("fault vector: shading ratio r out of [0, " + std::to_string(r_max) + "]");
        }
    }
    if (!in_range(x.N_sc, 0.0, n_sub)) throw DomainError("fault vector: N_sc out of [0, N_sub]");
    if (!(std::isfinite(x.R_c) && x.R_c >= 0.0)) throw DomainError("fault vector: R_c must be >= 0");
    const double used = std::accumulate(x.n_s.begin(), x.n_s.end(), 0.0) + x.N_sc;
    if (used > n_sub + kJointTolerance) {
        throw InfeasibleFault("fault vector: sum(n_s) + N_sc exceeds N_sub");
    }
}

std::vector<EnvironmentalCondition> build_ambient_vectors(double G, double T, const FaultVector& x,
                                                          const PhysicalConstants& consts) {
    std::vector<EnvironmentalCondition> envs;
    envs.reserve(x.r.size() + 1);
    for (double r : x.r) envs.push_back({std::max((1.0 - r) * G, consts.G_min), T});
    envs.push_back({std::max(G, consts.G_min), T});
    return envs;
}

StructuralMatrices assemble_structural_matrices(const StringTopology& topology, const FaultVector& x) {
    const int p = x.n_ps();
    const int n_env = p + 1;
    StructuralMatrices q;
    q.q_sub.resize(n_env + 1);
    q.q_cell = Eigen::MatrixXd::Zero(n_env, n_env + 1);

    double shaded = 0.0;
    for (int i = 0; i < p; ++i) {
        q.q_sub(i) = x.n_s[i];
        shaded += x.n_s[i];
        q.q_cell(i, i) = x.n_c[i];
        q.q_cell(p, i) = topology.N_cs - x.n_c[i];
    }
    q.q_sub(p) = x.N_sc;
    q.q_sub(p + 1) = topology.N_sub() - x.N_sc - shaded;
    // short-circuit column p stays zero
    q.q_cell(p, p + 1) = topology.N_cs;
    return q;
}

StructuralMatrices build_structural_matrices(const StringTopology& topology, const FaultVector& x) {
    const double used = std::accumulate(x.n_s.begin(), x.n_s.end(), 0.0) + x.N_sc;
    if (used > topology.N_sub() + kJointTolerance) {
        throw InfeasibleFault("structural matrices: sum(n_s) + N_sc = " + std::to_string(used) +
                              " exceeds N_sub = " + std::to_string(topology.N_sub()));
    }
    return assemble_structural_matrices(topology, x);
}

void ModelContext::validate() const {
    topology.validate();
    stc.validate();
    consts.validate();
    if (newton_iterations < 1) throw ConfigError("newton_iterations must be >= 1");
}

StringSimulator::StringSimulator(ModelContext ctx, Eigen::VectorXd currents, double G, double T)
    : ctx_(std::move(ctx)), currents_(std::move(currents)), G_(G), T_(T) {
    if (currents_.size() < 1) throw DomainError("StringSimulator: empty current sequence");
    if (!currents_.allFinite()) throw DomainError("StringSimulator: non-finite current");
    if (!(G_ > 0.0) || !(T_ > 0.0)) throw DomainError("StringSimulator: requires G > 0 and T > 0");
    const CellOperatingParams normal =
        translate_to_condition(ctx_.stc, {std::max(G_, ctx_.consts.G_min), T_}, ctx_.consts);
    v_norm_ = solve_cell_voltages(normal, ctx_.consts, currents_, ctx_.newton_iterations);
}

CellOperatingParams StringSimulator::condition_params(const FaultVector& x, int index) const {
    const double G = index < x.n_ps() ? (1.0 - x.r[index]) * G_ : G_;
    return translate_to_condition(ctx_.stc, {std::max(G, ctx_.consts.G_min), T_}, ctx_.consts);
}

VoltageState StringSimulator::forward(const FaultVector& x, bool check) const {
    const int p = ctx_.topology.N_ps;
    if (x.n_ps() != p) throw DomainError("forward: fault vector has wrong N_ps");
    Eigen::MatrixXd v_cell(currents_.size(), p + 1);
    for (int j = 0; j < p; ++j) {
        try {
            v_cell.col(j) = solve_cell_voltages(condition_params(x, j), ctx_.consts, currents_,
                                                ctx_.newton_iterations);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (shadow condition " + std::to_string(j) + ")",
                               e.iteration());
        }
    }
    v_cell.col(p) = v_norm_;
    return compose(ctx_.topology, x, std::move(v_cell), currents_, check);
}

VoltageState forward(const Eigen::VectorXd& currents, double G, double T, const FaultVector& x,
                     const ModelContext& ctx) {
    return StringSimulator(ctx, currents, G, T).forward(x);
}

}  // namespace pvdiag
