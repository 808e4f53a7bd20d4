#include "pvdiag/oracle.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "pvdiag/errors.hpp"

namespace pvdiag {

namespace {
constexpr double kBracketWidth = 1e-12;
constexpr double kBreakdownMargin = 1e-9;
constexpr int kMaxBisections = 200;

double residual_in_u(const CellOperatingParams& p, const PhysicalConstants& c, double u, double I_c) {
    const double avalanche = 1.0 + c.a * std::pow(1.0 - u / c.V_br, -c.m);
    return p.I_ph - p.I_0 * std::expm1(u / p.n_vth()) - u / p.R_sh * avalanche - I_c;
}

bool is_integral(double v) { return std::floor(v) == v; }

struct ShadowSpec {
    double n_s, n_c, r;
};
}  // namespace

double oracle_cell_voltage(const CellOperatingParams& params, const PhysicalConstants& consts, double I_c) {
    const double voc_bound = params.n_vth() * std::log1p(params.I_ph / params.I_0);
    double lo = consts.V_br + kBreakdownMargin;
    double hi = std::max(1.5 * voc_bound, 1.0);
    const double f_lo = residual_in_u(params, consts, lo, I_c);
    const double f_hi = residual_in_u(params, consts, hi, I_c);
    if (!(f_lo > 0.0) || !(f_hi < 0.0)) {
        throw OracleError("oracle: no sign change on the bracket at I_c = " + std::to_string(I_c));
    }
    for (int i = 0; i < kMaxBisections && hi - lo > kBracketWidth; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (residual_in_u(params, consts, mid, I_c) > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi) - I_c * params.R_s;
}

Eigen::VectorXd oracle_solve(const StringTopology& topology, const CellStcParams& stc,
                             const PhysicalConstants& consts, double G, double T, const FaultVector& x,
                             const Eigen::VectorXd& currents) {
    topology.validate();
    if (x.n_ps() != topology.N_ps) throw DomainError("oracle: fault vector has wrong N_ps");
    for (int j = 0; j < x.n_ps(); ++j) {
        if (!is_integral(x.n_s[j]) || !is_integral(x.n_c[j])) throw DomainError("oracle: n_s and n_c must be integral");
    }
    if (!is_integral(x.N_sc)) throw DomainError("oracle: N_sc must be integral");
    check_fault_vector(x, topology);

    const CellOperatingParams healthy = translate_to_condition(stc, {G, T}, consts);
    std::vector<CellOperatingParams> shaded;
    for (int j = 0; j < x.n_ps(); ++j) {
        shaded.push_back(translate_to_condition(stc, {std::max((1.0 - x.r[j]) * G, consts.G_min), T}, consts));
    }

    // Substring list: shadow j covers n_s[j] substrings with n_c[j] shaded cells each,
    // then N_sc shorted substrings, then healthy ones.
    struct Substring {
        int shadow;   // -1 healthy, -2 shorted
        int shaded_cells;
    };
    std::vector<Substring> substrings;
    for (int j = 0; j < x.n_ps(); ++j) {
        for (int k = 0; k < static_cast<int>(x.n_s[j]); ++k) substrings.push_back({j, static_cast<int>(x.n_c[j])});
    }
    for (int k = 0; k < static_cast<int>(x.N_sc); ++k) substrings.push_back({-2, 0});
    while (static_cast<int>(substrings.size()) < topology.N_sub()) substrings.push_back({-1, 0});

    Eigen::VectorXd V(currents.size());
    for (Eigen::Index i = 0; i < currents.size(); ++i) {
        const double I = currents(i);
        const double v_healthy = oracle_cell_voltage(healthy, consts, I);
        std::vector<double> v_shaded(shaded.size());
        for (std::size_t j = 0; j < shaded.size(); ++j) v_shaded[j] = oracle_cell_voltage(shaded[j], consts, I);

        double total = 0.0;
        for (const Substring& s : substrings) {
            if (s.shadow == -2) continue;
            double v_sub = 0.0;
            for (int cell = 0; cell < topology.N_cs; ++cell) {
                v_sub += (s.shadow >= 0 && cell < s.shaded_cells) ? v_shaded[static_cast<std::size_t>(s.shadow)]
                                                                  : v_healthy;
            }
            total += std::max(v_sub, 0.0);
        }
        V(i) = total - x.R_c * I;
    }
    return V;
}

double healthy_short_circuit_current(const CellStcParams& stc, const PhysicalConstants& consts, double G,
                                     double T) {
    const CellOperatingParams p = translate_to_condition(stc, {G, T}, consts);
    // at V_c = 0 the residual is decreasing in I_c
    auto f = [&](double I) { return residual_in_u(p, consts, I * p.R_s, I); };
    double lo = 0.0;
    double hi = 2.0 * p.I_ph + 1.0;
    if (!(f(lo) > 0.0) || !(f(hi) < 0.0)) throw OracleError("oracle: cannot bracket the short-circuit current");
    for (int i = 0; i < kMaxBisections && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double healthy_open_circuit_voltage(const StringTopology& topology, const CellStcParams& stc,
                                    const PhysicalConstants& consts, double G, double T) {
    const CellOperatingParams p = translate_to_condition(stc, {G, T}, consts);
    return oracle_cell_voltage(p, consts, 0.0) * topology.N_cs * topology.N_sub();
}

Eigen::VectorXd table1_current_grid(const CellStcParams& stc, const PhysicalConstants& consts, double G,
                                    double T, Eigen::Index points) {
    if (points < 2) throw DomainError("current grid needs at least 2 points");
    const double isc = healthy_short_circuit_current(stc, consts, G, T);
    return Eigen::VectorXd::LinSpaced(points, 0.0, 1.02 * isc);
}

std::vector<FaultVector> table1_labels() {
    const std::array<std::optional<ShadowSpec>, 5> first = {
        std::nullopt, ShadowSpec{3, 20, 0.8}, ShadowSpec{6, 20, 0.8}, ShadowSpec{3, 20, 0.6}, ShadowSpec{6, 20, 0.6}};
    const std::array<std::optional<ShadowSpec>, 5> second = {
        std::nullopt, ShadowSpec{3, 20, 0.4}, ShadowSpec{6, 20, 0.4}, ShadowSpec{3, 20, 0.2}, ShadowSpec{6, 20, 0.2}};
    const std::array<double, 3> shorted = {0, 3, 6};
    const std::array<double, 2> resistance = {0, 5};

    std::vector<FaultVector> labels;
    for (const auto& s1 : first) {
        for (const auto& s2 : second) {
            for (double nsc : shorted) {
                for (double rc : resistance) {
                    FaultVector x = FaultVector::zero(2);
                    int slot = 0;
                    for (const auto& s : {s1, s2}) {
                        if (!s) continue;
                        x.n_s[slot] = s->n_s;
                        x.n_c[slot] = s->n_c;
                        x.r[slot] = s->r;
                        ++slot;
                    }
                    x.N_sc = nsc;
                    x.R_c = rc;
                    labels.push_back(x);
                }
            }
        }
    }
    return labels;
}

std::vector<IVCurve> generate_table1_suite(const StringTopology& topology, const CellStcParams& stc,
                                           const PhysicalConstants& consts, double noise_sigma,
                                           std::uint64_t seed) {
    if (topology.N_ps != 2) throw DomainError("the benchmark suite needs N_ps = 2");
    if (!(noise_sigma >= 0.0)) throw DomainError("noise_sigma must be >= 0");
    const double G = consts.G_stc;
    const double T = consts.T_stc;
    const Eigen::VectorXd currents = table1_current_grid(stc, consts, G, T);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
    std::vector<IVCurve> suite;
    for (const FaultVector& x : table1_labels()) {
        IVCurve c;
        c.current = currents;
        c.voltage = oracle_solve(topology, stc, consts, G, T, x, currents);
        if (noise_sigma > 0.0) {
            for (Eigen::Index i = 0; i < c.voltage.size(); ++i) c.voltage(i) += noise(rng);
        }
        c.G = G;
        c.T = T;
        c.label = x;
        c.source = CurveSource::Synthetic;
        suite.push_back(std::move(c));
    }
    return suite;
}

void write_suite(const std::vector<IVCurve>& suite, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::array();
    for (std::size_t i = 0; i < suite.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "curve_%03zu.csv", i);
        save_curve(suite[i], dir / name);
        nlohmann::json entry = {{"path", name}};
        if (suite[i].label) {
            const FaultVector& x = *suite[i].label;
            entry["label"] = {{"n_s", x.n_s}, {"n_c", x.n_c}, {"r", x.r}, {"N_sc", x.N_sc}, {"R_c", x.R_c}};
        }
        manifest.push_back(entry);
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error("cannot write manifest in " + dir.string());
    out << nlohmann::json{{"generator", "bisection reference solver"}, {"curves", manifest}}.dump(2) << '\n';
}

}  // namespace pvdiag
