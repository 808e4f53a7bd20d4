#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "pvdiag/cell_model.hpp"
#include "pvdiag/string_model.hpp"

namespace pvtest {

/// TSM-240 cell parameters at STC used throughout the tests.
inline pvdiag::ModelContext tsm240() {
    pvdiag::ModelContext ctx;
    ctx.stc = {8.629082005348174, 6.658729054456166e-11, 0.946384040848259,
               0.0067645629056437675, 6.433183240832354, 0.0040514};
    return ctx;
}

/// Second, deliberately plain evaluation of the reverse-biased diode residual.
inline double residual_by_hand(const pvdiag::CellOperatingParams& p, const pvdiag::PhysicalConstants& c,
                               double V, double I) {
    const double u = V + I * p.R_s;
    const double diode = p.I_0 * (std::exp(u / (p.n * p.V_th)) - 1.0);
    const double shunt = u / p.R_sh;
    const double avalanche = c.a * shunt * std::pow(1.0 - u / c.V_br, -c.m);
    return p.I_ph - diode - shunt - avalanche - I;
}

/// Bisection on the residual above; independent of the library's oracle.
inline double bisect_cell(const pvdiag::CellOperatingParams& p, const pvdiag::PhysicalConstants& c, double I) {
    double lo = c.V_br - I * p.R_s + 1e-9;
    double hi = 2.0;
    for (int i = 0; i < 300 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (residual_by_hand(p, c, mid, I) > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pvdiag_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace pvtest
