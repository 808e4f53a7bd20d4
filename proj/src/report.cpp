#include "pvdiag/report.hpp"

#include <fstream>
#include <sstream>

#include "pvdiag/curve_io.hpp"
#include "pvdiag/errors.hpp"

#ifndef PVDIAG_VERSION
#define PVDIAG_VERSION "unknown"
#endif

namespace pvdiag {

namespace {
std::string format_list(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out + "]";
}
}  // namespace

std::string version_string() { return PVDIAG_VERSION; }

std::string format_fault_vector(const FaultVector& x) {
    return "n_s=" + format_list(x.n_s) + " n_c=" + format_list(x.n_c) + " r=" + format_list(x.r) +
           " N_sc=" + format_double(x.N_sc) + " R_c=" + format_double(x.R_c);
}

std::string format_report(const RunReport& report) {
    std::ostringstream out;
    out << "# pvdiag run report\n";
    out << "[run]\n";
    out << "command = " << report.command << '\n';
    out << "version = " << report.version << '\n';
    for (const auto& [k, v] : report.info) out << k << " = " << v << '\n';
    out << "\n[config]\n" << format_config(report.config);
    out << "\n[results]\n";
    out << "# name | status | iterations | final_loss_V2 | corrected_loss_V2 | rmse_V | x_final | x_raw | label\n";
    for (const ResultSummary& r : report.results) {
        out << r.name << " | " << r.status << " | " << r.iterations << " | " << format_double(r.final_loss)
            << " | " << format_double(r.corrected_loss) << " | " << format_double(r.reconstruction_rmse) << " | "
            << format_fault_vector(r.x_final) << " | " << format_fault_vector(r.x_raw) << " | "
            << (r.label ? format_fault_vector(*r.label) : std::string("-")) << '\n';
    }
    return out.str();
}

std::filesystem::path timing_path(const std::filesystem::path& report_path) {
    std::filesystem::path p = report_path;
    p.replace_extension(".timing.txt");
    return p;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(path);
        if (!out) throw Error("cannot write report " + path.string());
        out << format_report(report);
    }
    std::ofstream timing(timing_path(path));
    if (!timing) throw Error("cannot write " + timing_path(path).string());
    for (const auto& [phase, seconds] : report.timing) timing << phase << " = " << format_double(seconds) << '\n';
}

}  // namespace pvdiag
