#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pvdiag/config.hpp"
#include "pvdiag/string_model.hpp"

namespace pvdiag {

/// One identification outcome as it appears in a report.
struct ResultSummary {
    std::string name;
    std::string status = "ok";  ///< "ok" or "aborted"
    int iterations = 0;
    double final_loss = 0.0;
    double corrected_loss = 0.0;
    double reconstruction_rmse = 0.0;
    FaultVector x_final;
    FaultVector x_raw;
    std::optional<FaultVector> label;
};

/// Structured text report: [run] metadata, [config] echo, [results] table.
/// Wall-clock timing is kept out of the report body so that two runs with the
/// same seed produce identical files; it goes to a `.timing.txt` sibling.
struct RunReport {
    std::string command;
    std::string version;
    RunConfig config;
    std::vector<std::pair<std::string, std::string>> info;
    std::vector<ResultSummary> results;
    std::vector<std::pair<std::string, double>> timing;  ///< seconds per phase
};

[[nodiscard]] std::string version_string();

/// "n_s=[3,0] n_c=[20,0] r=[0.8,0] N_sc=3 R_c=5"
[[nodiscard]] std::string format_fault_vector(const FaultVector& x);

[[nodiscard]] std::string format_report(const RunReport& report);
[[nodiscard]] std::filesystem::path timing_path(const std::filesystem::path& report_path);

/// Writes the report and its timing sibling.
void write_report(const RunReport& report, const std::filesystem::path& path);

}  // namespace pvdiag
