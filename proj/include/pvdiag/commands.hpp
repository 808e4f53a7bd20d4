#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pvdiag/config.hpp"
#include "pvdiag/identify.hpp"
#include "pvdiag/string_model.hpp"

namespace pvdiag {

/// Process exit codes shared by every command.
enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitUsage = 2,
    kExitNumeric = 3,
};

/// Output streams for a command; the CLI passes std::cout / std::cerr.
struct CommandIo {
    std::ostream& out;
    std::ostream& err;
};

/// Writes a synthetic curve for fault vector `x` at the configured (G, T)
/// on `cfg.points` currents spanning [0, 1.02 I_sc]. With `use_oracle` the
/// bisection reference solver replaces the forward model.
int cmd_simulate(const RunConfig& cfg, const FaultVector& x, const std::filesystem::path& out_path,
                 bool use_oracle, CommandIo io);

/// Preprocesses and identifies one curve. Writes the report to `report_path`
/// and `<stem>_loss.csv`, `<stem>_grad_norm.csv` next to it.
int cmd_identify(const std::filesystem::path& curve_path, const RunConfig& cfg,
                 const std::filesystem::path& report_path, CommandIo io);

/// Per-optimizer aggregate of a benchmark run.
struct BenchmarkRow {
    OptimizerKind kind = OptimizerKind::Adahessian;
    int runs = 0;
    int failures = 0;
    double mean_final_loss = 0.0;
    double mean_corrected_loss = 0.0;
    double mean_rmse = 0.0;
    std::vector<double> mean_loss_curve;       ///< per iteration, over successful runs
    std::vector<double> mean_grad_norm_curve;
    std::vector<IdentificationResult> results; ///< index-aligned with the suite; empty x on failure
    std::vector<bool> ok;
};

/// Runs identification for every curve with one optimizer. Curves run in
/// parallel on `threads` workers (0 = hardware concurrency); results are
/// stored by curve index so the outcome does not depend on scheduling.
[[nodiscard]] BenchmarkRow run_benchmark_row(const std::vector<IVCurve>& suite, const RunConfig& cfg,
                                             OptimizerKind kind, std::ostream& log);

/// Summary table text, one row per optimizer.
[[nodiscard]] std::string format_benchmark_summary(const std::vector<BenchmarkRow>& rows);

/// Generates the 150-curve suite and runs every configured optimizer on it.
/// Writes summary.txt, report.txt, <optimizer>_loss.csv and
/// <optimizer>_grad_norm.csv into `out_dir`. Exit 3 when more than 5% of runs fail.
int cmd_benchmark(const RunConfig& cfg, const std::filesystem::path& out_dir, CommandIo io);

/// Writes the suite curves, label sidecars and manifest.json into `out_dir`.
int cmd_suite(const RunConfig& cfg, const std::filesystem::path& out_dir, CommandIo io);

/// Largest relative error per flat component over the samples.
struct GradcheckReport {
    Eigen::VectorXd max_rel_error;
    Eigen::VectorXd max_abs_error;
    int samples = 0;
    int failures = 0;  ///< components beyond tolerance (relative and absolute)
};

/// Analytic loss gradient against central differences at `samples` random
/// interior feasible points. A component passes when its relative error is
/// below `rel_tol` or its absolute error below `abs_tol`.
/// `corrupt` perturbs the analytic gradient; it exists to test the checker.
[[nodiscard]] GradcheckReport run_gradcheck(const RunConfig& cfg, int samples, double rel_tol, double abs_tol,
                                            bool corrupt = false);

/// Exit 1 if any component exceeds 1e-3 relative error, 2 if samples < 1.
int cmd_gradcheck(const RunConfig& cfg, int samples, CommandIo io, bool corrupt = false);

/// Random fault vector strictly inside the physical region, with integral
/// counts when `integral` is set.
[[nodiscard]] FaultVector random_interior_fault(const StringTopology& topology, double lambda,
                                                std::mt19937_64& rng, bool integral);

}  // namespace pvdiag
