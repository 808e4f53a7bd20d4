// Acceptance run: one PASS/FAIL line per headline criterion.
// Usage: acceptance [work_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "pvdiag/commands.hpp"
#include "pvdiag/gradients.hpp"
#include "pvdiag/oracle.hpp"
#include "pvdiag/projection.hpp"

using namespace pvdiag;

namespace {

// tolerances
constexpr int kGradSamples = 50;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradAbsTol = 1e-6;
constexpr double kGradSeconds = 30.0;
constexpr double kSolverTolV = 1e-5;
constexpr double kSolverSeconds = 60.0;
constexpr int kImplicitPairs = 100;
constexpr double kImplicitRelTol = 1e-5;
constexpr double kAdahessianMaxLoss = 100.0;  // V^2
constexpr double kBenchmarkSeconds = 15 * 60.0;
constexpr int kRoundTripCurves = 20;
constexpr double kRatioTol = 0.05;
constexpr double kResistanceRelTol = 0.05;
constexpr double kRmseFractionOfVoc = 0.03;
constexpr int kDeterminismIterations = 100;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failed = 0;
void report(bool pass, const std::string& name, const std::string& detail) {
    if (!pass) ++failed;
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

void gradient_correctness(const RunConfig& cfg) {
    const auto t = Clock::now();
    const GradcheckReport rep = run_gradcheck(cfg, kGradSamples, kGradRelTol, kGradAbsTol);
    const double s = since(t);
    report(rep.failures == 0 && s < kGradSeconds, "gradient correctness",
           fmt("%.0f samples, %.0f components out of tolerance, max rel error %.2e, %.2f s", kGradSamples,
               rep.failures, rep.max_rel_error.maxCoeff(), s));
}

void solver_cross_validation(const RunConfig& cfg) {
    const ModelContext& ctx = cfg.model;
    const auto t = Clock::now();
    const Eigen::VectorXd I = table1_current_grid(ctx.stc, ctx.consts, 1000.0, 298.15, cfg.points);
    const StringSimulator sim(ctx, I, 1000.0, 298.15);
    double worst = 0.0;
    for (const FaultVector& x : table1_labels()) {
        const Eigen::VectorXd ref = oracle_solve(ctx.topology, ctx.stc, ctx.consts, 1000.0, 298.15, x, I);
        worst = std::max(worst, (sim.forward(x).v - ref).cwiseAbs().maxCoeff());
    }
    const double s = since(t);
    report(worst < kSolverTolV && s < kSolverSeconds, "solver cross-validation",
           fmt("150 configurations, max |forward - oracle| = %.2e V, %.2f s", worst, s));
}

void implicit_differentiation(const RunConfig& cfg) {
    const ModelContext& ctx = cfg.model;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ur(0.05, 0.95), uG(200.0, 1000.0), uT(273.15, 338.15), uf(0.0, 1.02);
    double worst = 0.0;
    for (int k = 0; k < kImplicitPairs; ++k) {
        const double r = ur(rng), G = uG(rng), T = uT(rng);
        const double I = uf(rng) * healthy_short_circuit_current(ctx.stc, ctx.consts, G, T);
        auto root = [&](double rr) {
            return oracle_cell_voltage(translate_to_condition(ctx.stc, {(1.0 - rr) * G, T}, ctx.consts), ctx.consts, I);
        };
        const double h = 1e-5;
        const double fd = (root(r + h) - root(r - h)) / (2.0 * h);
        const double an = implicit_dvc_dr(ctx.stc, ctx.consts, G, T, r, root(r), I);
        worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-300));
    }
    report(worst < kImplicitRelTol, "implicit-differentiation exactness",
           fmt("%.0f pairs, max relative error %.2e", kImplicitPairs, worst));
}

struct SuiteRuns {
    std::vector<IVCurve> suite;
    BenchmarkRow adahessian, adamax, adagrad;
    double seconds = 0.0;
};

SuiteRuns run_suite(const RunConfig& cfg) {
    SuiteRuns out;
    const auto t = Clock::now();
    out.suite = generate_table1_suite(cfg.model.topology, cfg.model.stc, cfg.model.consts);
    std::ostringstream log;
    out.adahessian = run_benchmark_row(out.suite, cfg, OptimizerKind::Adahessian, log);
    out.adamax = run_benchmark_row(out.suite, cfg, OptimizerKind::Adamax, log);
    out.adagrad = run_benchmark_row(out.suite, cfg, OptimizerKind::AdaGrad, log);
    out.seconds = since(t);
    return out;
}

void benchmark_reproduction(const SuiteRuns& r) {
    const double a = r.adahessian.mean_final_loss, m = r.adamax.mean_final_loss, g = r.adagrad.mean_final_loss;
    const bool ok = r.adahessian.failures == 0 && a <= kAdahessianMaxLoss && a < m && m < g &&
                    r.seconds < kBenchmarkSeconds;
    report(ok, "benchmark reproduction",
           fmt("mean final loss Adahessian %.2f, Adamax %.2f, AdaGrad %.2f V^2, %.0f s", a, m, g, r.seconds));
}

void round_trip(const SuiteRuns& r) {
    // faulted labels spread evenly over the grid
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < r.suite.size(); ++i) {
        if (r.suite[i].label->n_s[0] > 0) picks.push_back(i);
    }
    const std::size_t stride = picks.size() / kRoundTripCurves;
    int good = 0;
    std::string misses;
    for (int k = 0; k < kRoundTripCurves; ++k) {
        const std::size_t i = picks[k * stride];
        const FaultVector& truth = *r.suite[i].label;
        const FaultVector& x = r.adahessian.results[i].x_final;
        bool ok = r.adahessian.ok[i] && x.n_s == truth.n_s && x.N_sc == truth.N_sc;
        for (int j = 0; j < 2 && ok; ++j) {
            if (truth.n_s[j] > 0) ok = std::abs(x.r[j] - truth.r[j]) <= kRatioTol;
        }
        if (ok && truth.R_c > 0) ok = std::abs(x.R_c - truth.R_c) <= kResistanceRelTol * truth.R_c;
        if (ok) ++good;
        else misses += " " + std::to_string(i);
    }
    report(good == kRoundTripCurves, "round-trip identification",
           fmt("%.0f of %.0f curves exact", good, kRoundTripCurves) + (misses.empty() ? "" : "; missed curves" + misses));
}

void reconstruction_bound(const RunConfig& cfg, const SuiteRuns& r) {
    const double voc = healthy_open_circuit_voltage(cfg.model.topology, cfg.model.stc, cfg.model.consts, 1000.0, 298.15);
    double worst = 0.0;
    int over = 0;
    for (std::size_t i = 0; i < r.suite.size(); ++i) {
        const double rmse = r.adahessian.results[i].reconstruction_rmse;
        worst = std::max(worst, rmse);
        if (!r.adahessian.ok[i] || rmse > kRmseFractionOfVoc * voc) ++over;
    }
    report(over == 0, "reconstruction error bound",
           fmt("worst RMSE %.2f V against bound %.2f V (3%% of %.1f V), %.0f curves over", worst,
               kRmseFractionOfVoc * voc, voc, over));
}

void projection_suite(const RunConfig& cfg) {
    const FeasibleRegion region = cfg.make_region();
    const FeasibleRegion phys = region.physical();
    bool ok = true;
    std::string detail;

    Eigen::VectorXd x(8);
    x << 20, 20, 10, 10, 0.5, 0.3, 5, 0;
    Eigen::VectorXd y = project(x, phys);
    const bool joint = y(0) == 18 && y(1) == 18 && y(6) == 3;
    x << 1, 1, 1, 1, 0.5, 0.6, 0, 0;
    y = project(x, phys);
    const bool ratio = y(5) == 0.45;

    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-60.0, 60.0), ur(-0.5, 1.5);
    bool idem = true;
    for (int k = 0; k < 10000; ++k) {
        x << u(rng), u(rng), u(rng), u(rng), ur(rng), ur(rng), u(rng), u(rng);
        y = project(x, region);
        idem = idem && region.contains(y) && (project(y, region) - y).cwiseAbs().maxCoeff() < 1e-12;
    }

    // every iterate of a few full identifications
    bool feasible = true;
    RunConfig run = cfg;
    IdentifyOptions opt;
    opt.check_feasibility = true;
    const auto suite = generate_table1_suite(cfg.model.topology, cfg.model.stc, cfg.model.consts);
    for (std::size_t i : {7u, 45u, 101u, 149u}) {
        try {
            (void)identify(suite[i], run.model, run.optimizer, region, opt);
        } catch (const ContractError&) {
            feasible = false;
        }
    }
    ok = joint && ratio && idem && feasible;
    detail = std::string("joint example ") + (joint ? "ok" : "wrong") + ", ratio example " + (ratio ? "ok" : "wrong") +
             ", idempotence " + (idem ? "ok" : "broken") + ", iterate feasibility " + (feasible ? "ok" : "broken");
    report(ok, "projection suite", detail);
}

void determinism(RunConfig cfg, const std::filesystem::path& work) {
    cfg.optimizer.iterations = kDeterminismIterations;
    std::ostringstream out, err;
    const int a = cmd_benchmark(cfg, work / "bench_a", {out, err});
    const int b = cmd_benchmark(cfg, work / "bench_b", {out, err});
    const std::string sa = slurp(work / "bench_a" / "summary.txt");
    const bool same = a == 0 && b == 0 && !sa.empty() && sa == slurp(work / "bench_b" / "summary.txt");
    report(same, "determinism",
           fmt("two benchmark runs (6 optimizers, M=%.0f): summaries ", kDeterminismIterations) +
               (same ? "byte-identical" : "differ"));
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path work = argc > 1 ? argv[1] : std::filesystem::temp_directory_path() / "pvdiag_acceptance";
    std::filesystem::create_directories(work);
    const RunConfig cfg = default_run_config();
    try {
        gradient_correctness(cfg);
        solver_cross_validation(cfg);
        implicit_differentiation(cfg);
        const SuiteRuns runs = run_suite(cfg);
        benchmark_reproduction(runs);
        round_trip(runs);
        reconstruction_bound(cfg, runs);
        projection_suite(cfg);
        determinism(cfg, work);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance run aborted: " << e.what() << std::endl;
        return 1;
    }
    std::cout << failed << " criterion(s) failed" << std::endl;
    return failed == 0 ? 0 : 1;
}
