#include "pvdiag/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "pvdiag/curve_io.hpp"
#include "pvdiag/errors.hpp"
#include "pvdiag/gradients.hpp"
#include "pvdiag/oracle.hpp"
#include "pvdiag/report.hpp"

namespace pvdiag {

namespace {
constexpr double kGradcheckTolerance = 1e-3;
constexpr double kGradcheckAbsTolerance = 1e-6;
constexpr double kMaxFailureFraction = 0.05;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string lower_name(OptimizerKind kind) {
    std::string s(to_string(kind));
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

ResultSummary summarize(const std::string& name, const IdentificationResult& r, const std::optional<FaultVector>& label,
                        const std::string& status = "ok") {
    ResultSummary s;
    s.name = name;
    s.status = status;
    s.iterations = r.iterations;
    s.final_loss = r.final_loss;
    s.corrected_loss = r.corrected_loss;
    s.reconstruction_rmse = r.reconstruction_rmse;
    s.x_final = r.x_final;
    s.x_raw = r.x_raw;
    s.label = label;
    return s;
}

std::filesystem::path sibling(const std::filesystem::path& report_path, const std::string& suffix) {
    std::filesystem::path p = report_path;
    p.replace_filename(report_path.stem().string() + suffix);
    return p;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    // 53 random bits, portable across standard libraries
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}
}  // namespace

int cmd_simulate(const RunConfig& cfg, const FaultVector& x, const std::filesystem::path& out_path, bool use_oracle,
                 CommandIo io) {
    try {
        cfg.validate();
        if (x.n_ps() != cfg.model.topology.N_ps) {
            throw ConfigError("fault vector has " + std::to_string(x.n_ps()) + " shadows, topology allows " +
                              std::to_string(cfg.model.topology.N_ps));
        }
        try {
            check_fault_vector(x, cfg.model.topology, 1.0);
        } catch (const Error& e) {
            throw ConfigError(std::string("fault vector out of bounds: ") + e.what());
        }
        const Eigen::VectorXd currents =
            table1_current_grid(cfg.model.stc, cfg.model.consts, cfg.G, cfg.T, cfg.points);
        IVCurve curve;
        curve.current = currents;
        if (use_oracle) {
            try {
                curve.voltage = oracle_solve(cfg.model.topology, cfg.model.stc, cfg.model.consts, cfg.G, cfg.T, x, currents);
            } catch (const DomainError& e) {
                throw ConfigError(e.what());
            }
        } else {
            curve.voltage = forward(currents, cfg.G, cfg.T, x, cfg.model).v;
        }
        curve.G = cfg.G;
        curve.T = cfg.T;
        curve.label = x;
        curve.source = CurveSource::Synthetic;
        if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
        save_curve(curve, out_path);
        io.out << "wrote " << curve.size() << " points to " << out_path.string() << " ("
               << (use_oracle ? "bisection reference solver" : "forward model") << ")\n";
        io.out << "V(I=0) = " << format_double(curve.voltage(0)) << " V\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const OracleError& e) {
        io.err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const NumericError& e) {
        io.err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

int cmd_identify(const std::filesystem::path& curve_path, const RunConfig& cfg, const std::filesystem::path& report_path,
                 CommandIo io) {
    RunReport report;
    report.command = "identify";
    report.version = version_string();
    report.config = cfg;
    report.info.emplace_back("curve", curve_path.filename().string());

    IVCurve curve;
    IVCurve prepared;
    try {
        cfg.validate();
        const auto t_load = Clock::now();
        LoadDiagnostics diag;
        curve = load_curve(curve_path, &diag);
        for (const auto& w : diag.warnings) io.err << "warning: " << w << '\n';
        report.timing.emplace_back("load", seconds_since(t_load));
        const auto t_pre = Clock::now();
        prepared = preprocess(curve, cfg.preprocess);
        report.timing.emplace_back("preprocess", seconds_since(t_pre));
        report.info.emplace_back("points", std::to_string(prepared.size()));
        report.info.emplace_back("G", format_double(prepared.G));
        report.info.emplace_back("T", format_double(prepared.T));
        if (curve.source == CurveSource::Synthetic) {
            report.info.emplace_back("note", "synthetic curve; labels come from the in-repo generator");
        }
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    const auto t_fit = Clock::now();
    try {
        const IdentificationResult result = identify(prepared, cfg.model, cfg.optimizer, cfg.make_region(),
                                                     IdentifyOptions{cfg.thresholds, false});
        report.timing.emplace_back("identify", seconds_since(t_fit));
        report.results.push_back(summarize(curve_path.filename().string(), result, curve.label));
        write_report(report, report_path);
        save_trajectory(result.loss_trajectory, "loss_V2", sibling(report_path, "_loss.csv"));
        save_trajectory(result.grad_norm_trajectory, "grad_norm", sibling(report_path, "_grad_norm.csv"));
        io.out << "fault vector: " << format_fault_vector(result.x_final) << '\n';
        io.out << "reconstruction RMSE: " << format_double(result.reconstruction_rmse) << " V\n";
        io.out << "final loss: " << format_double(result.final_loss) << " V^2\n";
        return kExitOk;
    } catch (const IdentificationAborted& e) {
        report.timing.emplace_back("identify", seconds_since(t_fit));
        report.results.push_back(summarize(curve_path.filename().string(), e.partial(), curve.label, "aborted"));
        report.info.emplace_back("error", e.what());
        try {
            write_report(report, report_path);
            save_trajectory(e.partial().loss_trajectory, "loss_V2", sibling(report_path, "_loss.csv"));
            save_trajectory(e.partial().grad_norm_trajectory, "grad_norm", sibling(report_path, "_grad_norm.csv"));
        } catch (const Error& w) {
            io.err << "error: " << w.what() << '\n';
        }
        io.err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const NumericError& e) {
        io.err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

BenchmarkRow run_benchmark_row(const std::vector<IVCurve>& suite, const RunConfig& cfg, OptimizerKind kind,
                               std::ostream& log) {
    BenchmarkRow row;
    row.kind = kind;
    row.runs = static_cast<int>(suite.size());
    row.results.resize(suite.size());
    row.ok.assign(suite.size(), false);
    std::vector<std::string> errors(suite.size());

    OptimizerConfig base = cfg.optimizer;
    base.kind = kind;
    const FeasibleRegion region = cfg.make_region();
    const IdentifyOptions options{cfg.thresholds, false};

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < suite.size(); i = next++) {
            OptimizerConfig oc = base;
            oc.seed = derive_seed(cfg.optimizer.seed, i);
            try {
                row.results[i] = identify(suite[i], cfg.model, oc, region, options);
                row.ok[i] = true;
            } catch (const IdentificationAborted& e) {
                row.results[i] = e.partial();
                errors[i] = e.what();
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        }
    };
    unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    n_threads = std::max(1U, std::min<unsigned>(n_threads, static_cast<unsigned>(suite.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    const std::size_t iters = static_cast<std::size_t>(cfg.optimizer.iterations);
    row.mean_loss_curve.assign(iters, 0.0);
    row.mean_grad_norm_curve.assign(iters, 0.0);
    int good = 0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        if (!row.ok[i]) {
            ++row.failures;
            log << to_string(kind) << ": curve " << i << " failed: " << errors[i] << '\n';
            continue;
        }
        const IdentificationResult& r = row.results[i];
        ++good;
        row.mean_final_loss += r.final_loss;
        row.mean_corrected_loss += r.corrected_loss;
        row.mean_rmse += r.reconstruction_rmse;
        for (std::size_t t = 0; t < iters; ++t) {
            row.mean_loss_curve[t] += r.loss_trajectory[t];
            row.mean_grad_norm_curve[t] += r.grad_norm_trajectory[t];
        }
    }
    if (good > 0) {
        row.mean_final_loss /= good;
        row.mean_corrected_loss /= good;
        row.mean_rmse /= good;
        for (std::size_t t = 0; t < iters; ++t) {
            row.mean_loss_curve[t] /= good;
            row.mean_grad_norm_curve[t] /= good;
        }
    }
    return row;
}

std::string format_benchmark_summary(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream out;
    out << "# optimizer | runs | failures | mean_final_loss_V2 | mean_corrected_loss_V2 | mean_rmse_V\n";
    for (const BenchmarkRow& r : rows) {
        out << to_string(r.kind) << " | " << r.runs << " | " << r.failures << " | "
            << format_double(r.mean_final_loss) << " | " << format_double(r.mean_corrected_loss) << " | "
            << format_double(r.mean_rmse) << '\n';
    }
    return out.str();
}

int cmd_benchmark(const RunConfig& cfg, const std::filesystem::path& out_dir, CommandIo io) {
    RunReport report;
    report.command = "benchmark";
    report.version = version_string();
    report.config = cfg;
    report.info.emplace_back("suite", "150 labelled curves generated by the bisection reference solver");

    std::vector<IVCurve> suite;
    try {
        cfg.validate();
        std::filesystem::create_directories(out_dir);
        const auto t_gen = Clock::now();
        suite = generate_table1_suite(cfg.model.topology, cfg.model.stc, cfg.model.consts, cfg.noise_sigma,
                                      cfg.suite_seed);
        report.timing.emplace_back("generate_suite", seconds_since(t_gen));
    } catch (const OracleError& e) {
        io.err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    std::vector<BenchmarkRow> rows;
    int failures = 0;
    int runs = 0;
    try {
        for (OptimizerKind kind : cfg.benchmark_optimizers) {
            const auto t_opt = Clock::now();
            io.err << "running " << to_string(kind) << " on " << suite.size() << " curves\n";
            BenchmarkRow row = run_benchmark_row(suite, cfg, kind, io.err);
            report.timing.emplace_back(std::string(to_string(kind)), seconds_since(t_opt));
            failures += row.failures;
            runs += row.runs;
            save_trajectory(row.mean_loss_curve, "mean_loss_V2", out_dir / (lower_name(kind) + "_loss.csv"));
            save_trajectory(row.mean_grad_norm_curve, "mean_grad_norm", out_dir / (lower_name(kind) + "_grad_norm.csv"));
            for (std::size_t i = 0; i < suite.size(); ++i) {
                char name[48];
                std::snprintf(name, sizeof(name), "%s/curve_%03zu", std::string(to_string(kind)).c_str(), i);
                report.results.push_back(summarize(name, row.results[i], suite[i].label, row.ok[i] ? "ok" : "aborted"));
            }
            row.results.clear();
            rows.push_back(std::move(row));
        }
        const std::string summary = format_benchmark_summary(rows);
        std::ofstream(out_dir / "summary.txt") << summary;
        write_report(report, out_dir / "report.txt");
        io.out << summary;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    if (runs > 0 && static_cast<double>(failures) > kMaxFailureFraction * runs) {
        io.err << failures << " of " << runs << " runs failed\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_suite(const RunConfig& cfg, const std::filesystem::path& out_dir, CommandIo io) {
    try {
        cfg.validate();
        const auto suite = generate_table1_suite(cfg.model.topology, cfg.model.stc, cfg.model.consts, cfg.noise_sigma,
                                                 cfg.suite_seed);
        write_suite(suite, out_dir);
        io.out << "wrote " << suite.size() << " curves to " << out_dir.string() << '\n';
        return kExitOk;
    } catch (const OracleError& e) {
        io.err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

FaultVector random_interior_fault(const StringTopology& topology, double lambda, std::mt19937_64& rng, bool integral) {
    const int p = topology.N_ps;
    const double count_max = std::max(1.0, std::floor(topology.N_sub() / (2.0 * topology.N_env())));
    auto count = [&](double lo, double hi) {
        const double v = uniform(rng, lo, hi);
        return integral ? std::round(v) : v;
    };
    FaultVector x = FaultVector::zero(p);
    double r_prev = 1.0 / lambda;
    for (int i = 0; i < p; ++i) {
        x.n_s[i] = count(1.0, count_max);
        x.n_c[i] = count(1.0, topology.N_cs - 1.0);
        const double hi = (i == 0) ? 0.9 : 0.9 * lambda * r_prev;
        x.r[i] = uniform(rng, 0.3 * hi, hi);
        r_prev = x.r[i];
    }
    x.N_sc = count(integral ? 0.0 : 0.5, count_max);
    x.R_c = uniform(rng, 0.5, 10.0);
    return x;
}

namespace {
constexpr double kGradcheckKinkMargin = 0.1;  // V
constexpr int kGradcheckMaxRedraws = 1000;
}  // namespace

GradcheckReport run_gradcheck(const RunConfig& cfg, int samples, double rel_tol, double abs_tol, bool corrupt) {
    if (samples < 1) throw ConfigError("gradcheck: samples must be >= 1");
    cfg.validate();
    const ModelContext& ctx = cfg.model;
    const int p = ctx.topology.N_ps;
    const int dim = ctx.topology.fault_dim();
    const Eigen::VectorXd currents = table1_current_grid(ctx.stc, ctx.consts, cfg.G, cfg.T, cfg.points);
    const StringSimulator sim(ctx, currents, cfg.G, cfg.T);

    GradcheckReport rep;
    rep.samples = samples;
    rep.max_rel_error = Eigen::VectorXd::Zero(dim);
    rep.max_abs_error = Eigen::VectorXd::Zero(dim);
    std::mt19937_64 rng(cfg.optimizer.seed);
    for (int s = 0; s < samples; ++s) {
        const FaultVector truth = random_interior_fault(ctx.topology, cfg.region.lambda, rng, true);
        const Eigen::VectorXd measured = oracle_solve(ctx.topology, ctx.stc, ctx.consts, cfg.G, cfg.T, truth, currents);
        // Redraw until every substring pre-activation clears the bypass kink.
        FaultVector x;
        for (int attempt = 0;; ++attempt) {
            if (attempt == kGradcheckMaxRedraws) throw NumericError("gradcheck: no sample clear of the bypass kinks");
            x = random_interior_fault(ctx.topology, cfg.region.lambda, rng, false);
            const VoltageState vs = sim.forward(x, false);
            bool clear = true;
            const Eigen::MatrixXd pre = vs.v_cell * assemble_structural_matrices(ctx.topology, x).q_cell;
            for (int j = 0; j < p + 2 && clear; ++j) {
                if (j == p) continue;  // short-circuited column is identically zero
                clear = pre.col(j).cwiseAbs().minCoeff() >= kGradcheckKinkMargin;
            }
            if (clear) break;
        }
        Eigen::VectorXd analytic = evaluate(sim, x, measured).gradient.to_flat();
        if (corrupt) analytic(2 * p) *= 1.01;

        const Eigen::VectorXd flat = x.to_flat();
        for (int k = 0; k < dim; ++k) {
            const double h = 1e-6 * std::max(std::abs(flat(k)), 1.0);
            Eigen::VectorXd up = flat, dn = flat;
            up(k) += h;
            dn(k) -= h;
            const double lp = loss(sim.forward(FaultVector::from_flat(up, p), false).v, measured).mse;
            const double lm = loss(sim.forward(FaultVector::from_flat(dn, p), false).v, measured).mse;
            const double numeric = (lp - lm) / (2.0 * h);
            const double abs_err = std::abs(analytic(k) - numeric);
            const double rel_err = abs_err / std::max({std::abs(analytic(k)), std::abs(numeric), 1e-300});
            rep.max_abs_error(k) = std::max(rep.max_abs_error(k), abs_err);
            rep.max_rel_error(k) = std::max(rep.max_rel_error(k), rel_err);
            if (rel_err >= rel_tol && abs_err >= abs_tol) ++rep.failures;
        }
    }
    return rep;
}

int cmd_gradcheck(const RunConfig& cfg, int samples, CommandIo io, bool corrupt) {
    if (samples < 1) {
        io.err << "error: samples must be >= 1\n";
        return kExitUsage;
    }
    try {
        const GradcheckReport rep = run_gradcheck(cfg, samples, kGradcheckTolerance, kGradcheckAbsTolerance, corrupt);
        const int p = cfg.model.topology.N_ps;
        auto name = [&](int k) {
            if (k < p) return "n_s[" + std::to_string(k) + "]";
            if (k < 2 * p) return "n_c[" + std::to_string(k - p) + "]";
            if (k < 3 * p) return "r[" + std::to_string(k - 2 * p) + "]";
            return std::string(k == 3 * p ? "N_sc" : "R_c");
        };
        io.out << "component | max_rel_error | max_abs_error\n";
        for (Eigen::Index k = 0; k < rep.max_rel_error.size(); ++k) {
            io.out << name(static_cast<int>(k)) << " | " << format_double(rep.max_rel_error(k)) << " | "
                   << format_double(rep.max_abs_error(k)) << '\n';
        }
        io.out << rep.samples << " samples, " << rep.failures << " component(s) above tolerance\n";
        return rep.failures == 0 ? kExitOk : kExitCheckFailed;
    } catch (const ConfigError& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        io.err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace pvdiag
