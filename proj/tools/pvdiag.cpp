// Command-line front end: simulate, identify, benchmark, gradcheck, suite.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pvdiag/commands.hpp"
#include "pvdiag/config.hpp"
#include "pvdiag/errors.hpp"
#include "pvdiag/report.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out;
    std::string optimizer;
    std::optional<int> iters;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise_sigma;
};

void add_common(CLI::App* cmd, CommonFlags& f, const std::string& out_help) {
    cmd->add_option("--config", f.config_path, "key = value config file (a run report also works)");
    cmd->add_option("--out", f.out, out_help);
    cmd->add_option("--optimizer", f.optimizer, "Adahessian, Adam, Adamax, AdamW, AdaGrad or RMSProp");
    cmd->add_option("--iters", f.iters, "iteration count M");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--noise-sigma", f.noise_sigma, "voltage noise of the synthetic suite (V)");
}

pvdiag::RunConfig resolve(const CommonFlags& f) {
    pvdiag::RunConfig cfg = pvdiag::default_run_config();
    if (!f.config_path.empty()) pvdiag::apply_config_file(cfg, f.config_path);
    pvdiag::apply_env_overrides(cfg);
    if (!f.optimizer.empty()) cfg.optimizer.kind = pvdiag::parse_optimizer_kind(f.optimizer);
    if (f.iters) cfg.optimizer.iterations = *f.iters;
    if (f.seed) cfg.optimizer.seed = *f.seed;
    if (f.noise_sigma) cfg.noise_sigma = *f.noise_sigma;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PV string fault identification from I-V curves"};
    app.set_version_flag("--version", pvdiag::version_string());
    app.require_subcommand(1);

    CommonFlags sim_flags, id_flags, bench_flags, grad_flags, suite_flags;

    auto* sim = app.add_subcommand("simulate", "write a synthetic I-V curve for a fault vector");
    add_common(sim, sim_flags, "output CSV path");
    bool use_oracle = false;
    std::vector<double> ns, nc, r;
    double nsc = 0.0, rc = 0.0;
    sim->add_flag("--oracle", use_oracle, "use the bisection reference solver");
    sim->add_option("--ns", ns, "substrings covered by each shadow")->delimiter(',');
    sim->add_option("--nc", nc, "shaded cells per covered substring, per shadow")->delimiter(',');
    sim->add_option("--r", r, "shading ratio of each shadow")->delimiter(',');
    sim->add_option("--nsc", nsc, "short-circuited substrings");
    sim->add_option("--rc", rc, "added series resistance (ohm)");

    auto* ident = app.add_subcommand("identify", "identify faults from a measured curve");
    add_common(ident, id_flags, "report path");
    std::string curve_path;
    ident->add_option("curve", curve_path, "curve CSV")->required();

    auto* bench = app.add_subcommand("benchmark", "run every optimizer on the 150-curve synthetic suite");
    add_common(bench, bench_flags, "output directory");

    auto* grad = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
    add_common(grad, grad_flags, "unused");
    int samples = 50;
    bool corrupt = false;
    grad->add_option("--samples", samples, "number of random fault vectors");
    grad->add_flag("--corrupt-gradient", corrupt)->group("");

    auto* suite = app.add_subcommand("suite", "write the 150-curve synthetic suite with labels");
    add_common(suite, suite_flags, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? pvdiag::kExitOk : pvdiag::kExitUsage;
    }

    const pvdiag::CommandIo io{std::cout, std::cerr};
    auto config_for = [&](const CommonFlags& f) -> std::optional<pvdiag::RunConfig> {
        try {
            return resolve(f);
        } catch (const pvdiag::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return std::nullopt;
        }
    };

    if (sim->parsed()) {
        const auto cfg = config_for(sim_flags);
        if (!cfg) return pvdiag::kExitUsage;
        const int p = cfg->model.topology.N_ps;
        if (static_cast<int>(ns.size()) > p || static_cast<int>(nc.size()) > p || static_cast<int>(r.size()) > p) {
            std::cerr << "error: at most " << p << " shadows\n";
            return pvdiag::kExitUsage;
        }
        pvdiag::FaultVector x = pvdiag::FaultVector::zero(p);
        std::copy(ns.begin(), ns.end(), x.n_s.begin());
        std::copy(nc.begin(), nc.end(), x.n_c.begin());
        std::copy(r.begin(), r.end(), x.r.begin());
        x.N_sc = nsc;
        x.R_c = rc;
        return pvdiag::cmd_simulate(*cfg, x, sim_flags.out.empty() ? "curve.csv" : sim_flags.out, use_oracle, io);
    }
    if (ident->parsed()) {
        const auto cfg = config_for(id_flags);
        if (!cfg) return pvdiag::kExitUsage;
        return pvdiag::cmd_identify(curve_path, *cfg, id_flags.out.empty() ? "report.txt" : id_flags.out, io);
    }
    if (bench->parsed()) {
        const auto cfg = config_for(bench_flags);
        if (!cfg) return pvdiag::kExitUsage;
        return pvdiag::cmd_benchmark(*cfg, bench_flags.out.empty() ? "benchmark" : bench_flags.out, io);
    }
    if (grad->parsed()) {
        const auto cfg = config_for(grad_flags);
        if (!cfg) return pvdiag::kExitUsage;
        return pvdiag::cmd_gradcheck(*cfg, samples, io, corrupt);
    }
    if (suite->parsed()) {
        const auto cfg = config_for(suite_flags);
        if (!cfg) return pvdiag::kExitUsage;
        return pvdiag::cmd_suite(*cfg, suite_flags.out.empty() ? "suite" : suite_flags.out, io);
    }
    return pvdiag::kExitUsage;
}
