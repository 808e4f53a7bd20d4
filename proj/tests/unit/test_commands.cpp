#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "pvdiag/commands.hpp"
#include "pvdiag/curve_io.hpp"
#include "pvdiag/oracle.hpp"
#include "support.hpp"

using Catch::Matchers::WithinRel;
using namespace pvdiag;

namespace {
int run_cli(const std::string& args, const std::filesystem::path& dir) {
    const std::string cmd = "cd '" + dir.string() + "' && '" PVDIAG_CLI "' " + args + " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}
}  // namespace

TEST_CASE("simulate writes a curve with a knee") {
    const auto dir = pvtest::scratch_dir("cli_sim");
    REQUIRE(run_cli("simulate --ns 3 --nc 20 --r 0.8 --out c.csv", dir) == 0);
    const IVCurve c = load_curve(dir / "c.csv");
    REQUIRE(c.size() == 200);
    // the shaded substrings switch to bypass: dV/dI has a local extreme away from the ends
    int sign_changes = 0;
    for (Eigen::Index i = 2; i < c.size(); ++i) {
        const double s1 = (c.voltage(i - 1) - c.voltage(i - 2)) - (c.voltage(i) - c.voltage(i - 1));
        if (i > 2) {
            const double s0 = (c.voltage(i - 2) - c.voltage(i - 3)) - (c.voltage(i - 1) - c.voltage(i - 2));
            if ((s0 > 1e-6 && s1 < -1e-6) || (s0 < -1e-6 && s1 > 1e-6)) ++sign_changes;
        }
    }
    CHECK(sign_changes >= 1);
}

TEST_CASE("healthy simulate anchors on the datasheet") {
    const auto dir = pvtest::scratch_dir("cli_healthy");
    REQUIRE(run_cli("simulate --oracle --out h.csv", dir) == 0);
    const IVCurve c = load_curve(dir / "h.csv");
    CHECK_THAT(c.voltage(0), WithinRel(13 * 37.3, 0.02));
}

TEST_CASE("simulate rejects out-of-range faults with a usage error") {
    const auto dir = pvtest::scratch_dir("cli_bad");
    CHECK(run_cli("simulate --ns 3 --nc 20 --r 1.5 --out c.csv", dir) == 2);
    CHECK(run_cli("simulate --ns 30,30 --nc 20,20 --r 0.5,0.2 --out c.csv", dir) == 2);
    CHECK(run_cli("frobnicate", dir) == 2);
    CHECK(run_cli("identify missing.csv", dir) == 2);
}

TEST_CASE("identify recovers a shadow with six shorted diodes") {
    const auto dir = pvtest::scratch_dir("cli_identify");
    REQUIRE(run_cli("simulate --oracle --ns 6 --nc 20 --r 0.8 --nsc 6 --rc 5 --out c.csv", dir) == 0);
    REQUIRE(run_cli("identify c.csv --out rep.txt", dir) == 0);
    const std::string rep = slurp(dir / "rep.txt");
    CHECK(rep.find("n_s=[6,0]") != std::string::npos);
    CHECK(rep.find("N_sc=6") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "rep_loss.csv"));
    CHECK(std::filesystem::exists(dir / "rep_grad_norm.csv"));
    CHECK(load_trajectory(dir / "rep_loss.csv").size() == 1000);
    // the report is a valid config for a rerun
    REQUIRE(run_cli("identify c.csv --config rep.txt --out rep2.txt", dir) == 0);
    CHECK(slurp(dir / "rep2.txt") == rep);
}

TEST_CASE("identify rejects a curve that is too short") {
    const auto dir = pvtest::scratch_dir("cli_short");
    std::ofstream(dir / "s.csv") << "# G=1000 T=298.15\nvoltage_V,current_A\n400,1\n300,5\n";
    CHECK(run_cli("identify s.csv --out r.txt", dir) == 2);
}

TEST_CASE("gradcheck exit codes") {
    const auto dir = pvtest::scratch_dir("cli_gc");
    CHECK(run_cli("gradcheck --samples 50", dir) == 0);
    CHECK(run_cli("gradcheck --samples 0", dir) == 2);
    CHECK(run_cli("gradcheck --samples 5 --corrupt-gradient", dir) == 1);
}

TEST_CASE("suite command writes curves and a manifest") {
    const auto dir = pvtest::scratch_dir("cli_suite");
    REQUIRE(run_cli("suite --out s", dir) == 0);
    CHECK(std::filesystem::exists(dir / "s" / "manifest.json"));
    const IVCurve c = load_curve(dir / "s" / "curve_031.csv");
    REQUIRE(c.label.has_value());
    CHECK(*c.label == table1_labels()[31]);
}

TEST_CASE("short benchmark is reproducible") {
    RunConfig cfg = default_run_config();
    cfg.optimizer.iterations = 5;
    cfg.benchmark_optimizers = {OptimizerKind::Adam, OptimizerKind::Adahessian};
    const auto dir = pvtest::scratch_dir("bench");
    std::ostringstream out, err;
    REQUIRE(cmd_benchmark(cfg, dir / "a", {out, err}) == 0);
    REQUIRE(cmd_benchmark(cfg, dir / "b", {out, err}) == 0);
    CHECK(slurp(dir / "a" / "summary.txt") == slurp(dir / "b" / "summary.txt"));
    CHECK(slurp(dir / "a" / "report.txt") == slurp(dir / "b" / "report.txt"));
    CHECK(load_trajectory(dir / "a" / "adam_loss.csv").size() == 5);
    CHECK(std::filesystem::exists(dir / "a" / "adahessian_grad_norm.csv"));
    CHECK(slurp(dir / "a" / "summary.txt").find("Adahessian") != std::string::npos);
}

TEST_CASE("benchmark rows do not depend on the worker count") {
    RunConfig cfg = default_run_config();
    cfg.optimizer.iterations = 5;
    const auto ctx = pvtest::tsm240();
    auto suite = generate_table1_suite(ctx.topology, ctx.stc, ctx.consts);
    suite.resize(6);
    std::ostringstream log;
    cfg.threads = 1;
    const BenchmarkRow one = run_benchmark_row(suite, cfg, OptimizerKind::Adahessian, log);
    cfg.threads = 3;
    const BenchmarkRow three = run_benchmark_row(suite, cfg, OptimizerKind::Adahessian, log);
    CHECK(one.mean_final_loss == three.mean_final_loss);
    CHECK(one.mean_loss_curve == three.mean_loss_curve);
    CHECK(one.runs == 6);
}
