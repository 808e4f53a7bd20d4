#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <algorithm>
#include <random>

#include "pvdiag/curve_io.hpp"
#include "pvdiag/errors.hpp"
#include "pvdiag/oracle.hpp"
#include "support.hpp"

using namespace pvdiag;

namespace {
IVCurve healthy(Eigen::Index n) {
    const auto ctx = pvtest::tsm240();
    IVCurve c;
    c.current = table1_current_grid(ctx.stc, ctx.consts, 1000.0, 298.15, n);
    c.voltage = oracle_solve(ctx.topology, ctx.stc, ctx.consts, 1000.0, 298.15, FaultVector::zero(2), c.current);
    c.source = CurveSource::Synthetic;
    return c;
}

// Healthy curve sampled uniformly in voltage, as a tracer sweeping V would.
IVCurve healthy_voltage_sweep(Eigen::Index n) {
    const IVCurve dense = healthy(20000);  // voltage decreasing along the current grid
    IVCurve c;
    c.voltage = Eigen::VectorXd::LinSpaced(n, 0.0, dense.voltage(0) * 0.999);
    c.current.resize(n);
    Eigen::Index j = dense.size() - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        while (j > 0 && dense.voltage(j - 1) < c.voltage(i)) --j;
        const Eigen::Index a = std::max<Eigen::Index>(j - 1, 0);
        const double span = dense.voltage(a) - dense.voltage(j);
        const double w = span > 0 ? (c.voltage(i) - dense.voltage(j)) / span : 0.0;
        c.current(i) = dense.current(j) + w * (dense.current(a) - dense.current(j));
    }
    return c;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}
}  // namespace

TEST_CASE("save and load round trip bit for bit") {
    const auto dir = pvtest::scratch_dir("curve_rt");
    IVCurve c = healthy(50);
    c.G = 812.5;
    c.T = 311.3;
    c.voltage(3) = 0.1 + 0.2;  // not representable in short decimal
    c.label = FaultVector{{3, 0}, {20, 0}, {0.8, 0}, 3, 5};
    save_curve(c, dir / "c.csv");
    CHECK(std::filesystem::exists(label_path(dir / "c.csv")));
    const IVCurve back = load_curve(dir / "c.csv");
    CHECK(back == c);
}

TEST_CASE("format_double is shortest round trip") {
    for (double v : {0.1, 1.0 / 3.0, 484.9, 1e-300, -2.5e17, 0.0}) CHECK(parse_double(format_double(v)) == v);
    CHECK(format_double(0.1) == "0.1");
    CHECK_THROWS_AS(parse_double("1.0x"), DomainError);
    CHECK_THROWS_AS(parse_double(""), DomainError);
}

TEST_CASE("loader drops non-finite rows and reports them") {
    const auto dir = pvtest::scratch_dir("curve_nan");
    write_text(dir / "c.csv", "# G=1000 T=298.15 source=measured preprocessed=0\nvoltage_V,current_A\n"
                              "10,1\nnan,2\n5,inf\n1,3\n");
    LoadDiagnostics diag;
    const IVCurve c = load_curve(dir / "c.csv", &diag);
    CHECK(c.size() == 2);
    CHECK(diag.dropped_rows == 2);
    CHECK_FALSE(diag.warnings.empty());
}

TEST_CASE("loader errors carry line numbers") {
    const auto dir = pvtest::scratch_dir("curve_bad");
    write_text(dir / "neg.csv", "# G=1000 T=298.15\nvoltage_V,current_A\n10,1\n5,-1\n");
    try {
        (void)load_curve(dir / "neg.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
    write_text(dir / "empty.csv", "# G=1000 T=298.15\nvoltage_V,current_A\n");
    CHECK_THROWS_AS(load_curve(dir / "empty.csv"), ParseError);
    write_text(dir / "junk.csv", "# G=1000 T=298.15\nvoltage_V,current_A\n1,abc\n");
    CHECK_THROWS_AS(load_curve(dir / "junk.csv"), ParseError);
    write_text(dir / "nohdr.csv", "# G=1000 T=298.15\n1,2\n");
    CHECK_THROWS_AS(load_curve(dir / "nohdr.csv"), ParseError);
    CHECK_THROWS_AS(load_curve(dir / "missing.csv"), ParseError);
}

TEST_CASE("non-monotone voltage is flagged, not rejected") {
    const auto dir = pvtest::scratch_dir("curve_nm");
    write_text(dir / "c.csv", "# G=1000 T=298.15\nvoltage_V,current_A\n1,3\n10,1\n5,2\n");
    LoadDiagnostics diag;
    const IVCurve c = load_curve(dir / "c.csv", &diag);
    CHECK(c.size() == 3);
    CHECK(diag.non_monotone_voltage);
}

TEST_CASE("curve validation") {
    IVCurve c = healthy(20);
    CHECK_NOTHROW(validate_curve(c));
    IVCurve short_curve = healthy(9);
    CHECK_THROWS_AS(validate_curve(short_curve), DomainError);
    c.G = 0.0;
    CHECK_THROWS_AS(validate_curve(c), DomainError);
}

TEST_CASE("preprocess sorts by voltage and is idempotent") {
    IVCurve c = healthy(100);
    std::mt19937_64 rng(5);
    std::vector<Eigen::Index> order(100);
    for (Eigen::Index i = 0; i < 100; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    IVCurve shuffled = c;
    for (Eigen::Index i = 0; i < 100; ++i) {
        shuffled.voltage(i) = c.voltage(order[i]);
        shuffled.current(i) = c.current(order[i]);
    }
    const IVCurve once = preprocess(shuffled, {});
    CHECK(once.preprocessed);
    CHECK(once.size() == 100);
    for (Eigen::Index i = 1; i < once.size(); ++i) CHECK(once.voltage(i) >= once.voltage(i - 1));
    CHECK(preprocess(once, {}) == once);
}

TEST_CASE("preprocess removes a current outlier") {
    IVCurve c = healthy(100);
    c.current(40) += 3.0;
    const IVCurve out = preprocess(c, {});
    CHECK(out.size() == 99);
    CHECK_FALSE((out.current.array() == c.current(40)).any());
}

TEST_CASE("flat-region thinning keeps about the requested share") {
    const IVCurve c = healthy_voltage_sweep(500);
    const IVCurve sorted = preprocess(c, {});
    const auto before = flat_region_indices(sorted, 0.01).size();
    REQUIRE(before > 50);
    PreprocessConfig cfg;
    cfg.downsample_keep_ratio = 0.25;
    const IVCurve thinned = preprocess(c, cfg);
    const auto after = flat_region_indices(thinned, 0.01).size();
    CHECK(std::abs(static_cast<double>(after) - 0.25 * static_cast<double>(before)) <= 1.0);
    CHECK(thinned.size() == sorted.size() - static_cast<Eigen::Index>(before - after));
}

TEST_CASE("preprocess resamples and refuses tiny results") {
    PreprocessConfig cfg;
    cfg.target_N = 40;
    CHECK(preprocess(healthy(200), cfg).size() == 40);
    IVCurve tiny = healthy(11);
    tiny.current(2) += 50.0;
    tiny.current(8) += 50.0;
    CHECK_THROWS_AS(preprocess(tiny, {}), PreprocessError);
    PreprocessConfig bad;
    bad.downsample_keep_ratio = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("trajectory files round trip") {
    const auto dir = pvtest::scratch_dir("traj");
    const std::vector<double> v{3.5, 1.0 / 3.0, 1e-9};
    save_trajectory(v, "loss", dir / "t.csv");
    CHECK(load_trajectory(dir / "t.csv") == v);
}

TEST_CASE("label sidecar round trip") {
    const auto dir = pvtest::scratch_dir("label");
    const FaultVector x{{3, 6}, {20, 20}, {0.8, 0.4}, 3, 5};
    save_label(x, dir / "l.json");
    CHECK(load_label(dir / "l.json") == x);
    write_text(dir / "bad.json", "{\"n_s\": [1], \"n_c\": [1, 2], \"r\": [0.1], \"N_sc\": 0, \"R_c\": 0}");
    CHECK_THROWS_AS(load_label(dir / "bad.json"), ParseError);
}
