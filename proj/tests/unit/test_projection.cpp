#include <catch_amalgamated.hpp>

#include <random>

#include "pvdiag/errors.hpp"
#include "pvdiag/projection.hpp"

using Catch::Matchers::WithinAbs;
using namespace pvdiag;

namespace {
FeasibleRegion physical_region() { return make_default_region(StringTopology{}).physical(); }

Eigen::VectorXd flat(double ns0, double ns1, double nc0, double nc1, double r0, double r1, double nsc, double rc) {
    Eigen::VectorXd v(8);
    v << ns0, ns1, nc0, nc1, r0, r1, nsc, rc;
    return v;
}
}  // namespace

TEST_CASE("default region bounds") {
    const FeasibleRegion r = make_default_region(StringTopology{});
    CHECK(r.N_sub == 39);
    CHECK(r.upper(0) == 39);
    CHECK(r.upper(2) == 20);
    CHECK(r.upper(4) == 0.999);
    CHECK(r.upper(6) == 39);
    CHECK(r.upper(7) == 50);
    CHECK(r.lower(0) == 0.1);
    CHECK(r.lower(2) == 0.1);
    CHECK(r.lower(4) == 0.0);
    CHECK(r.physical().lower.isZero());
    CHECK_THROWS_AS(make_default_region(StringTopology{}, 0.999, 50, 1.5), ConfigError);
}

TEST_CASE("joint constraint hand example") {
    const Eigen::VectorXd y = project(flat(20, 20, 10, 10, 0.5, 0.3, 5, 0), physical_region());
    CHECK_THAT(y(0), WithinAbs(18.0, 1e-12));
    CHECK_THAT(y(1), WithinAbs(18.0, 1e-12));
    CHECK_THAT(y(6), WithinAbs(3.0, 1e-12));
}

TEST_CASE("monotone ratio hand example") {
    const Eigen::VectorXd y = project(flat(1, 1, 1, 1, 0.5, 0.6, 0, 0), physical_region());
    CHECK_THAT(y(5), WithinAbs(0.45, 1e-15));
    CHECK(y(4) == 0.5);
}

TEST_CASE("box clipping") {
    const Eigen::VectorXd y = project(flat(-1, 3, 25, -2, 1.5, -0.1, -3, 80), physical_region());
    CHECK(y(0) == 0);
    CHECK(y(2) == 20);
    CHECK(y(3) == 0);
    CHECK(y(4) == 0.999);
    CHECK(y(5) == 0);
    CHECK(y(6) == 0);
    CHECK(y(7) == 50);
}

TEST_CASE("projection lands in the region and is idempotent") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-60.0, 60.0), ur(-0.5, 1.5);
    for (const FeasibleRegion& region : {make_default_region(StringTopology{}), physical_region()}) {
        for (int k = 0; k < 2000; ++k) {
            Eigen::VectorXd x(8);
            x << u(rng), u(rng), u(rng), u(rng), ur(rng), ur(rng), u(rng), u(rng);
            const Eigen::VectorXd y = project(x, region);
            CHECK(region.contains(y));
            CHECK((project(y, region) - y).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("points already inside are left alone") {
    const Eigen::VectorXd x = flat(3, 2, 20, 10, 0.8, 0.4, 3, 5);
    CHECK(project(x, physical_region()) == x);
}

TEST_CASE("joint constraint with the shorted count at its bound") {
    // water-filling path: N_sc clipped at zero after the uniform shift
    const Eigen::VectorXd y = project(flat(39, 10, 1, 1, 0.5, 0.1, 1, 0), physical_region());
    CHECK(physical_region().contains(y));
    CHECK(y.head(2).sum() + y(6) <= 39 + 1e-9);
}

TEST_CASE("correction rounds and drops negligible shadows") {
    const FeasibleRegion region = make_default_region(StringTopology{});
    const FaultVector raw{{3.2, 1.1}, {19.6, 4.4}, {0.85, 0.02}, 2.6, 4.9};
    const FaultVector out = correct(raw, region);
    CHECK(out.n_s == std::vector<double>{3, 0});
    CHECK(out.n_c == std::vector<double>{20, 0});
    CHECK(out.r == std::vector<double>{0.85, 0});
    CHECK(out.N_sc == 3);
    CHECK(out.R_c == 4.9);
}

TEST_CASE("correction moves a surviving second shadow into the first slot") {
    const FeasibleRegion region = make_default_region(StringTopology{});
    const FaultVector raw{{0.3, 5.8}, {12.0, 19.7}, {0.7, 0.4}, 0.2, 0.0};
    const FaultVector out = correct(raw, region);
    CHECK(out.n_s == std::vector<double>{6, 0});
    CHECK(out.n_c == std::vector<double>{20, 0});
    CHECK(out.r == std::vector<double>{0.4, 0});
    CHECK(out.N_sc == 0);
}

TEST_CASE("corrected vectors are integral and physically feasible") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 25.0), ur(0.0, 1.0);
    const FeasibleRegion region = make_default_region(StringTopology{});
    for (int k = 0; k < 500; ++k) {
        Eigen::VectorXd x(8);
        x << u(rng), u(rng), u(rng), u(rng), ur(rng), ur(rng), u(rng), u(rng);
        const FaultVector out = correct(FaultVector::from_flat(project(x, region), 2), region);
        const Eigen::VectorXd f = out.to_flat();
        CHECK(region.physical().contains(f));
        for (int i : {0, 1, 2, 3, 6}) CHECK(f(i) == std::round(f(i)));
    }
}
