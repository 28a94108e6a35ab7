#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "nplab/estimators.hpp"
#include "nplab/evolution.hpp"

using namespace nplab;
using namespace nplab::estimators;
using geometry::CubeVariant;
using geometry::ParabolicCube;
using geometry::Point;
using geometry::make_point;
using gridfn::GridFunction;
using gridfn::LatticeSpec;
using gridfn::ScalarField;

namespace {
LatticeSpec traj_lattice(double h, double sigma, double T = 1.0) {
    return LatticeSpec::make(1, h, h, 2.0, 0.0, T, sigma);
}
} // namespace

TEST_CASE("decay fit") {
    const double sigma = 1.5;
    const auto lat = traj_lattice(1.0 / 64.0, sigma);
    const auto region = geometry::cube_forward_Q(1.0, sigma, 1, 0.0);
    SUBCASE("all-zero measures degenerate cleanly") {
        const auto u = gridfn::sample(gridfn::constant_field(0.5), lat);
        const auto fit = decay_fit(u, region, {2, 4, 8});
        CHECK(fit.degenerate);
    }
    SUBCASE("|x|^{-1/2} level sets follow the analytic exponent 2") {
        const auto fine = traj_lattice(1.0 / 128.0, sigma);
        const auto u = gridfn::sample(
            [](std::span<const double> x, double) {
                return std::min(std::pow(std::max(std::fabs(x[0]), 1e-6), -0.5), 1e3);
            },
            fine, 1e3);
        // |{|x|^{-1/2} > s}| = 2 s^{-2} inside B_1 for s > 1
        const auto fit = decay_fit(u, region, {1.2, 1.5, 2, 3, 4});
        CHECK_FALSE(fit.degenerate);
        CHECK(fit.eps_star_fit == doctest::Approx(2.0).epsilon(0.10));
        CHECK(fit.r_squared > 0.98);
    }
    SUBCASE("scaling u -> c u shifts C by c^{eps*} and keeps the exponent") {
        const auto base = [](std::span<const double> x, double) {
            return std::min(std::pow(std::max(std::fabs(x[0]), 1e-6), -0.5), 1e3);
        };
        const auto u = gridfn::sample(base, lat, 1e3);
        const auto u3 = gridfn::sample(
            [base](std::span<const double> x, double t) { return 3.0 * base(x, t); }, lat, 3e3);
        const std::vector<double> sg{3, 4.5, 6, 9, 12};
        const auto f1 = decay_fit(u, region, sg);
        const auto f3 = decay_fit(u3, region, sg);
        CHECK(f3.eps_star_fit == doctest::Approx(f1.eps_star_fit).epsilon(0.06));
        CHECK(f3.C_fit == doctest::Approx(f1.C_fit * std::pow(3.0, f1.eps_star_fit)).epsilon(0.25));
    }
    SUBCASE("preconditions") {
        const auto u = gridfn::sample(gridfn::constant_field(-1.0), lat);
        CHECK_THROWS(decay_fit(u, region, {1, 2}));
        const auto v = gridfn::sample(gridfn::constant_field(1.0), lat);
        CHECK_THROWS(decay_fit(v, region, {2, 1}));
        CHECK_THROWS(decay_fit(v, region, {-1, 2}));
    }
}

TEST_CASE("weak Harnack check") {
    const double sigma = 1.5;
    const auto lat = traj_lattice(1.0 / 32.0, sigma);
    SUBCASE("constant function: left side vanishes above the constant") {
        const auto u = gridfn::sample(gridfn::constant_field(1.0), lat);
        const auto res = weak_harnack_check(u, make_point({0.0}, 0.25), 0.5, 0.0, 1.0, 0.5, {2, 4, 8});
        CHECK(res.pass);
    }
    SUBCASE("increasing c0 only loosens the bound") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double) { return 1.0 / (0.1 + x[0] * x[0]); }, lat, 10.0);
        const auto r1 = weak_harnack_check(u, make_point({0.0}, 0.25), 0.5, 0.5, 1.0, 0.5, {2, 4, 8, 16});
        const auto r2 = weak_harnack_check(u, make_point({0.0}, 0.25), 0.5, 1.0, 1.0, 0.5, {2, 4, 8, 16});
        CHECK(r2.worst_margin >= r1.worst_margin - 1e-12);
    }
}

TEST_CASE("harnack quotient") {
    const double sigma = 1.5;
    const auto lat = traj_lattice(1.0 / 32.0, sigma, 1.5);
    SUBCASE("constant solution gives exactly 1 at c0 = 0") {
        const auto u = gridfn::sample(gridfn::constant_field(2.0), lat);
        CHECK(harnack_quotient(u, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("invariant under scaling when c0 = 0") {
        const auto f = [](std::span<const double> x, double t) {
            return 1.0 + 0.5 * std::sin(3 * x[0]) * std::exp(-t);
        };
        const auto u = gridfn::sample(f, lat, 2.0);
        const auto u5 = gridfn::sample(
            [f](std::span<const double> x, double t) { return 5.0 * f(x, t); }, lat, 10.0);
        CHECK(harnack_quotient(u5, 0.0) == doctest::Approx(harnack_quotient(u, 0.0)).epsilon(1e-12));
    }
    SUBCASE("cubes outside the trajectory rejected") {
        const auto shortlat = traj_lattice(1.0 / 32.0, sigma, 0.5);
        const auto u = gridfn::sample(gridfn::constant_field(1.0), shortlat);
        CHECK_THROWS(harnack_quotient(u, 0.0)); // rQ+_{1/2} ends at 4 (1/2)^sigma > 0.5
    }
}

TEST_CASE("holder fit") {
    const double sigma = 1.5;
    const auto lat = traj_lattice(1.0 / 128.0, sigma);
    const Point pt = make_point({0.0}, 0.5);
    SUBCASE("constant: flagged exact with capped alpha") {
        const auto u = gridfn::sample(gridfn::constant_field(1.0), lat);
        const auto fit = holder_fit(u, pt, 5, 1, 0.25, 2.0);
        CHECK(fit.exact);
        CHECK(fit.alpha_fit == 2.0);
    }
    SUBCASE("|x|^{1/2} has exponent 1/2") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double) { return std::sqrt(std::fabs(x[0])); }, lat, 2.0);
        const auto fit = holder_fit(u, pt, 5, 1, 0.25);
        CHECK(fit.alpha_fit == doctest::Approx(0.5).epsilon(0.1));
    }
    SUBCASE("fewer than 3 usable scales throws") {
        const auto coarse = traj_lattice(1.0 / 8.0, sigma);
        const auto u = gridfn::sample(gridfn::constant_field(0.0), coarse);
        CHECK_THROWS(holder_fit(u, pt, 3, 1, 0.3));
    }
}

TEST_CASE("c1alpha fit") {
    const double sigma = 1.5;
    const auto lat = traj_lattice(1.0 / 128.0, sigma);
    const Point pt = make_point({0.0}, 0.5);
    SUBCASE("gated off for L0 kernels") {
        const auto u = gridfn::sample(gridfn::constant_field(0.0), lat);
        const auto res = c1alpha_fit(u, kernels::KernelClass::L0, {1.0 / 32.0}, pt, 4);
        CHECK_FALSE(res.available);
        CHECK_FALSE(res.reason.empty());
    }
    SUBCASE("affine functions are flagged exact") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double) { return 2.0 * x[0] + 1.0; }, lat, 10.0);
        const auto res = c1alpha_fit(u, kernels::KernelClass::L1, {1.0 / 32.0, 1.0 / 16.0}, pt, 4);
        CHECK(res.available);
        CHECK(res.exact);
    }
    SUBCASE("|x|^{1.5}: difference quotients scale like beta = 0.5") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double) { return std::pow(std::fabs(x[0]), 1.5); }, lat, 8.0);
        const auto res = c1alpha_fit(u, kernels::KernelClass::L1, {1.0 / 64.0, 1.0 / 32.0}, pt, 5);
        CHECK(res.available);
        CHECK(res.exponent == doctest::Approx(0.5).epsilon(0.3));
    }
    SUBCASE("h beyond the margin rejected") {
        const auto u = gridfn::sample(gridfn::constant_field(0.0), lat);
        CHECK_THROWS(c1alpha_fit(u, kernels::KernelClass::L1, {1.5}, pt, 4));
    }
}

TEST_CASE("paraboloid classification") {
    const double sigma = 1.5;
    const auto lat = traj_lattice(1.0 / 32.0, sigma);
    const auto k1 = geometry::cube_box_forward(0.5, sigma, make_point({0.0}, 0.25));
    const auto domain = geometry::cube_Q(1.0, sigma, make_point({0.0}, 1.0));
    SUBCASE("parabolic convex paraboloid of opening 1: every node is good for h >= 1") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double t) { return 0.5 * x[0] * x[0] - t; }, lat, 10.0);
        for (double h : {1.0, 2.0}) {
            const auto masks = paraboloid_classify(u, h, k1, domain);
            CHECK(masks.bad_count == 0);
            CHECK(masks.good_count > 0);
        }
    }
    SUBCASE("masks partition K_1 and are monotone in the aperture") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        const double a = U(rng), b = 2.0 + U(rng);
        const auto u = gridfn::sample(
            [a, b](std::span<const double> x, double t) {
                return a * std::sin(b * x[0]) * std::exp(-t) + 0.2 * std::cos(5 * x[0]);
            },
            lat, 3.0);
        const auto m1 = paraboloid_classify(u, 0.5, k1, domain);
        const auto m2 = paraboloid_classify(u, 2.0, k1, domain);
        const auto m3 = paraboloid_classify(u, 8.0, k1, domain);
        // partition
        std::size_t region_nodes = 0;
        for (int j : gridfn::slices_in_region(lat, k1))
            region_nodes += gridfn::nodes_in_region(lat, k1, j).size();
        CHECK(m1.good_count + m1.bad_count == int(region_nodes));
        // monotone: good sets grow with h (node-wise)
        REQUIRE(m1.good.size() == m2.good.size());
        for (std::size_t i = 0; i < m1.good.size(); ++i) {
            if (m1.good[i]) CHECK(m2.good[i]);
            if (m2.good[i]) CHECK(m3.good[i]);
        }
    }
    SUBCASE("bad-set measure helper is consistent with the masks") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double t) { return std::cos(4 * x[0]) * (1 - t); }, lat, 2.0);
        const auto masks = paraboloid_classify(u, 1.0, k1, domain);
        CHECK(bad_set_measure(u, 1.0, k1, domain) == doctest::Approx(masks.bad_measure()));
    }
}

TEST_CASE("decay iteration shape check on a supersolution run") {
    // |B^u_{M^{beta k}} cap K-_{r0}| dominated by a geometric sequence fitted
    // on the first two terms (k <= 4)
    const double sigma = 1.5, r0 = 1.0 / 9.0;
    evolution::EvolutionProblem prob;
    prob.op = evolution::OperatorKind::pucci_minus;
    prob.sigma = sigma;
    prob.lambda = 1.0;
    prob.Lambda = 2.0;
    prob.n = 1;
    prob.h_x = 1.0 / 32.0;
    prob.extent = 2.0;
    prob.R_out = 1.0;
    prob.domain_radius = 2.0;
    prob.horizon = 0.6;
    prob.initial = [](std::span<const double> x, double) {
        return 1.5 * std::exp(-8.0 * (x[0] - 0.4) * (x[0] - 0.4)) +
               0.8 * std::exp(-12.0 * (x[0] + 0.6) * (x[0] + 0.6));
    };
    prob.exterior = gridfn::constant_field(0.0);
    const auto tables = evolution::build_operator_tables(prob);
    const double dt = evolution::cfl_timestep(tables, 0.9);
    prob.store_stride = std::max(1, int(std::floor(2e-3 / dt)));
    const auto traj = evolution::solve(prob);
    // normalize: inf over K+_{3 r0} = 1
    const auto kplus = geometry::cube_K_plus3(r0, sigma, make_point({0.0}, 0.0));
    const double q = gridfn::extremum(traj.states, kplus, gridfn::Extremum::inf).value;
    REQUIRE(q > 0.0);
    std::vector<double> vals = traj.states.values();
    for (double& v : vals) v /= q;
    const GridFunction u(traj.states.lattice(), std::move(vals), gridfn::constant_field(0.0), 0.0);

    const auto kminus = geometry::cube_box_forward(r0, sigma, make_point({0.0}, 0.0));
    const auto domain = geometry::cube_Q(1.0, sigma, make_point({0.0}, u.lattice().t1));
    const double M = 4.0, beta = 1.0;
    std::vector<double> b;
    for (int k = 1; k <= 4; ++k) b.push_back(bad_set_measure(u, std::pow(M, beta * k), kminus, domain));
    if (b[0] > 0.0 && b[1] > 0.0) {
        const double ratio = b[1] / b[0];
        CHECK(ratio <= 1.0 + 1e-12);
        for (int k = 2; k < 4; ++k) CHECK(b[k] <= b[0] * std::pow(ratio, k) * (1.0 + 1e-9) + 1e-12);
    } else {
        CHECK(b[3] <= b[0] + 1e-12); // trivially decayed
    }
}

TEST_CASE("regularity report serialization") {
    RegularityReport rep;
    rep.alpha_fit = 0.4;
    rep.c1alpha = 0.3;
    rep.harnack_quotient = 2.5;
    rep.weak_harnack_pass = true;
    rep.decay_C = 0.6;
    rep.decay_eps_star = 2.7;
    rep.decay_r2 = 0.98;
    const auto js = rep.to_json();
    CHECK(js.find("alpha_fit") != std::string::npos);
    CHECK(js.find("harnack_quotient") != std::string::npos);
    RegularityReport none;
    CHECK(none.to_json().find("null") != std::string::npos); // absent c1alpha
}

TEST_CASE("checkerboard run: oscillation ratios non-increasing across scales") {
    evolution::EvolutionProblem prob;
    prob.op = evolution::OperatorKind::linear;
    prob.sigma = 1.5;
    prob.n = 1;
    prob.h_x = 1.0 / 128.0;
    prob.extent = 2.0;
    prob.R_out = 1.0;
    prob.domain_radius = 2.0;
    prob.horizon = 0.35;
    prob.initial = [](std::span<const double> x, double) {
        return std::sin(2.0 * M_PI * (x[0] - 0.06) / 0.5) >= 0.0 ? 1.0 : -1.0;
    };
    prob.exterior = gridfn::constant_field(0.0);
    const auto tables = evolution::build_operator_tables(prob);
    const double dt = evolution::cfl_timestep(tables, 0.9);
    prob.store_stride = std::max(1, int(5e-4 / dt));
    const auto traj = evolution::solve(prob);
    const auto fit = estimators::holder_fit(traj.states, make_point({0.0}, 0.2), 6, 1, 0.25);
    REQUIRE(fit.ratios.size() >= 3);
    for (std::size_t k = 0; k + 1 < fit.ratios.size(); ++k)
        CHECK(fit.ratios[k + 1] <= fit.ratios[k] + 0.02);
    CHECK(fit.alpha_fit > 0.0);
}

TEST_CASE("weak Harnack: calibrate on half the family, verify on the other half") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<GridFunction> runs;
    for (int i = 0; i < 6; ++i) {
        evolution::EvolutionProblem prob;
        prob.op = evolution::OperatorKind::linear;
        prob.sigma = 1.5;
        prob.n = 1;
        prob.h_x = 1.0 / 32.0;
        prob.extent = 2.0;
        prob.R_out = 1.0;
        prob.domain_radius = 2.0;
        prob.horizon = 0.75;
        const double amp = 0.8 + 0.4 * U(rng), ctr = -0.4 + 0.8 * U(rng), w = 0.3 + 0.2 * U(rng);
        prob.initial = [amp, ctr, w](std::span<const double> x, double) {
            const double d = (x[0] - ctr) / w;
            return 0.05 + amp * std::exp(-d * d);
        };
        prob.exterior = gridfn::constant_field(0.05);
        const auto tables = evolution::build_operator_tables(prob);
        const double dt = evolution::cfl_timestep(tables, 0.9);
        prob.store_stride = std::max(1, int(2e-3 / dt));
        runs.push_back(evolution::solve(prob).states);
    }
    const double r = 0.5, c0 = 0.05, eps_star = 1.0;
    const Point center = make_point({0.0}, 0.125); // lattice time at h_t multiples
    const std::vector<double> s_grid{0.1, 0.2, 0.4, 0.8};
    // snap center time to the stored grid
    auto snap_center = [&](const GridFunction& u) {
        Point c = center;
        const auto& lat = u.lattice();
        c.t = lat.slice_time(std::max(1, int(std::round((center.t - lat.t0) / lat.h_t))));
        return c;
    };
    double C = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto& u = runs[i];
        const auto c = snap_center(u);
        const auto res = estimators::weak_harnack_check(u, c, r, c0, 1.0, eps_star, s_grid);
        for (std::size_t k = 0; k < s_grid.size(); ++k)
            if (res.rhs[k] > 0.0) C = std::max(C, res.lhs[k] / res.rhs[k]);
    }
    C *= 1.25;
    REQUIRE(C > 0.0);
    for (int i = 3; i < 6; ++i) {
        const auto& u = runs[i];
        const auto res = estimators::weak_harnack_check(u, snap_center(u), r, c0, C, eps_star, s_grid);
        CHECK(res.pass);
        CHECK(res.worst_margin >= 0.0);
    }
}
