#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "nplab/envelope.hpp"
#include "nplab/nonlocal.hpp"
#include "oracles.hpp"

using namespace nplab;
using namespace nplab::envelope;
using geometry::CubeVariant;
using geometry::ParabolicCube;
using geometry::make_point;
using gridfn::GridFunction;
using gridfn::LatticeSpec;
using gridfn::ScalarField;

namespace {

// lattice over the past cube Q_2(0,0) with margin
LatticeSpec env_lattice(double h, double sigma) {
    const double t0 = -std::ceil(std::pow(2.0, sigma) / h) * h;
    return LatticeSpec::make(1, h, h, 2.0, t0, 0.0, sigma);
}

ParabolicCube domain_cube(double sigma) { return geometry::cube_Q(1.0, sigma, make_point({0.0}, 0.0)); }

// a bump supported in B_{rho} x (t_b, 0], admissible for the envelope
ScalarField bump_field(double amp, double rho, double ctr, double sigma) {
    const double t_b = -std::pow(0.5, sigma);
    return [amp, rho, ctr, t_b](std::span<const double> x, double t) {
        const double q = std::max(0.0, (rho * rho - (x[0] - ctr) * (x[0] - ctr)) / (rho * rho));
        const double ramp = std::min(1.0, std::max(0.0, (t - t_b) / (-t_b)));
        return amp * q * q * ramp;
    };
}

} // namespace

TEST_CASE("sup-convolution: exact properties") {
    const auto lat = LatticeSpec::make(1, 1.0 / 16.0, 1.0 / 16.0, 2.0, 0.0, 1.0, 1.0);
    SUBCASE("zero function lifts to eps exactly") {
        const auto u = gridfn::sample(gridfn::constant_field(0.0), lat);
        const auto ue = sup_convolution(u, 0.25);
        for (double v : ue.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("dominates u and is monotone in eps; uniform bound on Lipschitz samples") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int trial = 0; trial < 10; ++trial) {
            const double a = U(rng), b = U(rng), c = 0.5 * U(rng), d = 0.5 * U(rng);
            const auto u = gridfn::sample(
                [a, b, c, d](std::span<const double> x, double t) {
                    return a * std::fabs(x[0] - b) + c * x[0] + d * t;
                },
                lat, 10.0);
            double lip = 0.0;
            for (int j = 0; j < lat.num_slices(); ++j)
                for (int n = 0; n + 1 < lat.nodes_per_slice(); ++n)
                    lip = std::max(lip, std::fabs(u.at(j, n + 1) - u.at(j, n)) / lat.h_x);
            for (int j = 0; j + 1 < lat.num_slices(); ++j)
                for (int n = 0; n < lat.nodes_per_slice(); ++n)
                    lip = std::max(lip, std::fabs(u.at(j + 1, n) - u.at(j, n)) / lat.h_t);
            const auto e1 = sup_convolution(u, 0.05);
            const auto e2 = sup_convolution(u, 0.1);
            const auto e3 = sup_convolution(u, 0.2);
            double sup3 = 0.0;
            for (std::size_t i = 0; i < u.values().size(); ++i) {
                CHECK(e3.values()[i] >= u.values()[i]);
                CHECK(e1.values()[i] <= e2.values()[i] + 1e-12);
                CHECK(e2.values()[i] <= e3.values()[i] + 1e-12);
                sup3 = std::max(sup3, e3.values()[i] - u.values()[i]);
            }
            CHECK(sup3 <= 0.2 * (1.0 + lip) + 1e-12);
        }
    }
    SUBCASE("uniform convergence down to u as eps decreases") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double t) { return std::fabs(x[0]) + 0.5 * t; }, lat, 5.0);
        double prev = 1e300;
        for (double eps : {0.2, 0.1, 0.05}) {
            const auto ue = sup_convolution(u, eps);
            double gap = 0.0;
            for (std::size_t i = 0; i < u.values().size(); ++i)
                gap = std::max(gap, ue.values()[i] - u.values()[i]);
            CHECK(gap < prev);
            prev = gap;
        }
    }
}

TEST_CASE("concave envelope: degenerate and structural cases") {
    const double sigma = 1.5;
    const auto lat = env_lattice(1.0 / 32.0, sigma);
    SUBCASE("nonpositive u has zero envelope and empty contact away from touch") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double) { return -1.0 - x[0] * x[0]; }, lat, 2.0);
        const auto env = concave_envelope(u, domain_cube(sigma));
        for (double g : env.gamma) CHECK(g == 0.0);
        for (auto c : env.contact) CHECK(c == 0);
    }
    SUBCASE("precondition violation lists offending nodes") {
        const auto u = gridfn::sample(gridfn::constant_field(1.0), lat, 1.0);
        CHECK_THROWS_WITH_AS(concave_envelope(u, domain_cube(sigma)), doctest::Contains("partial*_p"),
                             std::invalid_argument);
    }
    SUBCASE("envelope fields for a bump: invariants") {
        const auto u = gridfn::sample(bump_field(1.0, 0.3, 0.05, sigma), lat, 1.0);
        const auto env = concave_envelope(u, domain_cube(sigma));
        const int nps = lat.nodes_per_slice();
        // Gamma >= u^+, nondecreasing in t, midpoint concave along lattice lines
        for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
            for (int node = 0; node < nps; ++node) {
                const std::size_t at = sp * nps + node;
                CHECK(env.gamma[at] >= std::max(u.at(env.slices[sp], node), 0.0) - 1e-12);
                if (sp > 0) CHECK(env.gamma[at] >= env.gamma[(sp - 1) * nps + node] - 1e-12);
            }
            for (int node = 1; node + 1 < nps; ++node) {
                const std::size_t at = sp * nps + node;
                double xs[1];
                lat.node_coords(node, xs);
                if (std::fabs(xs[0]) > 2.0 - 2.0 * lat.h_x) continue;
                CHECK(env.gamma[at] >=
                      0.5 * (env.gamma[at - 1] + env.gamma[at + 1]) - 1e-12 * u.scale());
            }
        }
        // the peak node belongs to the contact set
        const auto peak = gridfn::extremum(u, domain_cube(sigma), gridfn::Extremum::sup);
        const int sp = env.pos_of_slice(peak.slice);
        REQUIRE(sp >= 0);
        CHECK(env.contact[std::size_t(sp) * nps + peak.node] == 1);
    }
}

TEST_CASE("concave envelope vs supporting-plane oracle (tent at the final slice)") {
    const double sigma = 1.5;
    const auto lat = env_lattice(1.0 / 32.0, sigma);
    const double t_b = -1e-9; // place the tent only at the very last slice
    const auto tent = [t_b](std::span<const double> x, double t) {
        return t >= t_b ? std::max(0.0, 1.0 - std::fabs(x[0]) / 0.3) : 0.0;
    };
    const auto u = gridfn::sample(tent, lat, 1.0);
    const auto env = concave_envelope(u, domain_cube(sigma));
    const int last = int(env.slices.size()) - 1;
    const int nps = lat.nodes_per_slice();

    std::vector<double> pos, val;
    pos.push_back(-2.0);
    val.push_back(0.0);
    double xs[1];
    std::vector<int> nodes;
    for (int node = 0; node < nps; ++node) {
        lat.node_coords(node, xs);
        if (std::fabs(xs[0]) < 2.0 - 1e-12) {
            pos.push_back(xs[0]);
            val.push_back(std::max(u.at(env.slices[last], node), 0.0));
            nodes.push_back(node);
        }
    }
    pos.push_back(2.0);
    val.push_back(0.0);
    const auto oracle = oracles::hull_oracle(pos, val);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        CHECK(env.gamma[std::size_t(last) * nps + nodes[i]] ==
              doctest::Approx(oracle[i + 1]).epsilon(5e-3));

    // earlier slices: zero (support only at the final time)
    for (int sp = 0; sp + 1 < last; ++sp)
        for (int node = 0; node < nps; ++node) CHECK(env.gamma[std::size_t(sp) * nps + node] == 0.0);
}

TEST_CASE("envelope minimality against admissible comparison surfaces") {
    const double sigma = 1.4;
    const auto lat = env_lattice(1.0 / 32.0, sigma);
    const auto u = gridfn::sample(bump_field(0.8, 0.35, -0.05, sigma), lat, 1.0);
    const auto env = concave_envelope(u, domain_cube(sigma));
    const int nps = lat.nodes_per_slice();
    // v concave in x, nondecreasing in t, v >= u^+, zero boundary at |x| = 2:
    // scaled parabolic caps dominate the bump
    for (double scale : {1.0, 1.3}) {
        for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
            const double t = lat.slice_time(env.slices[sp]);
            const double tb = -std::pow(0.5, sigma);
            const double ramp = std::min(1.0, std::max(0.0, (t - tb) / (-tb)));
            double xs[1];
            for (int node = 0; node < nps; ++node) {
                lat.node_coords(node, xs);
                if (std::fabs(xs[0]) >= 2.0) continue;
                const double v = scale * 0.8 * ramp * (1.0 - (xs[0] * xs[0]) / 4.0);
                // v dominates u^+ by construction; the envelope may not exceed it
                CHECK(env.gamma[sp * std::size_t(nps) + node] <= v + 1e-9);
            }
        }
    }
}

TEST_CASE("Lipschitz transfer and Gamma_t propagation") {
    const double sigma = 1.5;
    const auto lat = env_lattice(1.0 / 32.0, sigma);
    const auto u = gridfn::sample(bump_field(1.0, 0.35, 0.0, sigma), lat, 1.0);
    const auto env = concave_envelope(u, domain_cube(sigma));
    const int nps = lat.nodes_per_slice();

    auto lipschitz = [&](auto&& value_at) {
        double lip = 0.0;
        for (std::size_t sp = 0; sp < env.slices.size(); ++sp)
            for (int node = 0; node + 1 < nps; ++node)
                lip = std::max(lip,
                               std::fabs(value_at(sp, node + 1) - value_at(sp, node)) / lat.h_x);
        for (std::size_t sp = 0; sp + 1 < env.slices.size(); ++sp)
            for (int node = 0; node < nps; ++node)
                lip = std::max(lip,
                               std::fabs(value_at(sp + 1, node) - value_at(sp, node)) / lat.h_t);
        return lip;
    };
    const double lip_u = lipschitz([&](std::size_t sp, int node) { return u.at(env.slices[sp], node); });
    const double lip_g = lipschitz([&](std::size_t sp, int node) { return env.gamma[sp * std::size_t(nps) + node]; });
    CHECK(lip_g <= (1 + 1) * lip_u * 1.05); // (n+1) ||u||_Lip with 5% headroom

    // dGamma/dt <= 2 M (1+5%) globally, with M the contact-set bound
    double m_contact = 0.0, m_global = 0.0;
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp)
        for (int node = 0; node < nps; ++node) {
            const std::size_t at = sp * std::size_t(nps) + node;
            m_global = std::max(m_global, env.dt_gamma[at]);
            if (env.contact[at]) m_contact = std::max(m_contact, env.dt_gamma[at]);
        }
    CHECK(m_global <= 2.0 * m_contact * 1.05);
    CHECK(m_contact > 0.0);
}

TEST_CASE("normal map measure") {
    const double sigma = 1.5;
    SUBCASE("time-independent envelope has zero measure") {
        const auto lat = LatticeSpec::make(1, 1.0 / 32.0, 1.0 / 32.0, 2.0, 0.0, 1.0, sigma);
        const auto region = geometry::cube_forward_Q(1.0, sigma, 1, 0.0);
        EnvelopeResult env{lat, region, region, gridfn::slices_in_region(lat, region), {}, {}, {}, {}, {},
                           1e-9};
        const int nps = lat.nodes_per_slice();
        env.gamma.assign(env.slices.size() * nps, 0.0);
        env.contact.assign(env.slices.size() * nps, 0);
        env.dt_gamma.assign(env.slices.size() * nps, 0.0); // frozen in t
        env.hess_det_minus.assign(env.slices.size() * nps, 1.0);
        env.slope.assign(env.slices.size() * nps, 0.0);
        CHECK(normal_map_measure(env, region) == 0.0);
    }
    SUBCASE("Gamma = t (1 - x^2): analytic 4/3 and additivity") {
        const auto lat = LatticeSpec::make(1, 1.0 / 128.0, 1.0 / 128.0, 2.0, 0.0, 1.0, sigma);
        const auto region = geometry::cube_forward_Q(1.0, sigma, 1, 0.0);
        EnvelopeResult env{lat, region, region, gridfn::slices_in_region(lat, region), {}, {}, {}, {}, {},
                           1e-9};
        const int nps = lat.nodes_per_slice();
        env.gamma.assign(env.slices.size() * nps, 0.0);
        env.contact.assign(env.slices.size() * nps, 0);
        env.dt_gamma.assign(env.slices.size() * nps, 0.0);
        env.hess_det_minus.assign(env.slices.size() * nps, 0.0);
        env.slope.assign(env.slices.size() * nps, 0.0);
        double xs[1];
        for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
            const double t = lat.slice_time(env.slices[sp]);
            for (int node = 0; node < nps; ++node) {
                lat.node_coords(node, xs);
                if (std::fabs(xs[0]) >= 1.0) continue;
                env.dt_gamma[sp * std::size_t(nps) + node] = 1.0 - xs[0] * xs[0];
                env.hess_det_minus[sp * std::size_t(nps) + node] = 2.0 * t;
            }
        }
        const double total = normal_map_measure(env, region);
        CHECK(total == doctest::Approx(4.0 / 3.0).epsilon(0.02));
        // additivity over disjoint spatial balls: cube sums equal a manual
        // node-sum over the union, exactly
        const ParabolicCube left(make_point({-0.55}, 1.0), 0.4, sigma, CubeVariant::Q);
        const ParabolicCube right(make_point({0.55}, 1.0), 0.4, sigma, CubeVariant::Q);
        double manual = 0.0;
        const double cell = lat.h_x * lat.h_t;
        for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
            for (int node : gridfn::nodes_in_region(lat, left, env.slices[sp]))
                manual += env.dt_gamma[sp * std::size_t(nps) + node] *
                          env.hess_det_minus[sp * std::size_t(nps) + node] * cell;
            for (int node : gridfn::nodes_in_region(lat, right, env.slices[sp]))
                manual += env.dt_gamma[sp * std::size_t(nps) + node] *
                          env.hess_det_minus[sp * std::size_t(nps) + node] * cell;
        }
        CHECK(normal_map_measure(env, left) + normal_map_measure(env, right) ==
              doctest::Approx(manual).epsilon(1e-12));
    }
}

TEST_CASE("normal map vs slope-intercept brute force on a smooth concave surface") {
    const double sigma = 1.5;
    const auto lat = LatticeSpec::make(1, 1.0 / 64.0, 1.0 / 64.0, 2.0, 0.0, 1.0, sigma);
    const auto region = geometry::cube_forward_Q(1.0, sigma, 1, 0.0);
    EnvelopeResult env{lat, region, region, gridfn::slices_in_region(lat, region), {}, {}, {}, {}, {}, 1e-9};
    const int nps = lat.nodes_per_slice();
    env.gamma.assign(env.slices.size() * nps, 0.0);
    env.contact.assign(env.slices.size() * nps, 0);
    env.dt_gamma.assign(env.slices.size() * nps, 0.0);
    env.hess_det_minus.assign(env.slices.size() * nps, 0.0);
    env.slope.assign(env.slices.size() * nps, 0.0);

    // oracle data restricted to the region's spatial ball
    std::vector<std::vector<double>> slices;
    std::vector<double> xs_region;
    std::vector<int> region_nodes;
    double xs[1];
    for (int node = 0; node < nps; ++node) {
        lat.node_coords(node, xs);
        if (std::fabs(xs[0]) < 1.0) {
            xs_region.push_back(xs[0]);
            region_nodes.push_back(node);
        }
    }
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
        const double t = lat.slice_time(env.slices[sp]);
        std::vector<double> sl;
        for (int node : region_nodes) {
            lat.node_coords(node, xs);
            sl.push_back(t * (1.0 - xs[0] * xs[0]));
            env.dt_gamma[sp * std::size_t(nps) + node] = 1.0 - xs[0] * xs[0];
            env.hess_det_minus[sp * std::size_t(nps) + node] = 2.0 * t;
        }
        slices.push_back(std::move(sl));
    }
    const double integral = normal_map_measure(env, region);
    // planes touching at the outermost in-ball nodes are boundary touches in
    // the continuum; exclude a 2h collar
    const double brute = oracles::normal_map_bruteforce(slices, xs_region, 1.0 - 2.0 * lat.h_x);
    CHECK(brute == doctest::Approx(integral).epsilon(0.05));
}

TEST_CASE("abp diagnostics: trivial and constructed subsolutions") {
    const double sigma = 1.5;
    const auto lat = env_lattice(1.0 / 32.0, sigma);
    SUBCASE("nonpositive u yields a trivially consistent report") {
        const auto u = gridfn::sample(
            [](std::span<const double> x, double) { return -0.5 - x[0] * x[0]; }, lat, 2.0);
        const auto f = gridfn::sample(gridfn::constant_field(0.0), lat, 0.0);
        const auto env = concave_envelope(u, domain_cube(sigma));
        const auto rep = abp_diagnostics(u, f, env, AbpConfig{});
        CHECK(rep.sup_u_plus == 0.0);
        CHECK(rep.contact_empty);
        CHECK(rep.tso_ratio == -1.0);
    }
    SUBCASE("bump subsolution: contact sign check and positive normal map") {
        const auto u = gridfn::sample(bump_field(1.0, 0.3, 0.0, sigma), lat, 1.0);
        const auto pair = nonlocal::make_extremal_tables(sigma, 1.0, 2.0, lat, 1.0);
        const auto Mp = nonlocal::pucci_apply(u, pair.lam, pair.Lam, nonlocal::PucciSign::plus);
        std::vector<double> fv(u.values().size(), 0.0);
        const int nps = lat.nodes_per_slice();
        for (int j = 1; j < lat.num_slices(); ++j)
            for (int node = 0; node < nps; ++node)
                fv[std::size_t(j) * nps + node] =
                    (u.at(j, node) - u.at(j - 1, node)) / lat.h_t - Mp.at(j, node);
        const GridFunction f(lat, std::move(fv), gridfn::constant_field(0.0), 1.0);
        const auto env = concave_envelope(u, domain_cube(sigma));
        AbpConfig cfg;
        const auto rep = abp_diagnostics(u, f, env, cfg);
        CHECK_FALSE(rep.contact_empty);
        CHECK(rep.contact_sign_ok);
        CHECK(rep.normal_map_total > 0.0);
        CHECK(rep.tso_ratio > 0.0);
        CHECK(rep.gamma_t_sup > 0.0);
        CHECK(rep.f_sup > 0.0);
        CHECK_FALSE(rep.rings.empty());
        CHECK_FALSE(rep.cover.empty());
        // cover cubes respect the size cap
        const double cap = 2.0 * cfg.rho0_scale * cfg.ring_rho * std::pow(2.0, -1.0 / (2.0 - sigma));
        for (const auto& c : rep.cover) CHECK(c.side <= std::max(cap, 4.0 * lat.h_x) + 1e-12);
        const auto js = rep.to_json();
        CHECK(js.find("tso_ratio") != std::string::npos);
    }
}

TEST_CASE("two dimensions: envelope invariants on a bump") {
    const double sigma = 1.5;
    const double h = 1.0 / 8.0;
    const double t0 = -std::ceil(std::pow(2.0, sigma) / h) * h;
    const auto lat = LatticeSpec::make(2, h, h, 2.0, t0, 0.0, sigma);
    const double t_b = -std::pow(0.5, sigma);
    const auto u = gridfn::sample(
        [t_b](std::span<const double> x, double t) {
            const double r2 = x[0] * x[0] + x[1] * x[1];
            const double q = std::max(0.0, (0.09 - r2) / 0.09);
            const double ramp = std::min(1.0, std::max(0.0, (t - t_b) / (-t_b)));
            return q * q * ramp;
        },
        lat, 1.0);
    geometry::Point o;
    o.x = {0.0, 0.0};
    const auto env = concave_envelope(u, geometry::cube_Q(1.0, sigma, o));
    const int nps = lat.nodes_per_slice();
    const int m = lat.nodes_per_dim();
    for (std::size_t sp = 0; sp < env.slices.size(); ++sp) {
        for (int node = 0; node < nps; ++node) {
            const std::size_t at = sp * std::size_t(nps) + node;
            CHECK(env.gamma[at] >= std::max(u.at(env.slices[sp], node), 0.0) - 1e-12);
            if (sp > 0) CHECK(env.gamma[at] >= env.gamma[(sp - 1) * nps + node] - 1e-12);
        }
        // midpoint concavity along both lattice axes inside the ball
        for (int a = 1; a + 1 < m; ++a)
            for (int b = 1; b + 1 < m; ++b) {
                double xs[2] = {lat.node_coord(a), lat.node_coord(b)};
                if (std::hypot(xs[0], xs[1]) > 2.0 - 2.5 * h) continue;
                const std::size_t at = sp * std::size_t(nps) + a * m + b;
                CHECK(env.gamma[at] >= 0.5 * (env.gamma[at - 1] + env.gamma[at + 1]) - 1e-11);
                CHECK(env.gamma[at] >=
                      0.5 * (env.gamma[at - std::size_t(m)] + env.gamma[at + std::size_t(m)]) - 1e-11);
            }
    }
    // the bump peak (origin, final slice) is in the contact set
    const auto peak = gridfn::extremum(u, geometry::cube_Q(1.0, sigma, o), gridfn::Extremum::sup);
    const int sp = env.pos_of_slice(peak.slice);
    REQUIRE(sp >= 0);
    CHECK(env.contact[std::size_t(sp) * nps + peak.node] == 1);
}
