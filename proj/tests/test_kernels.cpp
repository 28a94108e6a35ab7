#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "nplab/kernels.hpp"

using namespace nplab;
using namespace nplab::kernels;
using gridfn::LatticeSpec;

namespace {
LatticeSpec lat1(double h) { return LatticeSpec::make(1, h, 1.0, 2.0, 0.0, 0.0, 1.0); }
} // namespace

TEST_CASE("extremal kernel: formula, symmetry, bounds") {
    const auto K = extremal_kernel(1.0, 1.0, 1);
    double y[1] = {2.0};
    // (2 - sigma) c |y|^{-n-sigma} = 1 * 1 * 2^{-2}
    CHECK(K.k(std::span<const double>(y, 1)) == doctest::Approx(0.25).epsilon(1e-14));
    double ym[1] = {-2.0};
    CHECK(K.k(std::span<const double>(ym, 1)) == K.k(std::span<const double>(y, 1)));
    CHECK_THROWS(extremal_kernel(2.0, 1.0, 1));
    CHECK_THROWS(extremal_kernel(1.0, 0.0, 1));

    std::vector<std::vector<double>> samples;
    for (double v : {0.1, 0.5, 1.0, 3.0, -0.7}) samples.push_back({v});
    CHECK(validate_bounds(K, samples).pass); // equality case lambda = Lambda = c
}

TEST_CASE("validate_bounds: failures are data, interpolated kernels pass") {
    std::vector<std::vector<double>> samples;
    for (double v : {0.2, 0.6, 1.1, 2.5}) samples.push_back({v});
    SUBCASE("zero kernel fails the lower bound everywhere") {
        KernelSpec K = extremal_kernel(1.2, 1.0, 1);
        K.k = [](std::span<const double>) { return 0.0; };
        const auto rep = validate_bounds(K, samples);
        CHECK_FALSE(rep.pass);
        CHECK(rep.violations.size() == samples.size());
    }
    SUBCASE("sin-interpolated kernel stays inside the sandwich") {
        const double sigma = 1.3, lam = 0.7, Lam = 2.1;
        KernelSpec K;
        K.n = 1;
        K.sigma = sigma;
        K.lambda = lam;
        K.Lambda = Lam;
        K.k = [sigma, lam, Lam](std::span<const double> y) {
            const double r = std::fabs(y[0]);
            const double c = lam + (Lam - lam) * 0.5 * (1.0 + std::sin(r));
            return (2.0 - sigma) * c * std::pow(r, -1.0 - sigma);
        };
        CHECK(validate_bounds(K, samples).pass);
    }
    SUBCASE("zero sample rejected") {
        CHECK_THROWS(validate_bounds(extremal_kernel(1.0, 1.0, 1), {{0.0}}));
    }
}

TEST_CASE("smoothness seminorm") {
    const auto K = extremal_kernel(1.0, 1.0, 1);
    const double eps1 = 0.25;
    std::vector<std::vector<double>> hs{{0.05}, {0.1}, {0.2}};
    const double v = smoothness_seminorm(K, eps1, hs);
    CHECK(v >= 0.0);

    SUBCASE("10x-resolution oracle agreement (regression baseline)") {
        // independent dense quadrature of int_{|y|>2 eps1} |k(y)-k(y-h)|/|h| dy
        auto dense = [&](double h) {
            double total = 0.0;
            const auto k1 = [&](double y) {
                double yy[1] = {y};
                return K.k(std::span<const double>(yy, 1));
            };
            double inner = 2.0 * eps1;
            for (int shell = 0; shell < 220; ++shell) {
                const double outer = inner * 1.1;
                const int npan = 400;
                double acc = 0.0;
                for (int i = 0; i < npan; ++i) {
                    const double w = (outer - inner) / npan;
                    for (double sgn : {-1.0, 1.0}) {
                        const double y = sgn * (inner + (i + 0.5) * w);
                        acc += std::fabs(k1(y) - k1(y - h)) / h * w;
                    }
                }
                total += acc;
                if (shell > 10 && acc < 1e-12 * total) break;
                inner = outer;
            }
            return total;
        };
        double worst = 0.0;
        for (const auto& h : hs) worst = std::max(worst, dense(h[0]));
        CHECK(v == doctest::Approx(worst).epsilon(0.02));
    }
    SUBCASE("a jump inside the integration region enlarges the seminorm") {
        KernelSpec J = K;
        J.k = [](std::span<const double> y) {
            const double r = std::fabs(y[0]);
            const double base = 1.0 * std::pow(r, -2.0);
            return r < 1.0 ? base : 1.8 * base; // jump at |y| = 1
        };
        CHECK(smoothness_seminorm(J, eps1, hs) > v * 1.05);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS(smoothness_seminorm(K, 0.0, hs));
        CHECK_THROWS(smoothness_seminorm(K, 0.25, {{0.3}})); // |h| >= eps1
    }
}

TEST_CASE("weight tables: positivity, moments, refinement") {
    SUBCASE("weights nonnegative on random admissible kernels") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int trial = 0; trial < 10; ++trial) {
            const double sigma = 0.4 + 1.4 * U(rng);
            const double lam = 0.5 + U(rng), Lam = lam + U(rng);
            const double a = 1.0 + 5.0 * U(rng);
            KernelSpec K;
            K.n = 1;
            K.sigma = sigma;
            K.lambda = lam;
            K.Lambda = Lam;
            K.k = [sigma, lam, Lam, a](std::span<const double> y) {
                const double r = std::fabs(y[0]);
                const double c = lam + (Lam - lam) * 0.5 * (1.0 + std::cos(a * r));
                return (2.0 - sigma) * c * std::pow(r, -1.0 - sigma);
            };
            const auto T = build_weight_table(K, lat1(1.0 / 32.0), 1.0);
            for (double w : T.w) CHECK(w >= 0.0);
            CHECK(T.near_origin_coeff >= 0.0);
            for (double w : T.tail_w) CHECK(w >= 0.0);
            CHECK(T.cfl_mass() > 0.0);
        }
    }
    SUBCASE("second moment matches the closed form 2 at sigma=1 within 1%") {
        const auto T = build_weight_table(extremal_kernel(1.0, 1.0, 1), lat1(1.0 / 128.0), 1.0,
                                          TailPolicy::none);
        double mom = T.near_origin_coeff * T.h_x * T.h_x;
        for (std::size_t j = 0; j < T.w.size(); ++j) {
            const double y = T.offsets[j][0] * T.h_x;
            mom += T.w[j] * y * y;
        }
        CHECK(mom == doctest::Approx(2.0).epsilon(0.01));
    }
    SUBCASE("halving h_x improves the moment error (or both are negligible)") {
        for (double sigma : {0.8, 1.5}) {
            auto moment_err = [&](double h) {
                const auto T =
                    build_weight_table(extremal_kernel(sigma, 1.0, 1), lat1(h), 1.0, TailPolicy::none);
                double mom = T.near_origin_coeff * T.h_x * T.h_x;
                for (std::size_t j = 0; j < T.w.size(); ++j) {
                    const double y = T.offsets[j][0] * T.h_x;
                    mom += T.w[j] * y * y;
                }
                // closed form: 2 (2-sigma) int_0^1 y^{1-sigma} dy = 2
                return std::fabs(mom - 2.0);
            };
            const double e1 = moment_err(1.0 / 64.0), e2 = moment_err(1.0 / 128.0);
            CHECK(e2 <= e1 / 2.0 + 1e-10);
        }
    }
    SUBCASE("tail mass approximates the kernel mass beyond R_out") {
        const double sigma = 1.2;
        const auto T = build_weight_table(extremal_kernel(sigma, 1.0, 1), lat1(1.0 / 32.0), 1.0);
        // 2 (2-sigma) int_1^inf y^{-1-sigma} dy = 2 (2-sigma)/sigma
        const double expect = 2.0 * (2.0 - sigma) / sigma;
        CHECK(T.tail_coeff == doctest::Approx(expect).epsilon(2e-3));
    }
    SUBCASE("preconditions") {
        CHECK_THROWS(build_weight_table(extremal_kernel(1.0, 1.0, 1), lat1(1.0 / 8.0), 0.1)); // R < 2h
    }
}

TEST_CASE("weight table disk cache") {
    const auto K = extremal_kernel(1.3, 1.0, 1);
    const auto lat = lat1(1.0 / 16.0);
    const std::string dir = "/tmp/nplab_test_cache";
    const auto a = cached_weight_table(K, lat, 1.0, dir, true);
    const auto b = cached_weight_table(K, lat, 1.0, dir, false); // read back
    REQUIRE(a.w.size() == b.w.size());
    for (std::size_t i = 0; i < a.w.size(); ++i) CHECK(a.w[i] == b.w[i]);
    CHECK(a.near_origin_coeff == b.near_origin_coeff);
    CHECK(a.tail_coeff == b.tail_coeff);
    CHECK(a.kernel_hash == b.kernel_hash);
}
