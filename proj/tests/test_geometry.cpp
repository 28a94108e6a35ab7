#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "nplab/geometry.hpp"

using namespace nplab;
using namespace nplab::geometry;

TEST_CASE("parabolic distance: definition branches") {
    const Point a = make_point({0.0}, 0.0);
    const Point b = make_point({1.0}, 1.0);
    CHECK(parabolic_distance(a, a, 1.3) == 0.0);
    CHECK(std::isinf(parabolic_distance(b, a, 1.3))); // t > s
    CHECK(parabolic_distance(a, b, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(parabolic_distance(a, b, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(parabolic_distance(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("parabolic distance: quasi-triangle property on ordered samples") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double sigma : {0.6, 1.0, 1.7}) {
        for (int trial = 0; trial < 200; ++trial) {
            Point p = make_point({U(rng)}, U(rng));
            Point q = make_point({U(rng)}, p.t + std::fabs(U(rng)));
            Point r = make_point({U(rng)}, q.t + std::fabs(U(rng)));
            const double dpq = parabolic_distance(p, q, sigma);
            const double dqr = parabolic_distance(q, r, sigma);
            const double dpr = parabolic_distance(p, r, sigma);
            // quasi-triangle with the metric's own constant
            const double c = std::pow(2.0, 1.0 / sigma);
            CHECK(dpr <= c * (dpq + dqr) + 1e-12);
        }
    }
}

TEST_CASE("cube variants: time intervals and membership conventions") {
    const double sigma = 1.5, r = 0.5;
    const double rs = std::pow(r, sigma);
    const Point o = make_point({0.0}, 0.0);

    const ParabolicCube q(o, r, sigma, CubeVariant::Q);
    CHECK(q.time_lo() == doctest::Approx(-rs));
    CHECK(q.time_hi() == 0.0);
    CHECK(q.time_length() == doctest::Approx(rs));

    const ParabolicCube kf = cube_box_forward(r, sigma, o);
    CHECK(kf.time_lo() == 0.0);
    CHECK(kf.time_hi() == doctest::Approx(rs));

    const ParabolicCube kp = cube_K_plus3(r, sigma, o);
    CHECK(kp.time_lo() == doctest::Approx(rs));
    CHECK(kp.time_hi() == doctest::Approx((std::pow(3.0, sigma) + 2.0) * rs));
    CHECK(kp.spatial_halfwidth() == doctest::Approx(3.0 * r));

    const double x_in[1] = {0.2};
    CHECK(q.contains(x_in, -rs / 2));
    CHECK(q.contains(x_in, 0.0));       // closed top
    CHECK_FALSE(q.contains(x_in, -rs)); // open bottom
    const double x_out[1] = {0.5};
    CHECK_FALSE(q.contains(x_out, -rs / 2)); // open ball

    const ParabolicCube bq = cube_two_sided(r, sigma, o);
    CHECK(bq.time_lo() == doctest::Approx(-rs));
    CHECK(bq.time_hi() == doctest::Approx(rs));
}

TEST_CASE("elongation: breakpoints and measures") {
    const Point o = make_point({0.0}, 0.0);
    SUBCASE("m=0 is the cube itself") {
        const auto k = cube_box_forward(0.5, 1.3, o);
        const auto e = elongation(k, 0);
        CHECK(e.boxes().size() == 1);
        CHECK(e.measure() == doctest::Approx(std::pow(2.0 * 0.5, 1) * std::pow(0.5, 1.3)).epsilon(1e-14));
    }
    SUBCASE("m=1, sigma=1, r=1: hand-evaluated breakpoint formula") {
        const auto k = cube_box_forward(1.0, 1.0, o);
        const auto e = elongation(k, 1);
        CHECK(e.measure() == doctest::Approx(8.0).epsilon(1e-14)); // 2 * (3^2-1)/(3-1)
    }
    SUBCASE("strictly increasing in m; breakpoints match the closed form") {
        for (double sigma : {0.7, 1.5}) {
            const auto k = cube_box_forward(0.4, sigma, make_point({0.1}, 0.2));
            double prev = 0.0;
            for (int m = 0; m <= 4; ++m) {
                const auto e = elongation(k, m);
                CHECK(e.measure() > prev);
                prev = e.measure();
                // top of the stack
                const double rs = std::pow(0.4, sigma);
                const double expect_top =
                    0.2 + (std::pow(3.0, sigma * (m + 1)) - 1.0) / (std::pow(3.0, sigma) - 1.0) * rs;
                double top = -1e300;
                for (const auto& b : e.boxes()) top = std::max(top, b.t_hi);
                CHECK(top == doctest::Approx(expect_top).epsilon(1e-12));
            }
        }
    }
    SUBCASE("rejects non-box cubes") {
        const ParabolicCube q(o, 0.5, 1.3, CubeVariant::Q);
        CHECK_THROWS_AS(elongation(q, 1), std::invalid_argument);
    }
}

TEST_CASE("expansion: containment and slab differences") {
    const Point o = make_point({0.0}, 0.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.2, 0.8);
    for (int trial = 0; trial < 10; ++trial) {
        const double sigma = 0.5 + 1.4 * (trial / 10.0);
        const double r = U(rng);
        const auto k = cube_box_forward(r, sigma, o);
        SUBCASE("") {}
        const auto e0 = expansion(k, 0);
        CHECK(e0.measure() == doctest::Approx(elongation(k, 0).measure()).epsilon(1e-13));
        for (int m = 1; m <= 5; ++m) {
            CHECK(elongation(k, m).measure() <= expansion(k, m).measure() + 1e-13);
            // slab difference: single box of half-width 3^m r and length 3^{sigma m} r^sigma
            const double diff = expansion(k, m).measure() - expansion(k, m - 1).measure();
            const double expect = std::pow(2.0 * std::pow(3.0, m) * r, 1) *
                                  std::pow(3.0, sigma * m) * std::pow(r, sigma);
            CHECK(diff == doctest::Approx(expect).epsilon(1e-11));
        }
    }
}

TEST_CASE("dyadic split: counting and exact partition of measure") {
    SUBCASE("n=1, p=q=1 gives 4 children") {
        auto root = DyadicCube::root(1, {1, 1});
        CHECK(root.split().size() == 4);
    }
    SUBCASE("n=2, p=3, q=2 gives 128 children") {
        auto root = DyadicCube::root(2, {3, 2});
        CHECK(root.split().size() == 128);
    }
    SUBCASE("children partition the parent exactly (rational arithmetic)") {
        auto root = DyadicCube::root(2, {2, 1});
        auto kids = root.split();
        Rational total(0);
        for (const auto& c : kids) {
            total += c.measure();
            CHECK(root.contains(c));
            CHECK(*c.parent() == root);
        }
        CHECK(total == root.measure());
        // pairwise disjoint: distinct same-depth cubes never contain each other
        for (std::size_t i = 0; i < kids.size(); ++i)
            for (std::size_t j = i + 1; j < kids.size(); ++j) CHECK_FALSE(kids[i].contains(kids[j]));
    }
    SUBCASE("child geometry: half-width and time scaling by the rule") {
        auto root = DyadicCube::root(1, {2, 1});
        auto kid = root.split().front();
        CHECK(kid.spatial_halfwidth() == Rational(1, 2));
        CHECK(kid.t_hi() - kid.t_lo() == Rational(1, 4));
    }
}

TEST_CASE("cz_decompose: trivial and degenerate cases") {
    const SplitRule rule{1, 1};
    SUBCASE("A = the whole root cube") {
        std::vector<DyadicCube> a{DyadicCube::root(1, rule)};
        const auto cz = cz_decompose(a, Rational(1, 2), 2);
        REQUIRE(cz.selected.size() == 1);
        CHECK(cz.selected[0].depth() == 0);
        CHECK(cz.region.measure() >= cz.measure_a);
    }
    SUBCASE("A empty") {
        const auto cz = cz_decompose({}, Rational(1, 2), 2);
        CHECK(cz.selected.empty());
        CHECK(cz.region.measure() == Rational(0));
    }
    SUBCASE("delta outside (0,1) rejected") {
        std::vector<DyadicCube> a{DyadicCube::root(1, rule)};
        CHECK_THROWS_AS(cz_decompose(a, Rational(1), 2), std::invalid_argument);
        CHECK_THROWS_AS(cz_decompose(a, Rational(0), 2), std::invalid_argument);
    }
    SUBCASE("non-square rule rejected (exact breakpoints need sigma = 1)") {
        std::vector<DyadicCube> a{DyadicCube::root(1, {2, 1})};
        CHECK_THROWS_AS(cz_decompose(a, Rational(1, 2), 1), std::invalid_argument);
    }
}

TEST_CASE("cz_decompose: measure inequality on random dyadic unions, exact") {
    std::mt19937_64 rng(2024);
    const SplitRule rule{1, 1};
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 1 + trial % 3;
        std::vector<DyadicCube> a;
        const int count = 1 + int(rng() % 5);
        for (int c = 0; c < count; ++c) {
            const int depth = 1 + int(rng() % 3);
            a.emplace_back(1, rule, depth, std::vector<std::int64_t>{std::int64_t(rng() % (1u << depth))},
                           std::int64_t(rng() % (1u << depth)));
        }
        for (auto mode : {CzMode::elongation_clipped, CzMode::shifted_elongation}) {
            const auto cz = cz_decompose(a, Rational(1, 2), m, mode);
            const Rational lhs = cz.region.measure() * Rational(m + 1) * Rational(1, 2);
            const Rational rhs = cz.measure_a * Rational(m);
            CHECK(lhs >= rhs);
            // every selected cube really has density >= delta
            for (const auto& k : cz.selected) {
                Rational inter(0);
                for (const auto& c : a)
                    if (k.contains(c))
                        inter += c.measure();
                    else if (c.contains(k))
                        inter = k.measure();
                CHECK(inter * Rational(2) >= k.measure());
            }
        }
    }
}

TEST_CASE("cz_decompose: the two modes agree for bottom-anchored cubes") {
    // K^m_* equals K^m for dyadic cubes: the stacked slabs are contiguous.
    std::mt19937_64 rng(5);
    const SplitRule rule{1, 1};
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<DyadicCube> a;
        for (int c = 0; c < 3; ++c) {
            const int depth = 1 + int(rng() % 3);
            a.emplace_back(1, rule, depth, std::vector<std::int64_t>{std::int64_t(rng() % (1u << depth))},
                           std::int64_t(rng() % (1u << depth)));
        }
        const auto e = cz_decompose(a, Rational(1, 2), 2, CzMode::elongation_clipped);
        const auto s = cz_decompose(a, Rational(1, 2), 2, CzMode::shifted_elongation);
        CHECK(e.region.measure() == s.region.measure());
    }
}

TEST_CASE("dyadic tree JSON roundtrip") {
    const SplitRule rule{1, 1};
    std::vector<DyadicCube> cubes{DyadicCube(1, rule, 2, {1}, 3), DyadicCube(1, rule, 1, {0}, 1)};
    const auto text = dyadic_tree_to_json(1.0, rule, cubes);
    SplitRule rr;
    double sigma = 0;
    const auto back = dyadic_tree_from_json(text, 1, &sigma, &rr);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == cubes[0]);
    CHECK(back[1] == cubes[1]);
    CHECK(sigma == 1.0);
    CHECK(rr.p == 1);
    CHECK(rr.q == 1);
}

TEST_CASE("box regions: disjointification and exact measure") {
    SUBCASE("overlapping boxes merge without double counting") {
        std::vector<Box> boxes;
        boxes.push_back({{0.0}, {2.0}, 0.0, 1.0});
        boxes.push_back({{1.0}, {3.0}, 0.0, 1.0});
        const auto region = CubeRegion::from_boxes(boxes);
        CHECK(region.measure() == doctest::Approx(3.0).epsilon(1e-14));
        for (std::size_t i = 0; i < region.boxes().size(); ++i)
            for (std::size_t j = i + 1; j < region.boxes().size(); ++j) {
                const auto &a = region.boxes()[i], &b = region.boxes()[j];
                const bool t_disjoint = a.t_hi <= b.t_lo || b.t_hi <= a.t_lo;
                const bool x_disjoint = a.x_hi[0] <= b.x_lo[0] || b.x_hi[0] <= a.x_lo[0];
                CHECK((t_disjoint || x_disjoint));
            }
    }
    SUBCASE("2-D rectangles, exact rational measure") {
        std::vector<ExactBox> boxes;
        boxes.push_back({{Rational(0), Rational(0)}, {Rational(2), Rational(2)}, Rational(0), Rational(1)});
        boxes.push_back({{Rational(1), Rational(1)}, {Rational(3), Rational(3)}, Rational(0), Rational(1)});
        const auto region = ExactCubeRegion::from_boxes(boxes);
        CHECK(region.measure() == Rational(7)); // 4 + 4 - 1 overlap
    }
}
