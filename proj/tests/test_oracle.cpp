#include <catch2/catch_amalgamated.hpp>
#include <cdtw/harness.hpp>
#include <cdtw/oracle.hpp>

#include <cmath>
#include <random>

using namespace cdtw;

namespace {
const double PHI = 0.5 * (1.0 + std::sqrt(5.0));
}

TEST_CASE("grid_cdtw on identical curves is zero") {
    PolygonalCurve P({{0, 0}, {1, 2}, {3, 1}, {4, 4}});
    for (int g : {2, 8, 32}) {
        GridResult r = grid_cdtw(P, P, NormHandle::l1(), {g});
        CHECK(r.value == Catch::Approx(0.0).margin(1e-12));
        CHECK(r.lower_hint <= r.value);
    }
}

TEST_CASE("grid_cdtw on parallel unit segments") {
    PolygonalCurve P({{0, 0}, {1, 0}}), Q({{0, 1}, {1, 1}});
    GridResult r = grid_cdtw(P, Q, NormHandle::l1(), {64});
    CHECK(r.value >= 2.0);
    CHECK(r.value <= 2.05);
    CHECK(r.lower_hint <= 2.0);
}

TEST_CASE("grid_cdtw on the crossing-segments cell") {
    PolygonalCurve P({{0, 0}, {2, 0}}), Q({{1, -1}, {1, 1}});
    GridResult r = grid_cdtw(P, Q, NormHandle::l1(), {256});
    CHECK(r.value >= 4.0 - 1e-9);
    CHECK(r.value <= 4.05);
}

TEST_CASE("grid_cdtw is monotone nonincreasing in g") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        PolygonalCurve P = random_curve(rng, 3), Q = random_curve(rng, 2);
        double prev = std::numeric_limits<double>::infinity();
        for (int g : {4, 8, 16, 32}) {
            GridResult r = grid_cdtw(P, Q, NormHandle::l1(), {g});
            CHECK(r.value <= prev + 1e-6);
            prev = r.value;
        }
    }
}

TEST_CASE("grid_cdtw rejects bad configuration") {
    PolygonalCurve P({{0, 0}, {1, 0}});
    CHECK_THROWS_AS(grid_cdtw(P, P, NormHandle::l1(), {1}), std::invalid_argument);
}

TEST_CASE("path_cost_numeric on the parallel-segments diagonal") {
    PolygonalCurve P({{0, 0}, {1, 0}}), Q({{0, 1}, {1, 1}});
    MonotonePath diag{{{0, 0}, {1, 1}}};
    double c = path_cost_numeric(P, Q, diag, NormHandle::l1(), {10000});
    CHECK(c == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("path_cost_numeric on the golden-ratio two-bend path") {
    PolygonalCurve P({{0, 0}, {PHI + 1, 0}});
    PolygonalCurve Q({{PHI, 0}, {2 * PHI + 1, 0}});
    Point2 x{0, 0}, y{PHI + 1, PHI + 1};
    MonotonePath gxy{{x, {x.x, y.y}, y}};
    double c = path_cost_numeric(P, Q, gxy, NormHandle::l1(), {20000});
    CHECK(c == Catch::Approx(7 * PHI + 4).margin(1e-5 * (7 * PHI + 4)));
}

TEST_CASE("path_cost_numeric on a zero-length path") {
    PolygonalCurve P({{0, 0}, {1, 0}}), Q({{0, 1}, {1, 1}});
    MonotonePath z{{{0.5, 0.5}, {0.5, 0.5}}};
    CHECK(path_cost_numeric(P, Q, z, NormHandle::l1(), {100}) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("path_cost_numeric rejects non-monotone paths and tiny step counts") {
    PolygonalCurve P({{0, 0}, {1, 0}}), Q({{0, 1}, {1, 1}});
    MonotonePath bad{{{0.5, 0.5}, {0.2, 0.8}}};
    CHECK_THROWS_AS(path_cost_numeric(P, Q, bad, NormHandle::l1(), {128}), std::invalid_argument);
    MonotonePath ok{{{0, 0}, {1, 1}}};
    CHECK_THROWS_AS(path_cost_numeric(P, Q, ok, NormHandle::l1(), {8}), std::invalid_argument);
}

TEST_CASE("path_cost_numeric Richardson refinement") {
    // smooth (L2) integrand so trapezoid error shrinks ~4x per halving
    std::mt19937 rng(11);
    PolygonalCurve P = random_curve(rng, 2), Q = random_curve(rng, 2);
    NormHandle l2approx = NormHandle::gauge(approximate_norm(NormHandle::l2(), {0.0001}));
    double sx = 0, sy = 0;
    {
        ArcTable tp = build_arc_table(P, l2approx), tq = build_arc_table(Q, l2approx);
        sx = tp.total();
        sy = tq.total();
    }
    MonotonePath diag{{{0, 0}, {sx, sy}}};
    double i1 = path_cost_numeric(P, Q, diag, l2approx, {250});
    double i2 = path_cost_numeric(P, Q, diag, l2approx, {500});
    double i3 = path_cost_numeric(P, Q, diag, l2approx, {1000});
    double e12 = std::abs(i1 - i2), e23 = std::abs(i2 - i3);
    if (e23 > 1e-12) CHECK(e12 / e23 >= 3.0);
}

TEST_CASE("lemma1_ratio on the golden-ratio configuration") {
    PolygonalCurve P({{0, 0}, {PHI + 1, 0}});
    PolygonalCurve Q({{PHI, 0}, {2 * PHI + 1, 0}});
    Point2 x{0, 0}, y{PHI + 1, PHI + 1};
    // curve roles exchanged so the expensive path is gamma_yx
    CHECK(lemma1_ratio(Q, P, x, y, NormHandle::l1(), {20000}) ==
          Catch::Approx(2 * PHI + 1).margin(1e-4));
}

TEST_CASE("lemma1_ratio is 1 for a symmetric configuration") {
    PolygonalCurve P({{0, 0}, {2, 0}}), Q({{1, -1}, {1, 1}});
    Point2 x{0, 0}, y{2, 2};
    CHECK(lemma1_ratio(P, Q, x, y, NormHandle::l1(), {20000}) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("lemma1_ratio rejects vanishing configurations") {
    PolygonalCurve P({{0, 0}, {1, 0}});
    CHECK_THROWS_AS(lemma1_ratio(P, P, {0.3, 0.3}, {0.3, 0.3}, NormHandle::l1(), {128}),
                    std::domain_error);
}
