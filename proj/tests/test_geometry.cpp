#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cdtw/geometry.hpp"

using namespace cdtw;

TEST_CASE("arc_length basics") {
    PolygonalCurve c({{0, 0}, {3, 4}});
    CHECK(arc_length(c, NormHandle::l2()) == Catch::Approx(5.0));
    CHECK(arc_length(c, NormHandle::l1()) == Catch::Approx(7.0));

    PolygonalCurve c2({{0, 0}, {1, 0}, {1, 1}});
    CHECK(arc_length(c2, NormHandle::l1()) == Catch::Approx(2.0));
}

TEST_CASE("point_at basics") {
    {
        PolygonalCurve c({{0, 0}, {2, 0}});
        auto t = build_arc_table(c, NormHandle::l1());
        Point2 p = point_at(c, t, 1.0);
        CHECK(p.x == Catch::Approx(1.0));
        CHECK(p.y == Catch::Approx(0.0));
    }
    {
        PolygonalCurve c({{0, 0}, {1, 0}, {1, 1}});
        auto t = build_arc_table(c, NormHandle::l1());
        Point2 p = point_at(c, t, 1.5);
        CHECK(p.x == Catch::Approx(1.0));
        CHECK(p.y == Catch::Approx(0.5));
    }
    {
        PolygonalCurve c({{0, 0}, {3, 4}});
        auto t = build_arc_table(c, NormHandle::l2());
        Point2 p = point_at(c, t, 5.0);
        CHECK(p.x == Catch::Approx(3.0));
        CHECK(p.y == Catch::Approx(4.0));
        CHECK_THROWS_AS(point_at(c, t, 5.5), std::domain_error);
        CHECK_THROWS_AS(point_at(c, t, -0.5), std::domain_error);
    }
}

TEST_CASE("build_arc_table prefixes") {
    {
        PolygonalCurve c({{0, 0}, {2, 0}, {2, 2}});
        auto t = build_arc_table(c, NormHandle::l1());
        REQUIRE(t.prefix.size() == 3);
        CHECK(t.prefix[0] == 0.0);
        CHECK(t.prefix[1] == Catch::Approx(2.0));
        CHECK(t.prefix[2] == Catch::Approx(4.0));
    }
    {
        PolygonalCurve c({{0, 0}, {0, 1}});
        auto t = build_arc_table(c, NormHandle::linf());
        CHECK(t.prefix == std::vector<double>{0.0, 1.0});
    }
    {
        PolygonalCurve c({{0, 0}, {3, 4}});
        auto t = build_arc_table(c, NormHandle::l2());
        CHECK(t.prefix[1] == Catch::Approx(5.0));
    }
}

TEST_CASE("construction rejects degenerate curves") {
    CHECK_THROWS_AS(PolygonalCurve({{1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(PolygonalCurve({{1, 1}, {1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(PolygonalCurve({{0, 0}, {1, 0}, {1, 0}, {2, 0}}), std::invalid_argument);
}

TEST_CASE("arc length is translation invariant") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point2> v;
        for (int i = 0; i < 6; ++i) v.push_back({u(rng), u(rng)});
        Point2 shift{u(rng), u(rng)};
        std::vector<Point2> w;
        for (auto p : v) w.push_back(p + shift);
        PolygonalCurve a(v), b(w);
        for (auto norm : {NormHandle::l1(), NormHandle::l2(), NormHandle::linf()})
            CHECK(arc_length(a, norm) == Catch::Approx(arc_length(b, norm)));
    }
}

TEST_CASE("point_at is 1-Lipschitz in the equipped norm") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    for (auto norm : {NormHandle::l1(), NormHandle::l2(), NormHandle::linf()}) {
        std::vector<Point2> v;
        for (int i = 0; i < 5; ++i) v.push_back({u(rng), u(rng)});
        PolygonalCurve c(v);
        auto t = build_arc_table(c, norm);
        std::uniform_real_distribution<double> s(0.0, t.total());
        for (int k = 0; k < 200; ++k) {
            double s1 = s(rng), s2 = s(rng);
            double d = norm_eval(norm, point_at(c, t, s1) - point_at(c, t, s2));
            CHECK(d <= std::abs(s1 - s2) + 1e-9);
        }
    }
}

TEST_CASE("smaller unit ball gives larger arc length") {
    // G_K >= G_M pointwise when K is inside M
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-4, 4);
    NormHandle small = NormHandle::l1();    // diamond inside ...
    NormHandle big = NormHandle::linf();    // ... the square
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point2> v;
        for (int i = 0; i < 5; ++i) v.push_back({u(rng), u(rng)});
        PolygonalCurve c(v);
        CHECK(arc_length(c, small) >= arc_length(c, big) - 1e-12);
    }
}
