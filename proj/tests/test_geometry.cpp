#include <doctest.h>

#include <numbers>

#include "error.hpp"
#include "geometry.hpp"

using namespace ps;

TEST_SUITE("geometry") {

TEST_CASE("disk containment, area and support function") {
    const Shape d = Shape::disk({0.2, -0.1}, 0.5);
    CHECK(shape_contains(d, {0.2, 0.3}));
    CHECK_FALSE(shape_contains(d, {0.8, -0.1}));
    CHECK(shape_area(d) == doctest::Approx(std::numbers::pi * 0.25));
    CHECK(shape_perimeter(d) == doctest::Approx(std::numbers::pi));
    for (double a = 0; a < 6.28; a += 0.7) {
        const Point2 w{std::cos(a), std::sin(a)};
        CHECK(support_function(d, w) == doctest::Approx(dot(d.center, w) + 0.5));
    }
}

TEST_CASE("ellipse and polygon support functions bound every boundary sample") {
    const Shape e = Shape::ellipse({0.1, 0.0}, 0.4, 0.2, 0.3);
    const Shape p = Shape::polygon({{-0.3, -0.2}, {0.3, -0.2}, {0.1, 0.3}});
    for (const Shape* s : {&e, &p}) {
        const auto pts = sample_boundary(*s, 0.005);
        for (double a = 0; a < 6.28; a += 0.5) {
            const Point2 w{std::cos(a), std::sin(a)};
            double mx = -1e9;
            for (auto& q : pts) mx = std::max(mx, dot(q, w));
            CHECK(support_function(*s, w) >= mx - 1e-12);
            CHECK(support_function(*s, w) <= mx + 1e-3);
        }
    }
}

TEST_CASE("nearest boundary point lies on the boundary") {
    const Shape e = Shape::ellipse({0.0, 0.0}, 0.5, 0.25, 0.0);
    const Point2 q = nearest_boundary_point(e, {0.9, 0.1});
    CHECK((q.x * q.x) / 0.25 + (q.y * q.y) / 0.0625 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(dist(q, {0.9, 0.1}) <= dist({0.5, 0.0}, {0.9, 0.1}) + 1e-12);
}

TEST_CASE("invalid shapes are rejected") {
    CHECK_THROWS_AS(validate_shape(Shape::disk({0, 0}, -1.0)), GeometryError);
    CHECK_THROWS_AS(validate_shape(Shape::polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}})), GeometryError);
}

TEST_CASE("obstacle validation: containment, disjointness, impedance") {
    const Shape dom = Shape::disk({0, 0}, 1.0);
    ObstacleSpec ok;
    ok.components = {Shape::disk({0.3, 0}, 0.2), Shape::disk({-0.4, 0}, 0.2)};
    ok.lambda.values = {cplx(1, 1), cplx(0, 0.5)};
    CHECK_NOTHROW(validate_obstacle(dom, ok));
    CHECK(ok.lambda.bound_L() == doctest::Approx(2.0));

    ObstacleSpec overlap = ok;
    overlap.components[1] = Shape::disk({0.0, 0}, 0.2);
    CHECK_THROWS_AS(validate_obstacle(dom, overlap), GeometryError);

    ObstacleSpec outside = ok;
    outside.components[0] = Shape::disk({0.9, 0}, 0.2);
    CHECK_THROWS_AS(validate_obstacle(dom, outside), GeometryError);

    ObstacleSpec lossless = ok;
    lossless.lambda.values[0] = cplx(1, 0);
    CHECK_THROWS(validate_obstacle(dom, lossless));
}

TEST_CASE("needles: construction and hit classification") {
    const Shape dom = Shape::disk({0, 0}, 1.0);
    ObstacleSpec ob;
    ob.components = {Shape::disk({0, 0}, 0.3)};
    ob.lambda.values = {cplx(0, 1)};
    const Needle miss = straight_needle({0.6, 0}, {1, 0}, dom);
    CHECK(miss.length() == doctest::Approx(0.4));
    CHECK(needle_hits(miss, ob) == NeedleHit::MissesClosure);
    const Needle hit = straight_needle({0.1, 0}, {1, 0}, dom);
    CHECK(needle_hits(hit, ob) == NeedleHit::HitsOpenD);
    const Needle graze = make_needle({{0.3, std::sqrt(0.91)}, {0.3, 0.0}}, dom);
    CHECK(needle_hits(graze, ob) == NeedleHit::GrazesBoundaryOnly);
    CHECK_THROWS_AS(straight_needle({0.5, 0}, {2, 0}, dom), GeometryError);
}

TEST_CASE("ray exit point of a disk") {
    const Shape d = Shape::disk({0, 0}, 0.5);
    const Point2 q = ray_exit_point(d, {0.1, 0}, {0, 1});
    CHECK(norm(q) == doctest::Approx(0.5));
    CHECK(q.x == doctest::Approx(0.1));
}

}
