#include <doctest.h>

#include <numbers>

#include "enclosure.hpp"
#include "error.hpp"

using namespace ps;

TEST_SUITE("enclosure") {

TEST_CASE("CGO phase satisfies zeta . zeta = -k^2") {
    for (double k : {0.0, 0.5, 3.0})
        for (double tau : {0.0, 1.0, 7.5}) {
            const CgoParams p = CgoParams::make({std::cos(0.3), std::sin(0.3)}, tau, k, 0.0);
            const auto [z1, z2] = p.zeta();
            CHECK(std::abs(z1 * z1 + z2 * z2 + k * k) < 1e-12 * (1 + tau * tau));
        }
}

TEST_CASE("CGO with tau = 0 and k = 0 has unit trace") {
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ObstacleSpec{}, 0.3);
    const VecC f = cgo_trace(CgoParams::make({1, 0}, 0.0, 0.0, 0.0), m);
    for (int i = 0; i < f.size(); ++i) CHECK(std::abs(f[i] - 1.0) < 1e-15);
}

TEST_CASE("CGO solves the Helmholtz equation and its gradient is consistent") {
    const double k = 1.3, d = 1e-3;
    const CgoParams p = CgoParams::make({0.6, 0.8}, 3.0, k, 0.5);
    const Point2 x{0.2, -0.1};
    const KernelValue v = p.eval(x);
    const cplx lap = (p.eval(x + Point2{d, 0}).g + p.eval(x - Point2{d, 0}).g + p.eval(x + Point2{0, d}).g +
                      p.eval(x - Point2{0, d}).g - 4.0 * v.g) / (d * d);
    CHECK(std::abs(lap + k * k * v.g) < 1e-4 * std::abs(v.g) * 100);
    const cplx gx = (p.eval(x + Point2{d, 0}).g - p.eval(x - Point2{d, 0}).g) / (2 * d);
    CHECK(std::abs(gx - v.gx) < 1e-5 * std::abs(v.gx) * 10);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(CgoParams::make({1, 0}, -1.0, 0.0, 0.0).validate(), ConfigError);
    EnclosureParams e;
    e.tau = {1, 2, 3};
    CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("half-plane intersection, clipping and area") {
    std::vector<HalfPlane> planes;
    for (auto w : uniform_directions(4)) planes.push_back({w, 0.5});
    const auto poly = intersect_half_planes(planes, 10.0);
    CHECK(polygon_area(poly) == doctest::Approx(1.0));
    const auto clipped = clip_polygon(poly, {{{1, 0}, 0.0}});
    CHECK(polygon_area(clipped) == doctest::Approx(0.5));
    ObstacleSpec ob;
    ob.components = {Shape::disk({0, 0}, 0.4)};
    ob.lambda.values = {cplx(0, 1)};
    CHECK(hull_coverage(planes, ob) == doctest::Approx(1.0));
    CHECK(hull_coverage({{{1, 0}, 0.0}}, ob) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("support estimate for a small off-center disk") {
    ObstacleSpec ob;
    ob.components = {Shape::disk({0.3, 0}, 0.2)};
    ob.lambda.values = {cplx(1, 2)};
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ob, 0.04);
    DtnContext dtn(m, 0.5, ob.lambda);
    EnclosureParams p;
    for (int t = 2; t <= 12; ++t) p.tau.push_back(t);
    const SupportEstimate e = estimate_support(dtn, {1, 0}, p);
    CHECK(e.h_hat >= 0.45);
    CHECK(e.h_hat <= 0.55);
    CHECK(e.r2 >= 0.99);
    CHECK(e.above.pass);
}

}
