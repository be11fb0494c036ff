#include <doctest.h>

#include <numbers>
#include <sstream>

#include "mesh.hpp"
#include "special.hpp"

using namespace ps;

TEST_SUITE("mesh") {

TEST_CASE("disk with an obstacle: invariants, areas, outer prefix") {
    ObstacleSpec ob;
    ob.components = {Shape::disk({0.1, 0}, 0.3)};
    ob.lambda.values = {cplx(0.5, 1)};
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ob, 0.08);
    CHECK_NOTHROW(check_mesh(m));
    CHECK(m.n_components == 1);
    CHECK(region_area(m, 0, true) == doctest::Approx(std::numbers::pi).epsilon(0.01));
    CHECK(region_area(m, 0) == doctest::Approx(std::numbers::pi * 0.09).epsilon(0.02));
    for (int i = 0; i < m.n_outer; ++i) CHECK(norm(m.nodes[i]) == doctest::Approx(1.0));
    const MeshQuality q = mesh_quality(m);
    CHECK(q.min_angle > 15.0 * std::numbers::pi / 180.0);
    CHECK(q.h_max < 2.0 * 0.08);

    const TriMesh e = exterior_submesh(m);
    CHECK(e.n_outer == m.n_outer);
    for (int i = 0; i < e.n_outer; ++i) CHECK(e.nodes[i] == m.nodes[i]);
    CHECK(region_area(e, kExteriorTag) == doctest::Approx(region_area(m, kExteriorTag)));
    CHECK(max_interface_edge(m) > 0);
}

TEST_CASE("boundary loops are closed and ordered") {
    ObstacleSpec ob;
    ob.components = {Shape::ellipse({0.2, 0.1}, 0.3, 0.15, 0.5), Shape::polygon({{-0.6, -0.5}, {-0.2, -0.5}, {-0.3, -0.1}})};
    ob.lambda.values = {cplx(0, 1), cplx(1, 1)};
    const TriMesh m = mesh_domain(Shape::polygon({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}), ob, 0.1);
    CHECK_NOTHROW(check_mesh(m));
    const auto outer = boundary_loops(m, BoundarySelector::Outer);
    REQUIRE(outer.size() == 1);
    CHECK(outer[0].length == doctest::Approx(8.0));
    const auto inner = boundary_loops(m, BoundarySelector::Interface);
    CHECK(inner.size() == 2);
}

TEST_CASE("mesh text round trip") {
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ObstacleSpec{}, 0.3);
    std::stringstream ss;
    write_mesh(ss, m);
    const TriMesh r = read_mesh(ss);
    CHECK(r.n_nodes() == m.n_nodes());
    CHECK(r.n_tris() == m.n_tris());
    CHECK(r.n_outer == m.n_outer);
    CHECK(r.nodes[5] == m.nodes[5]);
}

}

TEST_SUITE("special") {

TEST_CASE("Bessel table values") {
    CHECK(bessel_j0(1.0) == doctest::Approx(0.7651976866).epsilon(1e-9));
    CHECK(bessel_y0(1.0) == doctest::Approx(0.0882569642).epsilon(1e-9));
    CHECK(bessel_j1(1.0) == doctest::Approx(0.4400505857).epsilon(1e-9));
    CHECK(bessel_y1(1.0) == doctest::Approx(-0.7812128213).epsilon(1e-9));
    CHECK(bessel_j0(2.404825557695773) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fundamental solution: gradient and Helmholtz equation by finite differences") {
    const double k = 1.7, h = 1e-4;
    const Point2 x{0.1, -0.2}, y{0.6, 0.3};
    const KernelValue v = kernel(k, y, x);
    const cplx gx = (kernel(k, y + Point2{h, 0}, x).g - kernel(k, y - Point2{h, 0}, x).g) / (2 * h);
    const cplx gy = (kernel(k, y + Point2{0, h}, x).g - kernel(k, y - Point2{0, h}, x).g) / (2 * h);
    CHECK(std::abs(gx - v.gx) < 1e-7);
    CHECK(std::abs(gy - v.gy) < 1e-7);
    const double d = 1e-3;
    const cplx lap = (kernel(k, y + Point2{d, 0}, x).g + kernel(k, y - Point2{d, 0}, x).g +
                      kernel(k, y + Point2{0, d}, x).g + kernel(k, y - Point2{0, d}, x).g - 4.0 * v.g) / (d * d);
    CHECK(std::abs(lap + k * k * v.g) < 1e-5);
}

TEST_CASE("k = 0 kernel is the logarithmic potential") {
    CHECK(hankel_G(0.0, 0.5).real() == doctest::Approx(-std::log(0.5) / (2 * std::numbers::pi)));
    CHECK(std::abs(hankel_G(0.0, 0.5).imag()) < 1e-15);
}

}
