#include <doctest.h>

#include <random>
#include <sstream>

#include "analysis.hpp"
#include "dtn.hpp"

using namespace ps;

namespace {

ObstacleSpec one_disk(Point2 c, double r, cplx lambda) {
    ObstacleSpec ob;
    ob.components = {Shape::disk(c, r)};
    ob.lambda.values = {lambda};
    return ob;
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("plane waves are reproduced without an obstacle") {
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ObstacleSpec{}, 0.04);
    const double k = 2.0;
    VecC f(m.n_outer);
    for (int i = 0; i < m.n_outer; ++i) f[i] = std::exp(cplx(0, k * m.nodes[i].x));
    const VecC u = solve_background(m, k, f);
    const double err = relative_l2_error(m, u, Region::Full, [&](Point2 p) { return std::exp(cplx(0, k * p.x)); });
    CHECK(err < 2e-3);
}

TEST_CASE("concentric disks: series reference and second-order convergence") {
    const ObstacleSpec ob = one_disk({0, 0}, 0.5, cplx(0, 2));
    const auto ref = concentric_reference({0, 0}, 1.0, 0.5, 1.0, cplx(0, 2), 1.0);
    CHECK(std::abs(ref({1.0, 0.0}) - 1.0) < 1e-12);
    double prev = 0;
    for (double h : {0.08, 0.04}) {
        const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ob, h);
        const TriMesh e = exterior_submesh(m);
        const VecC u = solve_obstacle_problem(e, 1.0, ob.lambda, VecC::Ones(m.n_outer));
        const double err = relative_l2_error(e, u, Region::Full, ref);
        if (prev > 0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.2));
        prev = err;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("solution CSV has id, x, y, Re, Im") {
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ObstacleSpec{}, 0.5);
    std::stringstream ss;
    write_solution_csv(ss, m, VecC::Ones(m.n_nodes()));
    std::string header;
    std::getline(ss, header);
    CHECK(header == "node,x,y,re,im");
}

}

TEST_SUITE("dtn") {

TEST_CASE("gap identity on random data and positivity of the imaginary part") {
    const ObstacleSpec ob = one_disk({0.1, 0}, 0.3, cplx(0.5, 1.0));
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ob, 0.08);
    DtnContext dtn(m, 2.0, ob.lambda);
    std::mt19937_64 rng(11);
    for (int s = 0; s < 3; ++s) {
        const VecC f = random_boundary_data(m, rng);
        const IdentityReport r = verify_identity(dtn, f);
        CHECK(r.rel_err < 1e-8);
        CHECK(r.imag_rel_err < 1e-6);
        CHECK(r.rhs.imag() > 0);
    }
}

TEST_CASE("DtN pairings are symmetric and the gap vanishes without obstacle") {
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ObstacleSpec{}, 0.15);
    DtnContext dtn(m, 1.0, ImpedanceSpec{});
    std::mt19937_64 rng(3);
    const VecC f = random_boundary_data(m, rng), g = random_boundary_data(m, rng);
    CHECK(std::abs(dtn.pair0(f, g) - dtn.pair0(g, f)) < 1e-9 * std::abs(dtn.pair0(f, g)));
    CHECK(std::abs(dtn.gap(f).value) < 1e-9 * f.squaredNorm());
    const Eigen::MatrixXcd D = dense_dtn(dtn.background_solver());
    CHECK((D - D.transpose()).norm() < 1e-9 * D.norm());
}

TEST_CASE("field_gap of a plane wave agrees with the finite element gap") {
    const ObstacleSpec ob = one_disk({0.0, 0}, 0.3, cplx(1.0, 1.0));
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ob, 0.04);
    const double k = 1.0;
    DtnContext dtn(m, k, ob.lambda);
    VecC f(m.n_outer);
    for (int i = 0; i < m.n_outer; ++i) f[i] = std::exp(cplx(0, k * m.nodes[i].y));
    const GapParts fe = dtn.gap(f).parts;
    const GapParts ex = field_gap(dtn, [&](Point2 p) {
        const cplx e = std::exp(cplx(0, k * p.y));
        return KernelValue{e, 0.0, cplx(0, k) * e};
    }, {1e30, 1e30});
    CHECK(ex.real_sum() == doctest::Approx(fe.real_sum()).epsilon(0.02));
    CHECK(ex.imag == doctest::Approx(fe.imag).epsilon(0.02));
}

}
