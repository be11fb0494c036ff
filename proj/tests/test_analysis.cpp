#include <doctest.h>

#include "analysis.hpp"

using namespace ps;

namespace {

constexpr double kJ01 = 2.404825557695773;
constexpr double kJp11 = 1.841183781340659;

ObstacleSpec bench() {
    ObstacleSpec ob;
    ob.components = {Shape::disk({0, 0}, 0.3)};
    ob.lambda.values = {cplx(0.01, 0.05)};
    return ob;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("Poincare calibrations on the unit disk") {
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ObstacleSpec{}, 0.05);
    CHECK(estimate_poincare_C0(m) == doctest::Approx(1.0 / kJ01).epsilon(0.02));
    CHECK(estimate_poincare_mean(m) == doctest::Approx(1.0 / kJp11).epsilon(0.02));
}

TEST_CASE("trace constant of the unit disk onto its boundary") {
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ObstacleSpec{}, 0.08);
    const TraceConstant t = estimate_trace_constant(m, BoundarySelector::Outer);
    CHECK(t.eps.size() == 9u);
    CHECK(t.K >= 1.8);
    CHECK(t.K < 4.0);
}

TEST_CASE("constants, conditions and audits on the benchmark") {
    const ObstacleSpec ob = bench();
    const TriMesh m = mesh_domain(Shape::disk({0, 0}, 1.0), ob, 0.06);
    const ConstantsReport c = estimate_constants(m, ob, 0.06);
    CHECK(c.L == doctest::Approx(0.06));
    CHECK(c.C_U[0] == doctest::Approx(0.3 / kJp11).epsilon(0.02));
    const ConditionsReport r = check_smallness(c, 0.5);
    CHECK(r.holds_blowup);
    CHECK(r.max_L > c.L);
    // beyond the largest admissible L the blowup conditions must fail
    CHECK_FALSE(check_smallness(c, 0.5, 1.2 * r.max_L).holds_blowup);
    for (size_t i = 1; i < r.eps.size(); ++i) CHECK(r.eps[i] > r.eps[i - 1]);
    for (auto& a : audit_constants(m, c, 20, 5)) {
        CHECK_MESSAGE(a.violations == 0, a.name);
        CHECK(a.max_ratio <= 1.0);
    }
}

TEST_CASE("condition functions move in the expected direction") {
    ConstantsReport c;
    c.C0 = 0.36;
    c.C_U = {0.16};
    c.K_ext.K = 0.86;
    c.K_D.K = 6.0;
    CHECK(cond_exterior(c, 0.5, 0.06, 0.3) < cond_exterior(c, 0.6, 0.06, 0.3));
    CHECK(cond_exterior(c, 0.5, 0.06, 0.3) < cond_exterior(c, 0.5, 0.08, 0.3));
    CHECK(cond_obstacle(c, 0.5, 0.06, 0.3) > cond_obstacle(c, 0.5, 0.08, 0.3));
    CHECK(cond_reflected(c, 0.5, 0.06, 0.3) > cond_obstacle(c, 0.5, 0.06, 0.3));
}

TEST_CASE("dominance and reflected-blowup checks on synthetic series") {
    IndicatorSeries s;
    for (int n = 1; n <= 8; ++n) {
        s.n.push_back(n);
        s.vD_grad.push_back(n * n);
        s.vD_mass.push_back(0.5 * n);
        s.w_grad.push_back(n);
        s.values.push_back(n);
    }
    const DominanceReport d = gradient_dominance_check(s);
    CHECK(d.ratios.size() == 8u);
    CHECK(d.bounded);
    ConditionsReport cond;
    cond.holds_reflected = true;
    const ReflectedBlowupCheck r = reflected_blowup_check(s, cond);
    CHECK(r.v_blowup);
    CHECK(r.w_increasing);
    CHECK(r.consistent);
    s.w_grad.back() = 0;
    CHECK_FALSE(reflected_blowup_check(s, cond).consistent);
}

}
