#include <doctest.h>

#include <atomic>
#include <stdexcept>

#include "error.hpp"
#include "probe.hpp"

using namespace ps;

TEST_SUITE("needle") {

TEST_CASE("tube radii shrink and Tikhonov levels are log-uniform") {
    NeedleParams p;
    CHECK_NOTHROW(p.validate());
    CHECK(p.tube_radius(1, 0.7) == doctest::Approx(0.9 * 0.7));
    CHECK(p.tube_radius(p.n_max, 0.7) == doctest::Approx(0.65 * 0.7));
    for (int n = 2; n <= p.n_max; ++n) {
        CHECK(p.tube_radius(n, 0.7) < p.tube_radius(n - 1, 0.7));
        const double r1 = p.alpha(n) / p.alpha(n - 1), r2 = p.alpha(2) / p.alpha(1);
        CHECK(r1 == doctest::Approx(r2));
    }
    NeedleParams bad;
    bad.alpha_first = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("strictly increasing tail") {
    CHECK(strictly_increasing_tail({5, 1, 2, 3}, 3));
    CHECK_FALSE(strictly_increasing_tail({1, 2, 2}, 3));
    CHECK_FALSE(strictly_increasing_tail({1, 2}, 3));
}

TEST_CASE("needle sequence: off-needle convergence to the fundamental solution, blowup on the needle") {
    const Shape dom = Shape::disk({0, 0}, 1.0);
    const double k = 1.0;
    MfsBasis basis(dom, k, NeedleParams{});
    const Point2 tip{0.3, 0.0};
    const NeedleSequence seq = build_needle_sequence(basis, straight_needle(tip, {1, 0}, dom));
    REQUIRE(seq.terms.size() == 8u);
    const Point2 far{-0.5, 0.2};
    const cplx G = kernel(k, far, tip).g;
    const cplx v = mfs_eval(basis, seq.terms.back().coeffs, far).g;
    CHECK(std::abs(v - G) < 0.05 * std::abs(G));
    const GrowthReport mid = needle_blowup_check(basis, seq, ProbeRegion::ball({0.65, 0}, 0.1));
    CHECK(mid.increasing_tail);
    CHECK(mid.growth > 1e3);
}

}

TEST_SUITE("probe") {

TEST_CASE("classification rules") {
    ClassifyParams p;
    CHECK(classify({1.0, 1.3, 1.01, 1.005, 1.0}, 0.0, p).kind == SeriesClass::Converged);
    CHECK(classify({1.0, 1.3, 1.01, 1.005, 1.0}, 0.0, p).limit == doctest::Approx(1.0));
    CHECK(classify({1, 10, 100, 1000}, 1.0, p).kind == SeriesClass::Blowup);
    CHECK(classify({1, 2, 3, 4}, 1.0, p).kind == SeriesClass::Undecided);  // below 10x the scale
    CHECK(classify({1, 3, 2, 5}, 0.0, p).kind == SeriesClass::Undecided);
    CHECK(classify({0, 0, 0}, 0.0, p).kind == SeriesClass::Converged);
    CHECK(classify({1.0}, 0.0, p).kind == SeriesClass::Undecided);
}

TEST_CASE("parallel_for visits every index and rethrows") {
    std::atomic<int> sum{0};
    parallel_for(100, 4, [&](int i) { sum += i; });
    CHECK(sum == 4950);
    CHECK_THROWS_AS(parallel_for(10, 3, [](int i) { if (i == 7) throw std::runtime_error("x"); }), std::runtime_error);
}

TEST_CASE("indicator function grows toward the obstacle and is rotation invariant for a centered disk") {
    const Shape dom = Shape::disk({0, 0}, 1.0);
    ObstacleSpec ob;
    ob.components = {Shape::disk({0, 0}, 0.3)};
    ob.lambda.values = {cplx(0.01, 0.05)};
    const TriMesh m = mesh_domain(dom, ob, 0.04);
    DtnContext dtn(m, 0.5, ob.lambda);
    CHECK(min_probe_distance(m) > 0);
    double prev = 0;
    for (double d : {0.4, 0.2, 0.1}) {
        const double v = indicator_function(dtn, ob, {0.3 + d, 0}).value;
        CHECK(v > prev);
        prev = v;
    }
    const double a = indicator_function(dtn, ob, {0.5, 0}).value;
    const double b = indicator_function(dtn, ob, {0, -0.5}).value;
    CHECK(a == doctest::Approx(b).epsilon(0.01));
    CHECK_THROWS(indicator_function(dtn, ob, {0.31, 0}));
}

TEST_CASE("Hausdorff distance of boundary samples") {
    ObstacleSpec ob;
    ob.components = {Shape::disk({0, 0}, 0.3)};
    ob.lambda.values = {cplx(0, 1)};
    std::vector<Point2> pts;
    for (int i = 0; i < 64; ++i) pts.push_back({0.32 * std::cos(i * 0.0982), 0.32 * std::sin(i * 0.0982)});
    CHECK(hausdorff_to_obstacle(pts, ob) == doctest::Approx(0.02).epsilon(0.05));
    CHECK(std::isinf(hausdorff_to_obstacle({}, ob)));
}

TEST_CASE("empty obstacle reconstruction is all outside") {
    const Shape dom = Shape::disk({0, 0}, 1.0);
    const ObstacleSpec ob;
    const TriMesh m = mesh_domain(dom, ob, 0.15);
    DtnContext dtn(m, 1.0, ob.lambda);
    MfsBasis basis(dom, 1.0, NeedleParams{}, &m);
    ExactFieldGap eg(dtn, basis);
    const ProbeSetup s{dom, ob, dtn, basis, &eg};
    const Reconstruction r = reconstruct(s, 0.4, NeedlePolicy{}, ClassifyParams{}, 2);
    CHECK(r.points.size() > 5u);
    for (auto& g : r.points) CHECK(g.flag == 0);
    CHECK(r.boundary.empty());
}

}
