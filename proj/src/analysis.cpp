#include "analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "enclosure.hpp"
#include "error.hpp"

namespace ps {

namespace {

constexpr int kMaxIter = 20000;
constexpr double kEigTol = 1e-8;

SpMat block(const SpMat& A, const std::vector<int>& rows, const std::vector<int>& cols) {
    std::vector<int> cmap(A.cols(), -1);
    for (size_t j = 0; j < cols.size(); ++j) cmap[cols[j]] = static_cast<int>(j);
    std::vector<Eigen::Triplet<double>> t;
    for (size_t i = 0; i < rows.size(); ++i) {
        // A is symmetric, so column rows[i] holds row rows[i].
        for (SpMat::InnerIterator it(A, rows[i]); it; ++it)
            if (cmap[it.row()] >= 0) t.emplace_back(static_cast<int>(i), cmap[it.row()], it.value());
    }
    SpMat B(rows.size(), cols.size());
    B.setFromTriplets(t.begin(), t.end());
    return B;
}

VecR start_vector(int n) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    VecR x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng);
    return x;
}

struct ComponentIntegrals {
    double grad = 0.0;
    double mass = 0.0;
    cplx integral{0.0, 0.0};
    double area = 0.0;
};

ComponentIntegrals component_integrals(const TriMesh& full, const VecC& v, int component) {
    ComponentIntegrals r;
    for (int t = 0; t < full.n_tris(); ++t) {
        if (full.tri_tag[t] != component) continue;
        const auto& tri = full.tris[t];
        const Point2 p0 = full.nodes[tri[0]], p1 = full.nodes[tri[1]], p2 = full.nodes[tri[2]];
        const double area = 0.5 * std::abs(cross(p1 - p0, p2 - p0));
        const double det = cross(p1 - p0, p2 - p0);
        const cplx a = v[tri[0]], b = v[tri[1]], c = v[tri[2]];
        const cplx gx = ((b - a) * (p2.y - p0.y) - (c - a) * (p1.y - p0.y)) / det;
        const cplx gy = ((c - a) * (p1.x - p0.x) - (b - a) * (p2.x - p0.x)) / det;
        r.grad += area * (std::norm(gx) + std::norm(gy));
        r.mass += area / 6.0 *
                  (std::norm(a) + std::norm(b) + std::norm(c) +
                   (a * std::conj(b) + b * std::conj(c) + c * std::conj(a)).real());
        r.integral += area / 3.0 * (a + b + c);
        r.area += area;
    }
    return r;
}

double interface_trace(const TriMesh& m, const VecC& u, const ImpedanceSpec* lambda, bool re_weight) {
    double s = 0.0;
    for (auto& e : m.edges) {
        if (e.tag < 0) continue;
        const double l = dist(m.nodes[e.a], m.nodes[e.b]);
        const cplx a = u[e.a], b = u[e.b];
        const double wgt = re_weight ? lambda->at(e.tag).real() : 1.0;
        s += wgt * l / 3.0 * (std::norm(a) + std::norm(b) + (a * std::conj(b)).real());
    }
    return s;
}

}  // namespace

double estimate_poincare_C0(const TriMesh& region) {
    const AssembledForms f = assemble(region, Region::Full, ImpedanceSpec{});
    std::vector<int> free;
    for (int i = region.n_outer; i < region.n_nodes(); ++i) free.push_back(i);
    if (free.empty()) throw SolverError("Poincare estimate needs interior nodes");
    const SpMat A = block(f.A, free, free), M = block(f.M, free, free);
    Eigen::SimplicialLDLT<SpMat> chol(A);
    if (chol.info() != Eigen::Success) throw SolverError("stiffness factorization failed");
    VecR x = start_vector(static_cast<int>(free.size()));
    double lam = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
        VecR y = chol.solve(M * x);
        y /= std::sqrt(y.dot(M * y));
        const double next = y.dot(A * y);
        x = y;
        if (it > 0 && std::abs(next - lam) <= kEigTol * next) return 1.0 / std::sqrt(next);
        lam = next;
    }
    throw SolverError("inverse iteration for the Poincare constant did not converge");
}

double estimate_poincare_mean(const TriMesh& component) {
    const AssembledForms f = assemble(component, Region::Full, ImpedanceSpec{});
    const SpMat P = f.A + f.M;
    Eigen::SimplicialLDLT<SpMat> chol(P);
    if (chol.info() != Eigen::Success) throw SolverError("Neumann factorization failed");
    const int n = component.n_nodes();
    const VecR one = VecR::Ones(n);
    const VecR Mone = f.M * one;
    const double mass = one.dot(Mone);
    auto deflate = [&](VecR& x) { x -= (Mone.dot(x) / mass) * one; };
    VecR x = start_vector(n);
    for (int i = 0; i < n; ++i) x[i] += component.nodes[i].x + 0.5 * component.nodes[i].y;
    deflate(x);
    double mu = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
        VecR y = chol.solve(f.M * x);
        deflate(y);
        y /= std::sqrt(y.dot(f.M * y));
        const double next = y.dot(f.A * y);
        x = y;
        if (it > 0 && std::abs(next - mu) <= kEigTol * next) return 1.0 / std::sqrt(next);
        mu = next;
    }
    throw SolverError("inverse iteration for the mean-value Poincare constant did not converge");
}

std::vector<double> default_trace_eps() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

TraceConstant estimate_trace_constant(const TriMesh& W, BoundarySelector gamma, const std::vector<double>& eps) {
    const AssembledForms f = assemble(W, Region::Full, ImpedanceSpec{});
    const SpMat B = boundary_mass(W, gamma);
    std::vector<char> on(W.n_nodes(), 0);
    for (auto& e : W.edges)
        if ((gamma == BoundarySelector::Outer) == (e.tag == kOuterTag)) on[e.a] = on[e.b] = 1;
    std::vector<int> g, in;
    for (int i = 0; i < W.n_nodes(); ++i) (on[i] ? g : in).push_back(i);
    if (g.empty()) throw SolverError("trace constant: no boundary nodes selected");
    const Eigen::MatrixXd Bgg = Eigen::MatrixXd(block(B, g, g));
    TraceConstant tc;
    for (double e : eps) {
        if (!(e > 0 && e < 1)) throw ConfigError("trace constant eps must lie in ]0, 1[");
        const SpMat P = e * f.A + (1.0 / e) * f.M;
        Eigen::MatrixXd S = Eigen::MatrixXd(block(P, g, g));
        if (!in.empty()) {
            const SpMat Pii = block(P, in, in);
            const Eigen::MatrixXd Pig = Eigen::MatrixXd(block(P, in, g));
            Eigen::SimplicialLDLT<SpMat> chol(Pii);
            if (chol.info() != Eigen::Success) throw SolverError("trace constant factorization failed");
            S -= Pig.transpose() * chol.solve(Pig);
        }
        S = 0.5 * (S + S.transpose());
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Bgg, S, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw SolverError("trace constant eigensolve failed");
        const double mu = es.eigenvalues().maxCoeff();
        tc.eps.push_back(e);
        tc.mu_max.push_back(mu);
        tc.K = std::max(tc.K, mu);
    }
    return tc;
}

ConstantsReport estimate_constants(const TriMesh& full, const ObstacleSpec& obstacle, double h) {
    if (obstacle.empty()) throw ConfigError("constants need an obstacle");
    ConstantsReport c;
    c.h = h;
    const TriMesh ext = exterior_submesh(full);
    const TriMesh inner = interior_submesh(full, -1);
    c.C0 = estimate_poincare_C0(ext);
    for (int j = 0; j < full.n_components; ++j) {
        const TriMesh dj = interior_submesh(full, j);
        c.C_U.push_back(estimate_poincare_mean(dj));
        c.area_D.push_back(region_area(full, j));
    }
    c.K_ext = estimate_trace_constant(ext, BoundarySelector::Interface);
    c.K_D = estimate_trace_constant(inner, BoundarySelector::Interface);
    c.L = obstacle.lambda.bound_L();
    return c;
}

double cond_exterior(const ConstantsReport& c, double k, double L, double eps) {
    return 2 * c.K_ext.K * L * eps + (k * k + 2 * c.K_ext.K * L / eps) * c.C0 * c.C0;
}

double cond_obstacle(const ConstantsReport& c, double k, double L, double eps) {
    double m = INFINITY;
    for (double cu : c.C_U)
        m = std::min(m, 1 - 2 * c.K_D.K * L * eps - 2 * (k * k + 2 * c.K_D.K * L / eps) * cu * cu * 4.0);
    return m;
}

double cond_reflected(const ConstantsReport& c, double k, double L, double eps) {
    double m = INFINITY;
    for (double cu : c.C_U)
        m = std::min(m, 1 - c.K_D.K * L * eps - 2 * (k * k + c.K_D.K * L / eps) * cu * cu * 4.0);
    return m;
}

namespace {

bool blowup_satisfiable(const ConstantsReport& c, double k, double L) {
    for (int i = 1; i <= 99; ++i) {
        const double e = i / 100.0;
        if (cond_exterior(c, k, L, e) <= 1 && cond_obstacle(c, k, L, e) > 0) return true;
    }
    return false;
}

}  // namespace

ConditionsReport check_smallness(const ConstantsReport& c, double k, double L) {
    ConditionsReport r;
    r.k = k;
    r.L = L >= 0 ? L : c.L;
    double best = INFINITY, best_any = INFINITY, best48 = -INFINITY;
    for (int i = 1; i <= 99; ++i) {
        const double e = i / 100.0;
        r.eps.push_back(e);
        r.exterior.push_back(cond_exterior(c, k, r.L, e));
        r.obstacle.push_back(cond_obstacle(c, k, r.L, e));
        r.reflected.push_back(cond_reflected(c, k, r.L, e));
        const bool both = r.exterior.back() <= 1 && r.obstacle.back() > 0;
        r.holds_blowup = r.holds_blowup || both;
        r.holds_reflected = r.holds_reflected || r.reflected.back() > 0;
        if (r.obstacle.back() > 0 && r.exterior.back() < best) {
            best = r.exterior.back();
            r.eps_star = e;
        }
        if (r.exterior.back() < best_any) {
            best_any = r.exterior.back();
            if (!std::isfinite(best)) r.eps_star = e;
        }
        if (r.reflected.back() > best48) {
            best48 = r.reflected.back();
            r.eps_star_reflected = e;
        }
    }
    if (blowup_satisfiable(c, k, 0.0)) {
        double lo = 0.0, hi = 1.0;
        while (blowup_satisfiable(c, k, hi) && hi < 1e12) {
            lo = hi;
            hi *= 2;
        }
        for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (blowup_satisfiable(c, k, mid) ? lo : hi) = mid;
        }
        r.max_L = lo;
    }
    return r;
}

VecC random_fe_function(const TriMesh& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), ang(0.0, 2 * std::numbers::pi), kap(0.0, 8.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    const int waves = 4;
    std::vector<Point2> kv;
    std::vector<double> ph;
    std::vector<cplx> amp;
    for (int j = 0; j < waves; ++j) {
        const double a = ang(rng), r = kap(rng);
        kv.push_back({r * std::cos(a), r * std::sin(a)});
        ph.push_back(ang(rng));
        amp.push_back({u(rng), u(rng)});
    }
    const cplx offset{u(rng), u(rng)};
    VecC f(m.n_nodes());
    for (int i = 0; i < m.n_nodes(); ++i) {
        cplx s = offset;
        for (int j = 0; j < waves; ++j) s += amp[j] * std::cos(dot(kv[j], m.nodes[i]) + ph[j]);
        f[i] = s + cplx(noise(rng), noise(rng));
    }
    return f;
}

VecC random_boundary_data(const TriMesh& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int modes = 6;
    std::vector<cplx> a(2 * modes + 1);
    for (auto& x : a) x = {u(rng), u(rng)};
    VecC f(m.n_outer);
    for (int i = 0; i < m.n_outer; ++i) {
        const double th = std::atan2(m.nodes[i].y, m.nodes[i].x);
        cplx s = 0.0;
        for (int j = -modes; j <= modes; ++j) s += a[j + modes] * std::exp(cplx(0.0, j * th)) / (1.0 + std::abs(j));
        f[i] = s;
    }
    return f;
}

namespace {

void record(InequalityAudit& a, double lhs, double rhs) {
    // lhs <= rhs is the inequality; roundoff slack relative to the larger side.
    ++a.samples;
    const double slack = 1e-10 * std::max(std::abs(lhs), std::abs(rhs));
    if (lhs > rhs + slack) ++a.violations;
    if (rhs > 0) a.max_ratio = std::max(a.max_ratio, lhs / rhs);
}

}  // namespace

std::vector<InequalityAudit> audit_constants(const TriMesh& full, const ConstantsReport& c, int n,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const TriMesh ext = exterior_submesh(full);
    const TriMesh inner = interior_submesh(full, -1);
    std::vector<TriMesh> comps;
    for (int j = 0; j < full.n_components; ++j) comps.push_back(interior_submesh(full, j));

    InequalityAudit p0{"poincare_exterior"}, pm{"poincare_mean"}, te{"trace_exterior"}, td{"trace_obstacle"};
    for (int s = 0; s < n; ++s) {
        VecC w = random_fe_function(ext, rng);
        w.head(ext.n_outer).setZero();
        const Energy ew = energy(ext, w, Region::Full);
        record(p0, ew.mass, c.C0 * c.C0 * ew.dirichlet);

        for (size_t j = 0; j < comps.size(); ++j) {
            const VecC v = random_fe_function(comps[j], rng);
            const ComponentIntegrals ci = component_integrals(comps[j], v, static_cast<int>(j));
            VecC d = v;
            d.array() -= ci.integral / ci.area;
            const Energy ed = energy(comps[j], d, Region::Full);
            record(pm, ed.mass, c.C_U[j] * c.C_U[j] * 4.0 * ed.dirichlet);
        }

        const VecC ue = random_fe_function(ext, rng);
        const Energy ee = energy(ext, ue, Region::Full);
        const double tre = interface_trace(ext, ue, nullptr, false);
        const VecC ud = random_fe_function(inner, rng);
        const Energy ed = energy(inner, ud, Region::Full);
        const double trd = interface_trace(inner, ud, nullptr, false);
        for (double e : c.K_ext.eps) record(te, tre, c.K_ext.K * (e * ee.dirichlet + ee.mass / e));
        for (double e : c.K_D.eps) record(td, trd, c.K_D.K * (e * ed.dirichlet + ed.mass / e));
    }
    return {p0, pm, te, td};
}

std::vector<InequalityAudit> chain_audit(const DtnContext& dtn, const ConstantsReport& c,
                                         const std::vector<VecC>& data) {
    InequalityAudit a1{"gap_trace_bound"}, a2{"gap_poincare_bound"}, a3{"gap_basic_inequality"},
        a5{"gap_exterior_mass_bound"}, a7{"obstacle_energy_bound"};
    const TriMesh& full = dtn.full();
    const double k2 = dtn.k() * dtn.k();
    const double L = c.L;
    double area = 0.0;
    for (double x : c.area_D) area += x;
    for (const VecC& f : data) {
        const GapFields g = dtn.fields(f);
        const GapParts p = dtn.parts(g.v, g.w);
        const double gap = p.real_sum();
        const Energy ew = energy(dtn.exterior(), g.w, Region::Exterior);
        const Energy ev = energy(full, g.v, Region::Interior);
        const double re_v = interface_trace(full, g.v, &dtn.lambda(), true);
        const double lhs7 = ev.dirichlet - k2 * ev.mass + re_v;
        std::vector<ComponentIntegrals> ci;
        for (int j = 0; j < full.n_components; ++j) ci.push_back(component_integrals(full, g.v, j));
        for (size_t i = 0; i < c.K_ext.eps.size(); ++i) {
            const double e = c.K_ext.eps[i];
            const double Ke = c.K_ext.K, Kd = c.K_D.K;
            const double vpart = (1 - 2 * Kd * L * e) * ev.dirichlet - (k2 + 2 * Kd * L / e) * ev.mass;
            const double r1 = (1 - 2 * Ke * L * e) * ew.dirichlet - (k2 + 2 * Ke * L / e) * ew.mass + vpart;
            record(a1, r1, gap);
            const double r2 = (1 - 2 * Ke * L * e - (k2 + 2 * Ke * L / e) * c.C0 * c.C0) * ew.dirichlet + vpart;
            record(a2, r2, gap);
            if (cond_exterior(c, dtn.k(), L, e) <= 1) {
                double r3 = 0.0, means = 0.0;
                for (size_t j = 0; j < ci.size(); ++j) {
                    const double cu = c.C_U[j];
                    r3 += (1 - 2 * Kd * L * e - 2 * (k2 + 2 * Kd * L / e) * cu * cu * 4.0) * ci[j].grad;
                    means += std::norm(ci[j].integral / ci[j].area);
                }
                r3 -= 2 * (k2 + 2 * Kd * L / e) * area * means;
                record(a3, r3, gap);
            }
            if (2 * Ke * L * e <= 1 && 2 * Kd * L * e < 1) {
                const double r5 = -(k2 + 2 * Ke * L / e) * ew.mass + vpart;
                record(a5, r5, gap);
            }
            const double r7 = (1 - Kd * L * e) * ev.dirichlet - (k2 + Kd * L / e) * ev.mass;
            record(a7, r7, lhs7);
        }
    }
    return {a1, a2, a3, a5, a7};
}

std::vector<Point2> ray_points(const ObstacleSpec& obstacle, Point2 a, const std::vector<double>& distances) {
    int comp = -1;
    double best = INFINITY;
    for (size_t j = 0; j < obstacle.components.size(); ++j) {
        const double d = dist(nearest_boundary_point(obstacle.components[j], a), a);
        if (d < best) {
            best = d;
            comp = static_cast<int>(j);
        }
    }
    if (comp < 0) throw GeometryError("ray needs an obstacle");
    const Shape& s = obstacle.components[comp];
    const Point2 b = nearest_boundary_point(s, a);
    // Outward normal from a centered difference of nearby boundary points.
    const double t = 1e-4;
    Point2 probe_out{};
    double bestd = -1;
    for (int i = 0; i < 64; ++i) {
        const double th = 2 * std::numbers::pi * i / 64;
        const Point2 q = b + Point2{std::cos(th), std::sin(th)} * t;
        if (shape_contains(s, q)) continue;
        const double d = dist(nearest_boundary_point(s, q), q);
        if (d > bestd) {
            bestd = d;
            probe_out = q - b;
        }
    }
    const Point2 n = probe_out * (1.0 / norm(probe_out));
    std::vector<Point2> xs;
    for (double d : distances) xs.push_back(b + n * d);
    return xs;
}

double trace_data_factor(const DtnContext& dtn, const std::function<KernelValue(Point2)>& field, Point2 y0,
                         Point2 singular_point) {
    const TriMesh& ext = dtn.exterior();
    std::vector<double> gx, gw;
    gauss_legendre01(8, gx, gw);
    double flux = 0.0, trace = 0.0;
    for (const TaggedEdge& e : ext.edges) {
        if (e.tag < 0) continue;
        const Point2 a = ext.nodes[e.a], b = ext.nodes[e.b];
        const double l = dist(a, b);
        const int sub = std::clamp(static_cast<int>(std::ceil(2 * l / std::max(dist(a, singular_point), 1e-300))), 1, 64);
        const Point2 nu{(b.y - a.y) / l, -(b.x - a.x) / l};
        for (int s = 0; s < sub; ++s)
            for (size_t q = 0; q < gx.size(); ++q) {
                const double t = (s + gx[q]) / sub;
                const Point2 y = a + (b - a) * t;
                const KernelValue v = field(y);
                const double w = l * gw[q] / sub;
                flux += w * std::sqrt(dist(y, y0)) * std::abs(v.gx * nu.x + v.gy * nu.y);
                trace += w * std::abs(v.g);
            }
    }
    const FieldIntegrals fi = analytic_interior_integrals(dtn.full(), field, singular_point);
    return flux + dtn.k() * dtn.k() * std::abs(fi.mean) + dtn.lambda().bound_L() * trace;
}

EnergyDiagnostics reflected_energy_sweep(const DtnContext& dtn, const ObstacleSpec& obstacle,
                                         const std::vector<Point2>& xs, const ConstantsReport& c, double eps) {
    if (!(1 - c.K_D.K * c.L * eps > 0)) throw ConfigError("sweep eps must satisfy 1 - K(D) L eps > 0");
    EnergyDiagnostics d;
    d.eps = eps;
    const double k2 = dtn.k() * dtn.k();
    for (const Point2& x : xs) {
        const IndicatorFunctionSample s = indicator_function(dtn, obstacle, x);
        EnergyRecord r;
        r.x = x;
        r.distance = obstacle_boundary_distance(obstacle, x);
        r.w_grad = s.ext_grad;
        r.w_mass = s.ext_mass;
        r.w_trace = interface_trace(dtn.exterior(), s.w, nullptr, false);
        r.G_grad = s.int_grad;
        r.G_mass = s.int_mass;
        auto G = [&](Point2 y) { return kernel(dtn.k(), y, x); };
        r.data_factor = trace_data_factor(dtn, G, x, x);
        const double num = (1 - c.K_D.K * c.L * eps) * r.G_grad - (k2 + c.K_D.K * c.L / eps) * r.G_mass;
        r.lower_bound = num / std::sqrt(r.G_grad + r.G_mass);
        r.bound_ratio = r.lower_bound > 0 ? std::sqrt(r.w_grad) / r.lower_bound : INFINITY;
        r.trace_ratio = r.w_trace / (std::sqrt(r.w_grad) * r.data_factor);
        d.records.push_back(r);
    }
    d.w_grad_increasing = d.G_grad_increasing = d.records.size() >= 2;
    d.min_bound_ratio = INFINITY;
    for (size_t i = 0; i < d.records.size(); ++i) {
        d.min_bound_ratio = std::min(d.min_bound_ratio, d.records[i].bound_ratio);
        d.max_trace_ratio = std::max(d.max_trace_ratio, d.records[i].trace_ratio);
        if (i == 0) continue;
        d.w_grad_increasing = d.w_grad_increasing && d.records[i].w_grad > d.records[i - 1].w_grad;
        d.G_grad_increasing = d.G_grad_increasing && d.records[i].G_grad > d.records[i - 1].G_grad;
    }
    if (d.records.size() >= 2) {
        const auto &a = d.records.front(), &b = d.records.back();
        d.G_grad_dominates = b.G_grad / a.G_grad > b.G_mass / a.G_mass;
    }
    return d;
}

EnergyRatioAudit energy_ratio_audit(const DtnContext& dtn, int n_fit, int n_holdout, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EnergyRatioAudit a;
    const double k2 = dtn.k() * dtn.k();
    for (int s = 0; s < n_fit + n_holdout; ++s) {
        const VecC f = random_boundary_data(dtn.full(), rng);
        const GapFields g = dtn.fields(f);
        const Energy ev = energy(dtn.full(), g.v, Region::Interior);
        const double num = ev.dirichlet - k2 * ev.mass + interface_trace(dtn.full(), g.v, &dtn.lambda(), true);
        const double h1 = std::sqrt(ev.dirichlet + ev.mass);
        const double wg = std::sqrt(energy(dtn.exterior(), g.w, Region::Exterior).dirichlet);
        const double r = num / (h1 * wg);
        (s < n_fit ? a.fit_ratios : a.holdout_ratios).push_back(r);
    }
    for (double r : a.fit_ratios) a.C = std::max(a.C, r);
    for (double r : a.holdout_ratios) a.holdout_max = std::max(a.holdout_max, r);
    a.pass = a.C > 0 && a.holdout_max <= 2 * a.C;
    return a;
}

DominanceReport gradient_dominance_check(const IndicatorSeries& s, int tail) {
    DominanceReport r;
    for (size_t i = 0; i < s.vD_grad.size(); ++i)
        r.ratios.push_back(s.vD_grad[i] > 0 ? s.vD_mass[i] / s.vD_grad[i] : INFINITY);
    if (r.ratios.empty()) return r;
    const size_t t = std::min<size_t>(std::max(tail, 1), r.ratios.size());
    std::vector<double> tl(r.ratios.end() - t, r.ratios.end());
    r.tail_max = *std::max_element(tl.begin(), tl.end());
    std::sort(tl.begin(), tl.end());
    r.tail_median = t % 2 ? tl[t / 2] : 0.5 * (tl[t / 2 - 1] + tl[t / 2]);
    r.bounded = std::isfinite(r.tail_max) && r.tail_max <= 2 * r.tail_median;
    return r;
}

ReflectedBlowupCheck reflected_blowup_check(const IndicatorSeries& s, const ConditionsReport& cond) {
    ReflectedBlowupCheck r;
    r.v_blowup = strictly_increasing_tail(s.vD_grad, 3);
    r.condition = cond.holds_reflected;
    r.w_increasing = strictly_increasing_tail(s.w_grad, 3);
    r.consistent = !(r.v_blowup && r.condition) || r.w_increasing;
    return r;
}

}  // namespace ps
