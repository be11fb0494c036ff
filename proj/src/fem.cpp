#include "fem.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numbers>
#include <ostream>

#include "error.hpp"

namespace ps {

namespace {

std::mutex g_log_mutex;
bool g_quiet = false;

struct ElementGeom {
    double area;
    double b[3];
    double c[3];
};

ElementGeom element_geom(const TriMesh& m, int t) {
    const auto& v = m.tris[t];
    const Point2 p[3] = {m.nodes[v[0]], m.nodes[v[1]], m.nodes[v[2]]};
    ElementGeom g;
    g.area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
    for (int i = 0; i < 3; ++i) {
        const Point2 pj = p[(i + 1) % 3], pk = p[(i + 2) % 3];
        g.b[i] = pj.y - pk.y;
        g.c[i] = pk.x - pj.x;
    }
    return g;
}

bool edge_selected(const TaggedEdge& e, BoundarySelector sel) {
    return sel == BoundarySelector::Outer ? e.tag == kOuterTag : e.tag >= 0;
}


void accumulate_triangle(Point2 p0, Point2 p1, Point2 p2, const std::function<KernelValue(Point2)>& field,
                         Point2 sing, int depth, FieldIntegrals& acc) {
    const double area = 0.5 * std::abs(cross(p1 - p0, p2 - p0));
    const double diam = std::max({dist(p0, p1), dist(p1, p2), dist(p2, p0)});
    const double d = std::min({segment_distance(sing, p0, p1), segment_distance(sing, p1, p2),
                               segment_distance(sing, p2, p0)});
    if (depth < 10 && d < 1.5 * diam) {
        const Point2 m01 = (p0 + p1) * 0.5, m12 = (p1 + p2) * 0.5, m20 = (p2 + p0) * 0.5;
        accumulate_triangle(p0, m01, m20, field, sing, depth + 1, acc);
        accumulate_triangle(m01, p1, m12, field, sing, depth + 1, acc);
        accumulate_triangle(m20, m12, p2, field, sing, depth + 1, acc);
        accumulate_triangle(m01, m12, m20, field, sing, depth + 1, acc);
        return;
    }
    for (const TriRule& r : dunavant5()) {
        const Point2 y = p0 * r.l0 + p1 * r.l1 + p2 * r.l2;
        const KernelValue v = field(y);
        acc.grad2 += r.w * area * (std::norm(v.gx) + std::norm(v.gy));
        acc.mass += r.w * area * std::norm(v.g);
        acc.mean += r.w * area * v.g;
    }
}

}  // namespace

const std::array<TriRule, 7>& dunavant5() {
    constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    static const std::array<TriRule, 7> rule{{{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
                                              {a1, b1, b1, w1},
                                              {b1, a1, b1, w1},
                                              {b1, b1, a1, w1},
                                              {a2, b2, b2, w2},
                                              {b2, a2, b2, w2},
                                              {b2, b2, a2, w2}}};
    return rule;
}

void log_warning(const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    if (!g_quiet) std::cerr << "warning: " << msg << "\n";
}

void set_quiet(bool quiet) { g_quiet = quiet; }

bool in_region(Region r, int tri_tag) {
    switch (r) {
        case Region::Full: return true;
        case Region::Exterior: return tri_tag == kExteriorTag;
        case Region::Interior: return tri_tag >= 0;
    }
    return false;
}

AssembledForms assemble(const TriMesh& m, Region region, const ImpedanceSpec& lambda) {
    const int n = m.n_nodes();
    std::vector<Eigen::Triplet<double>> ta, tm, tb;
    std::vector<Eigen::Triplet<cplx>> tl;
    ta.reserve(9 * m.tris.size());
    tm.reserve(9 * m.tris.size());
    for (int t = 0; t < m.n_tris(); ++t) {
        if (!in_region(region, m.tri_tag[t])) continue;
        const auto g = element_geom(m, t);
        const auto& v = m.tris[t];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                ta.emplace_back(v[i], v[j], (g.b[i] * g.b[j] + g.c[i] * g.c[j]) / (4.0 * g.area));
                tm.emplace_back(v[i], v[j], g.area / 12.0 * (i == j ? 2.0 : 1.0));
            }
        }
    }
    if (region != Region::Full) {
        for (auto& e : m.edges) {
            if (e.tag < 0) continue;
            const double l = dist(m.nodes[e.a], m.nodes[e.b]);
            const cplx lam = lambda.at(e.tag);
            const int ids[2] = {e.a, e.b};
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    const double w = l / 6.0 * (i == j ? 2.0 : 1.0);
                    tb.emplace_back(ids[i], ids[j], w);
                    tl.emplace_back(ids[i], ids[j], lam * w);
                }
            }
        }
    }
    AssembledForms f;
    f.A.resize(n, n);
    f.M.resize(n, n);
    f.B1.resize(n, n);
    f.Blambda.resize(n, n);
    f.A.setFromTriplets(ta.begin(), ta.end());
    f.M.setFromTriplets(tm.begin(), tm.end());
    f.B1.setFromTriplets(tb.begin(), tb.end());
    f.Blambda.setFromTriplets(tl.begin(), tl.end());
    return f;
}

SpMat boundary_mass(const TriMesh& m, BoundarySelector sel) {
    std::vector<Eigen::Triplet<double>> tb;
    for (auto& e : m.edges) {
        if (!edge_selected(e, sel)) continue;
        const double l = dist(m.nodes[e.a], m.nodes[e.b]);
        tb.emplace_back(e.a, e.a, l / 3.0);
        tb.emplace_back(e.b, e.b, l / 3.0);
        tb.emplace_back(e.a, e.b, l / 6.0);
        tb.emplace_back(e.b, e.a, l / 6.0);
    }
    SpMat B(m.n_nodes(), m.n_nodes());
    B.setFromTriplets(tb.begin(), tb.end());
    return B;
}

struct HelmholtzSolver::Factor {
    Eigen::SparseLU<SpMatC, Eigen::COLAMDOrdering<int>> lu;
};

HelmholtzSolver::HelmholtzSolver(const TriMesh& mesh, double k, const ImpedanceSpec* lambda)
    : mesh_(mesh), k_(k), lu_(std::make_unique<Factor>()) {
    if (k < 0) throw SolverError("wavenumber must be nonnegative");
    const Region region = lambda ? Region::Exterior : Region::Full;
    static const ImpedanceSpec none;
    const auto f = assemble(mesh, region, lambda ? *lambda : none);
    S_ = f.A.cast<cplx>() - (k * k) * f.M.cast<cplx>();
    if (lambda) S_ -= f.Blambda;
    S_.makeCompressed();
    const int nb = mesh.n_outer, nf = mesh.n_nodes() - nb;
    Sff_ = S_.block(nb, nb, nf, nf);
    Sfb_ = S_.block(nb, 0, nf, nb);
    Sff_.makeCompressed();
    if (nf > 0) {
        lu_->lu.analyzePattern(Sff_);
        lu_->lu.factorize(Sff_);
        if (lu_->lu.info() != Eigen::Success)
            throw SolverError("sparse LU factorization failed (singular Helmholtz system; k^2 may be a Dirichlet "
                              "eigenvalue): " + lu_->lu.lastErrorMessage());
    }
}

HelmholtzSolver::~HelmholtzSolver() = default;

VecC HelmholtzSolver::solve(const VecC& f_outer, const VecC* load) const {
    const int nb = mesh_.n_outer, n = mesh_.n_nodes(), nf = n - nb;
    if (f_outer.size() != nb) throw SolverError("boundary data length does not match outer node count");
    VecC u(n);
    u.head(nb) = f_outer;
    if (nf == 0) return u;
    VecC rhs = -(Sfb_ * f_outer);
    if (load) rhs += load->tail(nf);
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        u.tail(nf).setZero();
        return u;
    }
    VecC x = lu_->lu.solve(rhs);
    for (int it = 0; it < 3; ++it) {
        VecC r = rhs - Sff_ * x;
        if (r.norm() <= 1e-13 * rhs_norm) break;
        x += lu_->lu.solve(r);
    }
    const double res = (rhs - Sff_ * x).norm() / rhs_norm;
    if (!std::isfinite(res) || res > 1e-10)
        throw SolverError("Helmholtz solve residual " + std::to_string(res) + " exceeds 1e-10");
    u.tail(nf) = x;
    return u;
}

cplx HelmholtzSolver::pair(const VecC& u, const VecC& h_outer) const {
    const int nb = mesh_.n_outer;
    const VecC Su = S_.topRows(nb) * u;
    return (h_outer.array() * Su.array()).sum();
}

double HelmholtzSolver::residual(const VecC& u, const VecC* load) const {
    const int nb = mesh_.n_outer, nf = mesh_.n_nodes() - nb;
    VecC r = S_.bottomRows(nf) * u;
    double scale = (S_.bottomRows(nf).cwiseAbs() * u.cwiseAbs().cast<cplx>()).norm();
    if (load) r -= load->tail(nf);
    if (load) scale = std::max(scale, load->tail(nf).norm());
    return scale == 0.0 ? 0.0 : r.norm() / scale;
}

VecC solve_obstacle_problem(const TriMesh& ext, double k, const ImpedanceSpec& lambda, const VecC& f_outer,
                            const VecC* load) {
    if (lambda.min_imag() <= 0 && ext.n_components > 0) throw SolverError("Im lambda must be positive");
    HelmholtzSolver s(ext, k, &lambda);
    return s.solve(f_outer, load);
}

VecC solve_background(const TriMesh& full, double k, const VecC& f_outer) {
    HelmholtzSolver s(full, k, nullptr);
    return s.solve(f_outer);
}

Energy energy(const TriMesh& m, const VecC& u, Region region) {
    Energy e;
    for (int t = 0; t < m.n_tris(); ++t) {
        if (!in_region(region, m.tri_tag[t])) continue;
        const auto g = element_geom(m, t);
        const auto& v = m.tris[t];
        cplx gx = 0.0, gy = 0.0;
        for (int i = 0; i < 3; ++i) {
            gx += u[v[i]] * g.b[i];
            gy += u[v[i]] * g.c[i];
        }
        e.dirichlet += (std::norm(gx) + std::norm(gy)) / (4.0 * g.area);
        const cplx a = u[v[0]], b = u[v[1]], c = u[v[2]];
        e.mass += g.area / 6.0 *
                  (std::norm(a) + std::norm(b) + std::norm(c) +
                   (a * std::conj(b) + b * std::conj(c) + c * std::conj(a)).real());
    }
    const BoundarySelector sel = region == Region::Full ? BoundarySelector::Outer : BoundarySelector::Interface;
    for (auto& ed : m.edges) {
        if (!edge_selected(ed, sel)) continue;
        const double l = dist(m.nodes[ed.a], m.nodes[ed.b]);
        const cplx a = u[ed.a], b = u[ed.b];
        e.boundary += l / 3.0 * (std::norm(a) + std::norm(b) + (a * std::conj(b)).real());
    }
    return e;
}

void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 1 ? z : p1;
            const double pnm1 = n == 1 ? 1.0 : p0;
            dp = n * (z * pn - pnm1) / (z * z - 1.0);
            const double dz = pn / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

VecC analytic_robin_load(const TriMesh& ext, const ImpedanceSpec& lambda,
                         const std::function<KernelValue(Point2)>& field, Point2 singular_point) {
    std::vector<double> gx, gw;
    gauss_legendre01(8, gx, gw);
    VecC load = VecC::Zero(ext.n_nodes());
    for (auto& e : ext.edges) {
        if (e.tag < 0) continue;
        const Point2 a = ext.nodes[e.a], b = ext.nodes[e.b];
        const double l = dist(a, b);
        const Point2 nrm{(b.y - a.y) / l, -(b.x - a.x) / l};
        const cplx lam = lambda.at(e.tag);
        const double d = segment_distance(singular_point, a, b);
        const int sub = std::clamp(static_cast<int>(std::ceil(2.0 * l / std::max(d, 1e-300))), 1, 64);
        cplx ia = 0.0, ib = 0.0;
        for (int s = 0; s < sub; ++s) {
            for (size_t q = 0; q < gx.size(); ++q) {
                const double t = (s + gx[q]) / sub;
                const KernelValue v = field(a + (b - a) * t);
                const cplx val = (v.gx * nrm.x + v.gy * nrm.y + lam * v.g) * (gw[q] * l / sub);
                ia += val * (1.0 - t);
                ib += val * t;
            }
        }
        load[e.a] += ia;
        load[e.b] += ib;
    }
    return load;
}

FieldIntegrals analytic_interior_integrals(const TriMesh& full, const std::function<KernelValue(Point2)>& field,
                                           Point2 singular_point, int component) {
    FieldIntegrals acc;
    for (int t = 0; t < full.n_tris(); ++t) {
        const int tag = full.tri_tag[t];
        if (tag < 0 || (component >= 0 && tag != component)) continue;
        const auto& v = full.tris[t];
        accumulate_triangle(full.nodes[v[0]], full.nodes[v[1]], full.nodes[v[2]], field, singular_point, 0, acc);
    }
    return acc;
}

double nearest_dirichlet_eigenvalue(const TriMesh& full, double shift) {
    static const ImpedanceSpec none;
    const auto f = assemble(full, Region::Full, none);
    const int nb = full.n_outer, nf = full.n_nodes() - nb;
    SpMat K = f.A - shift * f.M;
    SpMat Kff = K.block(nb, nb, nf, nf);
    SpMat Mff = f.M.block(nb, nb, nf, nf);
    SpMat Aff = f.A.block(nb, nb, nf, nf);
    Kff.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(Kff);
    if (lu.info() != Eigen::Success) return shift;
    VecR x(nf);
    for (int i = 0; i < nf; ++i) x[i] = 1.0 + 0.1 * std::sin(0.37 * i);
    double mu = 0.0;
    for (int it = 0; it < 300; ++it) {
        VecR y = lu.solve(Mff * x);
        const double mn = std::sqrt(y.dot(Mff * y));
        if (!(mn > 0) || !std::isfinite(mn)) return shift;
        x = y / mn;
        const double next = x.dot(Aff * x);
        if (it > 3 && std::abs(next - mu) <= 1e-12 * std::abs(next)) {
            mu = next;
            break;
        }
        mu = next;
    }
    return mu;
}

double check_eigen_proximity(const TriMesh& full, double k) {
    const double k2 = k * k;
    const double mu = nearest_dirichlet_eigenvalue(full, k2);
    if (std::abs(mu - k2) <= 0.01 * std::abs(mu))
        log_warning("k^2 = " + std::to_string(k2) + " is within 1% of the discrete Dirichlet eigenvalue " +
                    std::to_string(mu));
    return mu;
}

void write_solution_csv(std::ostream& os, const TriMesh& m, const VecC& u) {
    os << "node,x,y,re,im\n" << std::setprecision(17);
    for (int i = 0; i < m.n_nodes(); ++i)
        os << i << "," << m.nodes[i].x << "," << m.nodes[i].y << "," << u[i].real() << "," << u[i].imag() << "\n";
}

cplx ConcentricReference::operator()(Point2 p) const {
    const double r = dist(p, center);
    return a * bessel_j0(k * r) + b * bessel_y0(k * r);
}

ConcentricReference concentric_reference(Point2 center, double R, double r0, double k, cplx lambda, cplx f0) {
    if (!(k > 0) || !(r0 > 0) || !(R > r0)) throw ConfigError("concentric reference needs k > 0 and 0 < r0 < R");
    // [J0(kR) Y0(kR); -k J1 + lambda J0 at r0, -k Y1 + lambda Y0 at r0] [a; b] = [f0; 0]
    const cplx m11 = bessel_j0(k * R), m12 = bessel_y0(k * R);
    const cplx m21 = -k * bessel_j1(k * r0) + lambda * bessel_j0(k * r0);
    const cplx m22 = -k * bessel_y1(k * r0) + lambda * bessel_y0(k * r0);
    const cplx det = m11 * m22 - m12 * m21;
    if (std::abs(det) < 1e-14) throw SolverError("concentric reference system is singular");
    ConcentricReference ref;
    ref.center = center;
    ref.k = k;
    ref.a = f0 * m22 / det;
    ref.b = -f0 * m21 / det;
    return ref;
}

double relative_l2_error(const TriMesh& m, const VecC& u, Region region, const std::function<cplx(Point2)>& exact) {
    double err = 0.0, ref = 0.0;
    for (int t = 0; t < m.n_tris(); ++t) {
        if (!in_region(region, m.tri_tag[t])) continue;
        const auto& v = m.tris[t];
        const double area = triangle_area(m, t);
        for (const TriRule& q : dunavant5()) {
            const Point2 p = m.nodes[v[0]] * q.l0 + m.nodes[v[1]] * q.l1 + m.nodes[v[2]] * q.l2;
            const cplx uh = u[v[0]] * q.l0 + u[v[1]] * q.l1 + u[v[2]] * q.l2;
            const cplx ue = exact(p);
            err += q.w * area * std::norm(uh - ue);
            ref += q.w * area * std::norm(ue);
        }
    }
    return ref > 0 ? std::sqrt(err / ref) : std::sqrt(err);
}

}  // namespace ps
