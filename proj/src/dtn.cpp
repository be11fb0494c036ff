#include "dtn.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "error.hpp"

namespace ps {

namespace {

cplx edge_product(cplx a0, cplx a1, cplx b0, cplx b1, double l) {
    // Exact integral of (a) conj(b) for linear a, b on an edge of length l.
    return l / 6.0 * (2.0 * a0 * std::conj(b0) + 2.0 * a1 * std::conj(b1) + a0 * std::conj(b1) + a1 * std::conj(b0));
}

}  // namespace

DtnContext::DtnContext(const TriMesh& full, double k, const ImpedanceSpec& lambda)
    : full_(full), ext_(exterior_submesh(full)), lambda_(lambda), k_(k) {
    if (full.n_components > 0 && !(lambda.min_imag() > 0)) throw SolverError("Im lambda must be positive");
    s0_ = std::make_unique<HelmholtzSolver>(full_, k, nullptr);
    sD_ = std::make_unique<HelmholtzSolver>(ext_, k, &lambda_);
    std::vector<char> on(ext_.n_nodes(), 0);
    for (auto& e : ext_.edges)
        if (e.tag >= 0) on[e.a] = on[e.b] = 1;
    for (int i = 0; i < ext_.n_nodes(); ++i)
        if (on[i]) interface_nodes_.push_back(i);
}

cplx pair_dtn(const HelmholtzSolver& s, const VecC& f, const VecC& h) { return s.pair(s.solve(f), h); }

cplx DtnContext::pair0(const VecC& f, const VecC& h) const { return pair_dtn(*s0_, f, h); }
cplx DtnContext::pairD(const VecC& f, const VecC& h) const { return pair_dtn(*sD_, f, h); }

VecC DtnContext::restrict_to_exterior(const VecC& v_full) const {
    VecC r(ext_.n_nodes());
    for (int i = 0; i < ext_.n_nodes(); ++i) r[i] = v_full[ext_.parent_node[i]];
    return r;
}

VecC DtnContext::solve_reflected(const VecC& load) const {
    return sD_->solve(VecC::Zero(ext_.n_outer), &load);
}

GapFields DtnContext::fields(const VecC& f) const {
    GapFields g;
    g.v = s0_->solve(f);
    const VecC vE = restrict_to_exterior(g.v);
    // Only interface rows of S_D differ from the background operator; elsewhere S_D v = 0.
    VecC load = VecC::Zero(ext_.n_nodes());
    if (!interface_nodes_.empty()) {
        const VecC SvE = sD_->S() * vE;
        for (int i : interface_nodes_) load[i] = -SvE[i];
    }
    g.w = interface_nodes_.empty() ? VecC(VecC::Zero(ext_.n_nodes())) : solve_reflected(load);
    g.u = vE + g.w;
    return g;
}

GapParts DtnContext::parts(const VecC& v_full, const VecC& w_ext) const {
    GapParts p;
    const double k2 = k_ * k_;
    const Energy ew = energy(ext_, w_ext, Region::Exterior);
    const Energy ev = energy(full_, v_full, Region::Interior);
    p.exterior = ew.dirichlet - k2 * ew.mass;
    p.interior = ev.dirichlet - k2 * ev.mass;
    for (auto& e : ext_.edges) {
        if (e.tag < 0) continue;
        const double l = dist(ext_.nodes[e.a], ext_.nodes[e.b]);
        const cplx lam = lambda_.at(e.tag);
        const cplx v0 = v_full[ext_.parent_node[e.a]], v1 = v_full[ext_.parent_node[e.b]];
        const cplx w0 = w_ext[e.a], w1 = w_ext[e.b];
        const cplx u0 = v0 + w0, u1 = v1 + w1;
        const double vv = edge_product(v0, v1, v0, v1, l).real();
        const double ww = edge_product(w0, w1, w0, w1, l).real();
        const double uu = edge_product(u0, u1, u0, u1, l).real();
        p.re_lambda += lam.real() * (vv - ww);
        p.im_cross += -2.0 * lam.imag() * edge_product(w0, w1, v0, v1, l).imag();
        p.imag += lam.imag() * uu;
    }
    return p;
}

DtnGap DtnContext::gap(const VecC& f) const {
    const GapFields g = fields(f);
    const VecC fc = f.conjugate();
    DtnGap out;
    out.value = s0_->pair(g.v, fc) - sD_->pair(g.u, fc);
    out.parts = parts(g.v, g.w);
    return out;
}

GapParts field_gap(const DtnContext& ctx, const std::function<KernelValue(Point2)>& field, Point2 singular_point,
                   VecC* w_out, FieldIntegrals* interior_out) {
    GapParts p;
    const TriMesh& ext = ctx.exterior();
    const VecC load = analytic_robin_load(ext, ctx.lambda(), field, singular_point);
    const VecC w = ctx.solve_reflected(load);
    const double k2 = ctx.k() * ctx.k();
    const Energy ew = energy(ext, w, Region::Exterior);
    p.exterior = ew.dirichlet - k2 * ew.mass;
    const FieldIntegrals fi = analytic_interior_integrals(ctx.full(), field, singular_point);
    p.interior = fi.grad2 - k2 * fi.mass;
    std::vector<double> gx, gw;
    gauss_legendre01(8, gx, gw);
    for (const TaggedEdge& e : ext.edges) {
        if (e.tag < 0) continue;
        const cplx lam = ctx.lambda().at(e.tag);
        const Point2 a = ext.nodes[e.a], b = ext.nodes[e.b];
        const double l = dist(a, b);
        for (size_t q = 0; q < gx.size(); ++q) {
            const double t = gx[q];
            const cplx v = field(a + (b - a) * t).g;
            const cplx wq = (1 - t) * w[e.a] + t * w[e.b];
            p.re_lambda += l * gw[q] * lam.real() * (std::norm(v) - std::norm(wq));
            p.im_cross += -2.0 * l * gw[q] * lam.imag() * (wq * std::conj(v)).imag();
            p.imag += l * gw[q] * lam.imag() * std::norm(v + wq);
        }
    }
    if (w_out) *w_out = w;
    if (interior_out) *interior_out = fi;
    return p;
}

IdentityReport verify_identity(const DtnContext& ctx, const VecC& f) {
    IdentityReport r;
    const VecC v = ctx.background_solver().solve(f);
    const VecC u = ctx.obstacle_solver().solve(f);
    const VecC fc = f.conjugate();
    r.lhs = ctx.background_solver().pair(v, fc) - ctx.obstacle_solver().pair(u, fc);
    const VecC w = u - ctx.restrict_to_exterior(v);
    r.parts = ctx.parts(v, w);
    r.rhs = r.parts.sum();
    const double scale = std::max({std::abs(r.lhs), std::abs(r.rhs)});
    r.rel_err = scale == 0.0 ? 0.0 : std::abs(r.lhs - r.rhs) / scale;
    r.imag_boundary = r.parts.imag;
    const double iscale = std::max(std::abs(r.lhs.imag()), std::abs(r.imag_boundary));
    r.imag_rel_err = iscale == 0.0 ? 0.0 : std::abs(r.lhs.imag() - r.imag_boundary) / iscale;
    return r;
}

Eigen::MatrixXcd dense_dtn(const HelmholtzSolver& s) {
    const int nb = s.mesh().n_outer;
    Eigen::MatrixXcd L(nb, nb);
    for (int j = 0; j < nb; ++j) {
        VecC e = VecC::Zero(nb);
        e[j] = 1.0;
        const VecC u = s.solve(e);
        const VecC Su = s.S().topRows(nb) * u;
        L.col(j) = Su;
    }
    return L;
}

void write_dense_csv(std::ostream& os, const Eigen::MatrixXcd& m) {
    os << std::setprecision(17);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) os << ",";
            os << m(i, j).real() << "," << m(i, j).imag();
        }
        os << "\n";
    }
}

}  // namespace ps
