#include "needle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace ps {

void NeedleParams::validate() const {
    if (n_max < 1) throw ConfigError("needle.n_max must be >= 1");
    if (n_sources < 8) throw ConfigError("needle.sources must be >= 8");
    if (!(source_radius > 1.0)) throw ConfigError("needle.source_radius must exceed 1");
    if (d0_abs < 0) throw ConfigError("needle.d0 must be nonnegative");
    if (d0_abs == 0 && !(d_first > 0 && d_last > 0 && d_last <= d_first))
        throw ConfigError("needle tube radii must satisfy 0 < d_last <= d_first");
    if (d0_abs > 0 && !(rho > 0 && rho < 1)) throw ConfigError("needle.rho must lie in (0, 1)");
    if (!(alpha_first > 0 && alpha_last > 0)) throw ConfigError("needle Tikhonov levels must be positive");
    if (!(max_misfit > 0)) throw ConfigError("needle.max_misfit must be positive");
}

double NeedleParams::tube_radius(int n, double needle_length) const {
    if (d0_abs > 0) return d0_abs * std::pow(rho, n - 1);
    const double q = n_max > 1 ? std::pow(d_last / d_first, 1.0 / (n_max - 1)) : 1.0;
    return d_first * needle_length * std::pow(q, n - 1);
}

double NeedleParams::alpha(int n) const {
    if (n_max == 1) return alpha_first;
    const double t = static_cast<double>(n - 1) / (n_max - 1);
    return std::exp((1 - t) * std::log(alpha_first) + t * std::log(alpha_last));
}

EnclosingCircle enclosing_circle(const Shape& s) {
    switch (s.kind) {
        case ShapeKind::Disk:
            return {s.center, s.radius};
        case ShapeKind::Ellipse:
            return {s.center, std::max(s.semi_a, s.semi_b)};
        case ShapeKind::Polygon: {
            Point2 lo = s.vertices.front(), hi = lo;
            for (auto& v : s.vertices) {
                lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
                hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
            }
            EnclosingCircle c{(lo + hi) * 0.5, 0.0};
            for (auto& v : s.vertices) c.radius = std::max(c.radius, dist(v, c.center));
            return c;
        }
    }
    return {};
}

Eigen::MatrixXcd kernel_matrix(double k, const std::vector<Point2>& pts, const std::vector<Point2>& sources) {
    Eigen::MatrixXcd A(pts.size(), sources.size());
    for (size_t j = 0; j < sources.size(); ++j)
        for (size_t i = 0; i < pts.size(); ++i) A(i, j) = hankel_G(k, dist(pts[i], sources[j]));
    return A;
}

namespace {

std::vector<double> arc_weights(const std::vector<Point2>& p) {
    std::vector<double> w(p.size());
    const size_t n = p.size();
    for (size_t i = 0; i < n; ++i) w[i] = 0.5 * (dist(p[i], p[(i + 1) % n]) + dist(p[i], p[(i + n - 1) % n]));
    return w;
}

double largest_singular_value(const Eigen::MatrixXcd& B) {
    VecC x = VecC::Ones(B.cols()) / std::sqrt(static_cast<double>(B.cols()));
    double s2 = 0.0;
    for (int it = 0; it < 20; ++it) {
        const VecC y = B * x;
        VecC z = B.adjoint() * y;
        const double nz = z.norm();
        if (nz == 0.0) return 0.0;
        const double prev = s2;
        s2 = nz;
        x = z / nz;
        if (it > 3 && std::abs(s2 - prev) <= 1e-6 * s2) break;
    }
    return std::sqrt(s2);
}

}  // namespace

MfsBasis::MfsBasis(const Shape& domain, double k, const NeedleParams& params, const TriMesh* mesh)
    : domain_(domain), k_(k), params_(params) {
    params_.validate();
    if (k < 0) throw ConfigError("k must be nonnegative");
    const EnclosingCircle ec = enclosing_circle(domain);
    const int N = params_.n_sources;
    const double rs = params_.source_radius * ec.radius;
    for (int j = 0; j < N; ++j) {
        const double t = 2 * std::numbers::pi * j / N;
        sources_.push_back({ec.center.x + rs * std::cos(t), ec.center.y + rs * std::sin(t)});
    }
    spacing_ = 2 * std::numbers::pi * ec.radius / (1.5 * N);
    bpts_ = sample_boundary(domain, spacing_);
    bw_ = arc_weights(bpts_);
    Ab_ = kernel_matrix(k, bpts_, sources_);
    if (mesh) {
        std::vector<Point2> outer(mesh->nodes.begin(), mesh->nodes.begin() + mesh->n_outer);
        T_ = kernel_matrix(k, outer, sources_);
    }
}

VecC MfsBasis::trace(const VecC& c) const {
    if (!has_trace()) throw SolverError("MFS basis built without a mesh trace");
    return T_ * c;
}

void tube_points(const Needle& needle, double d, double s, const Shape& domain, std::vector<Point2>& pts,
                 std::vector<double>& weights) {
    pts.clear();
    weights.clear();
    const auto& V = needle.vertices;
    auto keep = [&](Point2 p, double w) {
        if (polyline_distance(p, V) < d * (1 - 1e-9)) return;
        if (!shape_contains(domain, p)) return;
        pts.push_back(p);
        weights.push_back(w);
    };
    for (size_t i = 0; i + 1 < V.size(); ++i) {
        const Point2 a = V[i], b = V[i + 1];
        const double len = dist(a, b);
        const Point2 t = (b - a) * (1.0 / len);
        const Point2 nrm{-t.y, t.x};
        const int cnt = std::max(1, static_cast<int>(std::ceil(len / s)));
        const double step = len / cnt;
        for (int side : {-1, 1})
            for (int j = 0; j < cnt; ++j) keep(a + t * ((j + 0.5) * step) + nrm * (side * d), step);
    }
    for (const Point2& v : V) {
        const int cnt = std::max(8, static_cast<int>(std::ceil(2 * std::numbers::pi * d / s)));
        const double step = 2 * std::numbers::pi * d / cnt;
        for (int j = 0; j < cnt; ++j) {
            const double th = 2 * std::numbers::pi * (j + 0.5) / cnt;
            keep(v + Point2{std::cos(th), std::sin(th)} * d, step);
        }
    }
}

NeedleSequence build_needle_sequence(const MfsBasis& basis, const Needle& needle, int first_n) {
    const NeedleParams& P = basis.params();
    if (first_n < 1 || first_n > P.n_max) throw ConfigError("first needle term out of range");
    NeedleSequence seq;
    seq.tip = needle.tip();
    seq.needle = needle;
    seq.k = basis.k();
    const double L = needle.length();
    const int N = static_cast<int>(basis.sources().size());
    const auto& bp = basis.boundary_points();

    for (int n = first_n; n <= P.n_max; ++n) {
        NeedleTerm term;
        term.n = n;
        term.d = P.tube_radius(n, L);
        term.alpha = P.alpha(n);

        std::vector<int> brow;
        for (size_t i = 0; i < bp.size(); ++i)
            if (polyline_distance(bp[i], needle.vertices) > term.d) brow.push_back(static_cast<int>(i));
        std::vector<Point2> tp;
        std::vector<double> tw;
        tube_points(needle, term.d, std::min(basis.collocation_spacing(), term.d / 4), basis.domain(), tp, tw);

        const int m = static_cast<int>(brow.size() + tp.size());
        term.n_rows = m;
        Eigen::MatrixXcd B(m, N);
        VecC g(m);
        for (size_t r = 0; r < brow.size(); ++r) {
            const double w = std::sqrt(basis.boundary_weights()[brow[r]]);
            B.row(r) = w * basis.boundary_matrix().row(brow[r]);
            g[r] = w * hankel_G(basis.k(), dist(bp[brow[r]], seq.tip));
        }
        const Eigen::MatrixXcd At = kernel_matrix(basis.k(), tp, basis.sources());
        for (size_t r = 0; r < tp.size(); ++r) {
            const double w = std::sqrt(tw[r]);
            B.row(brow.size() + r) = w * At.row(r);
            g[brow.size() + r] = w * hankel_G(basis.k(), dist(tp[r], seq.tip));
        }

        const double reg = term.alpha * largest_singular_value(B);
        Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(m + N, N);
        aug.topRows(m) = B;
        for (int j = 0; j < N; ++j) aug(m + j, j) = reg;
        VecC rhs = VecC::Zero(m + N);
        rhs.head(m) = g;
        const lapack_int info =
            LAPACKE_zgels(LAPACK_COL_MAJOR, 'N', m + N, N, 1, reinterpret_cast<lapack_complex_double*>(aug.data()),
                          m + N, reinterpret_cast<lapack_complex_double*>(rhs.data()), m + N);
        term.coeffs = rhs.head(N);
        term.fit_residual = info == 0 ? (B * term.coeffs - g).norm() / g.norm() : INFINITY;
        if (!std::isfinite(term.fit_residual) || term.fit_residual > P.max_misfit) {
            log_warning("needle term " + std::to_string(n) + " flagged (misfit " +
                        std::to_string(term.fit_residual) + "); sequence truncated");
            seq.truncated = true;
            break;
        }
        seq.terms.push_back(std::move(term));
    }
    return seq;
}

KernelValue mfs_eval(const MfsBasis& basis, const VecC& c, Point2 y) {
    KernelValue out{};
    const auto& z = basis.sources();
    for (size_t j = 0; j < z.size(); ++j) {
        const KernelValue kv = kernel(basis.k(), y, z[j]);
        out.g += c[j] * kv.g;
        out.gx += c[j] * kv.gx;
        out.gy += c[j] * kv.gy;
    }
    return out;
}

ProbeRegion ProbeRegion::cone(Point2 vertex, Point2 axis, double aperture, double radius) {
    const double n = norm(axis);
    if (!(n > 0) || !(aperture > 0 && aperture < 2 * std::numbers::pi) || !(radius > 0))
        throw ConfigError("invalid cone region");
    return {Kind::Cone, vertex, axis * (1.0 / n), aperture, radius};
}

ProbeRegion ProbeRegion::ball(Point2 center, double radius) {
    if (!(radius > 0)) throw ConfigError("invalid ball region");
    return {Kind::Ball, center, {1.0, 0.0}, 2 * std::numbers::pi, radius};
}

bool strictly_increasing_tail(const std::vector<double>& v, int count) {
    if (static_cast<int>(v.size()) < count) return false;
    for (size_t i = v.size() - count + 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

GrowthReport needle_blowup_check(const MfsBasis& basis, const NeedleSequence& seq, const ProbeRegion& region) {
    GrowthReport rep;
    if (seq.terms.empty()) return rep;
    std::vector<double> x8, w8;
    gauss_legendre01(8, x8, w8);
    const int radial_panels = 6;
    const double span = region.kind == ProbeRegion::Kind::Ball ? 2 * std::numbers::pi : region.aperture;
    const int angular_panels = std::max(4, static_cast<int>(std::ceil(16 * span / (2 * std::numbers::pi))));
    const double phi0 = std::atan2(region.axis.y, region.axis.x) - 0.5 * span;

    std::vector<Point2> pts;
    std::vector<double> wts;
    for (int pr = 0; pr < radial_panels; ++pr)
        for (int i = 0; i < 8; ++i) {
            const double r = region.radius * (pr + x8[i]) / radial_panels;
            const double wr = region.radius * w8[i] / radial_panels;
            for (int pa = 0; pa < angular_panels; ++pa)
                for (int j = 0; j < 8; ++j) {
                    const double phi = phi0 + span * (pa + x8[j]) / angular_panels;
                    const Point2 y = region.center + Point2{std::cos(phi), std::sin(phi)} * r;
                    if (!shape_contains(basis.domain(), y)) continue;
                    pts.push_back(y);
                    wts.push_back(wr * r * span * w8[j] / angular_panels);
                }
        }

    const int N = static_cast<int>(basis.sources().size());
    const int nt = static_cast<int>(seq.terms.size());
    Eigen::MatrixXcd C(N, nt);
    for (int t = 0; t < nt; ++t) C.col(t) = seq.terms[t].coeffs;
    rep.energy.assign(nt, 0.0);
    const size_t block = 512;
    for (size_t s = 0; s < pts.size(); s += block) {
        const size_t e = std::min(pts.size(), s + block);
        Eigen::MatrixXcd Gx(e - s, N), Gy(e - s, N);
        for (size_t i = s; i < e; ++i)
            for (int j = 0; j < N; ++j) {
                const KernelValue kv = kernel(basis.k(), pts[i], basis.sources()[j]);
                Gx(i - s, j) = kv.gx;
                Gy(i - s, j) = kv.gy;
            }
        const Eigen::MatrixXcd Vx = Gx * C, Vy = Gy * C;
        for (size_t i = s; i < e; ++i)
            for (int t = 0; t < nt; ++t)
                rep.energy[t] += wts[i] * (std::norm(Vx(i - s, t)) + std::norm(Vy(i - s, t)));
    }
    for (auto& t : seq.terms) rep.n.push_back(t.n);
    rep.increasing_tail = strictly_increasing_tail(rep.energy, 3);
    rep.growth = rep.energy.front() > 0 ? rep.energy.back() / rep.energy.front() : INFINITY;
    if (nt >= 2)
        rep.cauchy_tail = std::abs(rep.energy[nt - 1] - rep.energy[nt - 2]) / std::max(rep.energy[nt - 1], 1e-300);
    return rep;
}

}  // namespace ps
