#include "probe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <thread>

#include "error.hpp"

namespace ps {

const char* to_string(SeriesClass c) {
    switch (c) {
        case SeriesClass::Converged: return "converged";
        case SeriesClass::Blowup: return "blowup";
        case SeriesClass::Undecided: return "undecided";
    }
    return "?";
}

Classification classify(const std::vector<double>& values, double scale, const ClassifyParams& p) {
    Classification c;
    if (static_cast<int>(values.size()) < p.tail) return c;
    const auto first = values.end() - p.tail;
    const double lo = *std::min_element(first, values.end());
    const double hi = *std::max_element(first, values.end());
    const double last = values.back();
    const double mag = std::max(std::abs(lo), std::abs(hi));
    if (mag == 0.0 || (hi - lo) <= p.converge_tol * std::abs(last)) {
        c.kind = SeriesClass::Converged;
        c.limit = last;
        return c;
    }
    if (strictly_increasing_tail(values, p.tail) && last > p.blowup_factor * scale) c.kind = SeriesClass::Blowup;
    return c;
}

ExactFieldGap::ExactFieldGap(const DtnContext& dtn, const MfsBasis& basis) : dtn_(dtn) {
    const TriMesh& ext = dtn.exterior();
    const double k = basis.k();
    const auto& z = basis.sources();
    std::vector<double> gx, gw;
    gauss_legendre01(8, gx, gw);
    std::vector<Point2> bq;
    std::vector<Point2> bn;
    for (const TaggedEdge& e : ext.edges) {
        if (e.tag < 0) continue;
        const Point2 a = ext.nodes[e.a], b = ext.nodes[e.b];
        const double l = dist(a, b);
        for (size_t q = 0; q < gx.size(); ++q) {
            qa_.push_back(e.a);
            qb_.push_back(e.b);
            qt_.push_back(gx[q]);
            qw_.push_back(gw[q] * l);
            qlam_.push_back(dtn.lambda().at(e.tag));
            bq.push_back(a + (b - a) * gx[q]);
            bn.push_back({(b.y - a.y) / l, -(b.x - a.x) / l});
        }
    }
    Kb_.resize(bq.size(), z.size());
    Kn_.resize(bq.size(), z.size());
    for (size_t j = 0; j < z.size(); ++j)
        for (size_t i = 0; i < bq.size(); ++i) {
            const KernelValue kv = kernel(k, bq[i], z[j]);
            Kb_(i, j) = kv.g;
            Kn_(i, j) = kv.gx * bn[i].x + kv.gy * bn[i].y;
        }
    const TriMesh& full = dtn.full();
    std::vector<Point2> iq;
    for (int t = 0; t < full.n_tris(); ++t) {
        if (full.tri_tag[t] < 0) continue;
        const auto& v = full.tris[t];
        const double area = triangle_area(full, t);
        for (const TriRule& r : dunavant5()) {
            iq.push_back(full.nodes[v[0]] * r.l0 + full.nodes[v[1]] * r.l1 + full.nodes[v[2]] * r.l2);
            iw_.push_back(r.w * area);
        }
    }
    Ki_.resize(iq.size(), z.size());
    Kx_.resize(iq.size(), z.size());
    Ky_.resize(iq.size(), z.size());
    for (size_t j = 0; j < z.size(); ++j)
        for (size_t i = 0; i < iq.size(); ++i) {
            const KernelValue kv = kernel(k, iq[i], z[j]);
            Ki_(i, j) = kv.g;
            Kx_(i, j) = kv.gx;
            Ky_(i, j) = kv.gy;
        }
}

ExactFieldGap::Result ExactFieldGap::evaluate(const VecC& c) const {
    Result r;
    const TriMesh& ext = dtn_.exterior();
    if (qa_.empty()) {
        r.w = VecC::Zero(ext.n_nodes());
        return r;
    }
    const VecC vb = Kb_ * c, vn = Kn_ * c;
    VecC load = VecC::Zero(ext.n_nodes());
    for (size_t q = 0; q < qa_.size(); ++q) {
        const cplx val = (vn[q] + qlam_[q] * vb[q]) * qw_[q];
        load[qa_[q]] += val * (1.0 - qt_[q]);
        load[qb_[q]] += val * qt_[q];
    }
    r.w = dtn_.solve_reflected(load);
    const double k2 = dtn_.k() * dtn_.k();
    const Energy ew = energy(ext, r.w, Region::Exterior);
    r.parts.exterior = ew.dirichlet - k2 * ew.mass;
    const VecC vi = Ki_ * c, vx = Kx_ * c, vy = Ky_ * c;
    for (size_t i = 0; i < iw_.size(); ++i) {
        r.vD_grad += iw_[i] * (std::norm(vx[i]) + std::norm(vy[i]));
        r.vD_mass += iw_[i] * std::norm(vi[i]);
    }
    r.parts.interior = r.vD_grad - k2 * r.vD_mass;
    for (size_t q = 0; q < qa_.size(); ++q) {
        const cplx wq = (1.0 - qt_[q]) * r.w[qa_[q]] + qt_[q] * r.w[qb_[q]];
        const cplx lam = qlam_[q];
        r.parts.re_lambda += qw_[q] * lam.real() * (std::norm(vb[q]) - std::norm(wq));
        r.parts.im_cross += -2.0 * qw_[q] * lam.imag() * (wq * std::conj(vb[q])).imag();
        r.parts.imag += qw_[q] * lam.imag() * std::norm(vb[q] + wq);
    }
    return r;
}

IndicatorSeries indicator_sequence(const ProbeSetup& s, const NeedleSequence& seq, double scale,
                                   const ClassifyParams& cp) {
    IndicatorSeries out;
    for (const NeedleTerm& t : seq.terms) {
        if (s.exact) {
            const ExactFieldGap::Result r = s.exact->evaluate(t.coeffs);
            out.n.push_back(t.n);
            out.gaps.push_back(r.parts.sum());
            out.values.push_back(r.parts.real_sum());
            out.w_grad.push_back(energy(s.dtn.exterior(), r.w, Region::Exterior).dirichlet);
            out.vD_grad.push_back(r.vD_grad);
            out.vD_mass.push_back(r.vD_mass);
            continue;
        }
        const VecC f = s.basis.trace(t.coeffs);
        const GapFields g = s.dtn.fields(f);
        const GapParts parts = s.dtn.parts(g.v, g.w);
        const VecC fc = f.conjugate();
        out.n.push_back(t.n);
        out.gaps.push_back(parts.sum());
        out.values.push_back(parts.real_sum());
        out.pairings.push_back(s.dtn.background_solver().pair(g.v, fc) - s.dtn.obstacle_solver().pair(g.u, fc));
        out.w_grad.push_back(energy(s.dtn.exterior(), g.w, Region::Exterior).dirichlet);
        const Energy ev = energy(s.dtn.full(), g.v, Region::Interior);
        out.vD_grad.push_back(ev.dirichlet);
        out.vD_mass.push_back(ev.mass);
    }
    out.cls = classify(out.values, scale, cp);
    return out;
}

double min_probe_distance(const TriMesh& full) { return 2.0 * max_interface_edge(full); }

namespace {

void check_probe_point(const DtnContext& dtn, const ObstacleSpec& obstacle, Point2 x) {
    if (obstacle_component(obstacle, x) >= 0) throw GeometryError("probe point lies inside the obstacle");
    const double dmin = min_probe_distance(dtn.full());
    const double d = obstacle_boundary_distance(obstacle, x);
    if (d < dmin)
        throw GeometryError("probe point at distance " + std::to_string(d) + " from dD; minimum is " +
                            std::to_string(dmin));
}

}  // namespace

VecC reflected_solution(const DtnContext& dtn, const ObstacleSpec& obstacle, Point2 x) {
    if (obstacle.empty()) return VecC::Zero(dtn.exterior().n_nodes());
    check_probe_point(dtn, obstacle, x);
    const double k = dtn.k();
    const VecC load = analytic_robin_load(
        dtn.exterior(), dtn.lambda(), [&](Point2 y) { return kernel(k, y, x); }, x);
    return dtn.solve_reflected(load);
}

IndicatorFunctionSample indicator_function(const DtnContext& dtn, const ObstacleSpec& obstacle, Point2 x) {
    IndicatorFunctionSample s;
    s.x = x;
    if (obstacle.empty()) {
        s.w = VecC::Zero(dtn.exterior().n_nodes());
        return s;
    }
    check_probe_point(dtn, obstacle, x);
    const double k = dtn.k();
    FieldIntegrals fi;
    const GapParts p = field_gap(
        dtn, [&](Point2 y) { return kernel(k, y, x); }, x, &s.w, &fi);
    const Energy ew = energy(dtn.exterior(), s.w, Region::Exterior);
    s.ext_grad = ew.dirichlet;
    s.ext_mass = ew.mass;
    s.int_grad = fi.grad2;
    s.int_mass = fi.mass;
    s.re_term = p.re_lambda;
    s.im_term = p.im_cross;
    s.value = p.real_sum();
    return s;
}

namespace {

Point2 rotate(Point2 v, double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    return {v.x * std::cos(a) - v.y * std::sin(a), v.x * std::sin(a) + v.y * std::cos(a)};
}

}  // namespace

Needle policy_needle(const Shape& domain, const ObstacleSpec& obstacle, Point2 x, double rotate_deg,
                     const NeedlePolicy& pol) {
    Point2 dir = nearest_boundary_point(domain, x) - x;
    if (norm(dir) == 0.0) throw GeometryError("probe point lies on the outer boundary");
    dir = rotate(dir * (1.0 / norm(dir)), rotate_deg);
    for (int i = 0; i < 36; ++i) {
        const double turn = pol.reaim_step * ((i + 1) / 2) * (i % 2 ? 1 : -1);
        const Point2 d = rotate(dir, i == 0 ? 0.0 : turn);
        const Needle n = straight_needle(x, ray_exit_point(domain, x, d), domain);
        if (obstacle.empty() || needle_hits(n, obstacle) != NeedleHit::GrazesBoundaryOnly) return n;
    }
    throw GeometryError("no non-grazing needle found for probe point");
}

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
    std::vector<std::exception_ptr> errs(n);
    auto run = [&](int i) {
        try {
            f(i);
        } catch (...) {
            errs[i] = std::current_exception();
        }
    };
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) run(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int i = next++; i < n; i = next++) run(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

Reconstruction reconstruct(const ProbeSetup& s, double delta, const NeedlePolicy& pol, const ClassifyParams& cp,
                           int threads) {
    if (!(delta > 0)) throw ConfigError("grid spacing must be positive");
    Reconstruction rec;
    rec.delta = delta;
    const EnclosingCircle ec = enclosing_circle(s.domain);
    const int half = static_cast<int>(std::ceil(ec.radius / delta));
    std::map<std::pair<int, int>, int> index;
    for (int j = -half; j <= half; ++j)
        for (int i = -half; i <= half; ++i) {
            const Point2 x = ec.center + Point2{i * delta, j * delta};
            if (!shape_contains(s.domain, x)) continue;
            if (dist(x, nearest_boundary_point(s.domain, x)) < pol.boundary_margin * delta) continue;
            index[{i, j}] = static_cast<int>(rec.points.size());
            GridPoint g;
            g.x = x;
            g.truth_inside = obstacle_component(s.obstacle, x) >= 0 || obstacle_boundary_distance(s.obstacle, x) == 0;
            rec.points.push_back(g);
        }

    const int np = static_cast<int>(rec.points.size());
    std::vector<IndicatorSeries> primary(np);
    parallel_for(np, threads, [&](int i) {
        const Needle nd = policy_needle(s.domain, s.obstacle, rec.points[i].x, 0.0, pol);
        primary[i] = indicator_sequence(s, build_needle_sequence(s.basis, nd), 0.0, cp);
    });

    std::vector<double> limits;
    for (auto& ser : primary)
        if (ser.cls.kind == SeriesClass::Converged) limits.push_back(std::abs(ser.cls.limit));
    if (!limits.empty()) {
        std::nth_element(limits.begin(), limits.begin() + limits.size() / 2, limits.end());
        rec.scale = limits[limits.size() / 2];
    } else {
        log_warning("no converged indicator sequence; blowup scale set to 0");
    }

    std::vector<IndicatorSeries> second(np);
    std::vector<char> need_second(np, 0);
    for (int i = 0; i < np; ++i) {
        primary[i].cls = classify(primary[i].values, rec.scale, cp);
        need_second[i] = pol.fallback && primary[i].cls.kind == SeriesClass::Undecided;
    }
    parallel_for(np, threads, [&](int i) {
        if (!need_second[i]) return;
        const Needle nd = policy_needle(s.domain, s.obstacle, rec.points[i].x, 90.0, pol);
        second[i] = indicator_sequence(s, build_needle_sequence(s.basis, nd), rec.scale, cp);
    });

    for (int i = 0; i < np; ++i) {
        GridPoint& g = rec.points[i];
        g.primary = primary[i].cls.kind;
        g.needles = need_second[i] ? 2 : 1;
        const IndicatorSeries& last = need_second[i] ? second[i] : primary[i];
        g.fallback = need_second[i] ? second[i].cls.kind : SeriesClass::Undecided;
        g.last_value = last.values.empty() ? 0.0 : last.values.back();
        g.n_used = static_cast<int>(last.values.size());
        const bool any_conv = g.primary == SeriesClass::Converged || g.fallback == SeriesClass::Converged;
        const bool all_blow = g.primary == SeriesClass::Blowup && (!need_second[i] || g.fallback == SeriesClass::Blowup);
        g.flag = any_conv ? 0 : (all_blow ? 1 : -1);
        if (g.flag < 0) ++rec.undecided;
    }

    // Flag transitions along grid rows and columns; a run of undecided points between two decided
    // points with different flags contributes the midpoint of those decided points.
    for (auto& [ij, a] : index) {
        if (rec.points[a].flag < 0) continue;
        for (auto step : {std::pair{1, 0}, std::pair{0, 1}}) {
            std::pair<int, int> cur{ij.first + step.first, ij.second + step.second};
            for (auto it = index.find(cur); it != index.end(); it = index.find(cur)) {
                const GridPoint& q = rec.points[it->second];
                if (q.flag >= 0) {
                    if (q.flag != rec.points[a].flag) rec.boundary.push_back((rec.points[a].x + q.x) * 0.5);
                    break;
                }
                cur = {cur.first + step.first, cur.second + step.second};
            }
        }
    }
    return rec;
}

double hausdorff_to_obstacle(const std::vector<Point2>& pts, const ObstacleSpec& obstacle) {
    if (obstacle.empty()) return pts.empty() ? 0.0 : INFINITY;
    if (pts.empty()) return INFINITY;
    double h = 0.0;
    for (const Point2& p : pts) h = std::max(h, obstacle_boundary_distance(obstacle, p));
    for (const Shape& c : obstacle.components)
        for (const Point2& b : sample_boundary(c, 1e-3)) {
            double dmin = INFINITY;
            for (const Point2& p : pts) dmin = std::min(dmin, dist(p, b));
            h = std::max(h, dmin);
        }
    return h;
}

}  // namespace ps
