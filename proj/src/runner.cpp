#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <thread>

#include "error.hpp"

namespace ps {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kJ01 = 2.404825557695773;       // first zero of J0
constexpr double kJp11 = 1.841183781340659;      // first zero of J1'

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json pt(Point2 p) { return json::array({p.x, p.y}); }
json cx(cplx z) { return json::array({z.real(), z.imag()}); }

/// Non-finite values become null in the JSON reports.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    std::ofstream open(const std::string& name) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + (dir_ / name).string());
        files_.push_back(name);
        return os;
    }

    void write_json(const std::string& name, const json& j) {
        auto os = open(name);
        os << j.dump(2) << "\n";
    }

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double lap() {
        const auto t = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(t - t0).count();
        t0 = t;
        return s;
    }
};

struct Context {
    const ExperimentConfig& cfg;
    Output& out;
    json& timings;
    int threads;
};

Point2 shape_center(const Shape& s) {
    if (s.kind != ShapeKind::Polygon) return s.center;
    Point2 c;
    for (auto& v : s.vertices) c = c + v;
    return c * (1.0 / static_cast<double>(s.vertices.size()));
}

VecC forward_data(const ExperimentConfig& c, const TriMesh& m, std::mt19937_64& rng) {
    VecC f(m.n_outer);
    if (c.forward.data == "constant") {
        f.setConstant(c.forward.value);
    } else if (c.forward.data == "plane_wave") {
        const Point2 d{std::cos(c.forward.direction), std::sin(c.forward.direction)};
        for (int i = 0; i < m.n_outer; ++i) f[i] = std::exp(cplx(0.0, c.k * dot(m.nodes[i], d)));
    } else {
        f = random_boundary_data(m, rng);
    }
    return f;
}

std::optional<ConcentricReference> reference_for(const ExperimentConfig& c) {
    const auto& ob = c.obstacle;
    if (c.domain.kind != ShapeKind::Disk || ob.components.size() != 1 || ob.components[0].kind != ShapeKind::Disk ||
        dist(ob.components[0].center, c.domain.center) > 1e-12 || c.forward.data != "constant" || !(c.k > 0))
        return std::nullopt;
    return concentric_reference(c.domain.center, c.domain.radius, ob.components[0].radius, c.k, ob.lambda.at(0),
                                c.forward.value);
}

json run_forward(Context& ctx) {
    const auto& c = ctx.cfg;
    Timer t;
    std::mt19937_64 rng(c.seed);
    const TriMesh full = mesh_domain(c.domain, c.obstacle, c.h);
    const TriMesh ext = exterior_submesh(full);
    check_eigen_proximity(full, c.k);
    ctx.timings["mesh"] = t.lap();
    HelmholtzSolver solver(ext, c.k, &c.obstacle.lambda);
    const VecC f = forward_data(c, full, rng);
    const VecC u = solver.solve(f);
    ctx.timings["solve"] = t.lap();
    {
        auto os = ctx.out.open("solution.csv");
        write_solution_csv(os, ext, u);
    }
    const MeshQuality q = mesh_quality(full);
    const Energy e = energy(ext, u, Region::Exterior);
    json r = {{"h", c.h},
              {"nodes", q.n_nodes},
              {"triangles", q.n_triangles},
              {"h_max", q.h_max},
              {"min_angle_deg", q.min_angle * 180.0 / std::numbers::pi},
              {"residual", solver.residual(u)},
              {"dirichlet_energy", e.dirichlet},
              {"mass", e.mass},
              {"interface_mass", e.boundary}};
    if (c.forward.reference) {
        const auto ref = reference_for(c);
        if (!ref)
            throw ConfigError("forward.reference needs a disk domain, one concentric disk obstacle, constant data and k > 0");
        json conv = json::array();
        const double err = relative_l2_error(ext, u, Region::Full, *ref);
        conv.push_back({{"h", c.h}, {"l2_error", err}});
        for (double h : c.forward.convergence_h) {
            const TriMesh fh = mesh_domain(c.domain, c.obstacle, h);
            const TriMesh eh = exterior_submesh(fh);
            const VecC uh = solve_obstacle_problem(eh, c.k, c.obstacle.lambda, VecC::Constant(fh.n_outer, c.forward.value));
            conv.push_back({{"h", h}, {"l2_error", relative_l2_error(eh, uh, Region::Full, *ref)}});
        }
        r["reference"] = {{"a", cx(ref->a)}, {"b", cx(ref->b)}, {"l2_error", err}};
        r["convergence"] = conv;
        if (conv.size() > 1) r["error_ratio"] = conv[1]["l2_error"].get<double>() / err;
        ctx.timings["reference"] = t.lap();
    }
    ctx.out.write_json("forward.json", r);
    return r;
}

json run_verify(Context& ctx) {
    const auto& c = ctx.cfg;
    Timer t;
    std::mt19937_64 rng(c.seed);
    const TriMesh full = mesh_domain(c.domain, c.obstacle, c.h);
    check_eigen_proximity(full, c.k);
    DtnContext dtn(full, c.k, c.obstacle.lambda);
    ctx.timings["setup"] = t.lap();
    auto os = ctx.out.open("identity.csv");
    os << "sample,lhs_re,lhs_im,rhs_re,rhs_im,rel_err,imag_boundary,imag_rel_err\n";
    double max_rel = 0.0, max_imag = 0.0;
    for (int s = 0; s < c.verify.samples; ++s) {
        const VecC f = random_boundary_data(full, rng);
        const IdentityReport r = verify_identity(dtn, f);
        os << s << ',' << num(r.lhs.real()) << ',' << num(r.lhs.imag()) << ',' << num(r.rhs.real()) << ','
           << num(r.rhs.imag()) << ',' << num(r.rel_err) << ',' << num(r.imag_boundary) << ',' << num(r.imag_rel_err)
           << '\n';
        max_rel = std::max(max_rel, r.rel_err);
        max_imag = std::max(max_imag, r.imag_rel_err);
    }
    ctx.timings["identity"] = t.lap();
    json r = {{"samples", c.verify.samples}, {"max_rel_err", max_rel}, {"max_imag_rel_err", max_imag}};
    ctx.out.write_json("verify.json", r);
    return r;
}

json trace_json(const TraceConstant& tc) {
    return {{"K", tc.K}, {"eps", tc.eps}, {"mu_max", tc.mu_max}};
}

json constants_json(const ConstantsReport& c) {
    return {{"h", c.h},          {"C0", c.C0},   {"C_U", c.C_U},
            {"area_D", c.area_D}, {"L", c.L},     {"K_ext", trace_json(c.K_ext)},
            {"K_D", trace_json(c.K_D)}};
}

json conditions_json(const ConditionsReport& r) {
    return {{"k", r.k},
            {"L", r.L},
            {"holds_blowup", r.holds_blowup},
            {"holds_reflected", r.holds_reflected},
            {"eps_star", r.eps_star},
            {"eps_star_reflected", r.eps_star_reflected},
            {"max_L", r.max_L}};
}

json audits_json(const std::vector<InequalityAudit>& a) {
    json j = json::array();
    for (auto& x : a)
        j.push_back({{"name", x.name}, {"samples", x.samples}, {"violations", x.violations}, {"max_ratio", x.max_ratio}});
    return j;
}

double rel_change(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); }

json run_constants(Context& ctx) {
    const auto& c = ctx.cfg;
    if (c.obstacle.empty()) throw ConfigError("task constants needs an obstacle");
    Timer t;
    const TriMesh full = mesh_domain(c.domain, c.obstacle, c.h);
    const ConstantsReport rep = estimate_constants(full, c.obstacle, c.h);
    const ConditionsReport cond = check_smallness(rep, c.k);
    ctx.timings["constants"] = t.lap();
    json r = {{"constants", constants_json(rep)}, {"conditions", conditions_json(cond)}};
    {
        auto os = ctx.out.open("conditions.csv");
        os << "eps,exterior,obstacle,reflected\n";
        for (size_t i = 0; i < cond.eps.size(); ++i)
            os << num(cond.eps[i]) << ',' << num(cond.exterior[i]) << ',' << num(cond.obstacle[i]) << ','
               << num(cond.reflected[i]) << '\n';
    }
    if (c.constants.calibration) {
        json cal = json::object();
        if (c.domain.kind == ShapeKind::Disk) {
            const TriMesh bare = mesh_domain(c.domain, ObstacleSpec{}, c.h);
            const double R = c.domain.radius;
            const double c0 = estimate_poincare_C0(bare), cm = estimate_poincare_mean(bare);
            cal["domain_C0"] = {{"value", c0}, {"oracle", R / kJ01}, {"rel_err", rel_change(R / kJ01, c0)}};
            cal["domain_C_U"] = {{"value", cm}, {"oracle", R / kJp11}, {"rel_err", rel_change(R / kJp11, cm)}};
        }
        json comps = json::array();
        for (size_t j = 0; j < c.obstacle.components.size(); ++j) {
            const Shape& s = c.obstacle.components[j];
            if (s.kind != ShapeKind::Disk) continue;
            const double oracle = s.radius / kJp11;
            comps.push_back({{"component", j}, {"value", rep.C_U[j]}, {"oracle", oracle},
                             {"rel_err", rel_change(oracle, rep.C_U[j])}});
        }
        cal["obstacle_C_U"] = comps;
        r["calibration"] = cal;
        ctx.timings["calibration"] = t.lap();
    }
    if (c.constants.audit_samples > 0) {
        r["audits"] = audits_json(audit_constants(full, rep, c.constants.audit_samples, c.seed));
        ctx.timings["audits"] = t.lap();
    }
    if (c.constants.chain_samples > 0) {
        DtnContext dtn(full, c.k, c.obstacle.lambda);
        std::mt19937_64 rng(c.seed + 1);
        std::vector<VecC> data;
        for (int i = 0; i < c.constants.chain_samples; ++i) data.push_back(random_boundary_data(full, rng));
        r["chain_audits"] = audits_json(chain_audit(dtn, rep, data));
        ctx.timings["chain"] = t.lap();
    }
    if (c.constants.refine) {
        const double h2 = c.h / 2;
        const TriMesh fine = mesh_domain(c.domain, c.obstacle, h2);
        const ConstantsReport r2 = estimate_constants(fine, c.obstacle, h2);
        json ch = {{"C0", rel_change(rep.C0, r2.C0)},
                   {"K_ext", rel_change(rep.K_ext.K, r2.K_ext.K)},
                   {"K_D", rel_change(rep.K_D.K, r2.K_D.K)}};
        std::vector<double> cu;
        for (size_t j = 0; j < rep.C_U.size(); ++j) cu.push_back(rel_change(rep.C_U[j], r2.C_U[j]));
        ch["C_U"] = cu;
        double worst = std::max({ch["C0"].get<double>(), ch["K_ext"].get<double>(), ch["K_D"].get<double>()});
        for (double v : cu) worst = std::max(worst, v);
        r["refinement"] = {{"constants", constants_json(r2)}, {"rel_change", ch}, {"max_rel_change", worst}};
        ctx.timings["refinement"] = t.lap();
    }
    ctx.out.write_json("constants.json", r);
    return r;
}

/// Component boundary point in direction theta from the component center.
Point2 boundary_anchor(const Shape& s, double theta) {
    return ray_exit_point(s, shape_center(s), {std::cos(theta), std::sin(theta)});
}

Point2 snap_to_obstacle(const ObstacleSpec& ob, Point2 a) {
    Point2 best = a;
    double bd = INFINITY;
    for (auto& s : ob.components) {
        const Point2 p = nearest_boundary_point(s, a);
        if (dist(p, a) < bd) {
            bd = dist(p, a);
            best = p;
        }
    }
    return best;
}

void write_indicator_row(std::ostream& os, double d, const IndicatorFunctionSample& s) {
    os << num(d) << ',' << num(s.x.x) << ',' << num(s.x.y) << ',' << num(s.value) << ',' << num(s.ext_grad) << ','
       << num(s.ext_mass) << ',' << num(s.int_grad) << ',' << num(s.int_mass) << ',' << num(s.re_term) << ','
       << num(s.im_term) << '\n';
}

constexpr const char* kIndicatorHeader = "dist,x,y,I,ext_grad,ext_mass,int_grad,int_mass,re_term,im_term\n";

json run_side_a(Context& ctx, const ProbeSetup& S) {
    const auto& c = ctx.cfg;
    const auto& p = c.probe;
    Timer t;
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const EnclosingCircle ec = enclosing_circle(c.domain);
    const double dmin = c.obstacle.empty() ? 0.0 : 1.5 * min_probe_distance(S.dtn.full());
    std::vector<Point2> xs;
    for (int attempt = 0; static_cast<int>(xs.size()) < p.samples; ++attempt) {
        if (attempt > 1000 * std::max(1, p.samples)) throw ConfigError("probe: cannot place side-A samples in the annulus");
        const double r = p.sample_r_min + (p.sample_r_max - p.sample_r_min) * U(rng);
        const double th = 2 * std::numbers::pi * U(rng);
        const Point2 x = ec.center + Point2{r * std::cos(th), r * std::sin(th)};
        if (!shape_contains(c.domain, x) || obstacle_component(c.obstacle, x) >= 0) continue;
        if (obstacle_boundary_distance(c.obstacle, x) < dmin) continue;
        const Needle nd = policy_needle(c.domain, c.obstacle, x, 0.0, p.policy);
        if (!c.obstacle.empty() && needle_hits(nd, c.obstacle) != NeedleHit::MissesClosure) continue;
        xs.push_back(x);
    }
    std::vector<IndicatorSeries> series(xs.size());
    std::vector<IndicatorFunctionSample> exact(xs.size());
    parallel_for(static_cast<int>(xs.size()), ctx.threads, [&](int i) {
        const Needle nd = policy_needle(c.domain, c.obstacle, xs[i], 0.0, p.policy);
        series[i] = indicator_sequence(S, build_needle_sequence(S.basis, nd), 0.0, p.classify);
        exact[i] = indicator_function(S.dtn, c.obstacle, xs[i]);
    });
    json r;
    double max_rel = 0.0;
    int converged = 0;
    {
        auto os = ctx.out.open("side_a.csv");
        os << "x,y,I,last,rel_err,class,n_used\n";
        for (size_t i = 0; i < xs.size(); ++i) {
            const double last = series[i].values.empty() ? NAN : series[i].values.back();
            const double I = exact[i].value;
            const double rel = std::abs(last - I) / std::max(std::abs(I), 1e-300);
            max_rel = std::max(max_rel, rel);
            converged += series[i].cls.kind == SeriesClass::Converged;
            os << num(xs[i].x) << ',' << num(xs[i].y) << ',' << num(I) << ',' << num(last) << ',' << num(rel) << ','
               << to_string(series[i].cls.kind) << ',' << series[i].values.size() << '\n';
        }
    }
    r["samples"] = {{"count", xs.size()}, {"converged", converged}, {"max_rel_err", jnum(max_rel)}};
    ctx.timings["samples"] = t.lap();

    if (!c.obstacle.empty() && !p.ray_distances.empty()) {
        const Point2 a = snap_to_obstacle(c.obstacle, p.ray_anchor);
        const auto pts = ray_points(c.obstacle, a, p.ray_distances);
        std::vector<IndicatorFunctionSample> v(pts.size());
        parallel_for(static_cast<int>(pts.size()), ctx.threads,
                     [&](int i) { v[i] = indicator_function(S.dtn, c.obstacle, pts[i]); });
        auto os = ctx.out.open("ray.csv");
        os << kIndicatorHeader;
        std::vector<double> vals;
        for (size_t i = 0; i < v.size(); ++i) {
            write_indicator_row(os, p.ray_distances[i], v[i]);
            vals.push_back(v[i].value);
        }
        bool inc = true;
        for (size_t i = 1; i < vals.size(); ++i) inc = inc && vals[i] > vals[i - 1];
        r["ray"] = {{"anchor", pt(a)},
                    {"distances", p.ray_distances},
                    {"values", vals},
                    {"strictly_increasing", inc},
                    {"ratio", jnum(vals.back() / vals.front())}};
        ctx.timings["ray"] = t.lap();
    }

    if (!c.obstacle.empty() && p.ring.count > 0) {
        const Shape& s = c.obstacle.components[0];
        std::vector<Point2> pts;
        for (int j = 0; j < p.ring.count; ++j) {
            const Point2 a = boundary_anchor(s, 2 * std::numbers::pi * j / p.ring.count);
            pts.push_back(ray_points(c.obstacle, a, {p.ring.distance})[0]);
        }
        std::vector<IndicatorFunctionSample> v(pts.size());
        parallel_for(static_cast<int>(pts.size()), ctx.threads,
                     [&](int i) { v[i] = indicator_function(S.dtn, c.obstacle, pts[i]); });
        auto os = ctx.out.open("ring.csv");
        os << kIndicatorHeader;
        double lo = INFINITY, hi = -INFINITY;
        for (auto& s2 : v) {
            write_indicator_row(os, p.ring.distance, s2);
            lo = std::min(lo, s2.value);
            hi = std::max(hi, s2.value);
        }
        r["ring"] = {{"distance", p.ring.distance},
                     {"count", p.ring.count},
                     {"min", lo},
                     {"max", hi},
                     {"max_over_min", jnum(lo > 0 ? hi / lo : INFINITY)}};
        ctx.timings["ring"] = t.lap();
    }
    return r;
}

json run_reconstruct(Context& ctx, const ProbeSetup& S) {
    const auto& c = ctx.cfg;
    const auto& p = c.probe;
    Timer t;
    const Reconstruction rec = reconstruct(S, p.grid_delta, p.policy, p.classify, ctx.threads);
    ctx.timings["reconstruct"] = t.lap();
    const double cell = p.grid_delta * std::sqrt(2.0);
    int wrong = 0, near_wrong = 0, inside = 0;
    {
        auto os = ctx.out.open("reconstruction.csv");
        os << "x,y,flag,last_indicator_value,n_used,primary,fallback,truth_inside\n";
        for (auto& g : rec.points) {
            os << num(g.x.x) << ',' << num(g.x.y) << ',' << g.flag << ',' << num(g.last_value) << ',' << g.n_used << ','
               << to_string(g.primary) << ',' << (g.needles > 1 ? to_string(g.fallback) : "none") << ','
               << (g.truth_inside ? 1 : 0) << '\n';
            inside += g.flag == 1;
            if (g.flag < 0 || (g.flag == 1) != g.truth_inside) {
                if (obstacle_boundary_distance(c.obstacle, g.x) <= cell)
                    ++near_wrong;
                else
                    ++wrong;
            }
        }
    }
    {
        auto os = ctx.out.open("boundary.csv");
        os << "x,y\n";
        for (auto& b : rec.boundary) os << num(b.x) << ',' << num(b.y) << '\n';
    }
    json r = {{"delta", p.grid_delta},
              {"points", rec.points.size()},
              {"scale", rec.scale},
              {"undecided", rec.undecided},
              {"inside", inside},
              {"misclassified_far", wrong},
              {"mismatch_within_cell", near_wrong},
              {"boundary_points", rec.boundary.size()}};
    r["hausdorff"] = c.obstacle.empty() ? json(nullptr) : jnum(hausdorff_to_obstacle(rec.boundary, c.obstacle));
    return r;
}

json run_needle_energy(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& nc = c.probe.needle_check;
    Timer t;
    MfsBasis basis(c.domain, c.k, c.probe.needle);
    const Needle nd = straight_needle(nc.tip, nc.anchor, c.domain);
    const NeedleSequence seq = build_needle_sequence(basis, nd);
    ctx.timings["needle"] = t.lap();
    const double L = nd.length();
    const Point2 axis = (nd.anchor() - nd.tip()) * (1.0 / L);
    const double height = nc.cone_height > 0 ? nc.cone_height : 0.5 * L;
    std::vector<std::pair<std::string, ProbeRegion>> regions = {
        {"cone_tip", ProbeRegion::cone(nd.tip(), axis, nc.cone_aperture_deg * std::numbers::pi / 180.0, height)},
        {"mid_ball", ProbeRegion::ball((nd.tip() + nd.anchor()) * 0.5, nc.mid_ball_radius)}};
    for (size_t i = 0; i < nc.off_balls.size(); ++i)
        regions.push_back({"off_ball_" + std::to_string(i), ProbeRegion::ball(nc.off_balls[i].first, nc.off_balls[i].second)});

    json terms = json::array();
    for (auto& term : seq.terms)
        terms.push_back({{"n", term.n}, {"d", term.d}, {"alpha", term.alpha}, {"misfit", term.fit_residual}});
    json r = {{"tip", pt(nd.tip())}, {"anchor", pt(nd.anchor())}, {"length", L}, {"truncated", seq.truncated},
              {"terms", terms}};
    json regs = json::array();
    auto os = ctx.out.open("needle_energy.csv");
    os << "region,n,energy\n";
    for (auto& [name, reg] : regions) {
        const GrowthReport g = needle_blowup_check(basis, seq, reg);
        for (size_t i = 0; i < g.n.size(); ++i) os << name << ',' << g.n[i] << ',' << num(g.energy[i]) << '\n';
        regs.push_back({{"name", name},
                        {"off_needle", name.rfind("off_ball", 0) == 0},
                        {"energy", g.energy},
                        {"increasing_tail", g.increasing_tail},
                        {"growth", jnum(g.growth)},
                        {"cauchy_tail", jnum(g.cauchy_tail)}});
    }
    r["regions"] = regs;
    ctx.timings["energies"] = t.lap();
    return r;
}

json run_probe(Context& ctx) {
    const auto& c = ctx.cfg;
    json r = {{"mode", c.probe.mode}};
    if (c.probe.mode == "needle_energy") {
        r.update(run_needle_energy(ctx));
        ctx.out.write_json("probe.json", r);
        return r;
    }
    Timer t;
    const TriMesh full = mesh_domain(c.domain, c.obstacle, c.h);
    check_eigen_proximity(full, c.k);
    DtnContext dtn(full, c.k, c.obstacle.lambda);
    MfsBasis basis(c.domain, c.k, c.probe.needle, &full);
    std::optional<ExactFieldGap> eg;
    if (c.probe.gap_mode == "exact") eg.emplace(dtn, basis);
    const ProbeSetup S{c.domain, c.obstacle, dtn, basis, eg ? &*eg : nullptr};
    ctx.timings["setup"] = t.lap();
    r["gap_mode"] = c.probe.gap_mode;
    r.update(c.probe.mode == "side_a" ? run_side_a(ctx, S) : run_reconstruct(ctx, S));
    ctx.out.write_json("probe.json", r);
    return r;
}

json run_enclosure(Context& ctx) {
    const auto& c = ctx.cfg;
    Timer t;
    const TriMesh full = mesh_domain(c.domain, c.obstacle, c.h);
    DtnContext dtn(full, c.k, c.obstacle.lambda);
    ctx.timings["setup"] = t.lap();
    const auto& P = c.enclosure.params;
    const HullResult hull = convex_hull(dtn, c.enclosure.directions, P, ctx.threads);
    ctx.timings["hull"] = t.lap();
    json dirs = json::array();
    std::vector<HalfPlane> planes;
    double max_err = 0.0, min_r2 = INFINITY;
    bool regimes = true;
    for (size_t j = 0; j < hull.estimates.size(); ++j) {
        const SupportEstimate& e = hull.estimates[j];
        planes.push_back({e.omega, e.h_hat});
        char name[32];
        std::snprintf(name, sizeof name, "direction_%02zu.csv", j);
        auto os = ctx.out.open(name);
        os << "tau,t,I,log_abs_I\n";
        const double shift = mesh_support(full, e.omega);
        for (double tt : {0.0, e.below.t, e.above.t})
            for (size_t i = 0; i < e.tau.size(); ++i) {
                const double I = indicator_from_gap(e.gap_re[i], e.tau[i], tt, shift);
                os << num(e.tau[i]) << ',' << num(tt) << ',' << num(I) << ',' << num(std::log(std::abs(I))) << '\n';
            }
        json d = {{"omega", pt(e.omega)},
                  {"h_hat", e.h_hat},
                  {"slope", e.slope},
                  {"intercept", e.intercept},
                  {"inv_tau_coeff", e.inv_tau_coeff},
                  {"inv_tau2_coeff", e.inv_tau2_coeff},
                  {"r2", e.r2},
                  {"low_confidence", e.low_confidence},
                  {"above", {{"t", e.above.t}, {"ratio", jnum(e.above.ratio)}, {"pass", e.above.pass}}},
                  {"below", {{"t", e.below.t}, {"ratio", jnum(e.below.ratio)}, {"final", e.below.values.empty() ? 0.0 : e.below.values.back()}, {"pass", e.below.pass}}}};
        if (!c.obstacle.empty()) {
            const double truth = support_function(c.obstacle, e.omega);
            d["h_true"] = truth;
            d["error"] = e.h_hat - truth;
            max_err = std::max(max_err, std::abs(e.h_hat - truth));
        }
        min_r2 = std::min(min_r2, e.r2);
        regimes = regimes && e.above.pass && e.below.pass;
        dirs.push_back(d);
    }
    json verts = json::array();
    for (auto& v : hull.vertices) verts.push_back(pt(v));
    json r = {{"directions", dirs},
              {"vertices", verts},
              {"hull_area", polygon_area(hull.vertices)},
              {"fit", P.fit == FitModel::Linear ? "linear" : "asymptotic"},
              {"tau", P.tau},
              {"min_r2", min_r2},
              {"regimes_pass", regimes}};
    if (!c.obstacle.empty()) {
        r["max_abs_error"] = max_err;
        r["coverage"] = hull_coverage(planes, c.obstacle);
    }
    ctx.timings["report"] = t.lap();
    ctx.out.write_json("hull.json", r);
    return r;
}

json series_json(const IndicatorSeries& s) {
    return {{"n", s.n}, {"values", s.values}, {"w_grad", s.w_grad}, {"vD_grad", s.vD_grad}, {"vD_mass", s.vD_mass},
            {"class", to_string(s.cls.kind)}};
}

json run_sweep(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& sw = c.sweep;
    if (c.obstacle.empty()) throw ConfigError("task sweep needs an obstacle");
    Timer t;
    const TriMesh full = mesh_domain(c.domain, c.obstacle, c.h);
    check_eigen_proximity(full, c.k);
    DtnContext dtn(full, c.k, c.obstacle.lambda);
    const ConstantsReport rep = estimate_constants(full, c.obstacle, c.h);
    const ConditionsReport cond = check_smallness(rep, c.k);
    ctx.timings["setup"] = t.lap();
    const double eps = sw.eps > 0 ? sw.eps : cond.eps_star_reflected;
    json r = {{"constants", constants_json(rep)}, {"conditions", conditions_json(cond)}, {"eps", eps}};

    if (!sw.ray_distances.empty()) {
        const Point2 a = snap_to_obstacle(c.obstacle, sw.ray_anchor);
        const EnergyDiagnostics d = reflected_energy_sweep(dtn, c.obstacle, ray_points(c.obstacle, a, sw.ray_distances), rep, eps);
        auto os = ctx.out.open("sweep.csv");
        os << "dist,x,y,w_grad,w_mass,w_trace,G_grad,G_mass,data_factor,lower_bound,bound_ratio,trace_ratio\n";
        for (auto& e : d.records)
            os << num(e.distance) << ',' << num(e.x.x) << ',' << num(e.x.y) << ',' << num(e.w_grad) << ','
               << num(e.w_mass) << ',' << num(e.w_trace) << ',' << num(e.G_grad) << ',' << num(e.G_mass) << ','
               << num(e.data_factor) << ',' << num(e.lower_bound) << ',' << num(e.bound_ratio) << ','
               << num(e.trace_ratio) << '\n';
        r["reflected_energy"] = {{"anchor", pt(a)},
                                 {"w_grad_increasing", d.w_grad_increasing},
                                 {"G_grad_increasing", d.G_grad_increasing},
                                 {"G_grad_dominates", d.G_grad_dominates},
                                 {"min_bound_ratio", jnum(d.min_bound_ratio)},
                                 {"max_trace_ratio", jnum(d.max_trace_ratio)}};
        ctx.timings["reflected"] = t.lap();
    }

    if (sw.ratio_fit > 0) {
        const EnergyRatioAudit a = energy_ratio_audit(dtn, sw.ratio_fit, sw.ratio_holdout, c.seed);
        r["energy_ratio"] = {{"C", a.C}, {"holdout_max", a.holdout_max}, {"pass", a.pass}};
        auto os = ctx.out.open("energy_ratio.csv");
        os << "set,index,ratio\n";
        for (size_t i = 0; i < a.fit_ratios.size(); ++i) os << "fit," << i << ',' << num(a.fit_ratios[i]) << '\n';
        for (size_t i = 0; i < a.holdout_ratios.size(); ++i) os << "holdout," << i << ',' << num(a.holdout_ratios[i]) << '\n';
        ctx.timings["energy_ratio"] = t.lap();
    }

    if (!sw.needle_tips.empty()) {
        MfsBasis basis(c.domain, c.k, c.probe.needle, &full);
        std::optional<ExactFieldGap> eg;
        if (c.probe.gap_mode == "exact") eg.emplace(dtn, basis);
        const ProbeSetup S{c.domain, c.obstacle, dtn, basis, eg ? &*eg : nullptr};
        std::vector<IndicatorSeries> ser(sw.needle_tips.size());
        std::vector<Needle> needles(sw.needle_tips.size());
        parallel_for(static_cast<int>(ser.size()), ctx.threads, [&](int i) {
            needles[i] = policy_needle(c.domain, c.obstacle, sw.needle_tips[i], 0.0, c.probe.policy);
            ser[i] = indicator_sequence(S, build_needle_sequence(basis, needles[i]), 0.0, c.probe.classify);
        });
        json tips = json::array();
        auto os = ctx.out.open("needle_series.csv");
        os << "tip,n,value,w_grad,vD_grad,vD_mass\n";
        for (size_t i = 0; i < ser.size(); ++i) {
            const auto& s = ser[i];
            for (size_t j = 0; j < s.values.size(); ++j)
                os << i << ',' << s.n[j] << ',' << num(s.values[j]) << ',' << num(s.w_grad[j]) << ','
                   << num(s.vD_grad[j]) << ',' << num(s.vD_mass[j]) << '\n';
            const DominanceReport dom = gradient_dominance_check(s);
            const ReflectedBlowupCheck rb = reflected_blowup_check(s, cond);
            tips.push_back({{"tip", pt(sw.needle_tips[i])},
                            {"hits", to_string(needle_hits(needles[i], c.obstacle))},
                            {"series", series_json(s)},
                            {"dominance", {{"ratios", dom.ratios}, {"tail_max", dom.tail_max}, {"tail_median", dom.tail_median}, {"bounded", dom.bounded}}},
                            {"reflected_blowup", {{"v_blowup", rb.v_blowup}, {"condition", rb.condition}, {"w_increasing", rb.w_increasing}, {"consistent", rb.consistent}}}});
        }
        r["needles"] = tips;
        ctx.timings["needles"] = t.lap();
    }
    ctx.out.write_json("sweep.json", r);
    return r;
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void write_manifest(const fs::path& dir, const json& m) {
    const fs::path tmp = dir / "manifest.json.tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw ConfigError("cannot write manifest in " + dir.string());
        os << m.dump(2) << "\n";
    }
    fs::rename(tmp, dir / "manifest.json");
}

}  // namespace

ExperimentConfig resolve_config(const json& config, const RunOptions& opts) {
    json j = config;
    for (auto& o : opts.overrides) apply_override(j, o);
    if (opts.seed) j["seed"] = *opts.seed;
    if (opts.threads) j["threads"] = *opts.threads;
    if (opts.task) {
        const std::string want = to_string(*opts.task);
        if (j.contains("task") && j["task"].is_string() && j["task"].get<std::string>() != want)
            log_warning("config task '" + j["task"].get<std::string>() + "' replaced by subcommand '" + want + "'");
        j["task"] = want;
    }
    if (opts.out_dir) {
        j["output_dir"] = *opts.out_dir;
    } else if (const char* env = std::getenv("PROBESCOPE_OUT"); env && *env) {
        j["output_dir"] = env;
    }
    ExperimentConfig c = parse_config(j);
    c.overrides = opts.overrides;
    return c;
}

RunResult run_experiment(const json& config, const RunOptions& opts) {
    const ExperimentConfig cfg = resolve_config(config, opts);
    const std::string hash = config_hash(cfg.source);
    Output out(cfg.output_dir);
    const int threads = cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    json timings = json::object();
    json manifest = {{"version", kVersion},
                     {"task", to_string(cfg.task)},
                     {"config_hash", hash},
                     {"config", cfg.source},
                     {"overrides", cfg.overrides},
                     {"seed", cfg.seed},
                     {"threads", threads},
                     {"started", utc_now()}};
    Context ctx{cfg, out, timings, threads};
    Timer total;
    json summary;
    try {
        switch (cfg.task) {
            case Task::Forward: summary = run_forward(ctx); break;
            case Task::Verify: summary = run_verify(ctx); break;
            case Task::Constants: summary = run_constants(ctx); break;
            case Task::Probe: summary = run_probe(ctx); break;
            case Task::Enclosure: summary = run_enclosure(ctx); break;
            case Task::Sweep: summary = run_sweep(ctx); break;
        }
    } catch (const Error& e) {
        manifest["status"] = "error";
        manifest["error"] = {{"code", e.code()}, {"message", e.what()}};
        manifest["files"] = out.files();
        manifest["timings"] = timings;
        manifest["finished"] = utc_now();
        write_manifest(out.dir(), manifest);
        throw;
    }
    timings["total"] = total.lap();
    manifest["status"] = "ok";
    manifest["files"] = out.files();
    manifest["timings"] = timings;
    manifest["finished"] = utc_now();
    write_manifest(out.dir(), manifest);
    return {out.dir().string(), hash, out.files(), summary};
}

RunResult run_config_file(const std::string& path, const RunOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return run_experiment(j, opts);
}

}  // namespace ps
