#include "enclosure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "error.hpp"
#include "probe.hpp"

namespace ps {

CgoParams CgoParams::make(Point2 omega, double tau, double k, double shift) {
    const double n = norm(omega);
    if (!(n > 0)) throw ConfigError("CGO direction must be nonzero");
    CgoParams p;
    p.omega = omega * (1.0 / n);
    p.omega_perp = {-p.omega.y, p.omega.x};
    p.tau = tau;
    p.k = k;
    p.shift = shift;
    p.validate();
    return p;
}

void CgoParams::validate() const {
    if (std::abs(norm(omega) - 1) > 1e-14 || std::abs(norm(omega_perp) - 1) > 1e-14 ||
        std::abs(dot(omega, omega_perp)) > 1e-14)
        throw ConfigError("CGO directions must be orthonormal");
    if (!(tau >= 0)) throw ConfigError("tau must be nonnegative");
    if (!(k >= 0)) throw ConfigError("k must be nonnegative");
}

std::pair<cplx, cplx> CgoParams::zeta() const {
    const double s = std::sqrt(tau * tau + k * k);
    return {cplx(tau * omega.x, s * omega_perp.x), cplx(tau * omega.y, s * omega_perp.y)};
}

KernelValue CgoParams::eval(Point2 x) const {
    const auto [zx, zy] = zeta();
    const cplx e = zx * x.x + zy * x.y - tau * shift;
    if (e.real() > 700) throw SolverError("CGO exponent overflow; increase the shift");
    KernelValue v;
    v.g = std::exp(e);
    v.gx = zx * v.g;
    v.gy = zy * v.g;
    return v;
}

VecC cgo_trace(const CgoParams& p, const TriMesh& mesh) {
    VecC f(mesh.n_outer);
    for (int i = 0; i < mesh.n_outer; ++i) f[i] = p.eval(mesh.nodes[i]).g;
    return f;
}

double mesh_support(const TriMesh& mesh, Point2 omega) {
    double s = -INFINITY;
    for (int i = 0; i < mesh.n_outer; ++i) s = std::max(s, dot(mesh.nodes[i], omega));
    return s;
}

double cgo_gap(const DtnContext& dtn, const CgoParams& p, GapMode mode) {
    if (mode == GapMode::FiniteElement) return dtn.gap(cgo_trace(p, dtn.full())).parts.real_sum();
    const Point2 far{1e30, 1e30};
    return field_gap(
               dtn, [&](Point2 y) { return p.eval(y); }, far)
        .real_sum();
}

double indicator_from_gap(double gap_re, double tau, double t, double shift) {
    return std::exp(-2 * tau * (t - shift)) * gap_re;
}

double enclosure_indicator(const DtnContext& dtn, const CgoParams& p, double t, GapMode mode) {
    return indicator_from_gap(cgo_gap(dtn, p, mode), p.tau, t, p.shift);
}

void EnclosureParams::validate() const {
    if (tau.size() < 5) throw ConfigError("enclosure tau grid needs at least 5 points");
    for (size_t i = 1; i < tau.size(); ++i)
        if (!(tau[i] > tau[i - 1])) throw ConfigError("enclosure tau grid must be increasing");
    if (!(tau.front() > 0)) throw ConfigError("enclosure tau values must be positive");
    if (!(regime_margin > 0)) throw ConfigError("enclosure regime margin must be positive");
    if (!std::isfinite(prefactor_power)) throw ConfigError("enclosure prefactor power must be finite");
}

namespace {

RegimeCheck regime(const SupportEstimate& e, double t, double shift, bool above, double threshold) {
    RegimeCheck r;
    r.t = t;
    for (size_t i = 0; i < e.tau.size(); ++i)
        r.values.push_back(std::abs(indicator_from_gap(e.gap_re[i], e.tau[i], t, shift)));
    const size_t n = r.values.size();
    r.ratio = r.values.front() > 0 ? r.values.back() / r.values.front() : INFINITY;
    if (above) {
        // Pre-asymptotic growth at the smallest tau is allowed; after its peak the indicator must decay.
        const size_t peak = std::max_element(r.values.begin(), r.values.end()) - r.values.begin();
        r.monotone = true;
        for (size_t i = peak + 1; i < n; ++i) r.monotone = r.monotone && r.values[i] < r.values[i - 1];
        r.pass = r.monotone && 3 * peak < n && r.values.back() < r.values.front();
    } else {
        r.monotone = true;
        for (size_t i = 1; i < n; ++i) r.monotone = r.monotone && r.values[i] > r.values[i - 1];
        r.pass = r.monotone && r.values.back() >= threshold;
    }
    return r;
}

}  // namespace

SupportEstimate estimate_support(const DtnContext& dtn, Point2 omega, const EnclosureParams& p) {
    p.validate();
    SupportEstimate e;
    const double n = norm(omega);
    e.omega = omega * (1.0 / n);
    const double s = mesh_support(dtn.full(), e.omega);
    e.tau = p.tau;
    for (double tau : p.tau) e.gap_re.push_back(cgo_gap(dtn, CgoParams::make(e.omega, tau, dtn.k(), s), p.mode));

    double scale = 0.0;
    for (double g : e.gap_re) scale = std::max(scale, std::abs(g));
    const double sign = e.gap_re.back() >= 0 ? 1.0 : -1.0;
    std::vector<double> ts, ys;
    for (size_t i = 0; i < e.tau.size(); ++i) {
        const double g = e.gap_re[i];
        const bool ok = std::abs(g) > 1e-12 * scale && g * sign > 0;
        e.used.push_back(ok);
        e.log_abs_I.push_back(ok ? std::log(std::abs(g)) + 2 * e.tau[i] * s : NAN);
        if (ok) {
            ts.push_back(e.tau[i]);
            ys.push_back(p.fit == FitModel::Asymptotic ? e.log_abs_I.back() - p.prefactor_power * std::log(e.tau[i])
                                                       : e.log_abs_I.back());
        }
    }
    const size_t dropped = e.tau.size() - ts.size();
    const int ncols = p.fit == FitModel::Asymptotic ? 4 : 2;
    e.low_confidence = ts.size() < 5 || dropped > e.tau.size() / 4;
    if (static_cast<int>(ts.size()) > ncols) {
        Eigen::MatrixXd A(ts.size(), ncols);
        Eigen::VectorXd y(ts.size());
        for (size_t i = 0; i < ts.size(); ++i) {
            A(i, 0) = 2 * ts[i];
            A(i, 1) = 1.0;
            if (ncols == 4) {
                A(i, 2) = 1.0 / ts[i];
                A(i, 3) = 1.0 / (ts[i] * ts[i]);
            }
            y[i] = ys[i];
        }
        const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
        e.slope = c[0];
        e.intercept = c[1];
        if (ncols == 4) {
            e.inv_tau_coeff = c[2];
            e.inv_tau2_coeff = c[3];
        }
        const double ss_res = (A * c - y).squaredNorm();
        const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
        e.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    } else {
        e.low_confidence = true;
    }
    e.h_hat = e.slope;
    e.above = regime(e, e.h_hat + p.regime_margin, s, true, p.growth_threshold);
    e.below = regime(e, e.h_hat - p.regime_margin, s, false, p.growth_threshold);
    return e;
}

std::vector<Point2> clip_polygon(std::vector<Point2> poly, const std::vector<HalfPlane>& planes) {
    for (const HalfPlane& hp : planes) {
        if (poly.empty()) break;
        std::vector<Point2> out;
        for (size_t i = 0; i < poly.size(); ++i) {
            const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
            const double fa = dot(a, hp.omega) - hp.h, fb = dot(b, hp.omega) - hp.h;
            if (fa <= 0) out.push_back(a);
            if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) out.push_back(a + (b - a) * (fa / (fa - fb)));
        }
        poly = std::move(out);
    }
    return poly;
}

std::vector<Point2> intersect_half_planes(const std::vector<HalfPlane>& planes, double extent) {
    return clip_polygon({{-extent, -extent}, {extent, -extent}, {extent, extent}, {-extent, extent}}, planes);
}

std::vector<Point2> uniform_directions(int m) {
    std::vector<Point2> d;
    for (int j = 0; j < m; ++j) {
        const double a = 2 * std::numbers::pi * j / m;
        d.push_back({std::cos(a), std::sin(a)});
    }
    return d;
}

double polygon_area(const std::vector<Point2>& poly) {
    double a = 0;
    for (size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * std::abs(a);
}

HullResult convex_hull(const DtnContext& dtn, int m, const EnclosureParams& p, int threads) {
    if (m < 8) throw ConfigError("convex hull needs at least 8 directions");
    p.validate();
    HullResult res;
    const auto dirs = uniform_directions(m);
    res.estimates.resize(m);
    parallel_for(m, threads, [&](int j) { res.estimates[j] = estimate_support(dtn, dirs[j], p); });
    std::vector<HalfPlane> planes;
    double extent = 1.0;
    for (auto& e : res.estimates) {
        planes.push_back({e.omega, e.h_hat});
        extent = std::max(extent, 10 * std::abs(e.h_hat));
    }
    for (int i = 0; i < dtn.full().n_outer; ++i) extent = std::max(extent, 2 * norm(dtn.full().nodes[i]));
    res.vertices = intersect_half_planes(planes, extent);
    if (res.vertices.size() < 3 || polygon_area(res.vertices) <= 0) {
        std::ostringstream os;
        os << "empty support half-plane intersection:";
        for (auto& e : res.estimates)
            os << " (" << e.omega.x << "," << e.omega.y << ")->" << e.h_hat << (e.low_confidence ? "?" : "");
        throw SolverError(os.str());
    }
    return res;
}

double hull_coverage(const std::vector<HalfPlane>& planes, const ObstacleSpec& obstacle, double h) {
    double total = 0, inside = 0;
    for (const Shape& c : obstacle.components) {
        const auto poly = sample_boundary(c, h);
        total += polygon_area(poly);
        inside += polygon_area(clip_polygon(poly, planes));
    }
    return total > 0 ? inside / total : 1.0;
}

}  // namespace ps
