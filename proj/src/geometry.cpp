#include "geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "error.hpp"

namespace ps {

namespace {

constexpr double kPi = std::numbers::pi;

Point2 rotate(Point2 p, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// Ellipse local coordinates scaled to the unit circle.
Point2 to_unit_circle(const Shape& e, Point2 p) {
    Point2 q = rotate(p - e.center, -e.rotation);
    return {q.x / e.semi_a, q.y / e.semi_b};
}

Point2 ellipse_point(const Shape& e, double t) {
    return e.center + rotate({e.semi_a * std::cos(t), e.semi_b * std::sin(t)}, e.rotation);
}

double signed_area(const std::vector<Point2>& v) {
    double a = 0.0;
    for (size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
    return 0.5 * a;
}

int orient_sign(Point2 a, Point2 b, Point2 c, double tol) {
    const double o = cross(b - a, c - a);
    if (o > tol) return 1;
    if (o < -tol) return -1;
    return 0;
}

bool on_segment(Point2 p, Point2 a, Point2 b, double tol) {
    return segment_distance(p, a, b) <= tol;
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d, double tol) {
    const int o1 = orient_sign(a, b, c, tol), o2 = orient_sign(a, b, d, tol);
    const int o3 = orient_sign(c, d, a, tol), o4 = orient_sign(c, d, b, tol);
    if (o1 * o2 < 0 && o3 * o4 < 0) return true;
    return on_segment(c, a, b, tol) || on_segment(d, a, b, tol) || on_segment(a, c, d, tol) ||
           on_segment(b, c, d, tol);
}

bool polygon_contains(const std::vector<Point2>& v, Point2 p) {
    bool inside = false;
    for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            const double xi = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
            if (p.x < xi) inside = !inside;
        }
    }
    return inside;
}

double polygon_boundary_distance(const std::vector<Point2>& v, Point2 p) {
    double d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < v.size(); ++i) d = std::min(d, segment_distance(p, v[i], v[(i + 1) % v.size()]));
    return d;
}

double shape_scale(const Shape& s) {
    switch (s.kind) {
        case ShapeKind::Disk: return s.radius;
        case ShapeKind::Ellipse: return std::max(s.semi_a, s.semi_b);
        case ShapeKind::Polygon: {
            double r = 0.0;
            for (auto& v : s.vertices) r = std::max(r, norm(v));
            return std::max(r, 1e-300);
        }
    }
    return 1.0;
}

// Cumulative arc length of the ellipse on a uniform parameter grid.
std::vector<double> ellipse_arc_table(const Shape& e, int n) {
    std::vector<double> s(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const double t0 = 2 * kPi * i / n, t1 = 2 * kPi * (i + 1) / n;
        s[i + 1] = s[i] + dist(ellipse_point(e, t0), ellipse_point(e, t1));
    }
    return s;
}

enum class Contact { None, Touch, Hit };

Contact disk_segment_contact(Point2 c, double r, Point2 a, Point2 b) {
    const double d = segment_distance(c, a, b);
    const double tol = 1e-12 * std::max(1.0, r);
    if (d < r - tol) return Contact::Hit;
    if (d <= r + tol) return Contact::Touch;
    return Contact::None;
}

Contact polygon_segment_contact(const std::vector<Point2>& poly, Point2 a, Point2 b) {
    const double tol = 1e-12 * std::max(1.0, std::max(norm(a), norm(b)));
    std::vector<double> ts{0.0, 1.0};
    bool touch = false;
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    auto param = [&](Point2 p) { return std::clamp(dot(p - a, ab) / len2, 0.0, 1.0); };
    for (size_t i = 0; i < poly.size(); ++i) {
        const Point2 c = poly[i], d = poly[(i + 1) % poly.size()];
        if (!segments_intersect(a, b, c, d, tol)) continue;
        touch = true;
        const double den = cross(ab, d - c);
        if (std::abs(den) > tol * std::sqrt(len2) * norm(d - c)) {
            ts.push_back(std::clamp(cross(c - a, d - c) / den, 0.0, 1.0));
        } else {
            ts.push_back(param(c));
            ts.push_back(param(d));
        }
    }
    std::sort(ts.begin(), ts.end());
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
        if (ts[i + 1] - ts[i] <= 1e-14) continue;
        const Point2 m = a + ab * (0.5 * (ts[i] + ts[i + 1]));
        if (polygon_contains(poly, m) && polygon_boundary_distance(poly, m) > tol) return Contact::Hit;
    }
    return touch ? Contact::Touch : Contact::None;
}

Contact shape_segment_contact(const Shape& s, Point2 a, Point2 b) {
    switch (s.kind) {
        case ShapeKind::Disk: return disk_segment_contact(s.center, s.radius, a, b);
        case ShapeKind::Ellipse:
            return disk_segment_contact({0, 0}, 1.0, to_unit_circle(s, a), to_unit_circle(s, b));
        case ShapeKind::Polygon: return polygon_segment_contact(s.vertices, a, b);
    }
    return Contact::None;
}

double boundary_distance(const Shape& s, Point2 p) { return dist(p, nearest_boundary_point(s, p)); }

}  // namespace

double segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double l2 = dot(ab, ab);
    if (l2 == 0.0) return dist(p, a);
    const double t = std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
    return dist(p, a + ab * t);
}

double polyline_distance(Point2 p, const std::vector<Point2>& poly) {
    if (poly.size() == 1) return dist(p, poly[0]);
    double d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < poly.size(); ++i) d = std::min(d, segment_distance(p, poly[i], poly[i + 1]));
    return d;
}

Shape Shape::disk(Point2 c, double r) {
    Shape s;
    s.kind = ShapeKind::Disk;
    s.center = c;
    s.radius = r;
    return s;
}

Shape Shape::ellipse(Point2 c, double a, double b, double rotation) {
    Shape s;
    s.kind = ShapeKind::Ellipse;
    s.center = c;
    s.semi_a = a;
    s.semi_b = b;
    s.rotation = rotation;
    return s;
}

Shape Shape::polygon(std::vector<Point2> verts) {
    Shape s;
    s.kind = ShapeKind::Polygon;
    s.vertices = std::move(verts);
    return s;
}

void validate_shape(const Shape& s) {
    auto finite = [](Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); };
    switch (s.kind) {
        case ShapeKind::Disk:
            if (!(s.radius > 0) || !finite(s.center)) throw GeometryError("disk radius must be positive");
            return;
        case ShapeKind::Ellipse:
            if (!(s.semi_a > 0) || !(s.semi_b > 0) || !finite(s.center))
                throw GeometryError("ellipse semi-axes must be positive");
            return;
        case ShapeKind::Polygon: {
            const auto& v = s.vertices;
            if (v.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
            for (auto& p : v)
                if (!finite(p)) throw GeometryError("polygon vertex not finite");
            if (signed_area(v) <= 0) throw GeometryError("polygon must be positively oriented");
            const size_t n = v.size();
            const double tol = 1e-12 * shape_scale(s);
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = i + 1; j < n; ++j) {
                    const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
                    if (adjacent) continue;
                    if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n], tol))
                        throw GeometryError("polygon is not simple");
                }
            }
            return;
        }
    }
}

bool shape_contains(const Shape& s, Point2 p) {
    switch (s.kind) {
        case ShapeKind::Disk: return dist(p, s.center) < s.radius;
        case ShapeKind::Ellipse: return norm(to_unit_circle(s, p)) < 1.0;
        case ShapeKind::Polygon:
            return polygon_contains(s.vertices, p) &&
                   polygon_boundary_distance(s.vertices, p) > 1e-14 * shape_scale(s);
    }
    return false;
}

double shape_area(const Shape& s) {
    switch (s.kind) {
        case ShapeKind::Disk: return kPi * s.radius * s.radius;
        case ShapeKind::Ellipse: return kPi * s.semi_a * s.semi_b;
        case ShapeKind::Polygon: return signed_area(s.vertices);
    }
    return 0.0;
}

double shape_perimeter(const Shape& s) {
    switch (s.kind) {
        case ShapeKind::Disk: return 2 * kPi * s.radius;
        case ShapeKind::Ellipse: return ellipse_arc_table(s, 1 << 14).back();
        case ShapeKind::Polygon: {
            double p = 0.0;
            for (size_t i = 0; i < s.vertices.size(); ++i)
                p += dist(s.vertices[i], s.vertices[(i + 1) % s.vertices.size()]);
            return p;
        }
    }
    return 0.0;
}

Shape translated(const Shape& s, Point2 d) {
    Shape t = s;
    t.center = s.center + d;
    for (auto& v : t.vertices) v = v + d;
    return t;
}

std::vector<Point2> sample_boundary(const Shape& s, double h) {
    std::vector<Point2> out;
    switch (s.kind) {
        case ShapeKind::Disk: {
            const int n = std::max(8, static_cast<int>(std::ceil(2 * kPi * s.radius / h)));
            for (int i = 0; i < n; ++i) {
                const double t = 2 * kPi * i / n;
                out.push_back({s.center.x + s.radius * std::cos(t), s.center.y + s.radius * std::sin(t)});
            }
            break;
        }
        case ShapeKind::Ellipse: {
            const int m = 1 << 14;
            const auto table = ellipse_arc_table(s, m);
            const double total = table.back();
            const int n = std::max(8, static_cast<int>(std::ceil(total / h)));
            int j = 0;
            for (int i = 0; i < n; ++i) {
                const double target = total * i / n;
                while (j < m && table[j + 1] < target) ++j;
                const double frac = (target - table[j]) / (table[j + 1] - table[j]);
                out.push_back(ellipse_point(s, 2 * kPi * (j + frac) / m));
            }
            break;
        }
        case ShapeKind::Polygon: {
            const auto& v = s.vertices;
            for (size_t i = 0; i < v.size(); ++i) {
                const Point2 a = v[i], b = v[(i + 1) % v.size()];
                const int n = std::max(1, static_cast<int>(std::ceil(dist(a, b) / h)));
                for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
            }
            break;
        }
    }
    return out;
}

Point2 nearest_boundary_point(const Shape& s, Point2 p) {
    switch (s.kind) {
        case ShapeKind::Disk: {
            Point2 d = p - s.center;
            const double r = norm(d);
            if (r == 0.0) return s.center + Point2{s.radius, 0.0};
            return s.center + d * (s.radius / r);
        }
        case ShapeKind::Ellipse: {
            // Coarse scan then Newton on the squared distance.
            const int n = 720;
            double best_t = 0.0, best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                const double t = 2 * kPi * i / n;
                const double d = dist(ellipse_point(s, t), p);
                if (d < best) best = d, best_t = t;
            }
            const Point2 q = rotate(p - s.center, -s.rotation);
            const double a = s.semi_a, b = s.semi_b;
            double t = best_t;
            for (int it = 0; it < 50; ++it) {
                const double c = std::cos(t), sn = std::sin(t);
                const double f = (b * b - a * a) * sn * c + q.x * a * sn - q.y * b * c;
                const double df = (b * b - a * a) * (c * c - sn * sn) + q.x * a * c + q.y * b * sn;
                if (df == 0.0) break;
                const double step = f / df;
                t -= step;
                if (std::abs(step) < 1e-15) break;
            }
            const Point2 cand = ellipse_point(s, t);
            return dist(cand, p) <= best + 1e-15 ? cand : ellipse_point(s, best_t);
        }
        case ShapeKind::Polygon: {
            const auto& v = s.vertices;
            Point2 best_q = v[0];
            double best = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < v.size(); ++i) {
                const Point2 a = v[i], b = v[(i + 1) % v.size()];
                const Point2 ab = b - a;
                const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
                const Point2 q = a + ab * t;
                const double d = dist(p, q);
                if (d < best) best = d, best_q = q;
            }
            return best_q;
        }
    }
    return p;
}

Point2 ray_exit_point(const Shape& s, Point2 p, Point2 dir) {
    const Point2 u = dir * (1.0 / norm(dir));
    switch (s.kind) {
        case ShapeKind::Disk: {
            const Point2 q = p - s.center;
            const double b = dot(q, u), c = dot(q, q) - s.radius * s.radius;
            return p + u * (-b + std::sqrt(std::max(0.0, b * b - c)));
        }
        case ShapeKind::Ellipse: {
            const Point2 q = to_unit_circle(s, p);
            const Point2 r = rotate(u, -s.rotation);
            const Point2 w{r.x / s.semi_a, r.y / s.semi_b};
            const double A = dot(w, w), B = dot(q, w), C = dot(q, q) - 1.0;
            return p + u * ((-B + std::sqrt(std::max(0.0, B * B - A * C))) / A);
        }
        case ShapeKind::Polygon: {
            double tmin = std::numeric_limits<double>::infinity();
            const auto& v = s.vertices;
            for (size_t i = 0; i < v.size(); ++i) {
                const Point2 a = v[i], e = v[(i + 1) % v.size()] - v[i];
                const double den = cross(u, e);
                if (std::abs(den) < 1e-300) continue;
                const double t = cross(a - p, e) / den;
                const double sp = cross(a - p, u) / den;
                if (t > 1e-14 && sp >= -1e-14 && sp <= 1 + 1e-14) tmin = std::min(tmin, t);
            }
            if (!std::isfinite(tmin)) throw GeometryError("ray does not exit polygon");
            return p + u * tmin;
        }
    }
    return p;
}

double support_function(const Shape& s, Point2 omega) {
    switch (s.kind) {
        case ShapeKind::Disk: return dot(s.center, omega) + s.radius * norm(omega);
        case ShapeKind::Ellipse: {
            const Point2 r = rotate(omega, -s.rotation);
            return dot(s.center, omega) + std::hypot(s.semi_a * r.x, s.semi_b * r.y);
        }
        case ShapeKind::Polygon: {
            double h = -std::numeric_limits<double>::infinity();
            for (auto& v : s.vertices) h = std::max(h, dot(v, omega));
            return h;
        }
    }
    return 0.0;
}

cplx ImpedanceSpec::at(int component) const {
    if (values.empty()) return {0.0, 0.0};
    if (values.size() == 1) return values[0];
    return values.at(component);
}

double ImpedanceSpec::bound_L() const {
    double re = 0.0, im = 0.0;
    for (auto v : values) re = std::max(re, std::abs(v.real())), im = std::max(im, std::abs(v.imag()));
    return re + im;
}

double ImpedanceSpec::min_imag() const {
    double m = std::numeric_limits<double>::infinity();
    for (auto v : values) m = std::min(m, v.imag());
    return m;
}

double support_function(const ObstacleSpec& d, Point2 omega) {
    double h = -std::numeric_limits<double>::infinity();
    for (auto& c : d.components) h = std::max(h, support_function(c, omega));
    return h;
}

int obstacle_component(const ObstacleSpec& d, Point2 p) {
    for (size_t j = 0; j < d.components.size(); ++j)
        if (shape_contains(d.components[j], p)) return static_cast<int>(j);
    return -1;
}

double obstacle_boundary_distance(const ObstacleSpec& d, Point2 p) {
    double m = std::numeric_limits<double>::infinity();
    for (auto& c : d.components) m = std::min(m, boundary_distance(c, p));
    return m;
}

void validate_obstacle(const Shape& domain, const ObstacleSpec& d) {
    validate_shape(domain);
    for (auto& c : d.components) validate_shape(c);
    if (!d.components.empty()) {
        if (d.lambda.values.empty()) throw GeometryError("impedance missing for obstacle");
        if (d.lambda.values.size() != 1 && d.lambda.values.size() != d.components.size())
            throw GeometryError("impedance needs one value or one per component");
        if (!(d.lambda.min_imag() > 0)) throw GeometryError("Im lambda must be positive");
    }
    const double scale = shape_scale(domain);
    for (size_t j = 0; j < d.components.size(); ++j) {
        const auto& c = d.components[j];
        const double h = shape_perimeter(c) / 2048.0;
        for (auto p : sample_boundary(c, h)) {
            if (!shape_contains(domain, p) || boundary_distance(domain, p) <= 1e-9 * scale)
                throw GeometryError("obstacle component " + std::to_string(j) + " not strictly inside the domain");
        }
        for (size_t l = j + 1; l < d.components.size(); ++l) {
            const auto& o = d.components[l];
            bool touching = false;
            if (c.kind == ShapeKind::Disk && o.kind == ShapeKind::Disk) {
                touching = dist(c.center, o.center) <= c.radius + o.radius;
            } else {
                for (auto p : sample_boundary(c, h))
                    if (shape_contains(o, p) || boundary_distance(o, p) <= 1e-9 * scale) touching = true;
                for (auto p : sample_boundary(o, shape_perimeter(o) / 2048.0))
                    if (shape_contains(c, p)) touching = true;
            }
            if (touching)
                throw GeometryError("obstacle components " + std::to_string(j) + " and " + std::to_string(l) +
                                    " overlap or touch");
        }
    }
}

double Needle::length() const {
    double l = 0.0;
    for (size_t i = 0; i + 1 < vertices.size(); ++i) l += dist(vertices[i], vertices[i + 1]);
    return l;
}

Needle make_needle(std::vector<Point2> vertices, const Shape& domain) {
    if (vertices.size() < 2) throw GeometryError("needle needs at least two vertices");
    const double scale = shape_scale(domain);
    if (boundary_distance(domain, vertices.front()) > 1e-9 * scale)
        throw GeometryError("needle anchor is not on the domain boundary");
    for (size_t i = 1; i < vertices.size(); ++i)
        if (!shape_contains(domain, vertices[i])) throw GeometryError("needle vertex outside the domain");
    for (size_t i = 0; i + 1 < vertices.size(); ++i)
        if (dist(vertices[i], vertices[i + 1]) <= 1e-14 * scale) throw GeometryError("degenerate needle segment");
    if (domain.kind == ShapeKind::Polygon) {
        const auto& v = domain.vertices;
        for (size_t i = 0; i + 1 < vertices.size(); ++i) {
            // Shrink the first segment away from the anchor so the legitimate contact is ignored.
            Point2 a = vertices[i], b = vertices[i + 1];
            if (i == 0) a = a + (b - a) * 1e-9;
            for (size_t e = 0; e < v.size(); ++e)
                if (segments_intersect(a, b, v[e], v[(e + 1) % v.size()], 1e-14 * scale))
                    throw GeometryError("needle segment leaves the domain");
        }
    }
    const double tol = 1e-12 * scale;
    for (size_t i = 0; i + 1 < vertices.size(); ++i) {
        for (size_t j = i + 1; j + 1 < vertices.size(); ++j) {
            if (j == i + 1) {
                const Point2 u = vertices[i + 1] - vertices[i], w = vertices[j + 1] - vertices[j];
                if (std::abs(cross(u, w)) <= tol * norm(u) * norm(w) / scale && dot(u, w) < 0)
                    throw GeometryError("needle folds back on itself");
                continue;
            }
            if (segments_intersect(vertices[i], vertices[i + 1], vertices[j], vertices[j + 1], tol))
                throw GeometryError("needle is not injective");
        }
    }
    Needle n;
    n.vertices = std::move(vertices);
    return n;
}

Needle straight_needle(Point2 tip, Point2 anchor, const Shape& domain) {
    return make_needle({anchor, tip}, domain);
}

NeedleHit needle_hits(const Needle& n, const ObstacleSpec& d) {
    bool touch = false;
    for (auto& c : d.components) {
        for (size_t i = 0; i + 1 < n.vertices.size(); ++i) {
            const Contact k = shape_segment_contact(c, n.vertices[i], n.vertices[i + 1]);
            if (k == Contact::Hit) return NeedleHit::HitsOpenD;
            if (k == Contact::Touch) touch = true;
        }
    }
    return touch ? NeedleHit::GrazesBoundaryOnly : NeedleHit::MissesClosure;
}

const char* to_string(NeedleHit h) {
    switch (h) {
        case NeedleHit::MissesClosure: return "misses_closure";
        case NeedleHit::HitsOpenD: return "hits_open_D";
        case NeedleHit::GrazesBoundaryOnly: return "grazes_boundary_only";
    }
    return "?";
}

}  // namespace ps
