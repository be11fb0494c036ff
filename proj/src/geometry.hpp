#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace ps {

using cplx = std::complex<double>;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point2&) const = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }

/// Distance from p to the closed segment [a, b].
double segment_distance(Point2 p, Point2 a, Point2 b);
double polyline_distance(Point2 p, const std::vector<Point2>& poly);

enum class ShapeKind { Disk, Ellipse, Polygon };

struct Shape {
    ShapeKind kind = ShapeKind::Disk;
    Point2 center;
    double radius = 1.0;           // disk
    double semi_a = 1.0;           // ellipse
    double semi_b = 1.0;
    double rotation = 0.0;
    std::vector<Point2> vertices;  // polygon, counterclockwise

    static Shape disk(Point2 c, double r);
    static Shape ellipse(Point2 c, double a, double b, double rotation);
    static Shape polygon(std::vector<Point2> verts);
};

/// Throws GeometryError when the shape violates its invariants.
void validate_shape(const Shape& s);

bool shape_contains(const Shape& s, Point2 p);
double shape_area(const Shape& s);
double shape_perimeter(const Shape& s);
Shape translated(const Shape& s, Point2 d);

/// Counterclockwise boundary samples with spacing close to h (arc length).
std::vector<Point2> sample_boundary(const Shape& s, double h);

/// Nearest point on the boundary of s.
Point2 nearest_boundary_point(const Shape& s, Point2 p);

/// First boundary point hit by the ray p + t*dir, t > 0, with p inside s.
Point2 ray_exit_point(const Shape& s, Point2 p, Point2 dir);

double support_function(const Shape& s, Point2 omega);

/// Piecewise-constant impedance, one value per obstacle component.
struct ImpedanceSpec {
    std::vector<cplx> values;

    cplx at(int component) const;
    double bound_L() const;
    double min_imag() const;
};

struct ObstacleSpec {
    std::vector<Shape> components;
    ImpedanceSpec lambda;

    bool empty() const { return components.empty(); }
};

double support_function(const ObstacleSpec& d, Point2 omega);

/// Component index containing p, or -1.
int obstacle_component(const ObstacleSpec& d, Point2 p);

/// Distance from p to the union of obstacle boundaries (infinite when empty).
double obstacle_boundary_distance(const ObstacleSpec& d, Point2 p);

/// Checks disjoint closures, strict containment in the domain and Im lambda > 0.
void validate_obstacle(const Shape& domain, const ObstacleSpec& d);

struct Needle {
    std::vector<Point2> vertices;  // vertices.front() on the outer boundary, back() = tip

    Point2 tip() const { return vertices.back(); }
    Point2 anchor() const { return vertices.front(); }
    double length() const;
};

Needle straight_needle(Point2 tip, Point2 anchor, const Shape& domain);
Needle make_needle(std::vector<Point2> vertices, const Shape& domain);

enum class NeedleHit { MissesClosure, HitsOpenD, GrazesBoundaryOnly };

NeedleHit needle_hits(const Needle& n, const ObstacleSpec& d);

const char* to_string(NeedleHit h);

}  // namespace ps
