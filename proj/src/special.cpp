#include "special.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace ps {

double bessel_j0(double x) { return std::cyl_bessel_j(0.0, x); }
double bessel_j1(double x) { return std::cyl_bessel_j(1.0, x); }
double bessel_y0(double x) { return std::cyl_neumann(0.0, x); }
double bessel_y1(double x) { return std::cyl_neumann(1.0, x); }

cplx hankel_G(double k, double r) {
    if (!(r > 0)) throw SolverError("hankel_G requires r > 0");
    if (k == 0.0) return {-std::log(r) / (2 * std::numbers::pi), 0.0};
    const double z = k * r;
    return cplx(0.0, 0.25) * cplx(bessel_j0(z), bessel_y0(z));
}

cplx hankel_dG(double k, double r) {
    if (!(r > 0)) throw SolverError("hankel_dG requires r > 0");
    if (k == 0.0) return {-1.0 / (2 * std::numbers::pi * r), 0.0};
    const double z = k * r;
    return cplx(0.0, -0.25 * k) * cplx(bessel_j1(z), bessel_y1(z));
}

KernelValue kernel(double k, Point2 y, Point2 x) {
    const Point2 d = y - x;
    const double r = norm(d);
    KernelValue v;
    v.g = hankel_G(k, r);
    const cplx dr = hankel_dG(k, r) / r;
    v.gx = dr * d.x;
    v.gy = dr * d.y;
    return v;
}

}  // namespace ps
