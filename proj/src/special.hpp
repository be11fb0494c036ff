#pragma once

#include <complex>

#include "geometry.hpp"

namespace ps {

double bessel_j0(double x);
double bessel_j1(double x);
double bessel_y0(double x);
double bessel_y1(double x);

/// Fundamental solution of the Helmholtz operator: (i/4) H0^(1)(kr) for k > 0, -log(r)/(2 pi) for k = 0.
cplx hankel_G(double k, double r);
/// Radial derivative dG/dr.
cplx hankel_dG(double k, double r);

/// G_k(y - x) and its gradient with respect to y.
struct KernelValue {
    cplx g;
    cplx gx;
    cplx gy;
};
KernelValue kernel(double k, Point2 y, Point2 x);

}  // namespace ps
