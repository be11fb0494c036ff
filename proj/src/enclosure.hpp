#pragma once

#include <vector>

#include "dtn.hpp"

namespace ps {

struct CgoParams {
    Point2 omega{1.0, 0.0};
    Point2 omega_perp{0.0, 1.0};
    double tau = 1.0;
    double k = 0.0;
    double shift = 0.0;  // s in e^{x.zeta - tau s}

    static CgoParams make(Point2 omega, double tau, double k, double shift);
    void validate() const;
    /// zeta = tau omega + i sqrt(tau^2 + k^2) omega_perp, so zeta . zeta = -k^2.
    std::pair<cplx, cplx> zeta() const;
    KernelValue eval(Point2 x) const;
};

/// Outer-boundary nodal values of the shifted CGO solution.
VecC cgo_trace(const CgoParams& p, const TriMesh& mesh);

/// Largest x . omega over the outer mesh nodes.
double mesh_support(const TriMesh& mesh, Point2 omega);

enum class GapMode { ExactField, FiniteElement };

/// Re of the gap for the shifted CGO datum; exact field by default.
double cgo_gap(const DtnContext& dtn, const CgoParams& p, GapMode mode = GapMode::ExactField);

/// e^{-2 tau (t - s)} Re gap(shifted trace) = e^{-2 tau t} Re <(Lambda_0 - Lambda_D) f, conj f>.
double enclosure_indicator(const DtnContext& dtn, const CgoParams& p, double t, GapMode mode = GapMode::ExactField);

struct RegimeCheck {
    double t = 0.0;
    std::vector<double> values;  // |I(tau, t)| over the tau grid
    bool monotone = false;       // decreasing for t above the estimate, increasing below
    double ratio = 0.0;          // last / first
    bool pass = false;  // above: decays after an early peak; below: strictly increasing past the threshold
};

struct SupportEstimate {
    Point2 omega;
    double h_hat = 0.0;
    std::vector<double> tau;
    std::vector<double> gap_re;  // Re gap of the shifted trace per tau
    std::vector<double> log_abs_I;
    std::vector<char> used;
    double slope = 0.0;       // coefficient of 2 tau
    double intercept = 0.0;
    double inv_tau_coeff = 0.0;   // coefficients of 1/tau and 1/tau^2 (asymptotic fit only)
    double inv_tau2_coeff = 0.0;
    double r2 = 0.0;
    bool low_confidence = false;
    RegimeCheck above;  // t = h_hat + margin
    RegimeCheck below;  // t = h_hat - margin
};

/// Linear: log|I| = 2 tau h + c.
/// Asymptotic: log|I| - beta log(tau) = 2 tau h + c + a1 / tau + a2 / tau^2, the large-tau expansion.
enum class FitModel { Linear, Asymptotic };

struct EnclosureParams {
    std::vector<double> tau;        // increasing, >= 5 points
    double regime_margin = 0.2;
    double growth_threshold = 1e3;  // |I| the t below the estimate must exceed at the largest tau
    FitModel fit = FitModel::Asymptotic;
    /// beta of the asymptotic fit. The 2D Laplace asymptotics of the interior energy at a curved
    /// contact point give |I(tau, 0)| ~ C tau^{1/2} e^{2 tau h}.
    double prefactor_power = 0.5;
    GapMode mode = GapMode::ExactField;

    void validate() const;
};

SupportEstimate estimate_support(const DtnContext& dtn, Point2 omega, const EnclosureParams& p);

/// Indicator value at (tau, t) from a stored shifted gap.
double indicator_from_gap(double gap_re, double tau, double t, double shift);

struct HalfPlane {
    Point2 omega;
    double h = 0.0;
};

/// Intersection of {x : x . omega_j <= h_j}, clipped from a box of half-width `extent` around the origin.
std::vector<Point2> intersect_half_planes(const std::vector<HalfPlane>& planes, double extent);

std::vector<Point2> uniform_directions(int m);

struct HullResult {
    std::vector<SupportEstimate> estimates;
    std::vector<Point2> vertices;
};

HullResult convex_hull(const DtnContext& dtn, int m, const EnclosureParams& p, int threads);

double polygon_area(const std::vector<Point2>& poly);
/// Clips a polygon by the half-planes.
std::vector<Point2> clip_polygon(std::vector<Point2> poly, const std::vector<HalfPlane>& planes);
/// Fraction of the obstacle area (polygonized at spacing h) lying inside the half-plane intersection.
double hull_coverage(const std::vector<HalfPlane>& planes, const ObstacleSpec& obstacle, double h = 1e-3);

}  // namespace ps
