#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dtn.hpp"
#include "probe.hpp"

namespace ps {

/// 1/sqrt(lambda_min) of A u = lambda M u with u = 0 on the outer nodes of `region` (free elsewhere).
double estimate_poincare_C0(const TriMesh& region);

/// 1/sqrt(mu_2), mu_2 the smallest nonzero Neumann eigenvalue of A u = mu M u on `component`.
double estimate_poincare_mean(const TriMesh& component);

struct TraceConstant {
    double K = 0.0;
    std::vector<double> eps;
    std::vector<double> mu_max;  // largest eigenvalue of B_Gamma u = mu (eps A + M / eps) u per eps
};

std::vector<double> default_trace_eps();

/// K(W) for the trace of H^1(W) onto the edges selected by `gamma`, certified on the eps samples.
TraceConstant estimate_trace_constant(const TriMesh& W, BoundarySelector gamma,
                                      const std::vector<double>& eps = default_trace_eps());

struct ConstantsReport {
    double h = 0.0;
    double C0 = 0.0;               // Poincare constant of the exterior region (zero on dOmega)
    std::vector<double> C_U;       // mean-value Poincare constant per obstacle component
    std::vector<double> area_D;    // |D_j|
    TraceConstant K_ext;           // W = Omega minus closure(D), Gamma = dD
    TraceConstant K_D;             // W = D, Gamma = dD
    double L = 0.0;                // sup |Re lambda| + sup |Im lambda|
};

ConstantsReport estimate_constants(const TriMesh& full, const ObstacleSpec& obstacle, double h);

struct ConditionsReport {
    double k = 0.0;
    double L = 0.0;
    std::vector<double> eps;     // 99-point grid on ]0, 1[
    std::vector<double> exterior;   // exterior smallness left side, must be <= 1
    std::vector<double> obstacle;   // min over components, must be > 0
    std::vector<double> reflected;  // min over components, must be > 0
    bool holds_blowup = false;      // some eps satisfies the exterior and obstacle conditions together
    bool holds_reflected = false;
    double eps_star = 0.0;          // eps minimizing the exterior side among those passing the obstacle one
    double eps_star_reflected = 0.0;// eps maximizing the reflected-energy margin
    double max_L = 0.0;             // largest L with the blowup conditions satisfiable at this k
};

/// 2 K_ext L eps + (k^2 + 2 K_ext L / eps) C0^2.
double cond_exterior(const ConstantsReport& c, double k, double L, double eps);
/// min_j 1 - 2 K_D L eps - 2 (k^2 + 2 K_D L / eps) C(D_j)^2 (1+1)^2.
double cond_obstacle(const ConstantsReport& c, double k, double L, double eps);
/// min_j 1 - K_D L eps - 2 (k^2 + K_D L / eps) C(D_j)^2 (1+1)^2.
double cond_reflected(const ConstantsReport& c, double k, double L, double eps);

/// Uses c.L unless L >= 0 is given.
ConditionsReport check_smallness(const ConstantsReport& c, double k, double L = -1.0);

/// Smooth random FE function: a few random plane waves plus small nodal noise.
VecC random_fe_function(const TriMesh& m, std::mt19937_64& rng);
/// Smooth random Dirichlet data on the outer nodes.
VecC random_boundary_data(const TriMesh& m, std::mt19937_64& rng);

struct InequalityAudit {
    std::string name;
    int samples = 0;
    int violations = 0;
    double max_ratio = 0.0;  // largest (left side) / (right side); <= 1 when the inequality holds
};

/// Checks every constant-defining inequality on n random FE functions on the meshes that defined them.
std::vector<InequalityAudit> audit_constants(const TriMesh& full, const ConstantsReport& c, int n,
                                             std::uint64_t seed);

/// The chain of lower bounds for Re gap used by the blowup argument, and the lower bound of
/// int_D |grad v|^2 - k^2 |v|^2 + Re(lambda)|v|^2 on dD, checked on computed (u, v, w) per datum and eps.
std::vector<InequalityAudit> chain_audit(const DtnContext& dtn, const ConstantsReport& c,
                                         const std::vector<VecC>& data);

struct EnergyRecord {
    Point2 x;
    double distance = 0.0;    // to dD
    double w_grad = 0.0;      // int_E |grad w_x|^2
    double w_mass = 0.0;      // int_E |w_x|^2
    double w_trace = 0.0;     // int_dD |w_x|^2
    double G_grad = 0.0;      // int_D |grad G_k(. - x)|^2
    double G_mass = 0.0;      // int_D |G_k(. - x)|^2
    double data_factor = 0.0; // trace_data_factor with y0 = x
    double lower_bound = 0.0; // right side of the reflected-energy estimate without the constant
    double bound_ratio = 0.0; // ||grad w_x|| / lower_bound
    double trace_ratio = 0.0; // w_trace / (||grad w_x|| data_factor)
};

struct EnergyDiagnostics {
    double eps = 0.0;
    std::vector<EnergyRecord> records;
    bool w_grad_increasing = false;
    bool G_grad_increasing = false;
    bool G_grad_dominates = false;  // G_grad grows by a larger factor than G_mass
    double min_bound_ratio = 0.0;
    double max_trace_ratio = 0.0;
};

/// Points ordered by decreasing distance to dD. eps must satisfy 1 - K_D L eps > 0.
EnergyDiagnostics reflected_energy_sweep(const DtnContext& dtn, const ObstacleSpec& obstacle,
                                         const std::vector<Point2>& xs, const ConstantsReport& c, double eps);

/// Ray from a + dist * n (n the outward normal at a in dD) for each distance.
std::vector<Point2> ray_points(const ObstacleSpec& obstacle, Point2 a, const std::vector<double>& distances);

/// int_dD |y - y0|^{1/2} |d_nu v| + k^2 |int_D v| + L int_dD |v| for an analytic field.
double trace_data_factor(const DtnContext& dtn, const std::function<KernelValue(Point2)>& field, Point2 y0,
                           Point2 singular_point);

struct EnergyRatioAudit {
    std::vector<double> fit_ratios;
    std::vector<double> holdout_ratios;
    double C = 0.0;            // max fitted ratio
    double holdout_max = 0.0;
    bool pass = false;         // held-out ratios stay within twice the fitted constant
};

/// (int_D |grad v|^2 - k^2 |v|^2 + int_dD Re(lambda)|v|^2) / (||v||_{H^1(D)} ||grad w||_{L^2(E)}) on
/// background solves of random data; the constant is fitted on the first set and re-audited on the second.
EnergyRatioAudit energy_ratio_audit(const DtnContext& dtn, int n_fit, int n_holdout, std::uint64_t seed);

struct DominanceReport {
    std::vector<double> ratios;  // int_D |v_n|^2 / int_D |grad v_n|^2
    double tail_max = 0.0;
    double tail_median = 0.0;
    bool bounded = false;        // tail max <= 2 x tail median
};

/// Tail = last `tail` terms.
DominanceReport gradient_dominance_check(const IndicatorSeries& s, int tail = 4);

struct ReflectedBlowupCheck {
    bool v_blowup = false;          // int_D |grad v_n|^2 strictly increasing over the last 3 terms
    bool condition = false;         // reflected-energy smallness condition
    bool w_increasing = false;      // int_E |grad w_n|^2 strictly increasing over the last 3 terms
    bool consistent = false;        // premises imply the conclusion on this series
};

ReflectedBlowupCheck reflected_blowup_check(const IndicatorSeries& s, const ConditionsReport& cond);
}  // namespace ps
