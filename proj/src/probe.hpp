#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dtn.hpp"
#include "needle.hpp"

namespace ps {

/// Gap terms for an exact field v = sum_j c_j G_k(. - z_j). The field enters through kernel tables at
/// the interface and obstacle quadrature points; w is the finite element reflected solution of v.
class ExactFieldGap {
public:
    ExactFieldGap(const DtnContext& dtn, const MfsBasis& basis);

    struct Result {
        GapParts parts;
        VecC w;
        double vD_grad = 0.0;
        double vD_mass = 0.0;
    };
    Result evaluate(const VecC& c) const;

private:
    const DtnContext& dtn_;
    std::vector<int> qa_, qb_;
    std::vector<double> qt_, qw_;
    std::vector<cplx> qlam_;
    Eigen::MatrixXcd Kb_, Kn_;
    std::vector<double> iw_;
    Eigen::MatrixXcd Ki_, Kx_, Ky_;
};

/// Immutable inputs shared by every probe evaluation of a run. With `exact` set, indicator values use
/// the exact needle field; otherwise they use the finite element gap of its outer-boundary trace.
struct ProbeSetup {
    const Shape& domain;
    const ObstacleSpec& obstacle;
    const DtnContext& dtn;
    const MfsBasis& basis;
    const ExactFieldGap* exact = nullptr;
};

enum class SeriesClass { Converged, Blowup, Undecided };
const char* to_string(SeriesClass c);

struct ClassifyParams {
    int tail = 3;
    double converge_tol = 0.02;  // relative spread of the last `tail` values
    double blowup_factor = 10.0; // last value must exceed this times the converged scale
};

struct Classification {
    SeriesClass kind = SeriesClass::Undecided;
    double limit = 0.0;  // last value when converged
};

/// Converged if the tail varies <= converge_tol relative; blowup if strictly increasing and the last
/// value exceeds blowup_factor * scale; undecided otherwise.
Classification classify(const std::vector<double>& values, double scale, const ClassifyParams& p);

struct IndicatorSeries {
    std::vector<int> n;
    std::vector<double> values;  // Re of gaps
    std::vector<cplx> gaps;      // gap from the grouped identity terms
    std::vector<cplx> pairings;  // two-pairing difference (finite element mode only)
    std::vector<double> w_grad;  // int_E |grad w_n|^2
    std::vector<double> vD_grad; // int_D |grad v_n|^2 (finite element background field)
    std::vector<double> vD_mass; // int_D |v_n|^2
    Classification cls;
};

IndicatorSeries indicator_sequence(const ProbeSetup& s, const NeedleSequence& seq, double scale,
                                   const ClassifyParams& cp = {});

/// Minimum admissible distance from x to dD for the singular-kernel quadrature.
double min_probe_distance(const TriMesh& full);

/// Reflected solution of G_k(. - x) on the exterior submesh.
VecC reflected_solution(const DtnContext& dtn, const ObstacleSpec& obstacle, Point2 x);

struct IndicatorFunctionSample {
    Point2 x;
    double value = 0.0;
    double ext_grad = 0.0;  // int_E |grad w_x|^2
    double ext_mass = 0.0;  // int_E |w_x|^2
    double int_grad = 0.0;  // int_D |grad G|^2
    double int_mass = 0.0;  // int_D |G|^2
    double re_term = 0.0;   // int_dD Re(lambda)(|G|^2 - |w|^2)
    double im_term = 0.0;   // -2 int_dD Im(lambda) Im(w conj G)
    VecC w;
};

IndicatorFunctionSample indicator_function(const DtnContext& dtn, const ObstacleSpec& obstacle, Point2 x);

struct NeedlePolicy {
    bool fallback = true;         // second needle rotated 90 degrees for undecided points
    double boundary_margin = 0.5; // grid points closer than margin*delta to dOmega are skipped
    double reaim_step = 10.0;     // degrees per re-aim step for grazing needles
};

/// Straight needle from the nearest outer-boundary point, re-aimed while it only grazes dD.
Needle policy_needle(const Shape& domain, const ObstacleSpec& obstacle, Point2 x, double rotate_deg,
                     const NeedlePolicy& pol);

struct GridPoint {
    Point2 x;
    SeriesClass primary = SeriesClass::Undecided;
    SeriesClass fallback = SeriesClass::Undecided;
    int needles = 0;
    int flag = 0;               // 1 inside, 0 outside, -1 undecided
    double last_value = 0.0;
    int n_used = 0;
    bool truth_inside = false;  // membership in closure(D)
};

struct Reconstruction {
    double delta = 0.0;
    double scale = 0.0;
    std::vector<GridPoint> points;
    std::vector<Point2> boundary;  // flag transitions along grid lines, bridging undecided runs
    int undecided = 0;
};

Reconstruction reconstruct(const ProbeSetup& s, double delta, const NeedlePolicy& pol, const ClassifyParams& cp,
                           int threads);

/// Symmetric Hausdorff distance between a point set and the obstacle boundary.
double hausdorff_to_obstacle(const std::vector<Point2>& pts, const ObstacleSpec& obstacle);

/// Runs f(i) for i in [0, n) on up to `threads` workers; exceptions are rethrown in index order.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

}  // namespace ps
