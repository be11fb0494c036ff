#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fem.hpp"

namespace ps {

struct NeedleParams {
    int n_max = 8;
    int n_sources = 300;
    double source_radius = 1.05;  // source circle radius relative to R_Omega
    double d_first = 0.9;         // d_1 relative to the needle length
    double d_last = 0.65;         // d_{n_max} relative to the needle length
    double d0_abs = 0.0;          // > 0 switches to d_n = d0_abs * rho^(n-1)
    double rho = 0.7;             // decay used with d0_abs
    double alpha_first = 1e-6;    // Tikhonov level relative to the largest singular value, n = 1
    double alpha_last = 1e-16;    // same at n = n_max (log-uniform in between)
    double max_misfit = 0.5;      // terms above this relative misfit are flagged and end the sequence

    void validate() const;
    double tube_radius(int n, double needle_length) const;
    double alpha(int n) const;
};

/// Smallest circle around Omega used to place the exterior sources.
struct EnclosingCircle {
    Point2 center;
    double radius = 0.0;
};
EnclosingCircle enclosing_circle(const Shape& domain);

/// Sources, outer-boundary collocation rows and the mesh trace matrix shared by all needles of a run.
class MfsBasis {
public:
    MfsBasis(const Shape& domain, double k, const NeedleParams& params, const TriMesh* mesh = nullptr);

    const Shape& domain() const { return domain_; }
    double k() const { return k_; }
    const NeedleParams& params() const { return params_; }
    const std::vector<Point2>& sources() const { return sources_; }
    const std::vector<Point2>& boundary_points() const { return bpts_; }
    const std::vector<double>& boundary_weights() const { return bw_; }
    const Eigen::MatrixXcd& boundary_matrix() const { return Ab_; }
    double collocation_spacing() const { return spacing_; }

    /// Trace of sum_j c_j G_k(. - z_j) on the outer mesh nodes.
    VecC trace(const VecC& c) const;
    bool has_trace() const { return T_.size() > 0; }

private:
    Shape domain_;
    double k_;
    NeedleParams params_;
    std::vector<Point2> sources_;
    std::vector<Point2> bpts_;
    std::vector<double> bw_;
    Eigen::MatrixXcd Ab_;
    Eigen::MatrixXcd T_;
    double spacing_ = 0.0;
};

struct NeedleTerm {
    int n = 0;                 // 1-based index in the full sequence
    double d = 0.0;            // tube radius
    double alpha = 0.0;        // relative Tikhonov level
    double fit_residual = 0.0; // relative weighted collocation misfit
    int n_rows = 0;
    VecC coeffs;
};

struct NeedleSequence {
    Point2 tip;
    Needle needle;
    double k = 0.0;
    std::vector<NeedleTerm> terms;
    bool truncated = false;  // a flagged term ended the sequence early
};

/// Fits terms first_n..n_max (1-based) of the needle sequence for x = needle.tip().
NeedleSequence build_needle_sequence(const MfsBasis& basis, const Needle& needle, int first_n = 1);

/// Points on {dist(., sigma) = d} inside Omega with spacing close to s, plus their arc weights.
void tube_points(const Needle& needle, double d, double s, const Shape& domain, std::vector<Point2>& pts,
                 std::vector<double>& weights);

/// Rows G_k(y_i - z_j).
Eigen::MatrixXcd kernel_matrix(double k, const std::vector<Point2>& pts, const std::vector<Point2>& sources);

/// Value and gradient of sum_j c_j G_k(y - z_j).
KernelValue mfs_eval(const MfsBasis& basis, const VecC& c, Point2 y);

struct ProbeRegion {
    enum class Kind { Cone, Ball };
    Kind kind = Kind::Ball;
    Point2 center;         // cone vertex or ball center
    Point2 axis{1.0, 0.0}; // cone axis
    double aperture = 0.0; // full cone opening angle (radians)
    double radius = 0.0;   // ball radius or cone height (finite cone)

    static ProbeRegion cone(Point2 vertex, Point2 axis, double aperture, double radius);
    static ProbeRegion ball(Point2 center, double radius);
};

struct GrowthReport {
    std::vector<int> n;
    std::vector<double> energy;  // integral over region intersect Omega of |grad v_n|^2
    bool increasing_tail = false;
    double growth = 0.0;         // last / first
    double cauchy_tail = 0.0;    // |e_last - e_prev| / |e_last|
};

GrowthReport needle_blowup_check(const MfsBasis& basis, const NeedleSequence& seq, const ProbeRegion& region);

/// True when the last `count` values are strictly increasing.
bool strictly_increasing_tail(const std::vector<double>& v, int count = 3);

}  // namespace ps
