#pragma once

#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <iosfwd>
#include <memory>

#include "mesh.hpp"
#include "special.hpp"

namespace ps {

using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;

/// Which triangles of a mesh take part: all, exterior (tag -1) or obstacle (tag >= 0).
enum class Region { Full, Exterior, Interior };

bool in_region(Region r, int tri_tag);

struct AssembledForms {
    SpMat A;         // stiffness
    SpMat M;         // mass
    SpMat B1;        // interface boundary mass, weight 1
    SpMatC Blambda;  // interface boundary mass, weight lambda
};

AssembledForms assemble(const TriMesh& m, Region region, const ImpedanceSpec& lambda);

/// Boundary mass matrix on outer or interface edges.
SpMat boundary_mass(const TriMesh& m, BoundarySelector sel);

/// Helmholtz operator S = A - k^2 M - B_lambda on a mesh whose triangles all belong to the
/// solution region. Outer nodes carry Dirichlet data; the factorization of the free block is
/// built once and reused for every right-hand side.
class HelmholtzSolver {
public:
    HelmholtzSolver(const TriMesh& mesh, double k, const ImpedanceSpec* lambda);
    ~HelmholtzSolver();
    HelmholtzSolver(const HelmholtzSolver&) = delete;
    HelmholtzSolver& operator=(const HelmholtzSolver&) = delete;

    /// Solves with u = f on the outer nodes and (S u)_i = load_i at free nodes.
    VecC solve(const VecC& f_outer, const VecC* load = nullptr) const;

    /// Bilinear DtN pairing h^T (S u)|_outer.
    cplx pair(const VecC& u, const VecC& h_outer) const;

    /// Relative residual of the free rows of S u = load.
    double residual(const VecC& u, const VecC* load = nullptr) const;

    const SpMatC& S() const { return S_; }
    const TriMesh& mesh() const { return mesh_; }
    double k() const { return k_; }

private:
    struct Factor;
    const TriMesh& mesh_;
    double k_;
    SpMatC S_;
    SpMatC Sff_;
    SpMatC Sfb_;
    std::unique_ptr<Factor> lu_;
};

/// Impedance problem on the exterior submesh (lambda on the interface).
VecC solve_obstacle_problem(const TriMesh& ext, double k, const ImpedanceSpec& lambda, const VecC& f_outer,
                            const VecC* load = nullptr);
/// Background problem on the full mesh without obstacle.
VecC solve_background(const TriMesh& full, double k, const VecC& f_outer);

struct Energy {
    double dirichlet = 0.0;  // integral of |grad u|^2
    double mass = 0.0;       // integral of |u|^2
    double boundary = 0.0;   // integral of |u|^2 over the outer boundary (Full) or the interface
};

Energy energy(const TriMesh& m, const VecC& u, Region region);

/// Load vector  integral over dD of (d_nu v + lambda v) phi_i  for an analytic field v given
/// with its gradient; nu points out of D.
VecC analytic_robin_load(const TriMesh& ext, const ImpedanceSpec& lambda,
                         const std::function<KernelValue(Point2)>& field, Point2 singular_point);

/// Integrals of an analytic field over obstacle triangles with adaptive quadrature.
struct FieldIntegrals {
    double grad2 = 0.0;  // integral of |grad v|^2
    double mass = 0.0;   // integral of |v|^2
    cplx mean{0.0, 0.0}; // integral of v
};
FieldIntegrals analytic_interior_integrals(const TriMesh& full, const std::function<KernelValue(Point2)>& field,
                                           Point2 singular_point, int component = -1);

/// Smallest |mu - shift| discrete Dirichlet eigenvalue of A u = mu M u on the full region.
double nearest_dirichlet_eigenvalue(const TriMesh& full, double shift);
/// Logs a warning when k^2 lies within 1% of a discrete Dirichlet eigenvalue; returns that eigenvalue.
double check_eigen_proximity(const TriMesh& full, double k);

void write_solution_csv(std::ostream& os, const TriMesh& m, const VecC& u);

/// Radial solution u = a J0(k r) + b Y0(k r) on the annulus r0 < r < R around `center`, with u = f0 at
/// r = R and du/dr + lambda u = 0 at r = r0 (k > 0).
struct ConcentricReference {
    Point2 center;
    double k = 1.0;
    cplx a, b;

    cplx operator()(Point2 p) const;
};
ConcentricReference concentric_reference(Point2 center, double R, double r0, double k, cplx lambda, cplx f0);

/// Relative L2 error of the P1 field u against `exact` over the triangles of `region`.
double relative_l2_error(const TriMesh& m, const VecC& u, Region region, const std::function<cplx(Point2)>& exact);

/// Dunavant degree-5 rule in barycentric coordinates; weights sum to 1.
struct TriRule {
    double l0, l1, l2, w;
};
const std::array<TriRule, 7>& dunavant5();

/// Gauss-Legendre rule on [0, 1].
void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace ps
