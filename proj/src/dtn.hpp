#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>

#include "fem.hpp"

namespace ps {

/// Grouped right-hand side of the gap identity.
struct GapParts {
    double exterior = 0.0;   // int_E |grad w|^2 - k^2 int_E |w|^2, with w = u - v
    double interior = 0.0;   // int_D |grad v|^2 - k^2 int_D |v|^2
    double re_lambda = 0.0;  // int_dD Re(lambda) (|v|^2 - |w|^2)
    double im_cross = 0.0;   // -2 int_dD Im(lambda) Im(w conj(v))
    double imag = 0.0;       // int_dD Im(lambda) |u|^2 (imaginary part of the gap)

    double real_sum() const { return exterior + interior + re_lambda + im_cross; }
    cplx sum() const { return {real_sum(), imag}; }
};

struct DtnGap {
    cplx value;      // pairing difference <Lambda_0 f, conj f> - <Lambda_D f, conj f>
    GapParts parts;  // same gap from the grouped energy terms
};

struct GapFields {
    VecC v;  // background solution on the full mesh
    VecC w;  // reflected part u - v on the exterior submesh
    VecC u;  // obstacle solution on the exterior submesh
};

/// Shared factorizations for Lambda_0 (full mesh) and Lambda_D (exterior submesh).
/// Immutable after construction; safe to use from several threads.
class DtnContext {
public:
    DtnContext(const TriMesh& full, double k, const ImpedanceSpec& lambda);

    const TriMesh& full() const { return full_; }
    const TriMesh& exterior() const { return ext_; }
    const ImpedanceSpec& lambda() const { return lambda_; }
    double k() const { return k_; }
    int n_outer() const { return full_.n_outer; }

    cplx pair0(const VecC& f, const VecC& h) const;
    cplx pairD(const VecC& f, const VecC& h) const;

    const HelmholtzSolver& background_solver() const { return *s0_; }
    const HelmholtzSolver& obstacle_solver() const { return *sD_; }

    /// Exterior-submesh restriction of a full-mesh nodal vector.
    VecC restrict_to_exterior(const VecC& v_full) const;
    /// Solves S_D w = load with w = 0 on the outer boundary.
    VecC solve_reflected(const VecC& load) const;

    GapFields fields(const VecC& f) const;
    GapParts parts(const VecC& v_full, const VecC& w_ext) const;
    DtnGap gap(const VecC& f) const;

private:
    const TriMesh& full_;
    TriMesh ext_;
    ImpedanceSpec lambda_;
    double k_;
    std::unique_ptr<HelmholtzSolver> s0_;
    std::unique_ptr<HelmholtzSolver> sD_;
    std::vector<int> interface_nodes_;
};

cplx pair_dtn(const HelmholtzSolver& s, const VecC& f, const VecC& h);

/// Grouped gap terms for an analytic Helmholtz field v given with its gradient. v enters through
/// quadrature on dD and over D (refined toward `singular_point`); w is the reflected solution of v.
GapParts field_gap(const DtnContext& ctx, const std::function<KernelValue(Point2)>& field, Point2 singular_point,
                   VecC* w_out = nullptr, FieldIntegrals* interior_out = nullptr);

struct IdentityReport {
    cplx lhs;
    cplx rhs;
    GapParts parts;
    double rel_err = 0.0;
    double imag_boundary = 0.0;  // int_dD Im(lambda) |u|^2 from the direct obstacle solve
    double imag_rel_err = 0.0;
};

/// Checks the gap identity with an independent direct obstacle solve for u.
IdentityReport verify_identity(const DtnContext& ctx, const VecC& f);

/// Dense DtN matrix: entry (i, j) = <Lambda e_j, e_i> over outer nodes.
Eigen::MatrixXcd dense_dtn(const HelmholtzSolver& s);
void write_dense_csv(std::ostream& os, const Eigen::MatrixXcd& m);

}  // namespace ps
