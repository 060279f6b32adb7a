#pragma once

#include <vector>

#include "solvq/types.hpp"

namespace solvq {

// Chart-level geometry: the solvable group S in global coordinates (a, v, l),
// its symmetric-space structure, and the kernel phases/amplitudes.

// Geodesic symmetry s_x(y).
Point symmetry(const Point& x, const Point& y, const SpaceParams& params);

// Jacobian of y -> s_x(y), analytic.  Ds_x at y = x is -identity.
MatrixXd symmetry_jacobian(const Point& x, const Point& y, const SpaceParams& params);

// Group law of S and inverse.
Point group_mul(const Point& g1, const Point& g2, const SpaceParams& params);
Point group_inv(const Point& g);

// exp : s -> S for Lie coordinates X = (alpha, w, lambda), closed form.
Point group_exp(const VectorXd& X, const SpaceParams& params);

// Invariant symplectic form in chart coordinates: da^dl + (1/2) Omega on the
// V-block.  The 1/2 weight is forced: a form c1 da^dl + c2 Omega is preserved
// by every symmetry iff c1 = 2 c2 (only the degenerate case n = 0 is
// insensitive to the ratio).
MatrixXd invariant_form_matrix(const SpaceParams& params);

// Weyl phase Omega(v0,v1) + Omega(v1,v2) + Omega(v2,v0).  Arguments must have
// equal even lengths.
double phase_S0(const VectorXd& v0, const VectorXd& v1, const VectorXd& v2);

// Three-point kernel phase; depends on a-coordinates only through differences
// and is invariant under the diagonal action of the symmetries.
double phase_S(const Triangle& t, const SpaceParams& params);

// Kernel amplitudes: the defining one (A1) and the canonically normalized one.
double amplitude_A1(const Triangle& t, const SpaceParams& params);
double amplitude_Acan(const Triangle& t, const SpaceParams& params);

// Left-invariant frame at q: column alpha is the frame vector (H~, v_i~, E~)
// in the coordinate basis.  At the origin this is the identity.
MatrixXd left_invariant_frame(const Point& q, const SpaceParams& params);

// Coordinate Jacobians of the frame fields: element alpha is d(frame column
// alpha)/dq, a dim x dim matrix.
std::vector<MatrixXd> left_invariant_frame_jacobians(const Point& q, const SpaceParams& params);

// Fundamental field of the stabilizer action for Z = (Zv, Zz):
//   Z* = 2 sinh(a) Zv . d_v + (2 sinh(2a) Zz - cosh(a) Omega(Zv, v)) d_l .
// All Z* vanish at the origin and their linearizations there realize the
// isotropy action.
VectorXd fundamental_field(const VectorXd& Zv, double Zz, const Point& q, const SpaceParams& params);
MatrixXd fundamental_field_jacobian(const VectorXd& Zv, double Zz, const Point& q, const SpaceParams& params);

struct LoosConnection {
    // christoffels[k](i, j) = Gamma^k_ij in chart coordinates.
    std::vector<MatrixXd> christoffels;
    double torsion_residual = 0.0;
    double nabla_omega_residual = 0.0;
};

// Connection of the symmetric structure, nabla_X Y = (1/2) [X, Y + s_x* Y],
// evaluated on coordinate fields.  Outer derivative by central differences
// with step h; the symmetry Jacobians themselves are analytic.
LoosConnection loos_connection_at(const Point& x, const SpaceParams& params, double h);

// Geodesic through x with initial chart velocity u, integrated with RK4.
Point geodesic(const Point& x, const VectorXd& u, double t, const SpaceParams& params,
               int steps = 100, double conn_h = 1e-4);

} // namespace solvq
