#pragma once

#include "solvq/grid.hpp"
#include "solvq/multipliers.hpp"

namespace solvq {

// Fibered twist of the Fourier-side chart (a, v, xi):
//
//   (a, v, xi)  ->  (a, v / cosh(theta xi), sinh(2 theta xi) / (2 theta)),
//
// a one-parameter family of diffeomorphisms fixing the a-coordinate.
struct TwistParams {
    double theta = 1.0;
    int n = 0;

    int dim() const { return 2 + 2 * n; }
    void validate() const; // theta finite and nonzero, n >= 0
};

// Points are packed (a, v_1..v_2n, xi).
VectorXd twist(const VectorXd& p, const TwistParams& tp);
VectorXd twist_inv(const VectorXd& p, const TwistParams& tp);

// det of the twist differential. The map is block triangular in (v, xi), so
// the determinant is cosh(2 theta xi) / cosh(theta xi)^{2n}.
double twist_jacobian(const VectorXd& p, const TwistParams& tp);

enum class TwistMap { TWIST, TWIST_INV };
enum class TransportDirection { FORWARD, INVERSE };

// (map* f)(p) = f(map(p)) for Fourier-side grid data, evaluated by exact
// trigonometric interpolation per axis (inverse FFT along xi, then uniform
// Riemann sums at the warped frequencies; per-axis dilation in v the same
// way). Reads that leave the grid box, or warped frequencies beyond the xi
// Nyquist, return 0: under the windowing precondition the true values there
// are below tolerance.
//
// The precondition is enforced on exactly the axes a given map can push out
// of the box: TWIST stretches xi, so it requires boundary decay along xi;
// TWIST_INV stretches v, so it requires boundary decay along the v axes.
// Violations throw BoundaryMassError.
GridFunction pullback(const GridFunction& f, TwistMap map, const TwistParams& tp,
                      double boundary_tol = 1e-12);

// The transport operator and its inverse, acting on position-space data:
//
//   FORWARD   F^{-1} . M_{exp(tau_theta)} . (twist^{-1})* . F
//   INVERSE   F^{-1} . twist* . M_{exp(-tau_theta)} . F
//
// with F the partial Fourier transform in l. tau = Multiplier::one() gives
// the bare transport. Windowing preconditions as for pullback (the spectrum
// must decay along xi; FORWARD additionally needs decay along v), violations
// throw BoundaryMassError; wrong tags throw WrongSpaceTag.
GridFunction T_apply(const GridFunction& u, const TwistParams& tp, const Multiplier& tau,
                     TransportDirection dir, double boundary_tol = 1e-12);

} // namespace solvq
