#pragma once

#include "solvq/grid.hpp"

namespace solvq {

// Fourier conventions, used consistently everywhere:
//   forward   u^(xi)  = integral e^{-i xi l} u(l) dl        (no 2*pi)
//   inverse   u(l)    = (2*pi)^{-1} integral e^{+i xi l} u^(xi) dxi
// Discretely the integrals are Riemann sums on the uniform grid, evaluated
// by FFT with the index-offset phases folded in; frequencies are
// xi_j = (j - N/2) * 2*pi/(N*dl), so the zero frequency sits at index N/2.

// Transform along the last axis only (l <-> xi).  Input must be tagged
// POSITION (resp. FOURIER for the inverse); throws WrongSpaceTag otherwise.
GridFunction partial_fourier(const GridFunction& u);
GridFunction partial_fourier_inv(const GridFunction& u);

// Full transform over every axis, continuum normalized per axis.  The result
// lives on the frequency lattice of the same shape (freq(d, j) below); kept
// as a separate type so it is not mistaken for a chart grid function.
struct FullSpectrum {
    GridSpec position_spec; // spec of the originating position-space grid
    std::vector<cplx> values;

    double freq(int axis, int j) const { return position_spec.axes[axis].freq(j); }
    double freq_step(int axis) const { return position_spec.axes[axis].freq_step(); }
    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
};

FullSpectrum full_fourier(const GridFunction& u);
GridFunction full_fourier_inv(const FullSpectrum& s);

// Value of the band-limited interpolant at an arbitrary point:
// (2*pi)^{-D} sum_k u^(k) e^{i k.x} prod(dk).  Exact at grid nodes.
cplx eval_spectrum_at(const FullSpectrum& s, const VectorXd& x);
cplx eval_interpolant_at(const GridFunction& u, const VectorXd& x);

// Dense nonuniform-frequency analysis matrix for one axis:
// M(r, m) = dx * exp(-i omega_r * x_m), so M * line = u^ at the omega_r.
MatrixXc nudft_matrix(const Axis& axis, const std::vector<double>& omegas);

// In-place unnormalized FFT along the last axis of a row-major array
// (sign = -1 forward, +1 backward).  Exposed for the product kernels.
void fft_last_axis_raw(cplx* data, std::int64_t lines, int n, int sign);

} // namespace solvq
