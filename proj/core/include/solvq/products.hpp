#pragma once

#include <cstdint>
#include <vector>

#include "solvq/grid.hpp"
#include "solvq/moyal.hpp"
#include "solvq/multipliers.hpp"
#include "solvq/types.hpp"

namespace solvq {

// How a product is evaluated. PIPELINE transports to the flat Weyl product
// and back; KERNEL integrates the oscillatory three-point kernel directly;
// TRACIAL_KERNEL is the same quadrature with the canonical amplitude, valid
// only for tracial multipliers (for which both kernels agree identically).
enum class Route { PIPELINE, KERNEL, TRACIAL_KERNEL };

struct ProductConfig {
    SpaceParams params;
    double theta = 0.5;
    Multiplier tau = Multiplier::one();
    Route route = Route::PIPELINE;
    GridSpec grid;

    // Windowing guard handed to every transport / spectral stage.
    double boundary_tol = 1e-9;
    // a-axis refinement of the kernel quadrature (the integrand oscillates
    // faster than the data); 0 picks a default per dimension.
    int kernel_upsample = 0;
    // Work ceiling for the kernel quadrature; estimates above it throw
    // CostLimit before any allocation.
    std::int64_t cost_limit = 20'000'000'000;

    void validate() const; // theta != 0, grid nonempty, kernel only n <= 1
};

// T(T^{-1}u *0 T^{-1}v): transport both factors to the flat Weyl algebra
// (ħ = theta, v-pair weight 2), multiply, transport back. The transport
// twists at theta/2, which is what makes the flat core's triple phase close
// onto the hyperbolic three-point kernel below; the multiplier is evaluated
// at the twist parameter throughout. Throws BoundaryMassError from any stage
// whose windowing precondition fails.
GridFunction star_pipeline(const GridFunction& u, const GridFunction& v,
                           const ProductConfig& cfg);

// Direct quadrature of
//
//   w(x0) = C(n, theta) int int A(x0,y,z) exp[(i/theta) S(x0,y,z)]
//           exp[g(a2-a1) - g(a2-a0) - g(a0-a1)] u(y) v(z) dy dz,
//
// C = pi^{-2} (2 pi)^{-2n} theta^{-(2n+2)}, S and A1/Acan from the geometry
// module, and g(t) = tau(theta/2, sinh(2t)/theta) the multiplier profile
// seen through the transport (the KERNEL route uses A1 with the full g; the
// TRACIAL_KERNEL route uses Acan and only the phase part i psi). Evaluated
// by factoring each l-integral into a nonuniform DFT of the data at the
// hyperbolic frequencies, with every such factor masked at the native
// Nyquist band; the a-axes of the integrand are spectrally upsampled.
// n in {0, 1} only; work estimates above cfg.cost_limit throw CostLimit.
GridFunction star_kernel(const GridFunction& u, const GridFunction& v,
                         const ProductConfig& cfg);

// Dispatch on cfg.route.
GridFunction star_product(const GridFunction& u, const GridFunction& v,
                          const ProductConfig& cfg);

// (a|b) = int T^{-1}a conj(T^{-1}b), the transport-side L2 pairing.
cplx inner_product(const GridFunction& a, const GridFunction& b,
                   const ProductConfig& cfg);

// Trace and unitarity diagnostics on random Gaussian pairs. The integral
// trace symmetry |int u*v - int v*u| is structurally tiny for every
// multiplier (the twist fixes the zero-frequency slice, and the flat core is
// tracial); what distinguishes tracial multipliers is the transport being an
// L2 isometry, so the report carries both numbers and the defect
// | ||T u|| / ||u|| - 1 | is the meaningful witness.
struct TraceSymmetryReport {
    std::vector<double> trace_residuals;
    std::vector<double> unitarity_defects;
    double worst_trace() const;
    double worst_unitarity() const;
};
TraceSymmetryReport trace_symmetry_check(const ProductConfig& cfg, int samples,
                                         std::uint64_t seed);

// Residuals of the numeric pipeline product against the formal transported
// expansion through each order k <= K, on Gaussian-carried polynomial data,
// swept over theta. residuals[k][i] is the relative L2 gap of the order-k
// partial sum at theta_sweep[i]; slopes[k] the fitted log-log rate (expected
// about k+1, at least 1 resp. 2 for k = 0, 1).
//
// tau_theta_taylor optionally describes cfg.tau as polynomials in xi:
// tau(theta_e, xi) = sum_j theta_e^j p_j(xi) with p_0 = 0 (entries are
// 1-variable PolyObservables). The formal side then conjugates the expansion
// by exp of the corresponding d_l operator series, which is exactly the
// multiplier's Hochschild coboundary contribution order by order.
struct AsymptoticReport {
    std::vector<double> thetas;
    std::vector<std::vector<double>> residuals;
    std::vector<double> slopes;
};
AsymptoticReport asymptotic_compare(const ProductConfig& cfg, int K,
                                    const std::vector<double>& theta_sweep,
                                    const std::vector<PolyObservable>& tau_theta_taylor = {});

} // namespace solvq
