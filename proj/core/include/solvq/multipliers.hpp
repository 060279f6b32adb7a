#pragma once

#include <functional>
#include <string>
#include <vector>

#include "solvq/types.hpp"

namespace solvq {

// A deformation multiplier tau_theta(xi): one smooth complex profile per
// deformation parameter. exp(tau) is what multiplies spectra inside the
// transport operator, so tau == 0 is the unit multiplier.
struct Multiplier {
    std::function<cplx(double theta, double xi)> eval;
    // Optional theta-Taylor data: taylor[k](xi) = (d/dtheta)^k tau |_{theta=0}.
    std::vector<std::function<cplx(double)>> taylor;
    bool is_tracial = false;
    std::function<double(double)> psi; // optional real phase, tau += i psi_theta

    cplx operator()(double theta, double xi) const { return eval(theta, xi); }

    static Multiplier one(); // tau == 0
};

struct MembershipReport {
    // Moderate-growth probe: log |d^k/dxi^k exp(tau_theta)| against log(1+|xi|)
    // must admit a polynomial bound of degree <= max_degree. Heuristic.
    bool moderate_growth = false;
    double fitted_degree = 0.0;
    // Vanishing of the rescaled pullback at theta -> 0:
    //   sup_{|t|<=2} |tau_theta(sinh(2t)/(2 theta))| along a theta ladder.
    bool rescaled_limit_vanishes = false;
    std::vector<double> rescaled_sups; // one per probed theta, decreasing order
    bool passed() const { return moderate_growth && rescaled_limit_vanishes; }
};

// Probes the two membership conditions of the multiplier class on sample
// grids. The growth condition is undecidable from samples; the report is
// explicitly heuristic and records the fitted degree. An empty theta ladder
// defaults to {0.2, 0.1, 0.05, 0.025}.
MembershipReport check_theta_membership(const Multiplier& tau,
                                        const std::vector<double>& thetas,
                                        double xi_range);

// tau_theta(xi) = (sigma/2) log |Jac of the inverse twist at xi| + i psi(xi).
// The sign sigma is fixed by requiring the transport to be an L2 isometry;
// with the forward transport multiplying by exp(+tau) the recorded value is
// sigma = +1 (pinned by the isometry test). psi may be empty (taken as zero).
Multiplier tracial_multiplier(int n, std::function<double(double)> psi = {});

// Realizes a formal series sum_k theta^k c_k(xi) as an actual multiplier by
// damping each order with a smooth cutoff chi(theta / eps_k); eps_k halves
// per order starting at eps0. coeffs[j] multiplies theta^(j+1): the series
// has no constant term, so realized multipliers vanish at theta = 0. Each
// coefficient must pass the moderate-growth probe (ConfigError otherwise),
// and the finite-difference theta-Taylor coefficients at 0 must reproduce
// the targets; ScheduleTooAggressive otherwise.
Multiplier borel_realize(const std::vector<std::function<cplx(double)>>& coeffs,
                         double eps0 = 0.5);

} // namespace solvq
