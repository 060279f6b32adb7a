#include "solvq/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "solvq/errors.hpp"
#include "solvq/util.hpp"

namespace solvq {

namespace {

// Smooth step built from e^{-1/t}: identically 1 for |t| <= 1/2, identically
// 0 for |t| >= 1. The inner plateau is what makes Borel sums exactly
// polynomial near theta = 0.
double bump_rho(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

double cutoff_chi(double t) {
    t = std::abs(t);
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    const double a = bump_rho(1.0 - t);
    const double b = bump_rho(t - 0.5);
    return a / (a + b);
}

// Five-point central stencils at offsets {-2h, -h, 0, h, 2h}, orders 0..4.
// Exact on quartics, which is what the Borel plateau check relies on.
std::array<cplx, 5> fd_derivatives(const std::function<cplx(double)>& f,
                                   double x, double h) {
    const cplx f2m = f(x - 2.0 * h), f1m = f(x - h), f0 = f(x),
               f1p = f(x + h), f2p = f(x + 2.0 * h);
    std::array<cplx, 5> d;
    d[0] = f0;
    d[1] = (f2m - 8.0 * f1m + 8.0 * f1p - f2p) / (12.0 * h);
    d[2] = (-f2m + 16.0 * f1m - 30.0 * f0 + 16.0 * f1p - f2p) / (12.0 * h * h);
    d[3] = (-f2m + 2.0 * f1m - 2.0 * f1p + f2p) / (2.0 * h * h * h);
    d[4] = (f2m - 4.0 * f1m + 6.0 * f0 - 4.0 * f1p + f2p) / (h * h * h * h);
    return d;
}

// Fits log(max_k |d^k f/dxi^k|) against log(1 + |xi|) on a geometric ladder
// of sample radii. Returns the slope; finite_ok reports whether every sample
// evaluated to a finite number. Magnitudes below 1 clamp to 1 so flat or
// decaying profiles fit degree ~0.
double fitted_poly_degree(const std::function<cplx(double)>& f, double xi_max,
                          bool& finite_ok) {
    finite_ok = true;
    const int m = 12;
    std::vector<double> radii(m), mags(m);
    for (int j = 0; j < m; ++j) {
        const double xi = 0.5 * std::pow(xi_max / 0.5, double(j) / (m - 1));
        const double h = 0.05;
        double mag = 1.0;
        for (double s : {-1.0, 1.0}) {
            const auto d = fd_derivatives(f, s * xi, h);
            for (const cplx& v : d) {
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    finite_ok = false;
                mag = std::max(mag, std::abs(v));
            }
        }
        radii[j] = 1.0 + xi;
        mags[j] = mag;
    }
    return loglog_slope(radii, mags);
}

constexpr double kFactorial[] = {1.0, 1.0, 2.0, 6.0, 24.0};

} // namespace

Multiplier Multiplier::one() {
    Multiplier m;
    m.eval = [](double, double) { return cplx(0.0); };
    m.taylor = {[](double) { return cplx(0.0); }};
    return m;
}

MembershipReport check_theta_membership(const Multiplier& tau,
                                        const std::vector<double>& thetas,
                                        double xi_range) {
    if (!(xi_range > 0.0) || !std::isfinite(xi_range))
        throw ConfigError("check_theta_membership: xi_range must be positive");
    const std::vector<double> ladder =
        thetas.empty() ? std::vector<double>{0.2, 0.1, 0.05, 0.025} : thetas;

    MembershipReport rep;

    // Growth probe on exp(tau_theta): worst fitted degree over the ladder.
    bool finite_ok = true;
    double degree = 0.0;
    for (double th : ladder) {
        bool ok = true;
        const double deg = fitted_poly_degree(
            [&](double xi) { return std::exp(tau(th, xi)); }, xi_range, ok);
        finite_ok = finite_ok && ok;
        degree = std::max(degree, deg);
    }
    rep.fitted_degree = degree;
    rep.moderate_growth = finite_ok && degree <= 8.0;

    // Rescaled pullback sups. The membership condition demands these do not
    // survive the theta -> 0 limit; numerically we accept either outright
    // vanishing or a fitted non-divergence (slope >= -0.1 in log-log).
    double worst = 0.0;
    for (double th : ladder) {
        double sup = 0.0;
        const int m = 161;
        for (int j = 0; j < m; ++j) {
            const double t = -2.0 + 4.0 * j / (m - 1);
            const double xi = std::sinh(2.0 * t) / (2.0 * th);
            sup = std::max(sup, std::abs(tau(th, xi)));
        }
        rep.rescaled_sups.push_back(sup);
        worst = std::max(worst, sup);
    }
    if (worst < 1e-9) {
        rep.rescaled_limit_vanishes = true;
    } else {
        std::vector<double> clamped = rep.rescaled_sups;
        for (double& s : clamped) s = std::max(s, 1e-300);
        rep.rescaled_limit_vanishes = loglog_slope(ladder, clamped) >= -0.1;
    }
    return rep;
}

Multiplier tracial_multiplier(int n, std::function<double(double)> psi) {
    if (n < 0) throw ConfigError("tracial_multiplier: n must be >= 0");
    Multiplier m;
    m.is_tracial = true;
    m.psi = psi;
    // Re tau = (1/2) log Jac of the inverse twist at output frequency xi:
    //   Jac = cosh^{2n}(theta s) / cosh(2 theta s),  sinh(2 theta s) = 2 theta xi,
    // so with u = 2 theta xi and r = sqrt(1 + u^2) = cosh(2 theta s):
    //   Re tau = (1/2) [ n log((1 + r)/2) - log r ].
    m.eval = [n, psi](double theta, double xi) {
        const double u = 2.0 * theta * xi;
        const double u2 = u * u;
        const double r = std::sqrt(1.0 + u2);
        const double log_half_sum = std::log1p(0.5 * u2 / (1.0 + r));
        const double re = 0.5 * (n * log_half_sum - 0.5 * std::log1p(u2));
        return cplx(re, psi ? psi(xi) : 0.0);
    };
    m.taylor = {
        [psi](double xi) { return cplx(0.0, psi ? psi(xi) : 0.0); },
        [](double) { return cplx(0.0); },
        [n](double xi) { return cplx((n - 2.0) * xi * xi, 0.0); },
    };
    return m;
}

Multiplier borel_realize(const std::vector<std::function<cplx(double)>>& coeffs,
                         double eps0) {
    if (!(eps0 > 0.0) || !std::isfinite(eps0))
        throw ConfigError("borel_realize: eps0 must be positive");
    const int orders = int(coeffs.size()); // coeffs[j] multiplies theta^(j+1)

    for (int j = 0; j < orders; ++j) {
        if (!coeffs[j])
            throw ConfigError("borel_realize: empty coefficient function");
        bool ok = true;
        const double deg = fitted_poly_degree(coeffs[j], 8.0, ok);
        if (!ok || deg > 8.0)
            throw ConfigError(
                "borel_realize: coefficient fails the moderate-growth probe");
    }

    auto cs = std::make_shared<std::vector<std::function<cplx(double)>>>(coeffs);
    std::vector<double> eps(orders);
    for (int j = 0; j < orders; ++j) eps[j] = eps0 * std::pow(0.5, j);

    Multiplier m;
    m.eval = [cs, eps](double theta, double xi) {
        cplx acc(0.0);
        const double t = std::abs(theta);
        double power = theta;
        for (std::size_t j = 0; j < cs->size(); ++j) {
            if (t < eps[j]) {
                const double chi = cutoff_chi(t / eps[j]);
                if (chi > 0.0) acc += power * chi * (*cs)[j](xi);
            }
            power *= theta;
        }
        return acc;
    };
    m.taylor.push_back([](double) { return cplx(0.0); });
    for (int j = 0; j < orders && j + 1 <= 4; ++j) {
        const double fac = kFactorial[j + 1];
        m.taylor.push_back(
            [cs, j, fac](double xi) { return fac * (*cs)[j](xi); });
    }

    if (orders > 0) {
        // Inside |theta| <= eps_min / 2 every cutoff is on its plateau, so the
        // sum is exactly the truncated polynomial and quartic-exact stencils
        // must reproduce the coefficients. Failure means the schedule pushed
        // the stencil into roundoff.
        const double h = 0.5 * eps.back() / 2.2;
        for (double xi : {-2.5, -1.0, -0.3, 0.0, 0.7, 1.8, 3.0}) {
            const auto d = fd_derivatives(
                [&](double th) { return m.eval(th, xi); }, 0.0, h);
            for (int k = 1; k <= 4; ++k) {
                const cplx target =
                    k <= orders ? kFactorial[k] * coeffs[k - 1](xi) : cplx(0.0);
                if (std::abs(d[k] - target) / (1.0 + std::abs(target)) > 1e-5)
                    throw ScheduleTooAggressive(
                        "borel_realize: theta-Taylor check failed at order " +
                        std::to_string(k));
            }
        }
    }
    return m;
}

} // namespace solvq
