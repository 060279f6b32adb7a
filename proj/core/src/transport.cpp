#include "solvq/transport.hpp"

#include <cmath>
#include <vector>

#include "solvq/errors.hpp"
#include "solvq/fourier.hpp"

namespace solvq {

namespace {

double sinhc(double u) {
    if (std::abs(u) < 1e-5) return 1.0 + u * u / 6.0;
    return std::sinh(u) / u;
}

double asinhc(double u) {
    if (std::abs(u) < 1e-5) return 1.0 - u * u / 6.0;
    return std::asinh(u) / u;
}

// sinh(2 theta xi) / (2 theta) and its inverse, stable through theta -> 0.
double stretch(double xi, double theta) { return xi * sinhc(2.0 * theta * xi); }
double unstretch(double eta, double theta) { return eta * asinhc(2.0 * theta * eta); }

std::vector<int> v_axes(int dim) {
    std::vector<int> axes;
    for (int q = 1; q < dim - 1; ++q) axes.push_back(q);
    return axes;
}

// Core of the twist pullbacks. From position-space u, produce the
// Fourier-side array
//
//   G(a, w_1..w_2n, r) = u^(a, gamma_r * w, omega_r)
//
// where u^ along l is the Riemann-sum continuum transform and the v-reads
// use exact trigonometric interpolation (uniform analysis FFT, synthesis at
// the dilated nodes). Frequencies beyond the l-axis Nyquist alias instead of
// decaying, so those rows are zeroed, as are dilated reads outside the axis
// box; the callers' windowing preconditions make the true values there
// negligible.
GridFunction warped_spectrum(const GridFunction& u, const std::vector<double>& omega,
                             const std::vector<double>& gamma) {
    const GridSpec& spec = u.spec;
    const int d = spec.ndim();
    const Axis& lax = spec.axes.back();
    const int nl = lax.points;
    const std::int64_t lines = u.size() / nl;

    GridFunction out(spec, SpaceTag::FOURIER);
    Axis& fax = out.spec.axes.back();
    fax.role = AxisRole::XI;
    const double dxi = lax.freq_step();
    fax.min = -(nl / 2) * dxi;
    fax.max = fax.min + nl * dxi;

    MatrixXc M = nudft_matrix(lax, omega);
    const double nyq = lax.nyquist() * (1.0 + 1e-12);
    for (int r = 0; r < nl; ++r)
        if (std::abs(omega[r]) > nyq) M.row(r).setZero();

    for (std::int64_t line = 0; line < lines; ++line) {
        Eigen::Map<const VectorXc> in(u.values.data() + line * nl, nl);
        Eigen::Map<VectorXc> o(out.values.data() + line * nl, nl);
        o = M * in;
    }

    // Dilation factor gamma_r per output slab, one v-axis at a time.
    for (int q = 1; q < d - 1; ++q) {
        const Axis& ax = spec.axes[q];
        const int nq = ax.points;

        std::vector<double> kappas(nq);
        for (int j = 0; j < nq; ++j) kappas[j] = ax.freq(j);
        const MatrixXc C = nudft_matrix(ax, kappas);
        const double dk = ax.freq_step();

        std::vector<MatrixXc> E(nl);
        for (int r = 0; r < nl; ++r) {
            MatrixXc B = MatrixXc::Zero(nq, nq);
            for (int k = 0; k < nq; ++k) {
                const double y = gamma[r] * ax.coord(k);
                if (y < ax.min || y >= ax.max) continue;
                for (int mu = 0; mu < nq; ++mu)
                    B(k, mu) = dk / (2.0 * M_PI) * std::exp(cplx{0.0, kappas[mu] * y});
            }
            E[r] = B * C;
        }

        std::int64_t stride = 1;
        for (int j = q + 1; j < d; ++j) stride *= spec.axes[j].points;
        std::int64_t outer_count = 1;
        for (int j = 0; j < q; ++j) outer_count *= spec.axes[j].points;

        VectorXc buf(nq);
        for (std::int64_t outer = 0; outer < outer_count; ++outer) {
            const std::int64_t base0 = outer * nq * stride;
            for (std::int64_t inner = 0; inner < stride; ++inner) {
                const int r = static_cast<int>(inner % nl);
                const std::int64_t base = base0 + inner;
                for (int k = 0; k < nq; ++k) buf[k] = out.values[base + k * stride];
                const VectorXc res = E[r] * buf;
                for (int k = 0; k < nq; ++k) out.values[base + k * stride] = res[k];
            }
        }
    }
    return out;
}

} // namespace

void TwistParams::validate() const {
    if (!std::isfinite(theta) || theta == 0.0)
        throw ConfigError("twist parameter theta must be finite and nonzero");
    if (n < 0) throw ConfigError("twist parameter n must be >= 0");
}

VectorXd twist(const VectorXd& p, const TwistParams& tp) {
    if (p.size() != tp.dim()) throw ConfigError("twist: point has wrong dimension");
    const double xi = p[tp.dim() - 1];
    VectorXd out = p;
    out.segment(1, 2 * tp.n) /= std::cosh(tp.theta * xi);
    out[tp.dim() - 1] = stretch(xi, tp.theta);
    return out;
}

VectorXd twist_inv(const VectorXd& p, const TwistParams& tp) {
    if (p.size() != tp.dim()) throw ConfigError("twist_inv: point has wrong dimension");
    const double xi = unstretch(p[tp.dim() - 1], tp.theta);
    VectorXd out = p;
    out.segment(1, 2 * tp.n) *= std::cosh(tp.theta * xi);
    out[tp.dim() - 1] = xi;
    return out;
}

double twist_jacobian(const VectorXd& p, const TwistParams& tp) {
    if (p.size() != tp.dim()) throw ConfigError("twist_jacobian: point has wrong dimension");
    const double xi = p[tp.dim() - 1];
    return std::cosh(2.0 * tp.theta * xi) / std::pow(std::cosh(tp.theta * xi), 2 * tp.n);
}

GridFunction pullback(const GridFunction& f, TwistMap map, const TwistParams& tp,
                      double boundary_tol) {
    tp.validate();
    if (f.tag != SpaceTag::FOURIER) throw WrongSpaceTag("pullback: input must be FOURIER");
    const int d = f.spec.ndim();
    if (d != tp.dim()) throw ConfigError("pullback: grid dimension does not match params");

    if (map == TwistMap::TWIST && boundary_mass(f, {d - 1}) > boundary_tol)
        throw BoundaryMassError("pullback: data not windowed along xi");
    if (map == TwistMap::TWIST_INV && tp.n >= 1 && boundary_mass(f, v_axes(d)) > boundary_tol)
        throw BoundaryMassError("pullback: data not windowed along v");

    const GridFunction u = partial_fourier_inv(f);

    const Axis& fax = f.spec.last();
    const int nl = fax.points;
    std::vector<double> omega(nl), gamma(nl);
    for (int r = 0; r < nl; ++r) {
        const double eta = fax.coord(r);
        if (map == TwistMap::TWIST) {
            omega[r] = stretch(eta, tp.theta);
            gamma[r] = 1.0 / std::cosh(tp.theta * eta);
        } else {
            omega[r] = unstretch(eta, tp.theta);
            gamma[r] = std::cosh(tp.theta * omega[r]);
        }
    }

    GridFunction out = warped_spectrum(u, omega, gamma);
    out.spec = f.spec; // identical lattice; keep the caller's axis metadata
    return out;
}

GridFunction T_apply(const GridFunction& u, const TwistParams& tp, const Multiplier& tau,
                     TransportDirection dir, double boundary_tol) {
    tp.validate();
    if (!tau.eval) throw ConfigError("T_apply: multiplier has no eval");
    if (u.tag != SpaceTag::POSITION) throw WrongSpaceTag("T_apply: input must be POSITION");
    const int d = u.spec.ndim();
    if (d != tp.dim()) throw ConfigError("T_apply: grid dimension does not match params");

    // The Riemann sums behind the warp need the data windowed in l (truncation)
    // and the spectrum windowed in xi (aliasing); stretching v-reads need the
    // v-window too.
    if (boundary_mass(u, {d - 1}) > boundary_tol)
        throw BoundaryMassError("T_apply: data not windowed along l");
    GridFunction hat = partial_fourier(u);
    if (boundary_mass(hat, {d - 1}) > boundary_tol)
        throw BoundaryMassError("T_apply: spectrum not windowed along xi");
    if (dir == TransportDirection::FORWARD && tp.n >= 1 &&
        boundary_mass(u, v_axes(d)) > boundary_tol)
        throw BoundaryMassError("T_apply: data not windowed along v");

    const Axis fax = hat.spec.last();
    const int nl = fax.points;
    const std::int64_t lines = hat.size() / nl;

    GridFunction work;
    if (dir == TransportDirection::INVERSE) {
        std::vector<cplx> damp(nl);
        for (int r = 0; r < nl; ++r)
            damp[r] = std::exp(-tau(tp.theta, fax.coord(r)));
        for (std::int64_t line = 0; line < lines; ++line)
            for (int r = 0; r < nl; ++r) hat.values[line * nl + r] *= damp[r];
        work = partial_fourier_inv(hat);
    } else {
        work = u;
    }

    std::vector<double> omega(nl), gamma(nl);
    for (int r = 0; r < nl; ++r) {
        const double eta = fax.coord(r);
        if (dir == TransportDirection::FORWARD) {
            omega[r] = unstretch(eta, tp.theta);
            gamma[r] = std::cosh(tp.theta * omega[r]);
        } else {
            omega[r] = stretch(eta, tp.theta);
            gamma[r] = 1.0 / std::cosh(tp.theta * eta);
        }
    }

    GridFunction G = warped_spectrum(work, omega, gamma);

    if (dir == TransportDirection::FORWARD) {
        std::vector<cplx> amp(nl);
        for (int r = 0; r < nl; ++r)
            amp[r] = std::exp(tau(tp.theta, fax.coord(r)));
        for (std::int64_t line = 0; line < lines; ++line)
            for (int r = 0; r < nl; ++r) G.values[line * nl + r] *= amp[r];
    }

    return partial_fourier_inv(G);
}

} // namespace solvq
