#include "solvq/products.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "solvq/errors.hpp"
#include "solvq/fourier.hpp"
#include "solvq/transport.hpp"
#include "solvq/util.hpp"

namespace solvq {

void ProductConfig::validate() const {
    if (!std::isfinite(theta) || theta == 0.0)
        throw ConfigError("product config: theta must be finite and nonzero");
    if (params.n < 0) throw ConfigError("product config: n must be nonnegative");
    grid.validate();
    if (grid.ndim() != params.dim_M())
        throw ConfigError("product config: grid must have 2 + 2n axes");
    if (route != Route::PIPELINE && params.n > 1)
        throw ConfigError("product config: kernel routes are limited to n in {0, 1}");
    if (kernel_upsample < 0 || kernel_upsample > 64)
        throw ConfigError("product config: kernel_upsample out of range");
    if (boundary_tol <= 0.0 || cost_limit <= 0)
        throw ConfigError("product config: tolerances must be positive");
}

namespace {

constexpr cplx kI(0.0, 1.0);

void require_product_inputs(const GridFunction& u, const GridFunction& v,
                            const ProductConfig& cfg) {
    if (u.tag != SpaceTag::POSITION || v.tag != SpaceTag::POSITION)
        throw WrongSpaceTag("star product: inputs must be position-space data");
    if (!u.spec.same_shape(cfg.grid) || !v.spec.same_shape(cfg.grid))
        throw GridMismatch("star product: inputs do not live on cfg.grid");
}

TwistParams pipeline_twist(const ProductConfig& cfg) {
    // The twist runs at theta/2 against the flat core at hbar = theta; this
    // is the matching that closes the composite phase onto the hyperbolic
    // three-point kernel (and the multiplier is evaluated at theta/2 with it).
    return TwistParams{cfg.theta / 2.0, cfg.params.n};
}

MoyalOptions pipeline_core_options(const ProductConfig& cfg) {
    MoyalOptions opt;
    opt.v_pair_weight = 2.0; // inverse of the halved V-block of the invariant form
    opt.boundary_tol = cfg.boundary_tol;
    return opt;
}

// Band-limited refinement of the a-axis: zero-pad the full spectrum along
// axis 0. Also the place where the spectral windowing guard runs, since the
// transform is already in hand.
GridFunction upsample_a_axis(const GridFunction& u, int factor, double boundary_tol) {
    FullSpectrum s = full_fourier(u);
    GridFunction shell(u.spec, SpaceTag::FOURIER);
    shell.values = s.values;
    if (boundary_mass(shell) > boundary_tol)
        throw BoundaryMassError("kernel quadrature: spectrum not windowed at the band edge");
    if (factor <= 1) return u;

    GridSpec up = u.spec;
    up.axes[0].points *= factor;
    const int n0 = u.spec.axes[0].points;
    const std::int64_t stride = u.spec.size() / n0;
    const std::int64_t off = up.axes[0].points / 2 - n0 / 2;
    FullSpectrum big;
    big.position_spec = up;
    big.values.assign(static_cast<std::size_t>(up.size()), cplx(0.0, 0.0));
    for (int j = 0; j < n0; ++j)
        std::copy(s.values.begin() + j * stride, s.values.begin() + (j + 1) * stride,
                  big.values.begin() + (j + off) * stride);
    return full_fourier_inv(big);
}

// Difference-lattice tables for the kernel quadrature. Index k + kmax holds
// the a-difference t = k * hu; om is the hyperbolic frequency sinh(2t)/theta
// every l-line factor is read at (in-band by construction). t12 carries the
// output-difference amplitude times e^{+g(-t)} (the positive multiplier slot
// of the three-point term, which sees a2 - a1 = -d12); tleg carries the
// per-input amplitude times e^{-g(t)}.
struct KernelTables {
    int kmax = 0;
    double hu = 0.0;
    std::vector<double> om;
    std::vector<double> ch; // cosh(k hu), for the v-sector couplings
    std::vector<cplx> t12;
    std::vector<cplx> tleg;
};

KernelTables build_kernel_tables(const ProductConfig& cfg, double hu, int max_offset,
                                 bool tracial_route) {
    const double th = cfg.theta;
    const double nyq = cfg.grid.last().nyquist();
    KernelTables tb;
    tb.hu = hu;
    while (tb.kmax + 1 <= max_offset &&
           std::abs(std::sinh(2.0 * (tb.kmax + 1) * hu) / th) <= nyq)
        ++tb.kmax;
    const int K = tb.kmax, W = 2 * K + 1, n = cfg.params.n;
    tb.om.resize(W);
    tb.ch.resize(W);
    tb.t12.resize(W);
    tb.tleg.resize(W);
    for (int k = -K; k <= K; ++k) {
        const double t = k * hu;
        const double xi = std::sinh(2.0 * t) / th;
        tb.om[k + K] = xi;
        tb.ch[k + K] = std::cosh(t);
        cplx g;
        if (tracial_route)
            g = cfg.tau.psi ? cplx(0.0, cfg.tau.psi(xi)) : cplx(0.0, 0.0);
        else
            g = cfg.tau.eval(th / 2.0, xi);
        if (std::abs(g.real()) > 50.0)
            throw ConfigError("kernel quadrature: multiplier amplitude overflows the kernel");
        const double c2 = std::cosh(2.0 * t);
        const double chn = std::pow(tb.ch[k + K], n);
        if (tracial_route) {
            // canonical amplitude, split per difference: sqrt(cosh 2t) cosh^n t
            const double amp = std::sqrt(c2) * chn;
            tb.tleg[k + K] = amp * std::exp(-g);
            tb.t12[k + K] = amp; // phase part joined below with the flipped sign
        } else {
            tb.tleg[k + K] = chn * chn * std::exp(-g);
            tb.t12[k + K] = c2;
        }
    }
    for (int k = -K; k <= K; ++k) {
        const double xi = std::sinh(-2.0 * k * hu) / th;
        cplx g;
        if (tracial_route)
            g = cfg.tau.psi ? cplx(0.0, cfg.tau.psi(xi)) : cplx(0.0, 0.0);
        else
            g = cfg.tau.eval(th / 2.0, xi);
        tb.t12[k + K] *= std::exp(g);
    }
    return tb;
}

// max |u| per fine-a row, for data-decay pruning.
std::vector<double> row_maxima(const GridFunction& u, int rows) {
    const std::int64_t stride = u.size() / rows;
    std::vector<double> m(rows, 0.0);
    for (int r = 0; r < rows; ++r)
        for (std::int64_t j = r * stride; j < (r + 1) * stride; ++j)
            m[r] = std::max(m[r], std::abs(u[j]));
    return m;
}

MatrixXc leg_nudft(const GridFunction& u, int rows, const Axis& lax,
                   const std::vector<double>& om) {
    const int Nl = lax.points, W = static_cast<int>(om.size());
    MatrixXc phase(Nl, W);
    for (int l = 0; l < Nl; ++l)
        for (int k = 0; k < W; ++k)
            phase(l, k) = std::exp(-kI * om[k] * lax.coord(l)) * lax.step();
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        lines(u.values.data(), rows, Nl);
    return lines * phase;
}

GridFunction kernel_planar(const GridFunction& uu, const GridFunction& vv,
                           const ProductConfig& cfg, const KernelTables& tb, int U) {
    const Axis& lax = cfg.grid.axes[1];
    const int Na = cfg.grid.axes[0].points, Nl = lax.points;
    const int Ma = Na * U, K = tb.kmax, W = 2 * K + 1;

    MatrixXc Uh = leg_nudft(uu, Ma, lax, tb.om);
    MatrixXc Vh = leg_nudft(vv, Ma, lax, tb.om);
    MatrixXc SP(W, Nl);
    for (int k = 0; k < W; ++k)
        for (int l = 0; l < Nl; ++l)
            SP(k, l) = std::exp(-kI * tb.om[k] * lax.coord(l));

    const std::vector<double> mu = row_maxima(uu, Ma), mv = row_maxima(vv, Ma);
    const double umax = *std::max_element(mu.begin(), mu.end());
    const double vmax = *std::max_element(mv.begin(), mv.end());
    const double prune = 1e-15 * umax * vmax;

    GridFunction out(cfg.grid, SpaceTag::POSITION);
    // the l-quadrature weights live in the NUDFT tables; only the fine
    // a-steps remain here
    const double scale = 1.0 / (M_PI * M_PI * cfg.theta * cfg.theta) * sq(tb.hu);
    parallel_for(Na, [&](std::int64_t i0) {
        std::vector<cplx> acc(W, cplx(0.0, 0.0));
        const int c = static_cast<int>(i0) * U;
        const int lo = std::max(0, c - K), hi = std::min(Ma - 1, c + K);
        for (int i1 = lo; i1 <= hi; ++i1) {
            const int k01 = c - i1;
            const cplx leg1 = tb.tleg[k01 + K];
            for (int i2 = lo; i2 <= hi; ++i2) {
                const int k12 = i1 - i2;
                if (k12 < -K || k12 > K) continue;
                if (mu[i1] * mv[i2] <= prune) continue;
                const int k20 = i2 - c;
                acc[k12 + K] += leg1 * tb.tleg[k20 + K] * tb.t12[k12 + K] *
                                Uh(i1, k20 + K) * Vh(i2, k01 + K);
            }
        }
        for (int l = 0; l < Nl; ++l) {
            cplx s(0.0, 0.0);
            for (int k = 0; k < W; ++k) s += acc[k] * SP(k, l);
            out[i0 * Nl + l] = scale * s;
        }
    });
    return out;
}

GridFunction kernel_fibered(const GridFunction& uu, const GridFunction& vv,
                            const ProductConfig& cfg, const KernelTables& tb, int U) {
    const Axis& v1ax = cfg.grid.axes[1];
    const Axis& v2ax = cfg.grid.axes[2];
    const Axis& lax = cfg.grid.axes[3];
    const int Na = cfg.grid.axes[0].points, N1 = v1ax.points, N2 = v2ax.points,
              Nl = lax.points;
    const int Ma = Na * U, K = tb.kmax, W = 2 * K + 1, NV = N1 * N2;
    const double th = cfg.theta;
    const double nyq1 = v1ax.nyquist(), nyq2 = v2ax.nyquist();

    MatrixXc Uh = leg_nudft(uu, Ma * NV, lax, tb.om);
    MatrixXc Vh = leg_nudft(vv, Ma * NV, lax, tb.om);
    MatrixXc SP(W, Nl);
    for (int k = 0; k < W; ++k)
        for (int l = 0; l < Nl; ++l)
            SP(k, l) = std::exp(-kI * tb.om[k] * lax.coord(l));

    std::vector<double> c1(N1), c2(N2);
    for (int j = 0; j < N1; ++j) c1[j] = v1ax.coord(j);
    for (int j = 0; j < N2; ++j) c2[j] = v2ax.coord(j);

    const std::vector<double> mu = row_maxima(uu, Ma), mv = row_maxima(vv, Ma);
    const double umax = *std::max_element(mu.begin(), mu.end());
    const double vmax = *std::max_element(mv.begin(), mv.end());
    const double prune = 1e-15 * umax * vmax;

    GridFunction out(cfg.grid, SpaceTag::POSITION);
    // as in the planar case the l-weights sit in the NUDFT tables; the v-leg
    // sums carry their own steps here
    const double scale = 1.0 / (sq(M_PI) * sq(2.0 * M_PI) * sq(sq(th))) *
                         sq(tb.hu * v1ax.step() * v2ax.step());

    struct BandEntry {
        int jout, qleg;
        double freq;
    };

    parallel_for(Na, [&](std::int64_t i0) {
        std::vector<cplx> acc(static_cast<std::size_t>(NV) * W, cplx(0.0, 0.0));
        std::vector<BandEntry> xband, yband;
        std::vector<cplx> H, FU, EX, EY, G1, G2;
        const int c = static_cast<int>(i0) * U;
        const int lo = std::max(0, c - K), hi = std::min(Ma - 1, c + K);
        for (int i1 = lo; i1 <= hi; ++i1) {
            const int k01 = c - i1;
            for (int i2 = lo; i2 <= hi; ++i2) {
                const int k12 = i1 - i2;
                if (k12 < -K || k12 > K) continue;
                if (mu[i1] * mv[i2] <= prune) continue;
                const int k20 = i2 - c;
                const double ch01 = tb.ch[k01 + K], ch12 = tb.ch[k12 + K],
                             ch20 = tb.ch[k20 + K];
                const double al = ch12 * ch20 / th, be = ch20 * ch01 / th,
                             ga = ch01 * ch12 / th;
                const cplx common =
                    tb.tleg[k01 + K] * tb.tleg[k20 + K] * tb.t12[k12 + K];

                // In-band frequency pairs of the u-leg v-integrals. X is
                // conjugate to the first v-component, Y to the second:
                //   X(j2, q2) = be * c2[q2] - al * c2[j2],
                //   Y(j1, q1) = al * c1[j1] - be * c1[q1],
                // with jX the output index and qX the v-leg index.
                xband.clear();
                yband.clear();
                for (int j = 0; j < N2; ++j)
                    for (int q = 0; q < N2; ++q) {
                        const double X = be * c2[q] - al * c2[j];
                        if (std::abs(X) <= nyq1) xband.push_back({j, q, X});
                    }
                for (int j = 0; j < N1; ++j)
                    for (int q = 0; q < N1; ++q) {
                        const double Y = al * c1[j] - be * c1[q];
                        if (std::abs(Y) <= nyq2) yband.push_back({j, q, Y});
                    }
                if (xband.empty() || yband.empty()) continue;
                const int nx = static_cast<int>(xband.size());
                const int ny = static_cast<int>(yband.size());

                const cplx* Ucol = Uh.data() + (k20 + K) * Uh.rows() + i1 * NV;
                const cplx* Vcol = Vh.data() + (k01 + K) * Vh.rows() + i2 * NV;

                // H(x, p2) = sum_{p1} U(p1, p2) e^{i X c1[p1]};
                // FU(x, y) = sum_{p2} H(x, p2) e^{i Y c2[p2]}.
                H.assign(static_cast<std::size_t>(nx) * N2, cplx(0.0, 0.0));
                EX.resize(N1);
                for (int x = 0; x < nx; ++x) {
                    for (int p1 = 0; p1 < N1; ++p1)
                        EX[p1] = std::exp(kI * xband[x].freq * c1[p1]);
                    cplx* row = H.data() + static_cast<std::size_t>(x) * N2;
                    for (int p1 = 0; p1 < N1; ++p1) {
                        const cplx e = EX[p1];
                        const cplx* uline = Ucol + p1 * N2;
                        for (int p2 = 0; p2 < N2; ++p2) row[p2] += e * uline[p2];
                    }
                }
                EY.resize(static_cast<std::size_t>(ny) * N2);
                for (int y = 0; y < ny; ++y)
                    for (int p2 = 0; p2 < N2; ++p2)
                        EY[static_cast<std::size_t>(y) * N2 + p2] =
                            std::exp(kI * yband[y].freq * c2[p2]);
                FU.assign(static_cast<std::size_t>(nx) * ny, cplx(0.0, 0.0));
                for (int x = 0; x < nx; ++x) {
                    const cplx* row = H.data() + static_cast<std::size_t>(x) * N2;
                    for (int y = 0; y < ny; ++y) {
                        const cplx* ey = EY.data() + static_cast<std::size_t>(y) * N2;
                        cplx s(0.0, 0.0);
                        for (int p2 = 0; p2 < N2; ++p2) s += row[p2] * ey[p2];
                        FU[static_cast<std::size_t>(x) * ny + y] = s;
                    }
                }

                // remaining v-leg coupling e^{i ga Omega(w2, v0)} split into
                // G1(q1, j2) e^{+i ga c1[q1] c2[j2]} and G2(q2, j1) with the
                // opposite sign.
                G1.resize(static_cast<std::size_t>(N1) * N2);
                G2.resize(static_cast<std::size_t>(N2) * N1);
                for (int q1 = 0; q1 < N1; ++q1)
                    for (int j2 = 0; j2 < N2; ++j2)
                        G1[static_cast<std::size_t>(q1) * N2 + j2] =
                            std::exp(kI * ga * c1[q1] * c2[j2]);
                for (int q2 = 0; q2 < N2; ++q2)
                    for (int j1 = 0; j1 < N1; ++j1)
                        G2[static_cast<std::size_t>(q2) * N1 + j1] =
                            std::exp(-kI * ga * c2[q2] * c1[j1]);

                for (int x = 0; x < nx; ++x) {
                    const int j2 = xband[x].jout, q2 = xband[x].qleg;
                    const cplx* fu = FU.data() + static_cast<std::size_t>(x) * ny;
                    for (int y = 0; y < ny; ++y) {
                        const int j1 = yband[y].jout, q1 = yband[y].qleg;
                        const cplx term =
                            common * fu[y] * Vcol[q1 * N2 + q2] *
                            G1[static_cast<std::size_t>(q1) * N2 + j2] *
                            G2[static_cast<std::size_t>(q2) * N1 + j1];
                        acc[static_cast<std::size_t>(j1 * N2 + j2) * W + (k12 + K)] +=
                            term;
                    }
                }
            }
        }
        for (int v0 = 0; v0 < NV; ++v0) {
            const cplx* a = acc.data() + static_cast<std::size_t>(v0) * W;
            for (int l = 0; l < Nl; ++l) {
                cplx s(0.0, 0.0);
                for (int k = 0; k < W; ++k) s += a[k] * SP(k, l);
                out[(i0 * NV + v0) * Nl + l] = scale * s;
            }
        }
    });
    return out;
}

} // namespace

GridFunction star_pipeline(const GridFunction& u, const GridFunction& v,
                           const ProductConfig& cfg) {
    cfg.validate();
    require_product_inputs(u, v, cfg);
    const TwistParams tp = pipeline_twist(cfg);
    GridFunction a = T_apply(u, tp, cfg.tau, TransportDirection::INVERSE, cfg.boundary_tol);
    GridFunction b = T_apply(v, tp, cfg.tau, TransportDirection::INVERSE, cfg.boundary_tol);
    GridFunction w = moyal_numeric(a, b, cfg.theta, pipeline_core_options(cfg));
    return T_apply(w, tp, cfg.tau, TransportDirection::FORWARD, cfg.boundary_tol);
}

GridFunction star_kernel(const GridFunction& u, const GridFunction& v,
                         const ProductConfig& cfg) {
    cfg.validate();
    require_product_inputs(u, v, cfg);
    const int n = cfg.params.n;
    if (n > 1) throw ConfigError("star_kernel: quadrature supports n in {0, 1} only");
    const bool tracial_route = cfg.route == Route::TRACIAL_KERNEL;
    if (tracial_route && !cfg.tau.is_tracial)
        throw ConfigError("star_kernel: TRACIAL_KERNEL requires a tracial multiplier");
    if (boundary_mass(u) > cfg.boundary_tol || boundary_mass(v) > cfg.boundary_tol)
        throw BoundaryMassError("kernel quadrature: data not windowed at the boundary");

    const int U = cfg.kernel_upsample > 0 ? cfg.kernel_upsample : (n == 0 ? 8 : 4);
    const Axis& aax = cfg.grid.axes[0];
    const int Na = aax.points, Ma = Na * U;
    const double hu = aax.step() / U;
    const KernelTables tb = build_kernel_tables(cfg, hu, Ma - 1, tracial_route);

    const int W = 2 * tb.kmax + 1, Nl = cfg.grid.last().points;
    const std::int64_t NV = cfg.grid.size() / (Na * Nl);
    const double est =
        double(Na) * W * W * (n == 0 ? 4.0 : double(NV) * NV + double(NV) * Nl) +
        3.0 * double(Ma) * NV * W * Nl;
    if (est > double(cfg.cost_limit))
        throw CostLimit("star_kernel: quadrature estimate exceeds cfg.cost_limit");

    GridFunction uu = upsample_a_axis(u, U, cfg.boundary_tol);
    GridFunction vv = upsample_a_axis(v, U, cfg.boundary_tol);
    return n == 0 ? kernel_planar(uu, vv, cfg, tb, U)
                  : kernel_fibered(uu, vv, cfg, tb, U);
}

GridFunction star_product(const GridFunction& u, const GridFunction& v,
                          const ProductConfig& cfg) {
    return cfg.route == Route::PIPELINE ? star_pipeline(u, v, cfg)
                                        : star_kernel(u, v, cfg);
}

cplx inner_product(const GridFunction& a, const GridFunction& b,
                   const ProductConfig& cfg) {
    cfg.validate();
    require_product_inputs(a, b, cfg);
    const TwistParams tp = pipeline_twist(cfg);
    GridFunction ia = T_apply(a, tp, cfg.tau, TransportDirection::INVERSE, cfg.boundary_tol);
    GridFunction ib = T_apply(b, tp, cfg.tau, TransportDirection::INVERSE, cfg.boundary_tol);
    return inner_l2(ia, ib);
}

double TraceSymmetryReport::worst_trace() const {
    double m = 0.0;
    for (double r : trace_residuals) m = std::max(m, r);
    return m;
}

double TraceSymmetryReport::worst_unitarity() const {
    double m = 0.0;
    for (double r : unitarity_defects) m = std::max(m, r);
    return m;
}

TraceSymmetryReport trace_symmetry_check(const ProductConfig& cfg, int samples,
                                         std::uint64_t seed) {
    cfg.validate();
    if (samples <= 0) throw ConfigError("trace_symmetry_check: need samples > 0");
    Rng rng(seed);
    const int dim = cfg.params.dim_M();
    const double extent = cfg.grid.axes[0].max - cfg.grid.axes[0].min;
    const TwistParams tp = pipeline_twist(cfg);
    TraceSymmetryReport rep;
    for (int s = 0; s < samples; ++s) {
        const VectorXd ca = rng.uniform_vector(dim, -extent / 24.0, extent / 24.0);
        const VectorXd cb = rng.uniform_vector(dim, -extent / 24.0, extent / 24.0);
        const double wa = extent / 15.0 * rng.uniform(0.9, 1.15);
        const double wb = extent / 15.0 * rng.uniform(0.9, 1.15);
        const GridFunction u =
            gaussian(cfg.grid, ca, wa, std::polar(1.0, 2.0 * M_PI * rng.uniform()));
        const GridFunction v =
            gaussian(cfg.grid, cb, wb, std::polar(1.0, 2.0 * M_PI * rng.uniform()));

        const cplx tuv = integral(star_product(u, v, cfg));
        const cplx tvu = integral(star_product(v, u, cfg));
        rep.trace_residuals.push_back(std::abs(tuv - tvu) /
                                      std::max(std::abs(tuv), 1e-300));

        const GridFunction Tu =
            T_apply(u, tp, cfg.tau, TransportDirection::FORWARD, cfg.boundary_tol);
        rep.unitarity_defects.push_back(std::abs(norm_l2(Tu) / norm_l2(u) - 1.0));
    }
    return rep;
}

namespace {

// Gaussian-carried polynomial p(x) exp(-gw |x|^2 / 2): closed under
// derivatives, so every stage of the formal transported product can be
// evaluated exactly on windowed polynomial data.
struct Carried {
    PolyObservable p;
    long long gw = 1;
};

Carried carried_derive(const Carried& c, int axis) {
    PolyObservable q = c.p.derivative(axis) +
                       PolyObservable::variable(c.p.dim, axis) * c.p *
                           RatC(Rational(-c.gw));
    return {q, c.gw};
}

Carried carried_apply(const DiffOp& D, const Carried& c) {
    Carried out{PolyObservable(D.dim), c.gw};
    for (const auto& [deriv, coeff] : D.terms) {
        Carried t = c;
        for (int ax = 0; ax < D.dim; ++ax)
            for (int r = 0; r < deriv[ax]; ++r) t = carried_derive(t, ax);
        out.p = out.p + coeff * t.p;
    }
    return out;
}

struct CPair {
    Carried a, b;
};

std::vector<CPair> contraction_step(const std::vector<CPair>& in, int n,
                                    const Rational& w) {
    const int dim = 2 + 2 * n;
    std::vector<CPair> out;
    auto push = [&](const CPair& t, int i, int j, const Rational& s) {
        Carried da = carried_derive(t.a, i);
        Carried db = carried_derive(t.b, j);
        if (da.p.is_zero() || db.p.is_zero()) return;
        da.p = da.p * RatC(s);
        out.push_back({da, db});
    };
    for (const CPair& t : in) {
        push(t, 0, dim - 1, Rational(1));
        push(t, dim - 1, 0, Rational(-1));
        for (int i = 0; i < n; ++i) {
            push(t, 1 + i, 1 + n + i, w);
            push(t, 1 + n + i, 1 + i, -w);
        }
    }
    return out;
}

RatC moyal_prefactor_k(int k) {
    long long scale = 1;
    for (int j = 1; j <= k; ++j) scale *= 2ll * j;
    const Rational mag(1, scale);
    switch (k % 4) {
        case 0: return RatC(mag);
        case 1: return RatC(Rational(0), mag);
        case 2: return RatC(-mag);
        default: return RatC(Rational(0), -mag);
    }
}

// Transported product of two carried polynomials through theta^K: apply the
// equivalence, contract through the flat core, transport back. Returns one
// carried polynomial per theta order (all on the squared carrier).
std::vector<Carried> carried_transported(const Carried& A, const Carried& B,
                                         const FormalSeries& E, int K, int n,
                                         const Rational& w) {
    const int dim = 2 + 2 * n;
    const FormalSeries F = E.inverse();
    std::vector<Carried> EA, EB;
    for (int k = 0; k <= K; ++k) {
        EA.push_back(carried_apply(E.coeff[k], A));
        EB.push_back(carried_apply(E.coeff[k], B));
    }
    const long long gw2 = A.gw + B.gw;
    std::vector<Carried> M(K + 1, Carried{PolyObservable(dim), gw2});
    for (int k1 = 0; k1 <= K; ++k1)
        for (int k2 = 0; k1 + k2 <= K; ++k2) {
            std::vector<CPair> st = {{EA[k1], EB[k2]}};
            for (int k3 = 0; k1 + k2 + k3 <= K; ++k3) {
                PolyObservable val(dim);
                for (const CPair& t : st) val = val + t.a.p * t.b.p;
                M[k1 + k2 + k3].p =
                    M[k1 + k2 + k3].p + val * moyal_prefactor_k(k3);
                if (k1 + k2 + k3 < K) st = contraction_step(st, n, w);
            }
        }
    std::vector<Carried> R(K + 1, Carried{PolyObservable(dim), gw2});
    for (int m = 0; m <= K; ++m)
        for (int j = 0; j <= m; ++j)
            R[m].p = R[m].p + carried_apply(F.coeff[j], M[m - j]).p;
    return R;
}

GridFunction sample_carried(const GridSpec& spec, const Carried& c) {
    return sample(spec, [&](const VectorXd& x) {
        return c.p.eval(x) * std::exp(-0.5 * double(c.gw) * x.squaredNorm());
    });
}

// xi-polynomial -> operator in d_l through xi <-> -i d_l.
DiffOp xi_poly_operator(const PolyObservable& c, int dim) {
    if (c.dim != 1)
        throw ConfigError("multiplier taylor data must be one-variable polynomials");
    static const RatC icyc[4] = {RatC(1), RatC(Rational(0), Rational(-1)), RatC(-1),
                                 RatC(Rational(0), Rational(1))};
    DiffOp D(dim);
    for (const auto& [expo, q] : c.terms) {
        const int m = expo[0];
        std::vector<int> deriv(dim, 0);
        deriv[dim - 1] = m;
        D.add_term(deriv, PolyObservable::constant(dim, q * icyc[m % 4]));
    }
    return D;
}

FormalSeries exp_series(const FormalSeries& M, int dim) {
    const int K = M.order;
    if (!M.coeff[0].is_zero())
        throw ConfigError("exp_series: series must have no constant term");
    FormalSeries out(dim, K);
    out.coeff[0] = DiffOp::identity(dim);
    FormalSeries pw(dim, K);
    pw.coeff[0] = DiffOp::identity(dim);
    Rational fact(1);
    for (int m = 1; m <= K; ++m) {
        pw = pw.compose(M);
        fact = fact * Rational(m);
        const RatC s(Rational(1) / fact);
        for (int k = m; k <= K; ++k) out.coeff[k] = out.coeff[k] + pw.coeff[k] * s;
    }
    return out;
}

} // namespace

AsymptoticReport asymptotic_compare(const ProductConfig& cfg, int K,
                                    const std::vector<double>& theta_sweep,
                                    const std::vector<PolyObservable>& tau_theta_taylor) {
    cfg.validate();
    if (K < 0 || K > 2)
        throw ConfigError("asymptotic_compare: numeric comparison supports K <= 2");
    if (theta_sweep.size() < 2)
        throw ConfigError("asymptotic_compare: need at least two thetas");
    const int n = cfg.params.n, dim = cfg.params.dim_M();

    // Fixed low-degree data with both d_a / d_l and (for n >= 1) v content.
    PolyObservable a = PolyObservable::variable(dim, 0);
    PolyObservable l = PolyObservable::variable(dim, dim - 1);
    PolyObservable q1 = a + a * l;
    PolyObservable q2 = l - a * RatC(2);
    if (n >= 1) {
        q1 = q1 + PolyObservable::variable(dim, 1);
        q2 = q2 + PolyObservable::variable(dim, 1) * PolyObservable::variable(dim, 1 + n);
    }
    const Carried A{q1, 1}, B{q2, 1};

    // Equivalence of the pipeline: the bare inverse transport expanded at the
    // half-parameter twist, composed with the multiplier filter exp(-tau).
    FormalSeries E = expand_T_inverse(n, K);
    for (int k = 0; k <= K; ++k)
        E.coeff[k] = E.coeff[k] * RatC(Rational(1, 1ll << k));
    if (!tau_theta_taylor.empty()) {
        if (!tau_theta_taylor[0].is_zero())
            throw ConfigError("asymptotic_compare: tau must vanish at theta = 0");
        FormalSeries M(dim, K);
        const int jmax = std::min<int>(K, static_cast<int>(tau_theta_taylor.size()) - 1);
        for (int j = 1; j <= jmax; ++j)
            M.coeff[j] = xi_poly_operator(tau_theta_taylor[j], dim) *
                         RatC(Rational(-1, 1ll << j));
        E = E.compose(exp_series(M, dim));
    }

    const std::vector<Carried> R = carried_transported(A, B, E, K, n, Rational(2));
    std::vector<GridFunction> terms;
    for (int m = 0; m <= K; ++m) terms.push_back(sample_carried(cfg.grid, R[m]));
    const GridFunction u = sample_carried(cfg.grid, A);
    const GridFunction v = sample_carried(cfg.grid, B);

    AsymptoticReport rep;
    rep.thetas = theta_sweep;
    rep.residuals.assign(K + 1, {});
    for (const double th : theta_sweep) {
        ProductConfig c2 = cfg;
        c2.theta = th;
        const GridFunction w = star_pipeline(u, v, c2);
        GridFunction partial = terms[0];
        for (int k = 0; k <= K; ++k) {
            if (k > 0) partial = partial + cplx(std::pow(th, k), 0.0) * terms[k];
            rep.residuals[k].push_back(rel_l2_error(partial, w));
        }
    }
    for (int k = 0; k <= K; ++k)
        rep.slopes.push_back(loglog_slope(theta_sweep, rep.residuals[k]));
    return rep;
}

} // namespace solvq
