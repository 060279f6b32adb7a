#include "doctest.h"

#include <cmath>
#include <vector>

#include "solvq/errors.hpp"
#include "solvq/fourier.hpp"
#include "solvq/transport.hpp"
#include "solvq/util.hpp"

using namespace solvq;

TEST_SUITE("transport") {

TEST_CASE("twist point maps: fixed axis, limits, inverse") {
    for (int n : {0, 1, 2}) {
        TwistParams tp{0.7, n};
        Rng rng(107 + n);

        // xi = 0 is fixed pointwise with unit volume distortion.
        VectorXd p = rng.uniform_vector(tp.dim(), -2.0, 2.0);
        p[tp.dim() - 1] = 0.0;
        CHECK((twist(p, tp) - p).cwiseAbs().maxCoeff() == 0.0);
        CHECK(twist_jacobian(p, tp) == doctest::Approx(1.0));

        for (int t = 0; t < 200; ++t) {
            const VectorXd q = rng.uniform_vector(tp.dim(), -2.0, 2.0);
            // theta -> 0 is the identity.
            CHECK((twist(q, TwistParams{1e-6, n}) - q).cwiseAbs().maxCoeff() < 1e-10);
            // Round trips both ways.
            CHECK((twist_inv(twist(q, tp), tp) - q).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((twist(twist_inv(q, tp), tp) - q).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    CHECK_THROWS_AS(TwistParams(0.0, 1).validate(), ConfigError);
    CHECK_THROWS_AS(twist(VectorXd::Zero(3), TwistParams{1.0, 2}), ConfigError);
}

TEST_CASE("twist jacobian matches the finite-difference determinant") {
    for (double theta : {0.3, 1.0}) {
        for (int n : {0, 1, 2}) {
            TwistParams tp{theta, n};
            Rng rng(109 + n);
            for (int t = 0; t < 100; ++t) {
                const VectorXd q = rng.uniform_vector(tp.dim(), -1.5, 1.5);
                const MatrixXd J = fd_jacobian(
                    [&](const VectorXd& x) { return twist(x, tp); }, q, 1e-5);
                const double det_fd = J.determinant();
                const double det = twist_jacobian(q, tp);
                CAPTURE(theta);
                CAPTURE(n);
                CHECK(std::abs(det - det_fd) / std::abs(det) < 1e-6);
            }
        }
    }
}

TEST_CASE("pullback fixes xi-independent data") {
    GridSpec spec = GridSpec::chart_cube(0, 32, 6.0);
    GridFunction f(spec, SpaceTag::FOURIER);
    f.spec.axes.back().role = AxisRole::XI;
    std::vector<int> idx(2);
    for (std::int64_t i = 0; i < f.size(); ++i) {
        f.spec.unravel(i, idx);
        const double a = f.spec.axes[0].coord(idx[0]);
        f[i] = cplx(std::exp(-0.3 * a * a), 0.2 * std::sin(a));
    }
    const GridFunction g = pullback(f, TwistMap::TWIST_INV, TwistParams{0.4, 0});
    double worst = 0.0;
    for (std::int64_t i = 0; i < f.size(); ++i)
        worst = std::max(worst, std::abs(g[i] - f[i]));
    CHECK(worst < 1e-13);
}

TEST_CASE("pullback matches the analytic composition on gaussians") {
    const int n = 1;
    const TwistParams tp{0.2, n};
    GridSpec spec = GridSpec::chart_cube(n, 32, 6.0);
    const double w2 = 2.0 * 0.7 * 0.7;
    auto gauss = [&](const VectorXd& x) { return cplx(std::exp(-x.squaredNorm() / w2)); };
    GridFunction f = sample(spec, gauss);
    f.tag = SpaceTag::FOURIER;
    f.spec.axes.back().role = AxisRole::XI;

    const double nyq = spec.last().nyquist();
    const GridFunction pb = pullback(f, TwistMap::TWIST, tp);
    double worst = 0.0;
    std::vector<int> idx(spec.ndim());
    for (std::int64_t i = 0; i < f.size(); ++i) {
        f.spec.unravel(i, idx);
        const VectorXd p = f.spec.coords(idx);
        const VectorXd q = twist(p, tp);
        // Reads beyond the xi Nyquist are masked to zero by contract.
        const cplx ref = std::abs(q[q.size() - 1]) > nyq ? cplx(0.0) : gauss(q);
        worst = std::max(worst, std::abs(pb[i] - ref));
    }
    CHECK(worst < 1e-6);

    // Round trip, interpolation limited. The contracting warp leaves a small
    // v-shell on the intermediate, so its window budget is looser.
    const GridFunction back = pullback(pb, TwistMap::TWIST_INV, tp, 1e-7);
    CHECK(rel_l2_error(back, f) < 1e-5);
}

TEST_CASE("transport round trip is the identity") {
    // n = 0 at strict windowing.
    {
        const TwistParams tp{0.1, 0};
        GridSpec spec = GridSpec::chart_cube(0, 64, 8.0);
        VectorXd c(2);
        c << 0.4, -0.3;
        const GridFunction u = gaussian(spec, c, 1.0);
        const GridFunction fwd = T_apply(u, tp, Multiplier::one(), TransportDirection::FORWARD);
        // The forward leg broadens the l-tail to ~1e-9 on this grid, so the
        // chained call gets a matching window budget.
        const GridFunction rt =
            T_apply(fwd, tp, Multiplier::one(), TransportDirection::INVERSE, 1e-8);
        CHECK(rel_l2_error(rt, u) < 1e-5);
    }
    // n = 1 on a coarser grid; the relaxed boundary budget reflects what the
    // grid can window.
    {
        const TwistParams tp{0.1, 1};
        GridSpec spec = GridSpec::chart_cube(1, 32, 8.0);
        const GridFunction u = gaussian(spec, VectorXd::Zero(4), 1.0);
        const double tol = 1e-4;
        const GridFunction fwd =
            T_apply(u, tp, Multiplier::one(), TransportDirection::FORWARD, tol);
        const GridFunction rt =
            T_apply(fwd, tp, Multiplier::one(), TransportDirection::INVERSE, tol);
        CHECK(rel_l2_error(rt, u) < 1e-5);
    }
}

TEST_CASE("transport commutes with a-translations") {
    const TwistParams tp{0.3, 0};
    GridSpec spec = GridSpec::chart_cube(0, 64, 8.0);
    const double da = spec.axes[0].step();
    const int shift = 3;
    VectorXd c0(2), c1(2);
    c0 << 0.0, -0.2;
    c1 << shift * da, -0.2;
    const GridFunction u0 = gaussian(spec, c0, 1.0);
    const GridFunction u1 = gaussian(spec, c1, 1.0);
    const GridFunction t0 = T_apply(u0, tp, Multiplier::one(), TransportDirection::FORWARD);
    const GridFunction t1 = T_apply(u1, tp, Multiplier::one(), TransportDirection::FORWARD);
    const int na = spec.axes[0].points, nl = spec.axes[1].points;
    double worst = 0.0;
    for (int j = shift; j < na; ++j)
        for (int m = 0; m < nl; ++m)
            worst = std::max(worst,
                             std::abs(t1[std::int64_t(j) * nl + m] -
                                      t0[std::int64_t(j - shift) * nl + m]));
    CHECK(worst < 1e-12);
}

TEST_CASE("bare inverse transport deviates at second order in theta") {
    GridSpec spec = GridSpec::chart_cube(0, 64, 8.0);
    VectorXd c(2);
    c << 0.2, -0.1;
    const GridFunction u = gaussian(spec, c, 1.0);
    std::vector<double> thetas = {0.4, 0.2, 0.1, 0.05};
    std::vector<double> errs;
    for (double th : thetas) {
        const GridFunction ti =
            T_apply(u, TwistParams{th, 0}, Multiplier::one(), TransportDirection::INVERSE);
        errs.push_back(rel_l2_error(ti, u));
    }
    const double slope = loglog_slope(thetas, errs);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("transport input validation") {
    const TwistParams tp{0.3, 0};
    GridSpec spec = GridSpec::chart_cube(0, 32, 4.0);
    const GridFunction u = gaussian(spec, VectorXd::Zero(2), 0.5);

    GridFunction tagged = u;
    tagged.tag = SpaceTag::FOURIER;
    CHECK_THROWS_AS(T_apply(tagged, tp, Multiplier::one(), TransportDirection::FORWARD),
                    WrongSpaceTag);
    CHECK_THROWS_AS(pullback(u, TwistMap::TWIST, tp), WrongSpaceTag);

    // A wide profile leaves mass on the l-boundary.
    const GridFunction wide = gaussian(spec, VectorXd::Zero(2), 3.0);
    CHECK_THROWS_AS(T_apply(wide, tp, Multiplier::one(), TransportDirection::FORWARD),
                    BoundaryMassError);

    // Dimension mismatch against the parameter block.
    CHECK_THROWS_AS(T_apply(u, TwistParams{0.3, 1}, Multiplier::one(),
                            TransportDirection::FORWARD),
                    ConfigError);
}

} // TEST_SUITE
