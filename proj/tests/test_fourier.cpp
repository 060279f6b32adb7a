#include <doctest.h>

#include "solvq/fourier.hpp"
#include "solvq/grid.hpp"
#include "solvq/util.hpp"

using namespace solvq;

TEST_SUITE_BEGIN("fourier");

namespace {

GridFunction gaussian2d(int pts, double half, double width) {
    GridSpec spec = GridSpec::chart_cube(0, pts, half);
    return gaussian(spec, VectorXd::Zero(2), width);
}

} // namespace

TEST_CASE("partial fourier of a gaussian matches the analytic transform") {
    // u(a,l) = e^{-a^2/2} e^{-l^2/2}  =>  u^(a,xi) = e^{-a^2/2} sqrt(2 pi) e^{-xi^2/2}
    GridFunction u = gaussian2d(128, 8.0, 1.0);
    GridFunction uh = partial_fourier(u);
    REQUIRE(uh.tag == SpaceTag::FOURIER);
    REQUIRE(uh.spec.last().role == AxisRole::XI);

    double err = 0.0;
    const Axis& aax = uh.spec.axes[0];
    const Axis& xax = uh.spec.last();
    for (int i = 0; i < aax.points; ++i) {
        double a = aax.coord(i);
        for (int j = 0; j < xax.points; ++j) {
            double xi = xax.coord(j);
            cplx expect = std::sqrt(2.0 * M_PI) * std::exp(-0.5 * (a * a + xi * xi));
            cplx got = uh.values[static_cast<std::int64_t>(i) * xax.points + j];
            err = std::max(err, std::abs(got - expect));
        }
    }
    CHECK(err < 1e-8);
}

TEST_CASE("partial fourier round trip and linearity") {
    Rng rng(7);
    GridSpec spec = GridSpec::chart_cube(0, 64, 7.0);
    GridFunction u = gaussian(spec, rng.uniform_vector(2, -1, 1), 0.8, cplx{1.0, 0.3});
    GridFunction w = gaussian(spec, rng.uniform_vector(2, -1, 1), 1.1, cplx{-0.5, 0.2});

    GridFunction back = partial_fourier_inv(partial_fourier(u));
    CHECK(rel_l2_error(back, u) < 1e-10);
    CHECK(back.spec.same_shape(u.spec));

    GridFunction lin = partial_fourier(u + w) - (partial_fourier(u) + partial_fourier(w));
    CHECK(norm_linf(lin) < 1e-12);
}

TEST_CASE("parseval per line: ||u^||^2 = 2 pi ||u||^2") {
    Rng rng(3);
    GridSpec spec = GridSpec::chart_cube(0, 64, 7.0);
    GridFunction u = gaussian(spec, rng.uniform_vector(2, -1, 1), 0.9);
    GridFunction uh = partial_fourier(u);
    double r = norm_l2(uh) * norm_l2(uh) / (2.0 * M_PI * norm_l2(u) * norm_l2(u));
    CHECK(std::abs(r - 1.0) < 1e-10);
}

TEST_CASE("wrong tag throws") {
    GridFunction u = gaussian2d(16, 6.0, 1.0);
    GridFunction uh = partial_fourier(u);
    CHECK_THROWS_AS(partial_fourier(uh), WrongSpaceTag);
    CHECK_THROWS_AS(partial_fourier_inv(u), WrongSpaceTag);
}

TEST_CASE("full spectrum evaluation interpolates grid data") {
    GridFunction u = gaussian2d(64, 8.0, 1.2);
    FullSpectrum s = full_fourier(u);

    // exact at a node
    VectorXd node(2);
    node << u.spec.axes[0].coord(20), u.spec.axes[1].coord(41);
    cplx at_node = eval_spectrum_at(s, node);
    CHECK(std::abs(at_node - u.values[20 * 64 + 41]) < 1e-10);

    // close to the function off the lattice (band-limited interpolation)
    VectorXd mid(2);
    mid << 0.37, -1.21;
    cplx off = eval_spectrum_at(s, mid);
    CHECK(std::abs(off - std::exp(-mid.squaredNorm() / (2 * 1.44))) < 1e-8);

    GridFunction back = full_fourier_inv(s);
    CHECK(rel_l2_error(back, u) < 1e-11);
}

TEST_CASE("nudft matrix agrees with partial fourier on native frequencies") {
    GridFunction u = gaussian2d(32, 6.0, 0.9);
    GridFunction uh = partial_fourier(u);
    const Axis& lax = u.spec.last();
    std::vector<double> omegas(lax.points);
    for (int j = 0; j < lax.points; ++j)
        omegas[j] = lax.freq(j);
    MatrixXc M = nudft_matrix(lax, omegas);

    // first a-line
    VectorXc line(lax.points);
    for (int m = 0; m < lax.points; ++m)
        line(m) = u.values[m];
    VectorXc hat = M * line;
    double err = 0;
    for (int j = 0; j < lax.points; ++j)
        err = std::max(err, std::abs(hat(j) - uh.values[j]));
    CHECK(err < 1e-10);
}

TEST_SUITE_END();
