#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "solvq/errors.hpp"
#include "solvq/fourier.hpp"
#include "solvq/grid.hpp"
#include "solvq/moyal.hpp"
#include "solvq/multipliers.hpp"
#include "solvq/transport.hpp"
#include "solvq/util.hpp"

using namespace solvq;

namespace {

RatC ri(long long re, long long im = 0) { return {Rational(re), Rational(im)}; }

PolyObservable random_poly(std::mt19937& eng, int dim, int max_degree, int nterms) {
    std::uniform_int_distribution<int> coef(-3, 3);
    std::uniform_int_distribution<int> deg(0, max_degree);
    PolyObservable p(dim);
    for (int t = 0; t < nterms; ++t) {
        std::vector<int> e(dim, 0);
        int budget = deg(eng);
        for (int ax = 0; ax < dim && budget > 0; ++ax) {
            std::uniform_int_distribution<int> part(0, budget);
            e[ax] = part(eng);
            budget -= e[ax];
        }
        p.add_term(e, ri(coef(eng), coef(eng)));
    }
    return p;
}

// D applied to Q(x) exp(-|x|^2 / 2), returned as the polynomial factor of the
// same gaussian: each bare derivative maps P -> dP - x_ax P.
PolyObservable diffop_on_gaussian(const DiffOp& D, const PolyObservable& Q) {
    PolyObservable out(Q.dim);
    for (const auto& [alpha, coeff] : D.terms) {
        PolyObservable p = Q;
        for (int ax = 0; ax < Q.dim; ++ax)
            for (int k = 0; k < alpha[ax]; ++k)
                p = p.derivative(ax) - PolyObservable::variable(Q.dim, ax) * p;
        out = out + coeff * p;
    }
    return out;
}

GridFunction sample_poly_gaussian(const GridSpec& spec, const PolyObservable& q) {
    return sample(spec, [&](const VectorXd& x) {
        return q.eval(x) * std::exp(-0.5 * x.squaredNorm());
    });
}

// Transported star product extended to series operands, for the associativity
// check: E^{-1}(E x *0 E y) with every factor truncated at E.order.
ObservableSeries series_star(const ObservableSeries& x, const ObservableSeries& y,
                             const FormalSeries& eq, const Rational& w) {
    return eq.inverse().apply(moyal_formal(eq.apply(x), eq.apply(y), eq.order, w));
}

} // namespace

TEST_SUITE("moyal") {

TEST_CASE("exact rational scalars reduce and overflow loudly") {
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(3, -6) == Rational(-1, 2));
    CHECK((Rational(2, 3) * Rational(9, 4)) == Rational(3, 2));
    CHECK((Rational(1, 7) / Rational(2, 7)) == Rational(1, 2));
    CHECK((-Rational(5, 3)) == Rational(-5, 3));
    CHECK_THROWS_AS(Rational(1, 0), ConfigError);
    CHECK_THROWS_AS(Rational(1, 2) / Rational(0), ConfigError);
    CHECK_THROWS_AS(Rational(1, 1LL << 62), ConfigError);
    const Rational tiny(1, 1LL << 40);
    CHECK_THROWS_AS(tiny * tiny, ConfigError);

    CHECK(RatC::i() * RatC::i() == ri(-1));
    CHECK((ri(1, 2) * ri(3, -1)) == ri(5, 5));
    CHECK(std::abs(ri(1, 2).value() - cplx(1.0, 2.0)) == 0.0);
}

TEST_CASE("polynomial observables multiply and differentiate exactly") {
    const int d = 2;
    const PolyObservable a = PolyObservable::variable(d, 0);
    const PolyObservable l = PolyObservable::variable(d, 1);
    const PolyObservable s = a + l;
    const PolyObservable sq = s * s;

    PolyObservable expect(d);
    expect.add_term({2, 0}, ri(1)).add_term({1, 1}, ri(2)).add_term({0, 2}, ri(1));
    CHECK((sq - expect).is_zero());

    // d/da (a+l)^2 = 2(a+l)
    CHECK((sq.derivative(0) - (s + s)).is_zero());
    CHECK(sq.derivative(0).derivative(1).derivative(1).is_zero());

    VectorXd x(2);
    x << 1.5, -2.0;
    CHECK(std::abs(sq.eval(x) - cplx(0.25)) < 1e-15);

    // Cancellation prunes the term map entirely.
    CHECK((sq - sq).is_zero());
    CHECK((sq * ri(0)).is_zero());
    CHECK_THROWS_AS(sq + PolyObservable::variable(4, 0), ConfigError);
}

TEST_CASE("diffop composition obeys leibniz and keeps associativity") {
    const int d = 2;
    DiffOp da(d), ma(d);
    da.add_term({1, 0}, PolyObservable::constant(d, ri(1)));
    ma.add_term({0, 0}, PolyObservable::variable(d, 0));

    // d_a o M_a = M_a d_a + 1 as normal-form terms.
    const DiffOp comp = da.compose(ma);
    DiffOp expect = ma.compose(da) + DiffOp::identity(d);
    CHECK((comp - expect).is_zero());

    std::mt19937 eng(41);
    DiffOp A(d), B(d), C(d);
    A.add_term({2, 0}, random_poly(eng, d, 2, 3)).add_term({0, 1}, random_poly(eng, d, 2, 3));
    B.add_term({1, 1}, random_poly(eng, d, 2, 3)).add_term({0, 0}, random_poly(eng, d, 1, 2));
    C.add_term({0, 2}, random_poly(eng, d, 2, 3));

    CHECK((A.compose(B).compose(C) - A.compose(B.compose(C))).is_zero());

    // Composition must act like sequential application.
    const PolyObservable u = random_poly(eng, d, 3, 4);
    CHECK((A.compose(B).apply(u) - A.apply(B.apply(u))).is_zero());
    CHECK((DiffOp::identity(d).compose(A) - A).is_zero());
}

TEST_CASE("weyl product formal terms match the flat oracles") {
    const int d = 2;
    const PolyObservable a = PolyObservable::variable(d, 0);
    const PolyObservable l = PolyObservable::variable(d, 1);

    // a * l - l * a = i theta, exactly and only at order one.
    const ObservableSeries al = moyal_formal(a, l, 3);
    const ObservableSeries la = moyal_formal(l, a, 3);
    CHECK((al[0] - a * l).is_zero());
    CHECK((al[1] - la[1] - PolyObservable::constant(d, ri(0, 1))).is_zero());
    for (int k : {2, 3}) {
        CHECK(al[k].is_zero());
        CHECK(la[k].is_zero());
    }

    // Unit is neutral at every order.
    std::mt19937 eng(7);
    const PolyObservable u = random_poly(eng, d, 3, 5);
    const ObservableSeries u1 = moyal_formal(u, PolyObservable::constant(d, ri(1)), 4);
    CHECK((u1[0] - u).is_zero());
    for (int k = 1; k <= 4; ++k) CHECK(u1[k].is_zero());

    // Order one is (i/2) times the Poisson bracket, for any pair weight.
    const int d4 = 4;
    const Rational w(2);
    const PolyObservable p = random_poly(eng, d4, 3, 5);
    const PolyObservable q = random_poly(eng, d4, 3, 5);
    const ObservableSeries pq = moyal_formal(p, q, 1, w);
    CHECK((pq[0] - p * q).is_zero());
    CHECK((pq[1] * ri(2) - poisson_bracket(p, q, w) * RatC::i()).is_zero());

    // The weighted pairing itself: {v1, v2} = w, {a, l} = 1, cross pairs 0.
    const PolyObservable v1 = PolyObservable::variable(d4, 1);
    const PolyObservable v2 = PolyObservable::variable(d4, 2);
    CHECK((poisson_bracket(v1, v2, w) - PolyObservable::constant(d4, RatC(w))).is_zero());
    CHECK((poisson_bracket(PolyObservable::variable(d4, 0),
                           PolyObservable::variable(d4, 3), w) -
           PolyObservable::constant(d4, ri(1)))
              .is_zero());
    CHECK(poisson_bracket(PolyObservable::variable(d4, 0), v2, w).is_zero());
}

TEST_CASE("formal weyl product is associative through theta four") {
    std::mt19937 eng(1234);
    for (int dim : {2, 4}) {
        for (long long wnum : {1, 2}) {
            const Rational w(wnum);
            const PolyObservable u = random_poly(eng, dim, 3, 6);
            const PolyObservable v = random_poly(eng, dim, 3, 6);
            const PolyObservable z = random_poly(eng, dim, 3, 6);
            const ObservableSeries lhs =
                moyal_formal(moyal_formal(u, v, 4, w), ObservableSeries{z}, 4, w);
            const ObservableSeries rhs =
                moyal_formal(ObservableSeries{u}, moyal_formal(v, z, 4, w), 4, w);
            REQUIRE(lhs.size() == rhs.size());
            for (std::size_t k = 0; k < lhs.size(); ++k)
                CHECK((lhs[k] - rhs[k]).is_zero());
        }
    }
}

TEST_CASE("inverse transport expansion matches the frozen second order operator") {
    for (int n : {0, 1, 2}) {
        const int d = 2 + 2 * n;
        const FormalSeries E = expand_T_inverse(n, 4);
        REQUIRE(E.order == 4);
        CHECK((E.coeff[0] - DiffOp::identity(d)).is_zero());
        CHECK(E.coeff[1].is_zero());
        CHECK(E.coeff[3].is_zero());

        // U2 = (2/3) d_l^3 M_l + (1/2) d_l^2 (v . d_v), frozen independently
        // of the series machinery.
        DiffOp dl3(d), dl2(d), ml(d), euler(d);
        std::vector<int> e3(d, 0), e2(d, 0);
        e3[d - 1] = 3;
        e2[d - 1] = 2;
        dl3.add_term(e3, PolyObservable::constant(d, ri(1)));
        dl2.add_term(e2, PolyObservable::constant(d, ri(1)));
        ml.add_term(std::vector<int>(d, 0), PolyObservable::variable(d, d - 1));
        for (int i = 0; i < 2 * n; ++i) {
            std::vector<int> dv(d, 0);
            dv[1 + i] = 1;
            euler.add_term(dv, PolyObservable::variable(d, 1 + i));
        }
        const DiffOp oracle = dl3.compose(ml) * ri(2) * RatC(Rational(1, 3)) +
                              dl2.compose(euler) * RatC(Rational(1, 2));
        CHECK((E.coeff[2] - oracle).is_zero());

        // Exact two-sided inverse through the truncation order.
        for (const FormalSeries& prod : {E.compose(E.inverse()), E.inverse().compose(E)}) {
            CHECK((prod.coeff[0] - DiffOp::identity(d)).is_zero());
            for (int k = 1; k <= prod.order; ++k) CHECK(prod.coeff[k].is_zero());
        }

        // Functions of a alone are transparent to the transport.
        const PolyObservable a2 = PolyObservable::variable(d, 0) * PolyObservable::variable(d, 0);
        const ObservableSeries ea = E.apply(a2);
        CHECK((ea[0] - a2).is_zero());
        for (int k = 1; k <= 4; ++k) CHECK(ea[k].is_zero());
    }
    CHECK_THROWS_AS(expand_T_inverse(-1, 4), ConfigError);
    CHECK_THROWS_AS(expand_T_inverse(0, 9), ConfigError);
}

TEST_CASE("transported product is a hochschild twist of the weyl product") {
    std::mt19937 eng(99);
    const int d = 4;
    const Rational w(2);
    const FormalSeries E = expand_T_inverse(1, 2);
    const DiffOp& U2 = E.coeff[2];
    const PolyObservable u = random_poly(eng, d, 3, 5);
    const PolyObservable v = random_poly(eng, d, 3, 5);

    const ObservableSeries prod = formal_transported_product(u, v, E, 2, w);
    const ObservableSeries flat = moyal_formal(u, v, 2, w);
    CHECK((prod[0] - u * v).is_zero());
    CHECK((prod[1] - flat[1]).is_zero());
    // Order two shifts by the Hochschild coboundary of U2.
    const PolyObservable shift = U2.apply(u) * v + u * U2.apply(v) - U2.apply(u * v);
    CHECK((prod[2] - flat[2] - shift).is_zero());

    CHECK_THROWS_AS(formal_transported_product(u, v, E, 3, w), ConfigError);
}

TEST_CASE("transported product stays associative as a series") {
    std::mt19937 eng(2024);
    const FormalSeries E = expand_T_inverse(1, 3);
    const Rational w(2);
    const ObservableSeries u{random_poly(eng, 4, 2, 5)};
    const ObservableSeries v{random_poly(eng, 4, 2, 5)};
    const ObservableSeries z{random_poly(eng, 4, 2, 5)};
    const ObservableSeries lhs = series_star(series_star(u, v, E, w), z, E, w);
    const ObservableSeries rhs = series_star(u, series_star(v, z, E, w), E, w);
    REQUIRE(lhs.size() == rhs.size());
    for (std::size_t k = 0; k < lhs.size(); ++k) CHECK((lhs[k] - rhs[k]).is_zero());
}

TEST_CASE("second order transport coefficient matches the numeric operator") {
    // Subtracting the identity and dividing by theta^2 exposes U2; one
    // Richardson step removes the theta^2 contamination from U4.
    auto u2_residual = [](const GridFunction& ug, int n, double theta) {
        const TwistParams tp{theta, n};
        const GridFunction t =
            T_apply(ug, tp, Multiplier::one(), TransportDirection::INVERSE, 1e-7);
        return (1.0 / (theta * theta)) * (t - ug);
    };

    SUBCASE("planar chart") {
        const GridSpec spec = GridSpec::chart_cube(0, 64, 8.0);
        PolyObservable q(2);
        q.add_term({2, 1}, ri(1)).add_term({0, 1}, ri(-2)).add_term({1, 0}, ri(1));
        const GridFunction ug = sample_poly_gaussian(spec, q);
        const FormalSeries E = expand_T_inverse(0, 2);
        const GridFunction exact =
            sample_poly_gaussian(spec, diffop_on_gaussian(E.coeff[2], q));

        const GridFunction r1 = u2_residual(ug, 0, 0.04);
        const GridFunction r2 = u2_residual(ug, 0, 0.02);
        CHECK(rel_l2_error(r2, exact) < 3e-2);
        const GridFunction rich = (1.0 / 3.0) * (4.0 * r2 - r1);
        CHECK(rel_l2_error(rich, exact) < 2e-3);
    }

    SUBCASE("one v pair") {
        const GridSpec spec = GridSpec::chart_cube(1, 32, 7.0);
        PolyObservable q(4);
        q.add_term({0, 1, 0, 1}, ri(1)).add_term({1, 0, 0, 0}, ri(2)).add_term({0, 0, 2, 0}, ri(-1));
        const GridFunction ug = sample_poly_gaussian(spec, q);
        const FormalSeries E = expand_T_inverse(1, 2);
        const GridFunction exact =
            sample_poly_gaussian(spec, diffop_on_gaussian(E.coeff[2], q));

        const GridFunction r1 = u2_residual(ug, 1, 0.06);
        const GridFunction r2 = u2_residual(ug, 1, 0.03);
        CHECK(rel_l2_error(r2, exact) < 3e-2);
        const GridFunction rich = (1.0 / 3.0) * (4.0 * r2 - r1);
        CHECK(rel_l2_error(rich, exact) < 5e-3);
    }
}

TEST_CASE("numeric weyl product reproduces the gaussian idempotent") {
    const GridSpec spec = GridSpec::chart_cube(0, 256, 6.0);
    VectorXd c0 = VectorXd::Zero(2);
    for (double theta : {0.5, 1.0}) {
        const GridFunction u = gaussian(spec, c0, std::sqrt(0.5 * theta), 2.0);
        const GridFunction w = moyal_numeric(u, u, theta);
        CHECK(rel_l2_error(w, u) < 1e-6);
    }
}

TEST_CASE("numeric commutator converges to the poisson bracket at second order") {
    const GridSpec spec = GridSpec::chart_cube(0, 128, 6.0);
    VectorXd cu(2), cv(2);
    cu << 0.4, -0.3;
    cv << -0.5, 0.2;
    const double wu = 0.6, wv = 0.7;
    const GridFunction u = gaussian(spec, cu, wu);
    const GridFunction v = gaussian(spec, cv, wv);
    const GridFunction pois = sample(spec, [&](const VectorXd& x) -> cplx {
        const double gu = std::exp(-(x - cu).squaredNorm() / (2 * wu * wu));
        const double gv = std::exp(-(x - cv).squaredNorm() / (2 * wv * wv));
        const double cross = (x[0] - cu[0]) * (x[1] - cv[1]) - (x[1] - cu[1]) * (x[0] - cv[0]);
        return gu * gv * cross / (wu * wu * wv * wv);
    });

    const std::vector<double> thetas = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> resid;
    for (double theta : thetas) {
        const GridFunction uv = moyal_numeric(u, v, theta);
        const GridFunction vu = moyal_numeric(v, u, theta);
        const GridFunction br = (1.0 / cplx(0.0, theta)) * (uv - vu);
        resid.push_back(rel_l2_error(br, pois));

        if (theta == 0.2) {
            // Lattice traciality is exact: the twisted phase drops out at the
            // zero output frequency.
            CHECK(std::abs(integral(uv) - integral(u * v)) / std::abs(integral(u * v)) < 1e-10);
            // Hermitian symmetry of the product of real inputs.
            GridFunction vu_conj = vu;
            for (cplx& z : vu_conj.values) z = std::conj(z);
            CHECK(rel_l2_error(uv, vu_conj) < 1e-9);
        }
    }
    const double slope = loglog_slope(thetas, resid);
    CHECK(slope > 1.8);
    CHECK(slope < 2.2);
}

TEST_CASE("fast and direct twisted convolutions agree") {
    const GridSpec spec = GridSpec::chart_cube(0, 32, 6.0);
    VectorXd cu(2), cv(2);
    cu << 0.3, 0.1;
    cv << -0.2, -0.4;
    const GridFunction u = gaussian(spec, cu, 0.85);
    const GridFunction v = gaussian(spec, cv, 0.9, cplx(0.7, 0.4));
    MoyalOptions fast, direct;
    fast.boundary_tol = direct.boundary_tol = 1e-8;
    direct.force_direct = true;
    const GridFunction wf = moyal_numeric(u, v, 0.4, fast);
    const GridFunction wd = moyal_numeric(u, v, 0.4, direct);
    CHECK(rel_l2_error(wf, wd) < 1e-12);
}

TEST_CASE("a four dimensional product factorizes over symplectic pairs") {
    // With separable data the pair structure splits the twisted convolution
    // into two planar products, the v pair running at theta * weight; this
    // pins the lattice engine for n = 1 without any asymptotics.
    const int N = 12;
    const double half = 4.5, theta = 0.3, vw = 2.0;
    const GridSpec spec4 = GridSpec::chart_cube(1, N, half);
    const GridSpec spec2 = GridSpec::chart_cube(0, N, half);

    VectorXd c1(2), c2(2), c3(2), c4(2);
    c1 << 0.3, -0.2;
    c2 << -0.4, 0.1;
    c3 << 0.2, 0.3;
    c4 << -0.1, -0.3;
    const GridFunction ual = gaussian(spec2, c1, 1.0);
    const GridFunction uvv = gaussian(spec2, c2, 1.05, cplx(0.4, 0.9));
    const GridFunction val = gaussian(spec2, c3, 1.0);
    const GridFunction vvv = gaussian(spec2, c4, 1.05);

    auto outer = [&](const GridFunction& al, const GridFunction& vv) {
        GridFunction out(spec4, SpaceTag::POSITION);
        for (int ia = 0; ia < N; ++ia)
            for (int i1 = 0; i1 < N; ++i1)
                for (int i2 = 0; i2 < N; ++i2)
                    for (int il = 0; il < N; ++il)
                        out.values[((std::int64_t(ia) * N + i1) * N + i2) * N + il] =
                            al.values[ia * N + il] * vv.values[i1 * N + i2];
        return out;
    };

    MoyalOptions loose;
    loose.boundary_tol = 1e-2; // engine identity test, not a continuum claim
    loose.v_pair_weight = vw;
    const GridFunction w4 = moyal_numeric(outer(ual, uvv), outer(val, vvv), theta, loose);

    MoyalOptions loose2;
    loose2.boundary_tol = 1e-2;
    const GridFunction wal = moyal_numeric(ual, val, theta, loose2);
    const GridFunction wvv = moyal_numeric(uvv, vvv, theta * vw, loose2);
    CHECK(rel_l2_error(w4, outer(wal, wvv)) < 1e-10);
}

TEST_CASE("numeric product rejects malformed input") {
    const GridSpec spec = GridSpec::chart_cube(0, 32, 6.0);
    VectorXd c0 = VectorXd::Zero(2);
    const GridFunction u = gaussian(spec, c0, 0.85);

    const GridFunction other = gaussian(GridSpec::chart_cube(0, 16, 6.0), c0, 0.85);
    CHECK_THROWS_AS(moyal_numeric(u, other, 0.4), GridMismatch);

    GridFunction wrong = u;
    wrong.tag = SpaceTag::FOURIER;
    CHECK_THROWS_AS(moyal_numeric(u, wrong, 0.4), WrongSpaceTag);

    // Fat in position space, then fat in frequency space.
    CHECK_THROWS_AS(moyal_numeric(gaussian(spec, c0, 3.0), u, 0.4), BoundaryMassError);
    CHECK_THROWS_AS(moyal_numeric(gaussian(spec, c0, 0.05), u, 0.4), BoundaryMassError);

    GridFunction odd = u;
    odd.spec.axes.pop_back();
    odd.values.resize(odd.spec.size());
    CHECK_THROWS_AS(moyal_numeric(odd, odd, 0.4), ConfigError);

    CHECK_THROWS_AS(moyal_numeric(u, u, 0.0), ConfigError);
    MoyalOptions bad;
    bad.v_pair_weight = -1.0;
    const GridFunction u4 = gaussian(GridSpec::chart_cube(1, 8, 4.0), VectorXd::Zero(4), 1.0);
    CHECK_THROWS_AS(moyal_numeric(u4, u4, 0.4, bad), ConfigError);
}

} // TEST_SUITE
