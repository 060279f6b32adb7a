#pragma once

#include <map>
#include <vector>

#include "solvq/fourier.hpp"
#include "solvq/grid.hpp"
#include "solvq/types.hpp"

namespace solvq {

// Exact rational scalar for the formal engine. All symbolic expansions run
// over Q(i) so that identities like order-K associativity come out as literal
// zeros, not small floats. Intermediate products go through 128-bit integers;
// exhausting them throws ConfigError (the expansion was too deep to hold
// exactly).
struct Rational {
    long long num = 0;
    long long den = 1; // always > 0, gcd(|num|, den) = 1

    Rational() = default;
    Rational(long long n) : num(n) {}
    Rational(long long n, long long d);

    Rational operator+(const Rational& r) const;
    Rational operator-(const Rational& r) const;
    Rational operator*(const Rational& r) const;
    Rational operator/(const Rational& r) const;
    Rational operator-() const { return {-num, den, unchecked{}}; }
    bool operator==(const Rational& r) const { return num == r.num && den == r.den; }
    bool is_zero() const { return num == 0; }
    double value() const { return double(num) / double(den); }

  private:
    struct unchecked {};
    Rational(long long n, long long d, unchecked) : num(n), den(d) {}
};

// Gaussian rational a + b i.
struct RatC {
    Rational re, im;

    RatC() = default;
    RatC(Rational r) : re(r) {}
    RatC(long long n) : re(n) {}
    RatC(Rational r, Rational i) : re(r), im(i) {}
    static RatC i() { return {Rational(0), Rational(1)}; }

    RatC operator+(const RatC& z) const { return {re + z.re, im + z.im}; }
    RatC operator-(const RatC& z) const { return {re - z.re, im - z.im}; }
    RatC operator*(const RatC& z) const {
        return {re * z.re - im * z.im, re * z.im + im * z.re};
    }
    RatC operator-() const { return {-re, -im}; }
    bool operator==(const RatC& z) const { return re == z.re && im == z.im; }
    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    cplx value() const { return cplx(re.value(), im.value()); }
};

// A polynomial observable on the chart (a, v_1..v_2n, l): a finite sparse sum
// of monomials with exact complex-rational coefficients. dim = 2 + 2n slots,
// axis 0 = a, axis dim-1 = l.
struct PolyObservable {
    int dim = 0;
    std::map<std::vector<int>, RatC> terms; // exponent vector -> coefficient

    PolyObservable() = default;
    explicit PolyObservable(int d) : dim(d) {}
    static PolyObservable constant(int dim, RatC c);
    static PolyObservable variable(int dim, int axis);

    PolyObservable& add_term(const std::vector<int>& expo, RatC c);
    PolyObservable operator+(const PolyObservable& q) const;
    PolyObservable operator-(const PolyObservable& q) const;
    PolyObservable operator*(const PolyObservable& q) const;
    PolyObservable operator*(RatC c) const;
    PolyObservable derivative(int axis) const;

    cplx eval(const VectorXd& x) const;
    bool is_zero() const { return terms.empty(); }
    double max_abs_coeff() const;
};

// theta-coefficient list of polynomial observables (a truncated formal series
// of observables; entry k multiplies theta^k).
using ObservableSeries = std::vector<PolyObservable>;

// A differential operator in normal form: sum over derivative multi-indices
// of polynomial coefficients, coefficient * d^alpha.
struct DiffOp {
    int dim = 0;
    std::map<std::vector<int>, PolyObservable> terms;

    DiffOp() = default;
    explicit DiffOp(int d) : dim(d) {}
    static DiffOp identity(int dim);

    DiffOp& add_term(const std::vector<int>& deriv, const PolyObservable& coeff);
    DiffOp operator+(const DiffOp& b) const;
    DiffOp operator-(const DiffOp& b) const;
    DiffOp operator*(RatC c) const;

    PolyObservable apply(const PolyObservable& u) const;
    // Operator product: (this o rhs), re-normal-ordered via Leibniz.
    DiffOp compose(const DiffOp& rhs) const;
    bool is_zero() const;
};

// Truncated formal power series of differential operators: coeff[k]
// multiplies theta^k; order = K means coefficients 0..K are all present.
struct FormalSeries {
    int order = 0;
    std::vector<DiffOp> coeff;

    FormalSeries() = default;
    FormalSeries(int dim, int K);

    ObservableSeries apply(const PolyObservable& u) const;
    ObservableSeries apply(const ObservableSeries& u) const;
    FormalSeries compose(const FormalSeries& rhs) const; // truncated product
    // Series inverse; requires coeff[0] == identity.
    FormalSeries inverse() const;
};

// Poisson structure options for the flat Weyl product. The pairing is
// {a, l} = 1 and {v_i, v_{n+j}} = v_pair_weight * delta_ij; the default 1.0
// is the unweighted block form, while the chart-invariant structure of the
// curved products uses 2.0 (inverse of the halved V-block of the invariant
// 2-form).
struct MoyalOptions {
    double v_pair_weight = 1.0;
    double boundary_tol = 1e-12;
    bool force_direct = false; // bypass the n = 0 fast path (testing)
};

// Flat Weyl product of windowed grid data, evaluated as a twisted convolution
// of the full spectra: w^(K) = (2 pi)^{-d} sum_P u^(P) v^(K-P)
// exp(-i theta/2 Lambda(P, K)) dP. The n = 0 path batches modulated padded
// FFT line convolutions; higher n runs the direct double sum over the
// frequency lattice (cost O(N^{2d}), intended for coarse validation grids).
GridFunction moyal_numeric(const GridFunction& u, const GridFunction& v,
                           double theta, const MoyalOptions& opts = {});

// Formal Moyal product through theta^K: term k is
// (i/2)^k / k! * Lambda^{i1 j1} ... Lambda^{ik jk} d_{i..} u d_{j..} v,
// computed exactly over Q(i).
ObservableSeries moyal_formal(const PolyObservable& u, const PolyObservable& v,
                              int K, const Rational& v_pair_weight = Rational(1));
// Cauchy extension to series operands (used by the transported product).
ObservableSeries moyal_formal(const ObservableSeries& u,
                              const ObservableSeries& v, int K,
                              const Rational& v_pair_weight = Rational(1));

// Single Poisson bracket with the same pairing (the theta-linear commutator
// coefficient), for oracle comparisons.
PolyObservable poisson_bracket(const PolyObservable& u, const PolyObservable& v,
                               const Rational& v_pair_weight = Rational(1));

// Symbolic theta-Taylor expansion of the inverse transport operator at unit
// multiplier: T^{-1} = I + sum theta^k U_k with
// U_k built from d_l, multiplication by l, and the Euler operator v.d_v via
// the dictionary xi <-> -i d_l. Odd orders vanish (the twist is even in
// theta). K <= 8.
FormalSeries expand_T_inverse(int n, int K);

// Transported formal product u *_K v = E^{-1}(E u *0 E v) for an equivalence
// series E starting at the identity (typically expand_T_inverse output).
ObservableSeries formal_transported_product(const PolyObservable& u,
                                            const PolyObservable& v,
                                            const FormalSeries& equivalence,
                                            int K,
                                            const Rational& v_pair_weight = Rational(1));

} // namespace solvq
