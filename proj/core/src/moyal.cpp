#include "solvq/moyal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "solvq/errors.hpp"

namespace solvq {

namespace {

using i128 = __int128;

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        const i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

constexpr i128 kRatMax = i128(1) << 62;

Rational reduce128(i128 n, i128 d) {
    if (d == 0) throw ConfigError("rational division by zero");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const i128 g = n == 0 ? d : gcd128(n, d);
    n /= g;
    d /= g;
    if (n >= kRatMax || -n >= kRatMax || d >= kRatMax)
        throw ConfigError("exact rational overflow; expansion too deep");
    Rational r;
    r.num = static_cast<long long>(n);
    r.den = static_cast<long long>(d);
    return r;
}

} // namespace

Rational::Rational(long long n, long long d) {
    const Rational r = reduce128(n, d);
    num = r.num;
    den = r.den;
}

Rational Rational::operator+(const Rational& r) const {
    return reduce128(i128(num) * r.den + i128(r.num) * den, i128(den) * r.den);
}
Rational Rational::operator-(const Rational& r) const {
    return reduce128(i128(num) * r.den - i128(r.num) * den, i128(den) * r.den);
}
Rational Rational::operator*(const Rational& r) const {
    return reduce128(i128(num) * r.num, i128(den) * r.den);
}
Rational Rational::operator/(const Rational& r) const {
    if (r.num == 0) throw ConfigError("rational division by zero");
    return reduce128(i128(num) * r.den, i128(den) * r.num);
}

// ---------------------------------------------------------------------------
// Polynomial observables

PolyObservable PolyObservable::constant(int dim, RatC c) {
    PolyObservable p(dim);
    p.add_term(std::vector<int>(dim, 0), c);
    return p;
}

PolyObservable PolyObservable::variable(int dim, int axis) {
    if (axis < 0 || axis >= dim) throw ConfigError("variable: axis out of range");
    PolyObservable p(dim);
    std::vector<int> e(dim, 0);
    e[axis] = 1;
    p.add_term(e, RatC(1));
    return p;
}

PolyObservable& PolyObservable::add_term(const std::vector<int>& expo, RatC c) {
    if (int(expo.size()) != dim) throw ConfigError("add_term: exponent arity mismatch");
    auto it = terms.find(expo);
    if (it == terms.end()) {
        if (!c.is_zero()) terms.emplace(expo, c);
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) terms.erase(it);
    }
    return *this;
}

PolyObservable PolyObservable::operator+(const PolyObservable& q) const {
    if (dim != q.dim) throw ConfigError("poly add: dimension mismatch");
    PolyObservable r = *this;
    for (const auto& [e, c] : q.terms) r.add_term(e, c);
    return r;
}

PolyObservable PolyObservable::operator-(const PolyObservable& q) const {
    if (dim != q.dim) throw ConfigError("poly sub: dimension mismatch");
    PolyObservable r = *this;
    for (const auto& [e, c] : q.terms) r.add_term(e, -c);
    return r;
}

PolyObservable PolyObservable::operator*(const PolyObservable& q) const {
    if (dim != q.dim) throw ConfigError("poly mul: dimension mismatch");
    PolyObservable r(dim);
    std::vector<int> e(dim);
    for (const auto& [ea, ca] : terms)
        for (const auto& [eb, cb] : q.terms) {
            for (int i = 0; i < dim; ++i) e[i] = ea[i] + eb[i];
            r.add_term(e, ca * cb);
        }
    return r;
}

PolyObservable PolyObservable::operator*(RatC c) const {
    PolyObservable r(dim);
    if (c.is_zero()) return r;
    for (const auto& [e, co] : terms) r.terms.emplace(e, co * c);
    return r;
}

PolyObservable PolyObservable::derivative(int axis) const {
    if (axis < 0 || axis >= dim) throw ConfigError("derivative: axis out of range");
    PolyObservable r(dim);
    for (const auto& [e, c] : terms) {
        if (e[axis] == 0) continue;
        std::vector<int> d = e;
        d[axis] -= 1;
        r.add_term(d, c * RatC(Rational(e[axis])));
    }
    return r;
}

cplx PolyObservable::eval(const VectorXd& x) const {
    if (x.size() != dim) throw ConfigError("poly eval: point dimension mismatch");
    cplx acc(0.0);
    for (const auto& [e, c] : terms) {
        double mono = 1.0;
        for (int i = 0; i < dim; ++i)
            for (int k = 0; k < e[i]; ++k) mono *= x[i];
        acc += c.value() * mono;
    }
    return acc;
}

double PolyObservable::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [e, c] : terms) m = std::max(m, std::abs(c.value()));
    return m;
}

// ---------------------------------------------------------------------------
// Differential operators in normal form

DiffOp DiffOp::identity(int dim) {
    DiffOp d(dim);
    d.add_term(std::vector<int>(dim, 0), PolyObservable::constant(dim, RatC(1)));
    return d;
}

DiffOp& DiffOp::add_term(const std::vector<int>& deriv, const PolyObservable& coeff) {
    if (int(deriv.size()) != dim || coeff.dim != dim)
        throw ConfigError("diffop add_term: arity mismatch");
    auto it = terms.find(deriv);
    if (it == terms.end()) {
        if (!coeff.is_zero()) terms.emplace(deriv, coeff);
    } else {
        it->second = it->second + coeff;
        if (it->second.is_zero()) terms.erase(it);
    }
    return *this;
}

DiffOp DiffOp::operator+(const DiffOp& b) const {
    if (dim != b.dim) throw ConfigError("diffop add: dimension mismatch");
    DiffOp r = *this;
    for (const auto& [d, c] : b.terms) r.add_term(d, c);
    return r;
}

DiffOp DiffOp::operator-(const DiffOp& b) const {
    if (dim != b.dim) throw ConfigError("diffop sub: dimension mismatch");
    DiffOp r = *this;
    for (const auto& [d, c] : b.terms) r.add_term(d, c * RatC(-1));
    return r;
}

DiffOp DiffOp::operator*(RatC c) const {
    DiffOp r(dim);
    if (c.is_zero()) return r;
    for (const auto& [d, co] : terms) r.terms.emplace(d, co * c);
    return r;
}

PolyObservable DiffOp::apply(const PolyObservable& u) const {
    if (dim != u.dim) throw ConfigError("diffop apply: dimension mismatch");
    PolyObservable out(dim);
    for (const auto& [d, c] : terms) {
        PolyObservable w = u;
        for (int ax = 0; ax < dim && !w.is_zero(); ++ax)
            for (int k = 0; k < d[ax]; ++k) w = w.derivative(ax);
        if (!w.is_zero()) out = out + c * w;
    }
    return out;
}

namespace {

// Iterate gamma <= alpha componentwise (inclusive), calling f(gamma).
template <typename F>
void for_each_subindex(const std::vector<int>& alpha, F&& f) {
    std::vector<int> g(alpha.size(), 0);
    while (true) {
        f(g);
        int ax = 0;
        while (ax < int(alpha.size())) {
            if (g[ax] < alpha[ax]) {
                ++g[ax];
                break;
            }
            g[ax] = 0;
            ++ax;
        }
        if (ax == int(alpha.size())) return;
    }
}

Rational binomial(int n, int k) {
    Rational r(1);
    for (int j = 1; j <= k; ++j) r = r * Rational(n - k + j, j);
    return r;
}

} // namespace

DiffOp DiffOp::compose(const DiffOp& rhs) const {
    if (dim != rhs.dim) throw ConfigError("diffop compose: dimension mismatch");
    DiffOp out(dim);
    std::vector<int> total(dim);
    for (const auto& [alpha, f] : terms) {
        for (const auto& [beta, g] : rhs.terms) {
            // d^alpha (g d^beta .) = sum_{gamma <= alpha} binom(alpha, gamma)
            //                        (d^gamma g) d^{alpha - gamma + beta}
            for_each_subindex(alpha, [&](const std::vector<int>& gamma) {
                PolyObservable dg = g;
                Rational b(1);
                for (int ax = 0; ax < dim; ++ax) {
                    b = b * binomial(alpha[ax], gamma[ax]);
                    for (int k = 0; k < gamma[ax] && !dg.is_zero(); ++k)
                        dg = dg.derivative(ax);
                }
                if (dg.is_zero()) return;
                for (int ax = 0; ax < dim; ++ax)
                    total[ax] = alpha[ax] - gamma[ax] + beta[ax];
                out.add_term(total, f * dg * RatC(b));
            });
        }
    }
    return out;
}

bool DiffOp::is_zero() const { return terms.empty(); }

// ---------------------------------------------------------------------------
// Operator series

FormalSeries::FormalSeries(int dim, int K) : order(K) {
    if (K < 0) throw ConfigError("formal series: negative order");
    coeff.assign(K + 1, DiffOp(dim));
}

ObservableSeries FormalSeries::apply(const PolyObservable& u) const {
    ObservableSeries out;
    out.reserve(order + 1);
    for (int k = 0; k <= order; ++k) out.push_back(coeff[k].apply(u));
    return out;
}

ObservableSeries FormalSeries::apply(const ObservableSeries& u) const {
    const int dim = coeff.empty() ? 0 : coeff[0].dim;
    ObservableSeries out(order + 1, PolyObservable(dim));
    for (int k = 0; k <= order; ++k)
        for (int m = 0; m + k <= order; ++m) {
            if (m >= int(u.size())) break;
            out[k + m] = out[k + m] + coeff[k].apply(u[m]);
        }
    return out;
}

FormalSeries FormalSeries::compose(const FormalSeries& rhs) const {
    const int dim = coeff.empty() ? 0 : coeff[0].dim;
    const int K = std::min(order, rhs.order);
    FormalSeries out(dim, K);
    for (int j = 0; j <= K; ++j)
        for (int m = 0; j + m <= K; ++m)
            out.coeff[j + m] = out.coeff[j + m] + coeff[j].compose(rhs.coeff[m]);
    return out;
}

FormalSeries FormalSeries::inverse() const {
    const int dim = coeff.empty() ? 0 : coeff[0].dim;
    const DiffOp id = DiffOp::identity(dim);
    if (coeff.empty() || !(coeff[0] - id).is_zero())
        throw ConfigError("series inverse: order-0 coefficient is not the identity");
    FormalSeries out(dim, order);
    out.coeff[0] = id;
    for (int k = 1; k <= order; ++k) {
        DiffOp acc(dim);
        for (int j = 1; j <= k; ++j)
            acc = acc + coeff[j].compose(out.coeff[k - j]);
        out.coeff[k] = acc * RatC(-1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Formal Moyal product

namespace {

struct PoissonPair {
    int i, j;
    Rational w; // {x_i, x_j} = w
};

std::vector<PoissonPair> poisson_pairs(int dim, const Rational& v_weight) {
    if (dim < 2 || dim % 2 != 0)
        throw ConfigError("poisson pairs: dimension must be even and >= 2");
    std::vector<PoissonPair> pairs;
    pairs.push_back({0, dim - 1, Rational(1)});
    const int n = (dim - 2) / 2;
    for (int i = 0; i < n; ++i) pairs.push_back({1 + i, 1 + n + i, v_weight});
    return pairs;
}

// k-fold Lambda contraction: sum over chains of pair derivatives, without the
// (i/2)^k / k! prefactor.
PolyObservable moyal_contraction(const PolyObservable& u, const PolyObservable& v,
                                 int k, const std::vector<PoissonPair>& pairs) {
    struct Piece {
        PolyObservable u, v;
    };
    std::vector<Piece> state = {{u, v}};
    for (int step = 0; step < k; ++step) {
        std::vector<Piece> next;
        next.reserve(state.size() * 2 * pairs.size());
        for (const Piece& p : state) {
            for (const PoissonPair& pp : pairs) {
                Piece a{p.u.derivative(pp.i) * RatC(pp.w), p.v.derivative(pp.j)};
                if (!a.u.is_zero() && !a.v.is_zero()) next.push_back(std::move(a));
                Piece b{p.u.derivative(pp.j) * RatC(-pp.w), p.v.derivative(pp.i)};
                if (!b.u.is_zero() && !b.v.is_zero()) next.push_back(std::move(b));
            }
        }
        state = std::move(next);
        if (state.empty()) break;
    }
    PolyObservable out(u.dim);
    for (const Piece& p : state) out = out + p.u * p.v;
    return out;
}

RatC moyal_prefactor(int k) {
    // (i/2)^k / k!
    static const RatC icycle[4] = {RatC(1), RatC::i(), RatC(-1), RatC(Rational(0), Rational(-1))};
    long long scale = 1;
    for (int j = 1; j <= k; ++j) scale *= 2 * j; // 2^k k!
    return icycle[k % 4] * RatC(Rational(1, scale));
}

} // namespace

PolyObservable poisson_bracket(const PolyObservable& u, const PolyObservable& v,
                               const Rational& v_pair_weight) {
    return moyal_contraction(u, v, 1, poisson_pairs(u.dim, v_pair_weight));
}

ObservableSeries moyal_formal(const PolyObservable& u, const PolyObservable& v,
                              int K, const Rational& v_pair_weight) {
    if (u.dim != v.dim) throw ConfigError("moyal_formal: dimension mismatch");
    if (K < 0) throw ConfigError("moyal_formal: negative order");
    const auto pairs = poisson_pairs(u.dim, v_pair_weight);
    ObservableSeries out;
    out.reserve(K + 1);
    for (int k = 0; k <= K; ++k)
        out.push_back(moyal_contraction(u, v, k, pairs) * moyal_prefactor(k));
    return out;
}

ObservableSeries moyal_formal(const ObservableSeries& u, const ObservableSeries& v,
                              int K, const Rational& v_pair_weight) {
    if (u.empty() || v.empty()) throw ConfigError("moyal_formal: empty series");
    const int dim = u[0].dim;
    const auto pairs = poisson_pairs(dim, v_pair_weight);
    ObservableSeries out(K + 1, PolyObservable(dim));
    for (int k1 = 0; k1 <= K && k1 < int(u.size()); ++k1)
        for (int k2 = 0; k1 + k2 <= K && k2 < int(v.size()); ++k2)
            for (int k3 = 0; k1 + k2 + k3 <= K; ++k3) {
                const PolyObservable term =
                    moyal_contraction(u[k1], v[k2], k3, pairs) * moyal_prefactor(k3);
                out[k1 + k2 + k3] = out[k1 + k2 + k3] + term;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Formal expansion of the inverse transport

namespace {

// Truncated theta-series whose coefficients are polynomials in the single
// variable xi (PolyObservable with dim 1); entry k multiplies theta^k.
using ThetaSeries = std::vector<PolyObservable>;

ThetaSeries ts_zero(int K) { return ThetaSeries(K + 1, PolyObservable(1)); }

ThetaSeries ts_mul(const ThetaSeries& a, const ThetaSeries& b, int K) {
    ThetaSeries out = ts_zero(K);
    for (int i = 0; i <= K; ++i)
        for (int j = 0; i + j <= K; ++j)
            out[i + j] = out[i + j] + a[i] * b[j];
    return out;
}

PolyObservable xi_monomial(int power, Rational c) {
    PolyObservable p(1);
    p.add_term({power}, RatC(c));
    return p;
}

long long factorial_ll(int n) {
    long long f = 1;
    for (int j = 2; j <= n; ++j) f *= j;
    return f;
}

} // namespace

FormalSeries expand_T_inverse(int n, int K) {
    if (n < 0) throw ConfigError("expand_T_inverse: n must be >= 0");
    if (K < 0 || K > 8) throw ConfigError("expand_T_inverse: order must be in [0, 8]");
    const int dim = 2 + 2 * n;

    // xi-shift amplitude h = sinh(2 theta xi)/(2 theta) - xi and the
    // log of the v-contraction factor g = -log cosh(theta xi); both are even
    // series in theta, which is what kills the odd orders.
    ThetaSeries h = ts_zero(K);
    for (int m = 1; 2 * m <= K; ++m) {
        long long pow4 = 1;
        for (int j = 0; j < m; ++j) pow4 *= 4;
        h[2 * m] = xi_monomial(2 * m + 1, Rational(pow4, factorial_ll(2 * m + 1)));
    }
    ThetaSeries y = ts_zero(K); // cosh(theta xi) - 1
    for (int m = 1; 2 * m <= K; ++m)
        y[2 * m] = xi_monomial(2 * m, Rational(1, factorial_ll(2 * m)));
    ThetaSeries g = ts_zero(K); // -log(1 + y)
    {
        ThetaSeries ypow = y;
        for (int j = 1; 2 * j <= K; ++j) {
            const Rational c = Rational(j % 2 == 0 ? 1 : -1, j);
            for (int k = 0; k <= K; ++k) g[k] = g[k] + ypow[k] * RatC(c);
            if (2 * (j + 1) <= K) ypow = ts_mul(ypow, y, K);
        }
    }

    // Euler operator v . d_v and its powers.
    std::vector<DiffOp> euler_pow;
    euler_pow.push_back(DiffOp::identity(dim));
    {
        DiffOp euler(dim);
        for (int i = 0; i < 2 * n; ++i) {
            std::vector<int> d(dim, 0);
            d[1 + i] = 1;
            euler.add_term(d, PolyObservable::variable(dim, 1 + i));
        }
        for (int q = 1; 2 * q <= K; ++q)
            euler_pow.push_back(euler_pow.back().compose(euler));
    }

    const RatC ipow[4] = {RatC(1), RatC(Rational(0), Rational(-1)), RatC(-1), RatC::i()};

    FormalSeries out(dim, K);
    ThetaSeries hp = ts_zero(K);
    hp[0] = PolyObservable::constant(1, RatC(1)); // h^p / p!, starting at p = 0
    for (int p = 0; 2 * p <= K; ++p) {
        if (p > 0) {
            hp = ts_mul(hp, h, K);
            for (int k = 0; k <= K; ++k) hp[k] = hp[k] * RatC(Rational(1, p));
        }
        ThetaSeries hg = hp; // h^p/p! * g^q/q!, starting at q = 0
        for (int q = 0; 2 * (p + q) <= K; ++q) {
            if (q > 0) {
                hg = ts_mul(hg, g, K);
                for (int k = 0; k <= K; ++k) hg[k] = hg[k] * RatC(Rational(1, q));
            }
            // Dictionary: coefficient xi^j d_xi^p X^q on the transform side
            // becomes (-i)^{j+p} d_l^j o M_{l^p} o X^q on position data.
            for (int k = 0; k <= K; ++k) {
                if (hg[k].is_zero()) continue;
                for (const auto& [expo, c] : hg[k].terms) {
                    const int j = expo[0];
                    // M_{l^p} o X^q first: multiply the Euler power's
                    // coefficients by l^p.
                    PolyObservable lp(dim);
                    std::vector<int> le(dim, 0);
                    le[dim - 1] = p;
                    lp.add_term(le, RatC(1));
                    DiffOp inner(dim);
                    for (const auto& [dv, co] : euler_pow[q].terms)
                        inner.add_term(dv, co * lp);
                    // Then d_l^j on the left.
                    DiffOp dl(dim);
                    std::vector<int> dle(dim, 0);
                    dle[dim - 1] = j;
                    dl.add_term(dle, PolyObservable::constant(dim, RatC(1)));
                    out.coeff[k] =
                        out.coeff[k] + dl.compose(inner) * (c * ipow[(j + p) % 4]);
                }
            }
        }
    }
    return out;
}

ObservableSeries formal_transported_product(const PolyObservable& u,
                                            const PolyObservable& v,
                                            const FormalSeries& equivalence,
                                            int K,
                                            const Rational& v_pair_weight) {
    if (equivalence.order < K)
        throw ConfigError("formal_transported_product: equivalence series too short");
    const FormalSeries forward = equivalence.inverse(); // checks identity head
    const ObservableSeries tu = equivalence.apply(u);
    const ObservableSeries tv = equivalence.apply(v);
    const ObservableSeries prod = moyal_formal(tu, tv, K, v_pair_weight);
    ObservableSeries out = forward.apply(prod);
    out.resize(K + 1, PolyObservable(u.dim));
    return out;
}

// ---------------------------------------------------------------------------
// Numeric Weyl product

namespace {

struct NumPair {
    int i, j;
    double w;
};

std::vector<NumPair> numeric_pairs(int dim, double v_weight) {
    if (dim < 2 || dim % 2 != 0)
        throw ConfigError("moyal_numeric: need an even dimension >= 2");
    if (!(v_weight > 0.0) || !std::isfinite(v_weight))
        throw ConfigError("moyal_numeric: v_pair_weight must be positive");
    std::vector<NumPair> pairs;
    pairs.push_back({0, dim - 1, 1.0});
    const int n = (dim - 2) / 2;
    for (int i = 0; i < n; ++i) pairs.push_back({1 + i, 1 + n + i, v_weight});
    return pairs;
}

double spectrum_boundary_mass(const FullSpectrum& s) {
    const GridSpec& spec = s.position_spec;
    double shell = 0.0, all = 0.0;
    std::vector<int> idx(spec.ndim());
    for (std::int64_t i = 0; i < s.size(); ++i) {
        spec.unravel(i, idx);
        const double m = std::abs(s.values[i]);
        all = std::max(all, m);
        for (int d = 0; d < spec.ndim(); ++d)
            if (idx[d] == 0 || idx[d] == spec.axes[d].points - 1) {
                shell = std::max(shell, m);
                break;
            }
    }
    return all > 0.0 ? shell / all : 0.0;
}

// Direct twisted convolution over the frequency lattice, any n. Phase tables
// per Poisson pair keep the inner loop to table lookups.
std::vector<cplx> twisted_convolution_direct(const FullSpectrum& uh,
                                             const FullSpectrum& vh,
                                             double theta,
                                             const std::vector<NumPair>& pairs) {
    const GridSpec& spec = uh.position_spec;
    const int d = spec.ndim();
    std::vector<int> npts(d), stride(d);
    for (int ax = 0; ax < d; ++ax) npts[ax] = spec.axes[ax].points;
    stride[d - 1] = 1;
    for (int ax = d - 2; ax >= 0; --ax) stride[ax] = stride[ax + 1] * npts[ax + 1];

    // For pair (i, j, w): factor exp(-i theta w / 2 * P_i K_j) attaches to
    // axis i (rows P_i, cols K_j) and exp(+i theta w / 2 * P_j K_i) to axis j.
    std::vector<MatrixXc> factor(d);
    for (const NumPair& pp : pairs) {
        const double s = 0.5 * theta * pp.w;
        factor[pp.i] = MatrixXc(npts[pp.i], npts[pp.j]);
        for (int p = 0; p < npts[pp.i]; ++p)
            for (int k = 0; k < npts[pp.j]; ++k)
                factor[pp.i](p, k) =
                    std::polar(1.0, -s * uh.freq(pp.i, p) * uh.freq(pp.j, k));
        factor[pp.j] = MatrixXc(npts[pp.j], npts[pp.i]);
        for (int p = 0; p < npts[pp.j]; ++p)
            for (int k = 0; k < npts[pp.i]; ++k)
                factor[pp.j](p, k) =
                    std::polar(1.0, s * uh.freq(pp.j, p) * uh.freq(pp.i, k));
    }
    // factor[ax] columns are indexed by the PARTNER axis' output index.
    std::vector<int> partner(d);
    for (const NumPair& pp : pairs) {
        partner[pp.i] = pp.j;
        partner[pp.j] = pp.i;
    }

    std::vector<cplx> out(uh.size(), cplx(0.0));
    std::vector<int> kidx(d);
    // Recursive descent over the P lattice with running phase, u offset and
    // v offset; axis-local validity of the v index prunes subtrees.
    const cplx* up = uh.values.data();
    const cplx* vp = vh.values.data();
    for (std::int64_t K = 0; K < std::int64_t(out.size()); ++K) {
        spec.unravel(K, kidx);
        std::vector<const cplx*> fcol(d);
        for (int ax = 0; ax < d; ++ax)
            fcol[ax] = factor[ax].data() + std::int64_t(kidx[partner[ax]]) * npts[ax];
        cplx acc(0.0);
        // Manual stack instead of recursion: walk axes 0..d-2, innermost loop
        // over axis d-1.
        std::vector<int> p(d, 0);
        std::vector<cplx> pref(d + 1);
        pref[0] = cplx(1.0);
        std::vector<std::int64_t> uoff(d + 1, 0), voff(d + 1, 0);
        int ax = 0;
        while (ax >= 0) {
            if (ax == d - 1) {
                const int kl = kidx[d - 1], nl = npts[d - 1];
                const cplx base = pref[ax];
                const std::int64_t ub = uoff[ax], vb = voff[ax];
                const cplx* fl = fcol[d - 1];
                // v index along the last axis: kl - pl + nl/2 in [0, nl)
                const int plo = std::max(0, kl - nl / 2);
                const int phi = std::min(nl - 1, kl + nl / 2);
                for (int pl = plo; pl <= phi; ++pl) {
                    const int vl = kl - pl + nl / 2;
                    if (vl < 0 || vl >= nl) continue;
                    acc += base * fl[pl] * up[ub + pl] * vp[vb + vl];
                }
                --ax;
                continue;
            }
            if (p[ax] >= npts[ax]) {
                p[ax] = 0;
                --ax;
                continue;
            }
            const int pv = kidx[ax] - p[ax] + npts[ax] / 2;
            if (pv < 0 || pv >= npts[ax]) {
                ++p[ax];
                continue;
            }
            pref[ax + 1] = pref[ax] * fcol[ax][p[ax]];
            uoff[ax + 1] = uoff[ax] + std::int64_t(p[ax]) * stride[ax];
            voff[ax + 1] = voff[ax] + std::int64_t(pv) * stride[ax];
            ++p[ax];
            ++ax;
        }
        out[K] = acc;
    }
    return out;
}

// n = 0 fast path: for each output l-frequency, the P_a sum is a modulated
// linear convolution along the a-frequency axis, batched over P_l rows with
// padded FFTs; the remaining P_l sum is a phased row reduction.
std::vector<cplx> twisted_convolution_fast2d(const FullSpectrum& uh,
                                             const FullSpectrum& vh,
                                             double theta) {
    const GridSpec& spec = uh.position_spec;
    const int na = spec.axes[0].points, nl = spec.axes[1].points;
    const int M = 2 * na;

    std::vector<double> pa(na), pl(nl);
    for (int i = 0; i < na; ++i) pa[i] = uh.freq(0, i);
    for (int m = 0; m < nl; ++m) pl[m] = uh.freq(1, m);

    // Padded spectra of the v columns (fixed l-frequency), stored as rows.
    std::vector<cplx> vf(std::int64_t(nl) * M, cplx(0.0));
    for (int m = 0; m < nl; ++m)
        for (int i = 0; i < na; ++i) vf[std::int64_t(m) * M + i] = vh.values[std::int64_t(i) * nl + m];
    fft_last_axis_raw(vf.data(), nl, M, -1);

    // Output-side phase Phi(i_a, m_p) = exp(+i theta/2 P_l K_a).
    MatrixXc phi(na, nl);
    for (int i = 0; i < na; ++i)
        for (int m = 0; m < nl; ++m)
            phi(i, m) = std::polar(1.0, 0.5 * theta * pl[m] * pa[i]);

    std::vector<cplx> out(uh.size(), cplx(0.0));
    std::vector<cplx> work(std::int64_t(nl) * M);
    for (int ko = 0; ko < nl; ++ko) {
        // Rows = P_l index, modulated u columns padded to length M.
        std::fill(work.begin(), work.end(), cplx(0.0));
        for (int i = 0; i < na; ++i) {
            const cplx mod = std::polar(1.0, -0.5 * theta * pa[i] * pl[ko]);
            const cplx* urow = uh.values.data() + std::int64_t(i) * nl;
            for (int m = 0; m < nl; ++m) work[std::int64_t(m) * M + i] = urow[m] * mod;
        }
        fft_last_axis_raw(work.data(), nl, M, -1);
        for (int m = 0; m < nl; ++m) {
            const int kv = ko - m + nl / 2;
            cplx* row = work.data() + std::int64_t(m) * M;
            if (kv < 0 || kv >= nl) {
                std::fill(row, row + M, cplx(0.0));
                continue;
            }
            const cplx* vrow = vf.data() + std::int64_t(kv) * M;
            for (int r = 0; r < M; ++r) row[r] *= vrow[r];
        }
        fft_last_axis_raw(work.data(), nl, M, +1);
        const double scale = 1.0 / M;
        for (int i = 0; i < na; ++i) {
            cplx acc(0.0);
            for (int m = 0; m < nl; ++m)
                acc += phi(i, m) * work[std::int64_t(m) * M + (i + na / 2)];
            out[std::int64_t(i) * nl + ko] = acc * scale;
        }
    }
    return out;
}

} // namespace

GridFunction moyal_numeric(const GridFunction& u, const GridFunction& v,
                           double theta, const MoyalOptions& opts) {
    if (u.tag != SpaceTag::POSITION || v.tag != SpaceTag::POSITION)
        throw WrongSpaceTag("moyal_numeric expects position-space data");
    if (!u.spec.same_shape(v.spec)) throw GridMismatch("moyal_numeric: grids differ");
    const int d = u.spec.ndim();
    if (d < 2 || d % 2 != 0)
        throw ConfigError("moyal_numeric: need an even dimension >= 2");
    if (!(theta != 0.0) || !std::isfinite(theta))
        throw ConfigError("moyal_numeric: theta must be finite and nonzero");
    const auto pairs = numeric_pairs(d, opts.v_pair_weight);

    std::vector<int> all_axes(d);
    std::iota(all_axes.begin(), all_axes.end(), 0);
    if (boundary_mass(u, all_axes) > opts.boundary_tol ||
        boundary_mass(v, all_axes) > opts.boundary_tol)
        throw BoundaryMassError("moyal_numeric: data not windowed at the boundary");

    const FullSpectrum uh = full_fourier(u);
    const FullSpectrum vh = full_fourier(v);
    if (spectrum_boundary_mass(uh) > opts.boundary_tol ||
        spectrum_boundary_mass(vh) > opts.boundary_tol)
        throw BoundaryMassError("moyal_numeric: spectrum not windowed at the band edge");

    std::vector<cplx> twisted;
    if (d == 2 && !opts.force_direct) {
        twisted = twisted_convolution_fast2d(uh, vh, theta);
    } else {
        twisted = twisted_convolution_direct(uh, vh, theta, pairs);
    }

    // Riemann measure of the P sum and the (2 pi)^{-d} of the inverse pair.
    double scale = 1.0;
    for (int ax = 0; ax < d; ++ax) scale *= uh.freq_step(ax) / (2.0 * M_PI);
    FullSpectrum wh;
    wh.position_spec = u.spec;
    wh.values = std::move(twisted);
    for (cplx& z : wh.values) z *= scale;
    return full_fourier_inv(wh);
}

} // namespace solvq
