#include "solvq/cochains.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "solvq/errors.hpp"
#include "solvq/geometry.hpp"
#include "solvq/util.hpp"

namespace solvq {

cplx Cochain::operator()(const std::vector<Point>& xs) const {
    if (arity < 1) throw ConfigError("cochain arity must be >= 1");
    if (static_cast<int>(xs.size()) != arity)
        throw ConfigError("cochain called with " + std::to_string(xs.size()) +
                          " points, arity is " + std::to_string(arity));
    return eval(xs);
}

Cochain coboundary(const Cochain& c) {
    Cochain out;
    out.arity = c.arity + 1;
    // Deletion commutes with the diagonal action and with leafwise
    // translation, so both flags survive.
    out.invariant = c.invariant;
    out.leafwise_constant = c.leafwise_constant;
    out.eval = [c](const std::vector<Point>& xs) {
        cplx acc = 0.0;
        std::vector<Point> reduced(xs.size() - 1);
        double sign = 1.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            std::size_t k = 0;
            for (std::size_t i = 0; i < xs.size(); ++i)
                if (i != j) reduced[k++] = xs[i];
            acc += sign * c(reduced);
            sign = -sign;
        }
        return acc;
    };
    return out;
}

Cochain sigma12(const Cochain& c) {
    if (c.arity == 1) return c;
    Cochain out = c;
    out.eval = [c](const std::vector<Point>& xs) {
        std::vector<Point> swapped = xs;
        std::swap(swapped[0], swapped[1]);
        return c(swapped);
    };
    return out;
}

Cochain coboundary_op(const Cochain& c) {
    Cochain out = sigma12(coboundary(sigma12(c)));
    auto inner = out.eval;
    out.eval = [inner](const std::vector<Point>& xs) { return -inner(xs); };
    return out;
}

Cochain two_point_from_profile(Profile g) {
    Cochain c;
    c.arity = 2;
    c.leafwise_constant = true;
    c.eval = [g = std::move(g)](const std::vector<Point>& xs) {
        return g(xs[0].a - xs[1].a);
    };
    return c;
}

Profile profile_from_two_point(const Cochain& c, const SpaceParams& params) {
    if (c.arity != 2) throw ConfigError("profile extraction needs a two-point cochain");
    return [c, params](double t) {
        Point x0 = Point::origin(params);
        x0.a = t;
        return c({x0, Point::origin(params)});
    };
}

Cochain multiplier_three_point(Profile g) {
    Cochain c;
    c.arity = 3;
    c.leafwise_constant = true;
    c.eval = [g = std::move(g)](const std::vector<Point>& xs) {
        const double a0 = xs[0].a, a1 = xs[1].a, a2 = xs[2].a;
        return g(a1 - a2) - g(a0 - a2) - g(a1 - a0);
    };
    return c;
}

AdmissibilityReport admissibility_check(const Cochain& S, const SpaceParams& params,
                                        int samples, std::uint64_t seed, double skew_tol) {
    if (S.arity != 3) throw ConfigError("admissibility is a three-point property");
    if (samples < 1) throw ConfigError("admissibility_check needs samples >= 1");

    Rng rng(seed);
    auto draw = [&] {
        Point p;
        p.a = rng.uniform(-1.5, 1.5);
        p.v = rng.uniform_vector(params.dim_V(), -1.5, 1.5);
        p.l = rng.uniform(-1.5, 1.5);
        return p;
    };

    AdmissibilityReport rep;
    rep.samples = samples;

    // Odd permutations of three slots; even ones follow from pairs of these.
    constexpr std::array<std::array<int, 3>, 3> odd = {{{1, 0, 2}, {0, 2, 1}, {2, 1, 0}}};
    for (int t = 0; t < samples; ++t) {
        const Point x = draw(), y = draw(), z = draw();
        const std::vector<Point> xs = {x, y, z};
        const cplx base = S(xs);
        for (const auto& p : odd) {
            const cplx val = S({xs[p[0]], xs[p[1]], xs[p[2]]});
            rep.skew_residual = std::max(rep.skew_residual, std::abs(val + base));
        }
        if (rep.skew_residual > skew_tol)
            throw NotSkewsymmetric("total skewness defect " +
                                   std::to_string(rep.skew_residual) + " beyond tolerance");

        const cplx refl = S({x, symmetry(x, y, params), z});
        rep.reflection_residual = std::max(rep.reflection_residual, std::abs(refl + base));
    }
    return rep;
}

} // namespace solvq
