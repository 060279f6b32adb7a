#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "solvq/types.hpp"

namespace solvq {

// A q-point function on the space, together with the two structure flags the
// product kernels care about. The operators below act by argument deletion
// and by transposing the first two slots, so plain callables are enough; all
// identities they satisfy are exact and get checked pointwise.
struct Cochain {
    int arity = 1;
    std::function<cplx(const std::vector<Point>&)> eval;
    // Known to be invariant under the diagonal action of the symmetries.
    bool invariant = false;
    // Depends on the a-coordinates only through their differences and not on
    // the fiber coordinates (constant along the horocycle leaves).
    bool leafwise_constant = false;

    cplx operator()(const std::vector<Point>& xs) const;
};

// One-variable profile, the data from which leafwise-constant two-point
// cochains and their three-point expansions are built.
using Profile = std::function<cplx(double)>;

// (delta c)(x0..xq) = sum_j (-1)^j c(.. x_j omitted ..), arity q -> q+1.
Cochain coboundary(const Cochain& c);

// Transposes the first two arguments; identity on one-point cochains.
Cochain sigma12(const Cochain& c);

// delta_op = -sigma12 . delta . sigma12. On one-point cochains this expands
// to +delta (the outer transposition flips the two-point coboundary's sign).
Cochain coboundary_op(const Cochain& c);

// c(x0, x1) = g(a0 - a1).
Cochain two_point_from_profile(Profile g);

// Recovers the profile of a leafwise-constant two-point cochain by evaluating
// along a canonical transversal to the leaves.
Profile profile_from_two_point(const Cochain& c, const SpaceParams& params);

// Three-point expansion of a multiplier profile:
//
//   g(a1 - a2) - g(a0 - a2) - g(a1 - a0),
//
// the closed form of delta_op(sigma12 c) for c(x0, x1) = g(a0 - a1); the
// sigma12 inside delta_op cancels the explicit one, leaving -sigma12(delta c).
// Exp of the output is the ratio P(a1 - a2) / (P(a0 - a2) P(a1 - a0)) with
// P = e^g.
Cochain multiplier_three_point(Profile g);

struct AdmissibilityReport {
    double skew_residual = 0.0;        // worst total-skewness defect seen
    double reflection_residual = 0.0;  // worst |S(x, s_x y, z) + S(x, y, z)|
    int samples = 0;

    bool passed(double tol) const { return reflection_residual < tol; }
};

// Checks S(x, s_x y, z) = -S(x, y, z) on random samples. Total skewness of S
// is a precondition: it is probed on the same samples and a defect beyond
// skew_tol throws NotSkewsymmetric.
AdmissibilityReport admissibility_check(const Cochain& S, const SpaceParams& params,
                                        int samples, std::uint64_t seed,
                                        double skew_tol = 1e-9);

} // namespace solvq
