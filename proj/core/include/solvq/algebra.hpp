#pragma once

#include <optional>
#include <string>
#include <vector>

#include "solvq/types.hpp"

namespace solvq {

// Finite-dimensional real Lie algebra in a fixed basis.
struct LieAlgebraData {
    int dim = 0;
    std::vector<std::string> basis_labels;
    // c(k,i,j) with [e_i, e_j] = sum_k c(k,i,j) e_k, stored (k*dim + i)*dim + j.
    std::vector<double> structure_constants;
    std::optional<MatrixXd> involution;
    // Antisymmetric bilinear form whose radical contains the +1 eigenspace of
    // the involution.
    std::optional<MatrixXd> cocycle;

    double c(int k, int i, int j) const {
        return structure_constants[(static_cast<std::size_t>(k) * dim + i) * dim + j];
    }
    double& c(int k, int i, int j) {
        return structure_constants[(static_cast<std::size_t>(k) * dim + i) * dim + j];
    }

    VectorXd bracket(const VectorXd& x, const VectorXd& y) const;
    MatrixXd ad(const VectorXd& x) const;

    double antisymmetry_residual() const;
    double jacobi_residual() const;
    // max |sigma[x,y] - [sigma x, sigma y]| over basis pairs; requires involution.
    double involution_automorphism_residual() const;
};

// Transvection algebra: one-dimensional split extension of two commuting
// Heisenberg copies, dim 4n+3, basis (H, f_1..f_2n, E1, g_1..g_2n, E2), with
// the flip involution and the invariant cocycle (radical = fixed space).
LieAlgebraData build_transvection_algebra(const SpaceParams& params);

// Solvable normal form s: basis (H, e_1..e_2n, E), [H,v] = v, [H,E] = 2E,
// [v,w] = Omega(v,w) E.
LieAlgebraData build_solvable_algebra(const SpaceParams& params);

struct SymmetricTripleReport {
    int dim_k = 0;
    int dim_p = 0;
    int rank_pp = 0; // rank of the span of [p, p]
    bool pp_spans_k = false;
    double pp_in_k_residual = 0.0;
    double involution_square_residual = 0.0;
    double automorphism_residual = 0.0;
    double ik_contraction_residual = 0.0;
    double cocycle_identity_residual = 0.0;
    double p_restriction_min_singular = 0.0;
    bool nondegenerate_on_p = false;

    bool passed(double tol = 1e-12) const {
        return involution_square_residual < tol && automorphism_residual < tol &&
               pp_spans_k && pp_in_k_residual < tol && ik_contraction_residual < tol &&
               cocycle_identity_residual < tol && nondegenerate_on_p;
    }
};

// Verifies the symmetric-couple and cocycle axioms of an algebra carrying an
// involution and a cocycle.  Throws MissingInvolution / ConfigError when the
// optional data is absent.
SymmetricTripleReport check_symmetric_triple(const LieAlgebraData& alg);

// Chevalley differentials with trivial coefficients, as matrices in the
// lexicographic pair/triple bases:
//   delta1: xi |-> ((x,y) -> -xi([x,y]))
//   delta2: c  |-> ((x,y,z) -> -c([x,y],z) + c([x,z],y) - c([y,z],x))
MatrixXd chevalley_delta1(const LieAlgebraData& alg);
MatrixXd chevalley_delta2(const LieAlgebraData& alg);

// dim B^2 = rank of delta1.
int coboundary_two_dimension(const LieAlgebraData& alg);

struct InvariantBivectors {
    int dimension = 0;
    // Columns span the invariants; rows indexed by lexicographic pairs (i<j)
    // of left-invariant frame indices.
    MatrixXd basis;
};

// Bivectors constant in the left-invariant frame whose Lie derivative along
// every stabilizer fundamental field vanishes at `samples` random points.
// Dimension decided by a singular-value gap at tol (ratio >= 10, else
// RankAmbiguous).
InvariantBivectors invariant_two_vectors(const SpaceParams& params, int samples, double tol);

// Dimension of (invariant 2-cocycles of s) modulo coboundaries, the
// invariance filter sampled as above.
int invariant_h2_dimension(const SpaceParams& params, int samples, double tol);

} // namespace solvq
