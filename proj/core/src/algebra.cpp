#include "solvq/algebra.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "solvq/errors.hpp"
#include "solvq/geometry.hpp"
#include "solvq/util.hpp"

namespace solvq {

VectorXd LieAlgebraData::bracket(const VectorXd& x, const VectorXd& y) const {
    VectorXd out = VectorXd::Zero(dim);
    for (int k = 0; k < dim; ++k) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            if (x(i) == 0.0) continue;
            for (int j = 0; j < dim; ++j) s += c(k, i, j) * x(i) * y(j);
        }
        out(k) = s;
    }
    return out;
}

MatrixXd LieAlgebraData::ad(const VectorXd& x) const {
    MatrixXd A = MatrixXd::Zero(dim, dim);
    for (int k = 0; k < dim; ++k)
        for (int j = 0; j < dim; ++j) {
            double s = 0.0;
            for (int i = 0; i < dim; ++i) s += c(k, i, j) * x(i);
            A(k, j) = s;
        }
    return A;
}

double LieAlgebraData::antisymmetry_residual() const {
    double r = 0.0;
    for (int k = 0; k < dim; ++k)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) r = std::max(r, std::abs(c(k, i, j) + c(k, j, i)));
    return r;
}

double LieAlgebraData::jacobi_residual() const {
    auto basis_bracket = [&](const VectorXd& w, int t) {
        VectorXd out = VectorXd::Zero(dim);
        for (int k = 0; k < dim; ++k) {
            double s = 0.0;
            for (int i = 0; i < dim; ++i) s += c(k, i, t) * w(i);
            out(k) = s;
        }
        return out;
    };
    double r = 0.0;
    std::vector<std::vector<VectorXd>> brk(dim, std::vector<VectorXd>(dim));
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            brk[i][j] = bracket(VectorXd::Unit(dim, i), VectorXd::Unit(dim, j));
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j)
            for (int k = j + 1; k < dim; ++k) {
                const VectorXd res = basis_bracket(brk[i][j], k) + basis_bracket(brk[j][k], i) +
                                     basis_bracket(brk[k][i], j);
                r = std::max(r, res.cwiseAbs().maxCoeff());
            }
    return r;
}

double LieAlgebraData::involution_automorphism_residual() const {
    if (!involution) throw MissingInvolution("algebra has no involution");
    const MatrixXd& S = *involution;
    double r = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            const VectorXd lhs = S * bracket(VectorXd::Unit(dim, i), VectorXd::Unit(dim, j));
            const VectorXd rhs = bracket(S.col(i), S.col(j));
            r = std::max(r, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    return r;
}

LieAlgebraData build_transvection_algebra(const SpaceParams& params) {
    const int n = params.n;
    const int d = 4 * n + 3;
    const int f0 = 1, e1 = 2 * n + 1, g0 = 2 * n + 2, e2 = 4 * n + 2;
    const MatrixXd Om = standard_omega_V(n);

    LieAlgebraData alg;
    alg.dim = d;
    alg.structure_constants.assign(static_cast<std::size_t>(d) * d * d, 0.0);
    alg.basis_labels.push_back("H");
    for (int i = 1; i <= 2 * n; ++i) alg.basis_labels.push_back("f" + std::to_string(i));
    alg.basis_labels.push_back("E1");
    for (int i = 1; i <= 2 * n; ++i) alg.basis_labels.push_back("g" + std::to_string(i));
    alg.basis_labels.push_back("E2");

    auto set = [&](int k, int i, int j, double val) {
        alg.c(k, i, j) = val;
        alg.c(k, j, i) = -val;
    };
    for (int i = 0; i < 2 * n; ++i) {
        set(f0 + i, 0, f0 + i, 1.0);  // [H, f_i] = f_i
        set(g0 + i, 0, g0 + i, -1.0); // [H, g_i] = -g_i
    }
    set(e1, 0, e1, 2.0);  // [H, E1] = 2 E1
    set(e2, 0, e2, -2.0); // [H, E2] = -2 E2
    for (int i = 0; i < 2 * n; ++i)
        for (int j = i + 1; j < 2 * n; ++j) {
            if (Om(i, j) != 0.0) {
                set(e1, f0 + i, f0 + j, Om(i, j)); // [f_i, f_j] = Omega_ij E1
                set(e2, g0 + i, g0 + j, Om(i, j)); // [g_i, g_j] = Omega_ij E2
            }
        }

    MatrixXd S = MatrixXd::Zero(d, d);
    S(0, 0) = -1.0;
    for (int i = 0; i < 2 * n; ++i) {
        S(g0 + i, f0 + i) = 1.0;
        S(f0 + i, g0 + i) = 1.0;
    }
    S(e2, e1) = 1.0;
    S(e1, e2) = 1.0;
    alg.involution = S;

    // Cocycle: the symplectic form on the -1 eigenspace (basis H, f_i - g_i,
    // E1 - E2) pulled back through the eigenprojection, so its radical is the
    // +1 eigenspace.
    const int dp = 2 * n + 2;
    MatrixXd Pi = MatrixXd::Zero(dp, d);
    Pi(0, 0) = 1.0;
    for (int i = 0; i < 2 * n; ++i) {
        Pi(1 + i, f0 + i) = 0.5;
        Pi(1 + i, g0 + i) = -0.5;
    }
    Pi(dp - 1, e1) = 0.5;
    Pi(dp - 1, e2) = -0.5;
    MatrixXd F = MatrixXd::Zero(dp, dp);
    F(0, dp - 1) = 1.0;
    F(dp - 1, 0) = -1.0;
    if (n > 0) F.block(1, 1, 2 * n, 2 * n) = Om;
    alg.cocycle = Pi.transpose() * F * Pi;
    return alg;
}

LieAlgebraData build_solvable_algebra(const SpaceParams& params) {
    const int n = params.n;
    const int d = 2 * n + 2;
    const MatrixXd Om = standard_omega_V(n);

    LieAlgebraData alg;
    alg.dim = d;
    alg.structure_constants.assign(static_cast<std::size_t>(d) * d * d, 0.0);
    alg.basis_labels.push_back("H");
    for (int i = 1; i <= 2 * n; ++i) alg.basis_labels.push_back("e" + std::to_string(i));
    alg.basis_labels.push_back("E");

    auto set = [&](int k, int i, int j, double val) {
        alg.c(k, i, j) = val;
        alg.c(k, j, i) = -val;
    };
    for (int i = 0; i < 2 * n; ++i) set(1 + i, 0, 1 + i, 1.0); // [H, v] = v
    set(d - 1, 0, d - 1, 2.0);                                 // [H, E] = 2E
    for (int i = 0; i < 2 * n; ++i)
        for (int j = i + 1; j < 2 * n; ++j)
            if (Om(i, j) != 0.0) set(d - 1, 1 + i, 1 + j, Om(i, j)); // [v, w] = Omega(v,w) E
    return alg;
}

namespace {

// Orthonormal basis of the image of a (symmetric idempotent-like) projector.
MatrixXd projector_image(const MatrixXd& P) {
    Eigen::JacobiSVD<MatrixXd> svd(P, Eigen::ComputeFullU);
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 0.5) ++r;
    return svd.matrixU().leftCols(r);
}

int svd_rank(const MatrixXd& M, double rel_tol = 1e-9) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++r;
    return r;
}

} // namespace

SymmetricTripleReport check_symmetric_triple(const LieAlgebraData& alg) {
    if (!alg.involution) throw MissingInvolution("check_symmetric_triple: involution absent");
    if (!alg.cocycle) throw ConfigError("check_symmetric_triple: cocycle absent");
    const int d = alg.dim;
    const MatrixXd& S = *alg.involution;
    const MatrixXd& C = *alg.cocycle;

    SymmetricTripleReport rep;
    rep.involution_square_residual = (S * S - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    rep.automorphism_residual = alg.involution_automorphism_residual();

    const MatrixXd Uk = projector_image(0.5 * (MatrixXd::Identity(d, d) + S));
    const MatrixXd Up = projector_image(0.5 * (MatrixXd::Identity(d, d) - S));
    rep.dim_k = static_cast<int>(Uk.cols());
    rep.dim_p = static_cast<int>(Up.cols());

    const MatrixXd Pp = 0.5 * (MatrixXd::Identity(d, d) - S);
    if (rep.dim_p > 0) {
        MatrixXd brackets(d, rep.dim_p * (rep.dim_p - 1) / 2);
        int col = 0;
        for (int i = 0; i < rep.dim_p; ++i)
            for (int j = i + 1; j < rep.dim_p; ++j)
                brackets.col(col++) = alg.bracket(Up.col(i), Up.col(j));
        if (brackets.cols() > 0) {
            rep.rank_pp = svd_rank(brackets);
            rep.pp_in_k_residual = (Pp * brackets).cwiseAbs().maxCoeff();
        }
    }
    rep.pp_spans_k = (rep.rank_pp == rep.dim_k);

    for (int i = 0; i < rep.dim_k; ++i) {
        const VectorXd row = C.transpose() * Uk.col(i);
        rep.ik_contraction_residual =
            std::max(rep.ik_contraction_residual, row.cwiseAbs().maxCoeff());
    }

    auto cval = [&](const VectorXd& u, const VectorXd& w) { return u.dot(C * w); };
    std::vector<std::vector<VectorXd>> brk(d, std::vector<VectorXd>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            brk[i][j] = alg.bracket(VectorXd::Unit(d, i), VectorXd::Unit(d, j));
    for (int x = 0; x < d; ++x)
        for (int y = x + 1; y < d; ++y)
            for (int z = y + 1; z < d; ++z) {
                const double v = -cval(brk[x][y], VectorXd::Unit(d, z)) +
                                 cval(brk[x][z], VectorXd::Unit(d, y)) -
                                 cval(brk[y][z], VectorXd::Unit(d, x));
                rep.cocycle_identity_residual = std::max(rep.cocycle_identity_residual, std::abs(v));
            }

    if (rep.dim_p > 0) {
        const MatrixXd Fp = Up.transpose() * C * Up;
        Eigen::JacobiSVD<MatrixXd> svd(Fp);
        const auto& sv = svd.singularValues();
        rep.p_restriction_min_singular = sv(sv.size() - 1);
        rep.nondegenerate_on_p = sv(sv.size() - 1) > 1e-9 * std::max(1.0, sv(0));
    }
    return rep;
}

namespace {

std::vector<std::pair<int, int>> index_pairs(int d) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) out.emplace_back(i, j);
    return out;
}

} // namespace

MatrixXd chevalley_delta1(const LieAlgebraData& alg) {
    const int d = alg.dim;
    const auto pairs = index_pairs(d);
    MatrixXd D = MatrixXd::Zero(static_cast<int>(pairs.size()), d);
    for (int r = 0; r < static_cast<int>(pairs.size()); ++r)
        for (int m = 0; m < d; ++m) D(r, m) = -alg.c(m, pairs[r].first, pairs[r].second);
    return D;
}

MatrixXd chevalley_delta2(const LieAlgebraData& alg) {
    const int d = alg.dim;
    const auto pairs = index_pairs(d);
    std::vector<std::array<int, 3>> triples;
    for (int x = 0; x < d; ++x)
        for (int y = x + 1; y < d; ++y)
            for (int z = y + 1; z < d; ++z) triples.push_back({x, y, z});

    std::vector<std::vector<VectorXd>> brk(d, std::vector<VectorXd>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            brk[i][j] = alg.bracket(VectorXd::Unit(d, i), VectorXd::Unit(d, j));

    MatrixXd D = MatrixXd::Zero(static_cast<int>(triples.size()), static_cast<int>(pairs.size()));
    for (int col = 0; col < static_cast<int>(pairs.size()); ++col) {
        const auto [i, j] = pairs[col];
        // c = e_i* ^ e_j*: c(u, e_t) = u_i delta_tj - u_j delta_ti
        auto cu = [&](const VectorXd& u, int t) {
            double s = 0.0;
            if (t == j) s += u(i);
            if (t == i) s -= u(j);
            return s;
        };
        for (int row = 0; row < static_cast<int>(triples.size()); ++row) {
            const auto [x, y, z] = triples[row];
            D(row, col) = -cu(brk[x][y], z) + cu(brk[x][z], y) - cu(brk[y][z], x);
        }
    }
    return D;
}

int coboundary_two_dimension(const LieAlgebraData& alg) { return svd_rank(chevalley_delta1(alg), 1e-12); }

namespace {

// Frame coefficients of [Z*, X~_alpha] at q, as columns.
MatrixXd frame_bracket_matrix(const SpaceParams& params, const Point& q, const VectorXd& Zv,
                              double Zz) {
    const int d = params.dim_S();
    const MatrixXd F = left_invariant_frame(q, params);
    const auto JF = left_invariant_frame_jacobians(q, params);
    const VectorXd Z = fundamental_field(Zv, Zz, q, params);
    const MatrixXd JZ = fundamental_field_jacobian(Zv, Zz, q, params);
    const MatrixXd Finv = F.inverse();

    MatrixXd B(d, d);
    for (int a = 0; a < d; ++a) B.col(a) = Finv * (JF[a] * Z - JZ * F.col(a));
    return B;
}

MatrixXd pair_components(const MatrixXd& M, const std::vector<std::pair<int, int>>& pairs) {
    VectorXd v(static_cast<int>(pairs.size()));
    for (int r = 0; r < static_cast<int>(pairs.size()); ++r)
        v(r) = M(pairs[r].first, pairs[r].second);
    return v;
}

MatrixXd antisym_from_pairs(const VectorXd& v, const std::vector<std::pair<int, int>>& pairs,
                            int d) {
    MatrixXd M = MatrixXd::Zero(d, d);
    for (int r = 0; r < static_cast<int>(pairs.size()); ++r) {
        M(pairs[r].first, pairs[r].second) = v(r);
        M(pairs[r].second, pairs[r].first) = -v(r);
    }
    return M;
}

// Trailing-singular-value count below tol, with a gap-ratio >= 10 sanity check.
int nullity_with_gap(const VectorXd& sv, double tol, const char* who) {
    const int m = static_cast<int>(sv.size());
    const double scale = std::max(1.0, sv(0));
    int nullity = 0;
    while (nullity < m && sv(m - 1 - nullity) < tol * scale) ++nullity;
    if (nullity == m) return nullity;
    const double kept = sv(m - 1 - nullity);
    if (nullity == 0) {
        if (kept < 10.0 * tol * scale)
            throw RankAmbiguous(std::string(who) + ": smallest singular value sits at the tolerance");
        return 0;
    }
    const double largest_null = std::max(sv(m - nullity), std::numeric_limits<double>::min());
    if (kept / largest_null < 10.0)
        throw RankAmbiguous(std::string(who) + ": singular-value gap ratio below 10");
    return nullity;
}

struct SampledInvariance {
    int nullity = 0;
    MatrixXd basis; // in the coordinates of the supplied candidate space
};

// Stacks L_{Z*} constraints at random points over a candidate subspace
// (columns of `candidates`, pair coordinates).  mode: +1 bivectors
// (L = B W + W B^T), -1 forms (L = -(B^T C + C B)).
SampledInvariance sampled_invariance(const SpaceParams& params, const MatrixXd& candidates,
                                     int samples, double tol, int mode, const char* who) {
    const int d = params.dim_S();
    const auto pairs = index_pairs(d);
    const int m = static_cast<int>(pairs.size());
    const int nc = static_cast<int>(candidates.cols());

    std::vector<std::pair<VectorXd, double>> kbasis;
    for (int i = 0; i < params.dim_V(); ++i)
        kbasis.emplace_back(VectorXd::Unit(params.dim_V(), i), 0.0);
    kbasis.emplace_back(VectorXd::Zero(params.dim_V()), 1.0);

    Rng rng(0x1ea5eedULL + static_cast<unsigned long long>(params.n));
    MatrixXd A(samples * static_cast<int>(kbasis.size()) * m, nc);
    int row = 0;
    for (int s = 0; s < samples; ++s) {
        VectorXd qc(d);
        for (int i = 0; i < d; ++i) qc(i) = rng.uniform(-1.2, 1.2);
        const Point q = Point::from_coords(qc);
        for (const auto& [Zv, Zz] : kbasis) {
            const MatrixXd B = frame_bracket_matrix(params, q, Zv, Zz);
            for (int col = 0; col < nc; ++col) {
                const MatrixXd W = antisym_from_pairs(candidates.col(col), pairs, d);
                const MatrixXd L = (mode > 0) ? MatrixXd(B * W + W * B.transpose())
                                              : MatrixXd(-(B.transpose() * W + W * B));
                A.block(row, col, m, 1) = pair_components(L, pairs);
            }
            row += m;
        }
    }

    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
    SampledInvariance out;
    out.nullity = nullity_with_gap(svd.singularValues(), tol, who);
    out.basis = svd.matrixV().rightCols(out.nullity);
    return out;
}

} // namespace

InvariantBivectors invariant_two_vectors(const SpaceParams& params, int samples, double tol) {
    if (params.n < 1) throw ConfigError("invariant_two_vectors: requires n >= 1");
    if (samples <= 0) throw ConfigError("invariant_two_vectors: samples must be positive");
    if (!(tol > 0.0)) throw ConfigError("invariant_two_vectors: tol must be positive");

    const int m = static_cast<int>(index_pairs(params.dim_S()).size());
    const SampledInvariance inv = sampled_invariance(
        params, MatrixXd::Identity(m, m), samples, tol, +1, "invariant_two_vectors");
    return InvariantBivectors{inv.nullity, inv.basis};
}

int invariant_h2_dimension(const SpaceParams& params, int samples, double tol) {
    if (params.n < 1) throw ConfigError("invariant_h2_dimension: requires n >= 1");
    if (samples <= 0) throw ConfigError("invariant_h2_dimension: samples must be positive");
    if (!(tol > 0.0)) throw ConfigError("invariant_h2_dimension: tol must be positive");

    const LieAlgebraData s = build_solvable_algebra(params);
    const MatrixXd D2 = chevalley_delta2(s);
    Eigen::JacobiSVD<MatrixXd> svd(D2, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-12 * std::max(1.0, sv(0))) ++rank;
    const MatrixXd Z2 = svd.matrixV().rightCols(D2.cols() - rank);
    if (Z2.cols() == 0) return 0;

    const SampledInvariance inv =
        sampled_invariance(params, Z2, samples, tol, -1, "invariant_h2_dimension");
    const MatrixXd Inv = Z2 * inv.basis;

    const MatrixXd B2 = chevalley_delta1(s);
    MatrixXd joint(B2.rows(), Inv.cols() + B2.cols());
    joint << Inv, B2;
    return svd_rank(joint) - svd_rank(B2);
}

} // namespace solvq
