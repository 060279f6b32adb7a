#include "solvq/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "solvq/errors.hpp"

namespace solvq {

Point symmetry(const Point& x, const Point& y, const SpaceParams& params) {
    (void)params;
    const double d = x.a - y.a;
    Point out;
    out.a = 2.0 * x.a - y.a;
    out.v = 2.0 * std::cosh(d) * x.v - y.v;
    out.l = 2.0 * std::cosh(2.0 * d) * x.l + omega_V(x.v, y.v) * std::sinh(d) - y.l;
    return out;
}

MatrixXd symmetry_jacobian(const Point& x, const Point& y, const SpaceParams& params) {
    const int dv = params.dim_V();
    const int d = params.dim_S();
    const double t = x.a - y.a;
    const MatrixXd Om = standard_omega_V(params.n);

    MatrixXd J = MatrixXd::Zero(d, d);
    J(0, 0) = -1.0;
    if (dv > 0) {
        J.block(1, 0, dv, 1) = -2.0 * std::sinh(t) * x.v;
        J.block(1, 1, dv, dv) = -MatrixXd::Identity(dv, dv);
        // d/dy_j of Omega(x.v, y.v) sinh(t)
        J.block(d - 1, 1, 1, dv) = std::sinh(t) * (x.v.transpose() * Om);
        J(d - 1, 0) = -4.0 * std::sinh(2.0 * t) * x.l - std::cosh(t) * omega_V(x.v, y.v);
    } else {
        J(d - 1, 0) = -4.0 * std::sinh(2.0 * t) * x.l;
    }
    J(d - 1, d - 1) = -1.0;
    return J;
}

Point group_mul(const Point& g1, const Point& g2, const SpaceParams& params) {
    (void)params;
    const double e1 = std::exp(-g2.a);
    Point out;
    out.a = g1.a + g2.a;
    out.v = e1 * g1.v + g2.v;
    out.l = std::exp(-2.0 * g2.a) * g1.l + g2.l + 0.5 * omega_V(e1 * g1.v, g2.v);
    return out;
}

Point group_inv(const Point& g) {
    Point out;
    out.a = -g.a;
    out.v = -std::exp(g.a) * g.v;
    out.l = -std::exp(2.0 * g.a) * g.l;
    return out;
}

namespace {
// phi1(u) = (e^u - 1)/u, stable near 0.
double phi1(double u) {
    if (std::abs(u) < 1e-8) return 1.0 + 0.5 * u;
    return std::expm1(u) / u;
}
} // namespace

Point group_exp(const VectorXd& X, const SpaceParams& params) {
    const int dv = params.dim_V();
    const double alpha = X(0);
    Point out;
    out.a = alpha;
    // x' = -alpha x + w and x(0) = 0 keeps x parallel to w, so the Omega term
    // of the group law never contributes along a one-parameter subgroup.
    out.v = phi1(-alpha) * X.segment(1, dv);
    out.l = phi1(-2.0 * alpha) * X(X.size() - 1);
    return out;
}

MatrixXd invariant_form_matrix(const SpaceParams& params) {
    const int d = params.dim_S();
    MatrixXd M = MatrixXd::Zero(d, d);
    M(0, d - 1) = 1.0;
    M(d - 1, 0) = -1.0;
    if (params.n > 0)
        M.block(1, 1, params.dim_V(), params.dim_V()) = 0.5 * standard_omega_V(params.n);
    return M;
}

double phase_S0(const VectorXd& v0, const VectorXd& v1, const VectorXd& v2) {
    if (v0.size() != v1.size() || v1.size() != v2.size() || v0.size() % 2 != 0)
        throw std::invalid_argument("phase_S0: arguments must have equal even length");
    return omega_V(v0, v1) + omega_V(v1, v2) + omega_V(v2, v0);
}

double phase_S(const Triangle& t, const SpaceParams& params) {
    (void)params;
    const double d01 = t.x0.a - t.x1.a;
    const double d12 = t.x1.a - t.x2.a;
    const double d20 = t.x2.a - t.x0.a;
    const double s0 = phase_S0(std::cosh(d12) * t.x0.v, std::cosh(d20) * t.x1.v,
                               std::cosh(d01) * t.x2.v);
    return s0 - (std::sinh(2.0 * d01) * t.x2.l + std::sinh(2.0 * d12) * t.x0.l +
                 std::sinh(2.0 * d20) * t.x1.l);
}

double amplitude_A1(const Triangle& t, const SpaceParams& params) {
    const double d01 = t.x0.a - t.x1.a;
    const double d12 = t.x1.a - t.x2.a;
    const double d20 = t.x2.a - t.x0.a;
    return std::cosh(2.0 * d12) *
           std::pow(std::cosh(d20) * std::cosh(d01), params.dim_S() - 2);
}

double amplitude_Acan(const Triangle& t, const SpaceParams& params) {
    const double d01 = t.x0.a - t.x1.a;
    const double d12 = t.x1.a - t.x2.a;
    const double d20 = t.x2.a - t.x0.a;
    const double c2 = std::cosh(2.0 * d01) * std::cosh(2.0 * d12) * std::cosh(2.0 * d20);
    const double c1 = std::cosh(d01) * std::cosh(d12) * std::cosh(d20);
    return std::sqrt(c2) * std::pow(c1, 0.5 * (params.dim_S() - 2));
}

MatrixXd left_invariant_frame(const Point& q, const SpaceParams& params) {
    const int dv = params.dim_V();
    const int d = params.dim_S();
    const MatrixXd Om = standard_omega_V(params.n);

    MatrixXd F = MatrixXd::Zero(d, d);
    // H~ = d_a - v.d_v - 2 l d_l
    F(0, 0) = 1.0;
    if (dv > 0) F.block(1, 0, dv, 1) = -q.v;
    F(d - 1, 0) = -2.0 * q.l;
    // v_i~ = d_{v_i} + (1/2) Omega(v, e_i) d_l
    for (int i = 0; i < dv; ++i) {
        F(1 + i, 1 + i) = 1.0;
        F(d - 1, 1 + i) = 0.5 * q.v.dot(Om.col(i));
    }
    // E~ = d_l
    F(d - 1, d - 1) = 1.0;
    return F;
}

std::vector<MatrixXd> left_invariant_frame_jacobians(const Point& q, const SpaceParams& params) {
    (void)q;
    const int dv = params.dim_V();
    const int d = params.dim_S();
    const MatrixXd Om = standard_omega_V(params.n);

    std::vector<MatrixXd> Js;
    Js.reserve(d);
    MatrixXd JH = MatrixXd::Zero(d, d);
    if (dv > 0) JH.block(1, 1, dv, dv) = -MatrixXd::Identity(dv, dv);
    JH(d - 1, d - 1) = -2.0;
    Js.push_back(JH);
    for (int i = 0; i < dv; ++i) {
        MatrixXd Jv = MatrixXd::Zero(d, d);
        Jv.block(d - 1, 1, 1, dv) = 0.5 * Om.col(i).transpose();
        Js.push_back(Jv);
    }
    Js.push_back(MatrixXd::Zero(d, d));
    return Js;
}

VectorXd fundamental_field(const VectorXd& Zv, double Zz, const Point& q,
                           const SpaceParams& params) {
    const int dv = params.dim_V();
    const int d = params.dim_S();
    VectorXd out = VectorXd::Zero(d);
    if (dv > 0) {
        out.segment(1, dv) = 2.0 * std::sinh(q.a) * Zv;
        out(d - 1) = -std::cosh(q.a) * omega_V(Zv, q.v);
    }
    out(d - 1) += 2.0 * std::sinh(2.0 * q.a) * Zz;
    return out;
}

MatrixXd fundamental_field_jacobian(const VectorXd& Zv, double Zz, const Point& q,
                                    const SpaceParams& params) {
    const int dv = params.dim_V();
    const int d = params.dim_S();
    const MatrixXd Om = standard_omega_V(params.n);
    MatrixXd J = MatrixXd::Zero(d, d);
    if (dv > 0) {
        J.block(1, 0, dv, 1) = 2.0 * std::cosh(q.a) * Zv;
        J(d - 1, 0) = -std::sinh(q.a) * omega_V(Zv, q.v);
        J.block(d - 1, 1, 1, dv) = -std::cosh(q.a) * (Zv.transpose() * Om);
    }
    J(d - 1, 0) += 4.0 * std::cosh(2.0 * q.a) * Zz;
    return J;
}

LoosConnection loos_connection_at(const Point& x, const SpaceParams& params, double h) {
    if (!(h >= 1e-6 && h <= 1e-2))
        throw ConfigError("loos_connection_at: step h must lie in [1e-6, 1e-2]");
    const int d = params.dim_S();

    // W_j(p) = e_j + Ds_x|_{s_x(p)} e_j vanishes at p = x; Gamma^k_ij is half
    // its i-th coordinate derivative there.
    auto W = [&](const VectorXd& pc) -> MatrixXd {
        const Point p = Point::from_coords(pc);
        const Point sp = symmetry(x, p, params);
        return MatrixXd::Identity(d, d) + symmetry_jacobian(x, sp, params);
    };

    const VectorXd xc = x.coords();
    std::vector<MatrixXd> Gamma(d, MatrixXd::Zero(d, d));
    for (int i = 0; i < d; ++i) {
        VectorXd ep = xc, em = xc;
        ep(i) += h;
        em(i) -= h;
        const MatrixXd D = (W(ep) - W(em)) / (4.0 * h); // 1/2 * central difference
        for (int k = 0; k < d; ++k)
            for (int j = 0; j < d; ++j) Gamma[k](i, j) = D(k, j);
    }

    LoosConnection out;
    out.christoffels = Gamma;
    for (int k = 0; k < d; ++k)
        out.torsion_residual = std::max(
            out.torsion_residual, (Gamma[k] - Gamma[k].transpose()).cwiseAbs().maxCoeff());

    const MatrixXd om = invariant_form_matrix(params);
    for (int i = 0; i < d; ++i) {
        // (nabla_i omega)(e_j, e_k) = -Gamma^m_ij om_mk - Gamma^m_ik om_jm
        MatrixXd Gi(d, d);
        for (int m = 0; m < d; ++m)
            for (int j = 0; j < d; ++j) Gi(m, j) = Gamma[m](i, j);
        const MatrixXd R = Gi.transpose() * om + om * Gi;
        out.nabla_omega_residual = std::max(out.nabla_omega_residual, R.cwiseAbs().maxCoeff());
    }
    return out;
}

Point geodesic(const Point& x, const VectorXd& u, double t, const SpaceParams& params,
               int steps, double conn_h) {
    const int d = params.dim_S();
    auto acc = [&](const VectorXd& q, const VectorXd& dq) -> VectorXd {
        const LoosConnection c = loos_connection_at(Point::from_coords(q), params, conn_h);
        VectorXd a(d);
        for (int k = 0; k < d; ++k) a(k) = -dq.dot(c.christoffels[k] * dq);
        return a;
    };

    VectorXd q = x.coords(), dq = u;
    const double dt = t / steps;
    for (int s = 0; s < steps; ++s) {
        const VectorXd k1q = dq, k1v = acc(q, dq);
        const VectorXd k2q = dq + 0.5 * dt * k1v, k2v = acc(q + 0.5 * dt * k1q, dq + 0.5 * dt * k1v);
        const VectorXd k3q = dq + 0.5 * dt * k2v, k3v = acc(q + 0.5 * dt * k2q, dq + 0.5 * dt * k2v);
        const VectorXd k4q = dq + dt * k3v, k4v = acc(q + dt * k3q, dq + dt * k3v);
        q += (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        dq += (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return Point::from_coords(q);
}

} // namespace solvq
