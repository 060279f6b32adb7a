#pragma once

#include <complex>

#include <Eigen/Dense>

namespace solvq {

using cplx = std::complex<double>;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

inline constexpr cplx I{0.0, 1.0};

// Half-dimension n of the symplectic vector space V = R^{2n}.  The solvable
// group S and the space M both have dimension 2n+2; the transvection algebra
// has dimension 4n+3.  n = 0 (V = 0) is a supported degenerate case.
struct SpaceParams {
    int n = 0;

    int dim_V() const { return 2 * n; }
    int dim_S() const { return 2 * n + 2; }
    int dim_M() const { return 2 * n + 2; }
    bool degenerate() const { return n == 0; }
};

// Global chart coordinates (a, v, l) with v of length 2n.
struct Point {
    double a = 0.0;
    VectorXd v;
    double l = 0.0;

    Point() : v(0) {}
    Point(double a_, VectorXd v_, double l_) : a(a_), v(std::move(v_)), l(l_) {}

    int dim() const { return 2 + static_cast<int>(v.size()); }

    VectorXd coords() const {
        VectorXd x(dim());
        x(0) = a;
        x.segment(1, v.size()) = v;
        x(dim() - 1) = l;
        return x;
    }

    static Point from_coords(const VectorXd& x) {
        Point p;
        p.a = x(0);
        p.v = x.segment(1, x.size() - 2);
        p.l = x(x.size() - 1);
        return p;
    }

    static Point origin(const SpaceParams& sp) {
        return Point(0.0, VectorXd::Zero(sp.dim_V()), 0.0);
    }
};

struct Triangle {
    Point x0, x1, x2;
};

// Standard symplectic form on V: Omega(e_i, e_{n+j}) = delta_ij.
inline MatrixXd standard_omega_V(int n) {
    MatrixXd J = MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        J(i, n + i) = 1.0;
        J(n + i, i) = -1.0;
    }
    return J;
}

inline double omega_V(const VectorXd& v, const VectorXd& w) {
    const int n = static_cast<int>(v.size()) / 2;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        s += v(i) * w(n + i) - v(n + i) * w(i);
    return s;
}

} // namespace solvq
