#include "solvq/util.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace solvq {

double Rng::normal() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    // Rejection-free Box-Muller on (0,1]; uniform() can return 0, so flip it.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    have_cached_ = true;
    cached_ = r * std::sin(2.0 * M_PI * u2);
    return r * std::cos(2.0 * M_PI * u2);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need >= 2 samples");
    const int m = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        double lx = std::log(x[i]);
        double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

VectorXd polyfit(const VectorXd& x, const VectorXd& y, int deg) {
    MatrixXd A(x.size(), deg + 1);
    for (int i = 0; i < x.size(); ++i) {
        double p = 1.0;
        for (int j = 0; j <= deg; ++j) {
            A(i, j) = p;
            p *= x(i);
        }
    }
    return A.colPivHouseholderQr().solve(y);
}

double fd_derivative(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double fd_derivative2(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

double fd_derivative_n(const std::function<double(double)>& f, double x, int k, double h) {
    switch (k) {
    case 0:
        return f(x);
    case 1:
        return fd_derivative(f, x, h);
    case 2:
        return fd_derivative2(f, x, h);
    case 3:
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
    case 4:
        return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) /
               (h * h * h * h);
    default:
        throw std::invalid_argument("fd_derivative_n: order must be <= 4");
    }
}

MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                     const VectorXd& x, double h) {
    const int d = static_cast<int>(x.size());
    MatrixXd J(d, d);
    for (int j = 0; j < d; ++j) {
        VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return J;
}

int worker_count() {
    if (const char* env = std::getenv("DQ_THREADS")) {
        int k = std::atoi(env);
        if (k > 0)
            return k;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn,
                  int threads) {
    if (count <= 0)
        return;
    int k = threads > 0 ? threads : worker_count();
    if (k > count)
        k = static_cast<int>(count);
    if (k <= 1) {
        for (std::int64_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (int t = 0; t < k; ++t) {
        std::int64_t lo = count * t / k;
        std::int64_t hi = count * (t + 1) / k;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i)
                fn(i);
        });
    }
    for (auto& th : pool)
        th.join();
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i)
        v[i] = lo + (hi - lo) * i / (count - 1);
    return v;
}

} // namespace solvq
