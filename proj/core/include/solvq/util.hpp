#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "solvq/types.hpp"

namespace solvq {

// Deterministic RNG.  mt19937_64 with an explicit 53-bit uniform mapping so
// that streams are reproducible across standard library implementations
// (std::uniform_real_distribution is not pinned by the standard).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; both values used, cached.
    double normal();

    VectorXd uniform_vector(int dim, double lo, double hi) {
        VectorXd x(dim);
        for (int i = 0; i < dim; ++i)
            x(i) = uniform(lo, hi);
        return x;
    }

    std::uint64_t raw() { return eng_(); }

    // Derive an independent, reproducible stream (e.g. one per suite).
    Rng spawn(std::uint64_t salt) const {
        std::uint64_t s = salt * 0x9e3779b97f4a7c15ull + seed_mix_;
        return Rng(s ^ (s >> 31));
    }

  private:
    std::mt19937_64 eng_;
    std::uint64_t seed_mix_ = 0x2545f4914f6cdd1dull;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

// Least-squares slope of log(y) against log(x); used for convergence-order fits.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Least-squares polynomial fit coefficients c0..c_deg of y(x).
VectorXd polyfit(const VectorXd& x, const VectorXd& y, int deg);

// Central finite differences of a scalar function, step h.
double fd_derivative(const std::function<double(double)>& f, double x, double h);
double fd_derivative2(const std::function<double(double)>& f, double x, double h);
// Order-k central difference (k <= 4) on a uniform stencil.
double fd_derivative_n(const std::function<double(double)>& f, double x, int k, double h);

// Jacobian of a map R^d -> R^d by central differences.
MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                     const VectorXd& x, double h);

// Number of worker threads: DQ_THREADS if set and positive, else
// hardware_concurrency.  Results never depend on this value; work is split
// into fixed per-element assignments.
int worker_count();

// Runs fn(i) for i in [0, count).  Static block partition over worker_count()
// threads (or the `threads` override).  fn must write only to its own outputs.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn,
                  int threads = 0);

inline double sq(double x) { return x * x; }

std::vector<double> linspace(double lo, double hi, int count);

} // namespace solvq
