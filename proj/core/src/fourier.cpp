#include "solvq/fourier.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>

namespace solvq {

namespace {

std::mutex fftw_plan_mutex; // FFTW plan creation is not thread safe

void fft_lines(cplx* data, std::int64_t lines, int n, int sign) {
    if (lines <= 0)
        return;
    fftw_complex* p = reinterpret_cast<fftw_complex*>(data);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        int dims[1] = {n};
        plan = fftw_plan_many_dft(1, dims, static_cast<int>(lines), p, nullptr, 1, n,
                                  p, nullptr, 1, n,
                                  sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                  FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }
}

} // namespace

void fft_last_axis_raw(cplx* data, std::int64_t lines, int n, int sign) {
    fft_lines(data, lines, n, sign);
}

namespace {

// The spectral code reconstructs position windows from frequency grids, which
// is only unambiguous for centered axes; chart grids are built that way.
void require_centered(const Axis& ax, const char* who) {
    if (std::abs(ax.min + ax.max) > 1e-12 * (std::abs(ax.min) + std::abs(ax.max)))
        throw ConfigError(std::string(who) + ": axis window must be centered");
}

} // namespace

GridFunction partial_fourier(const GridFunction& u) {
    if (u.tag != SpaceTag::POSITION)
        throw WrongSpaceTag("partial_fourier: input must be POSITION");
    const Axis& ax = u.spec.last();
    require_centered(ax, "partial_fourier");
    const int n = ax.points;
    const std::int64_t lines = u.size() / n;

    GridFunction out = u;
    out.tag = SpaceTag::FOURIER;
    Axis& fax = out.spec.axes.back();
    fax.role = AxisRole::XI;
    double dxi = ax.freq_step();
    fax.min = -(n / 2) * dxi;
    fax.max = fax.min + n * dxi;
    // After the change fax.step() == dxi and fax.coord(j) == old freq(j).

    // u^(xi_j) = dl * e^{-i xi_j l0} * DFT_j[ (-1)^m u_m ]
    cplx* d = out.values.data();
    for (std::int64_t r = 0; r < lines; ++r)
        for (int m = 1; m < n; m += 2)
            d[r * n + m] = -d[r * n + m];
    fft_lines(d, lines, n, -1);
    std::vector<cplx> post(n);
    const double dl = ax.step(), l0 = ax.min;
    for (int j = 0; j < n; ++j) {
        double xi = (j - n / 2) * dxi;
        post[j] = dl * std::exp(cplx{0.0, -xi * l0});
    }
    for (std::int64_t r = 0; r < lines; ++r)
        for (int j = 0; j < n; ++j)
            d[r * n + j] *= post[j];
    return out;
}

GridFunction partial_fourier_inv(const GridFunction& u) {
    if (u.tag != SpaceTag::FOURIER)
        throw WrongSpaceTag("partial_fourier_inv: input must be FOURIER");
    const Axis& fax = u.spec.last();
    const int n = fax.points;
    const std::int64_t lines = u.size() / n;

    GridFunction out = u;
    out.tag = SpaceTag::POSITION;
    Axis& ax = out.spec.axes.back();
    ax.role = AxisRole::L;
    double dxi = fax.step();
    double dl = 2.0 * M_PI / (n * dxi);
    ax.min = -0.5 * n * dl; // centered position window, the convention used throughout
    ax.max = ax.min + n * dl;

    // u(l_m) = (2*pi)^{-1} dxi (-1)^m BDFT_m[ u^_j e^{+i xi_j l0} ]
    cplx* d = out.values.data();
    const double l0 = ax.min;
    std::vector<cplx> pre(n);
    for (int j = 0; j < n; ++j) {
        double xi = fax.coord(j);
        pre[j] = std::exp(cplx{0.0, xi * l0});
    }
    for (std::int64_t r = 0; r < lines; ++r)
        for (int j = 0; j < n; ++j)
            d[r * n + j] *= pre[j];
    fft_lines(d, lines, n, +1);
    const double scale = dxi / (2.0 * M_PI);
    for (std::int64_t r = 0; r < lines; ++r)
        for (int m = 0; m < n; ++m)
            d[r * n + m] *= (m % 2 == 0 ? scale : -scale);
    return out;
}

FullSpectrum full_fourier(const GridFunction& u) {
    const GridSpec& spec = u.spec;
    const int nd = spec.ndim();
    FullSpectrum s;
    s.position_spec = spec;
    s.values = u.values;

    // (-1)^{sum of indices} modulation, one pass.
    std::vector<int> idx(nd, 0);
    const std::int64_t total = s.size();
    for (std::int64_t f = 0; f < total; ++f) {
        int parity = 0;
        for (int d = 0; d < nd; ++d)
            parity += idx[d];
        if (parity % 2)
            s.values[f] = -s.values[f];
        for (int d = nd - 1; d >= 0; --d) {
            if (++idx[d] < spec.axes[d].points)
                break;
            idx[d] = 0;
        }
    }

    {
        fftw_complex* p = reinterpret_cast<fftw_complex*>(s.values.data());
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex);
            std::vector<int> dims(nd);
            for (int d = 0; d < nd; ++d)
                dims[d] = spec.axes[d].points;
            plan = fftw_plan_dft(nd, dims.data(), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }

    // Per-axis factor dx_d * e^{-i k_j x0_d}.
    std::vector<std::vector<cplx>> post(nd);
    for (int d = 0; d < nd; ++d) {
        const Axis& ax = spec.axes[d];
        post[d].resize(ax.points);
        for (int j = 0; j < ax.points; ++j)
            post[d][j] = ax.step() * std::exp(cplx{0.0, -ax.freq(j) * ax.min});
    }
    std::fill(idx.begin(), idx.end(), 0);
    for (std::int64_t f = 0; f < total; ++f) {
        cplx ph{1.0, 0.0};
        for (int d = 0; d < nd; ++d)
            ph *= post[d][idx[d]];
        s.values[f] *= ph;
        for (int d = nd - 1; d >= 0; --d) {
            if (++idx[d] < spec.axes[d].points)
                break;
            idx[d] = 0;
        }
    }
    return s;
}

GridFunction full_fourier_inv(const FullSpectrum& s) {
    const GridSpec& spec = s.position_spec;
    const int nd = spec.ndim();
    GridFunction u(spec, SpaceTag::POSITION);
    u.values = s.values;

    // Strip the per-axis phases, inverse FFT, strip parity, normalize.
    std::vector<std::vector<cplx>> pre(nd);
    double scale = 1.0;
    for (int d = 0; d < nd; ++d) {
        const Axis& ax = spec.axes[d];
        pre[d].resize(ax.points);
        for (int j = 0; j < ax.points; ++j)
            pre[d][j] = std::exp(cplx{0.0, ax.freq(j) * ax.min});
        scale *= ax.freq_step() / (2.0 * M_PI);
    }
    std::vector<int> idx(nd, 0);
    const std::int64_t total = u.size();
    for (std::int64_t f = 0; f < total; ++f) {
        cplx ph{1.0, 0.0};
        for (int d = 0; d < nd; ++d)
            ph *= pre[d][idx[d]];
        u.values[f] *= ph;
        for (int d = nd - 1; d >= 0; --d) {
            if (++idx[d] < spec.axes[d].points)
                break;
            idx[d] = 0;
        }
    }
    {
        fftw_complex* p = reinterpret_cast<fftw_complex*>(u.values.data());
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex);
            std::vector<int> dims(nd);
            for (int d = 0; d < nd; ++d)
                dims[d] = spec.axes[d].points;
            plan = fftw_plan_dft(nd, dims.data(), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }
    std::fill(idx.begin(), idx.end(), 0);
    for (std::int64_t f = 0; f < total; ++f) {
        int parity = 0;
        for (int d = 0; d < nd; ++d)
            parity += idx[d];
        u.values[f] *= (parity % 2 == 0 ? scale : -scale);
        for (int d = nd - 1; d >= 0; --d) {
            if (++idx[d] < spec.axes[d].points)
                break;
            idx[d] = 0;
        }
    }
    return u;
}

cplx eval_spectrum_at(const FullSpectrum& s, const VectorXd& x) {
    const GridSpec& spec = s.position_spec;
    const int nd = spec.ndim();
    double scale = 1.0;
    std::vector<std::vector<cplx>> ph(nd);
    for (int d = 0; d < nd; ++d) {
        const Axis& ax = spec.axes[d];
        ph[d].resize(ax.points);
        for (int j = 0; j < ax.points; ++j)
            ph[d][j] = std::exp(cplx{0.0, ax.freq(j) * x(d)});
        scale *= ax.freq_step() / (2.0 * M_PI);
    }
    std::vector<int> idx(nd, 0);
    cplx acc{0.0, 0.0};
    const std::int64_t total = s.size();
    for (std::int64_t f = 0; f < total; ++f) {
        cplx p{1.0, 0.0};
        for (int d = 0; d < nd; ++d)
            p *= ph[d][idx[d]];
        acc += s.values[f] * p;
        for (int d = nd - 1; d >= 0; --d) {
            if (++idx[d] < spec.axes[d].points)
                break;
            idx[d] = 0;
        }
    }
    return acc * scale;
}

cplx eval_interpolant_at(const GridFunction& u, const VectorXd& x) {
    return eval_spectrum_at(full_fourier(u), x);
}

MatrixXc nudft_matrix(const Axis& axis, const std::vector<double>& omegas) {
    const int n = axis.points;
    MatrixXc M(static_cast<int>(omegas.size()), n);
    const double dx = axis.step();
    for (int r = 0; r < M.rows(); ++r)
        for (int m = 0; m < n; ++m)
            M(r, m) = dx * std::exp(cplx{0.0, -omegas[r] * axis.coord(m)});
    return M;
}

} // namespace solvq
