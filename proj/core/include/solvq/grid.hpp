#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "solvq/errors.hpp"
#include "solvq/types.hpp"

namespace solvq {

enum class AxisRole { A, V, L, XI };
enum class SpaceTag { POSITION, FOURIER };

// One uniform grid axis, sampled at x_j = min + j*step, j = 0..points-1
// (half-open interval, FFT-compatible; no right endpoint).
struct Axis {
    AxisRole role = AxisRole::A;
    double min = 0.0;
    double max = 0.0;
    int points = 0;

    double step() const { return (max - min) / points; }
    double coord(int j) const { return min + j * step(); }
    // Fourier-dual frequencies k_j = (j - points/2) * 2*pi/(points*step).
    double freq_step() const { return 2.0 * M_PI / (points * step()); }
    double freq(int j) const { return (j - points / 2) * freq_step(); }
    double nyquist() const { return (points / 2) * freq_step(); }
};

// Rectangular grid over the chart; axis order is (a, v_1..v_2n, l-or-xi).
// Storage is row major with the LAST axis varying fastest, so each
// (a,v)-line over l is contiguous.
struct GridSpec {
    std::vector<Axis> axes;

    int ndim() const { return static_cast<int>(axes.size()); }
    std::int64_t size() const;
    const Axis& last() const { return axes.back(); }

    std::int64_t flat_index(const std::vector<int>& idx) const;
    void unravel(std::int64_t flat, std::vector<int>& idx) const;
    VectorXd coords(const std::vector<int>& idx) const;

    void validate() const; // throws ConfigError

    bool same_shape(const GridSpec& o) const;

    // (a, v_1..v_2n, l) over given ranges, `points` samples per axis.
    static GridSpec chart(int n, int points, double a_min, double a_max,
                          double v_min, double v_max, double l_min, double l_max);
    // Same extent [-half, half) on every axis.
    static GridSpec chart_cube(int n, int points, double half);
};

struct GridFunction {
    GridSpec spec;
    SpaceTag tag = SpaceTag::POSITION;
    std::vector<cplx> values;

    GridFunction() = default;
    GridFunction(GridSpec s, SpaceTag t);

    cplx& operator[](std::int64_t i) { return values[i]; }
    const cplx& operator[](std::int64_t i) const { return values[i]; }
    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
};

// Pointwise sampling of fn at the grid nodes (POSITION tag).
GridFunction sample(const GridSpec& spec, const std::function<cplx(const VectorXd&)>& fn);

// amplitude * exp(-|x - center|^2 / (2 width^2)), isotropic.
GridFunction gaussian(const GridSpec& spec, const VectorXd& center, double width,
                      cplx amplitude = 1.0);

// Continuum-weighted norms: ||u||^2 = sum |u|^2 * prod(step).
double norm_l2(const GridFunction& u);
double norm_linf(const GridFunction& u);
double rel_l2_error(const GridFunction& u, const GridFunction& ref);
cplx integral(const GridFunction& u);
cplx inner_l2(const GridFunction& u, const GridFunction& w); // sum u * conj(w) * vol

// max |u| over the outer index shell of the marked axes divided by max |u|;
// check_axes empty means every axis.
double boundary_mass(const GridFunction& u, const std::vector<int>& check_axes = {});

// Arithmetic.
GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(const GridFunction& a, const GridFunction& b); // pointwise
GridFunction operator*(cplx s, const GridFunction& a);

// CSV: one header row naming the axis columns plus re,im; then one row per
// grid point (coordinates, value) in storage order.
void write_csv(const GridFunction& u, const std::string& path);

// Raw binary format "DQGRID01", little endian:
//   bytes 0..7   magic "DQGRID01"
//   u32 ndim, u32 space tag (0 position, 1 fourier)
//   per axis: u32 role (0 a, 1 v, 2 l, 3 xi), u32 points, f64 min, f64 max
//   then size() complex values as f64 pairs (re, im), row major, last axis
//   fastest.  Round trips bit exactly.
void write_binary(const GridFunction& u, const std::string& path);
GridFunction read_binary(const std::string& path);
GridFunction read_csv(const std::string& path);

} // namespace solvq
