#include "solvq/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace solvq {

std::int64_t GridSpec::size() const {
    std::int64_t s = 1;
    for (const auto& ax : axes)
        s *= ax.points;
    return s;
}

std::int64_t GridSpec::flat_index(const std::vector<int>& idx) const {
    std::int64_t f = 0;
    for (int d = 0; d < ndim(); ++d)
        f = f * axes[d].points + idx[d];
    return f;
}

void GridSpec::unravel(std::int64_t flat, std::vector<int>& idx) const {
    idx.resize(ndim());
    for (int d = ndim() - 1; d >= 0; --d) {
        idx[d] = static_cast<int>(flat % axes[d].points);
        flat /= axes[d].points;
    }
}

VectorXd GridSpec::coords(const std::vector<int>& idx) const {
    VectorXd x(ndim());
    for (int d = 0; d < ndim(); ++d)
        x(d) = axes[d].coord(idx[d]);
    return x;
}

void GridSpec::validate() const {
    if (axes.empty())
        throw ConfigError("grid: no axes");
    for (const auto& ax : axes) {
        if (!(ax.max > ax.min))
            throw ConfigError("grid: axis max must exceed min");
        if (ax.points < 8)
            throw ConfigError("grid: need at least 8 points per axis");
        if (ax.points % 2 != 0)
            throw ConfigError("grid: axis points must be even");
    }
    if (axes.front().role != AxisRole::A)
        throw ConfigError("grid: first axis must be a");
    AxisRole lastr = axes.back().role;
    if (lastr != AxisRole::L && lastr != AxisRole::XI)
        throw ConfigError("grid: last axis must be l or xi");
}

bool GridSpec::same_shape(const GridSpec& o) const {
    if (ndim() != o.ndim())
        return false;
    for (int d = 0; d < ndim(); ++d) {
        const Axis &a = axes[d], &b = o.axes[d];
        if (a.points != b.points || a.min != b.min || a.max != b.max)
            return false;
    }
    return true;
}

GridSpec GridSpec::chart(int n, int points, double a_min, double a_max,
                         double v_min, double v_max, double l_min, double l_max) {
    GridSpec spec;
    spec.axes.push_back({AxisRole::A, a_min, a_max, points});
    for (int i = 0; i < 2 * n; ++i)
        spec.axes.push_back({AxisRole::V, v_min, v_max, points});
    spec.axes.push_back({AxisRole::L, l_min, l_max, points});
    spec.validate();
    return spec;
}

GridSpec GridSpec::chart_cube(int n, int points, double half) {
    return chart(n, points, -half, half, -half, half, -half, half);
}

GridFunction::GridFunction(GridSpec s, SpaceTag t)
    : spec(std::move(s)), tag(t), values(spec.size(), cplx{0.0, 0.0}) {}

GridFunction sample(const GridSpec& spec, const std::function<cplx(const VectorXd&)>& fn) {
    GridFunction g(spec, SpaceTag::POSITION);
    std::vector<int> idx(spec.ndim(), 0);
    VectorXd x(spec.ndim());
    const std::int64_t total = spec.size();
    for (std::int64_t f = 0; f < total; ++f) {
        for (int d = 0; d < spec.ndim(); ++d)
            x(d) = spec.axes[d].coord(idx[d]);
        g.values[f] = fn(x);
        for (int d = spec.ndim() - 1; d >= 0; --d) {
            if (++idx[d] < spec.axes[d].points)
                break;
            idx[d] = 0;
        }
    }
    return g;
}

GridFunction gaussian(const GridSpec& spec, const VectorXd& center, double width,
                      cplx amplitude) {
    const double inv2w2 = 1.0 / (2.0 * width * width);
    return sample(spec, [&](const VectorXd& x) -> cplx {
        return amplitude * std::exp(-(x - center).squaredNorm() * inv2w2);
    });
}

static double cell_volume(const GridSpec& spec) {
    double vol = 1.0;
    for (const auto& ax : spec.axes)
        vol *= ax.step();
    return vol;
}

double norm_l2(const GridFunction& u) {
    double s = 0.0;
    for (const cplx& z : u.values)
        s += std::norm(z);
    return std::sqrt(s * cell_volume(u.spec));
}

double norm_linf(const GridFunction& u) {
    double m = 0.0;
    for (const cplx& z : u.values)
        m = std::max(m, std::abs(z));
    return m;
}

double rel_l2_error(const GridFunction& u, const GridFunction& ref) {
    if (!u.spec.same_shape(ref.spec))
        throw GridMismatch("rel_l2_error: shapes differ");
    double num = 0.0, den = 0.0;
    for (std::int64_t i = 0; i < u.size(); ++i) {
        num += std::norm(u.values[i] - ref.values[i]);
        den += std::norm(ref.values[i]);
    }
    return std::sqrt(num / den);
}

cplx integral(const GridFunction& u) {
    cplx s{0.0, 0.0};
    for (const cplx& z : u.values)
        s += z;
    return s * cell_volume(u.spec);
}

cplx inner_l2(const GridFunction& u, const GridFunction& w) {
    if (!u.spec.same_shape(w.spec))
        throw GridMismatch("inner_l2: shapes differ");
    cplx s{0.0, 0.0};
    for (std::int64_t i = 0; i < u.size(); ++i)
        s += u.values[i] * std::conj(w.values[i]);
    return s * cell_volume(u.spec);
}

double boundary_mass(const GridFunction& u, const std::vector<int>& check_axes) {
    std::vector<bool> check(u.spec.ndim(), check_axes.empty());
    for (int d : check_axes)
        check[d] = true;
    double shell = 0.0, global = 0.0;
    std::vector<int> idx;
    const std::int64_t total = u.size();
    for (std::int64_t f = 0; f < total; ++f) {
        double m = std::abs(u.values[f]);
        global = std::max(global, m);
        if (m <= shell)
            continue;
        u.spec.unravel(f, idx);
        for (int d = 0; d < u.spec.ndim(); ++d) {
            if (check[d] && (idx[d] == 0 || idx[d] == u.spec.axes[d].points - 1)) {
                shell = m;
                break;
            }
        }
    }
    return global > 0.0 ? shell / global : 0.0;
}

static GridFunction zip(const GridFunction& a, const GridFunction& b,
                        const std::function<cplx(cplx, cplx)>& op) {
    if (!a.spec.same_shape(b.spec) || a.tag != b.tag)
        throw GridMismatch("grid arithmetic: operands differ");
    GridFunction r(a.spec, a.tag);
    for (std::int64_t i = 0; i < a.size(); ++i)
        r.values[i] = op(a.values[i], b.values[i]);
    return r;
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    return zip(a, b, [](cplx x, cplx y) { return x + y; });
}
GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    return zip(a, b, [](cplx x, cplx y) { return x - y; });
}
GridFunction operator*(const GridFunction& a, const GridFunction& b) {
    return zip(a, b, [](cplx x, cplx y) { return x * y; });
}
GridFunction operator*(cplx s, const GridFunction& a) {
    GridFunction r = a;
    for (auto& z : r.values)
        z *= s;
    return r;
}

static const char* role_name(AxisRole r) {
    switch (r) {
    case AxisRole::A:
        return "a";
    case AxisRole::V:
        return "v";
    case AxisRole::L:
        return "l";
    default:
        return "xi";
    }
}

void write_csv(const GridFunction& u, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        throw IoError("write_csv: cannot open " + path);
    int vcount = 0;
    for (int d = 0; d < u.spec.ndim(); ++d) {
        const Axis& ax = u.spec.axes[d];
        if (ax.role == AxisRole::V)
            std::fprintf(f, "v%d,", ++vcount);
        else
            std::fprintf(f, "%s,", role_name(ax.role));
    }
    std::fprintf(f, "re,im\n");
    std::vector<int> idx(u.spec.ndim(), 0);
    const std::int64_t total = u.size();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        for (int d = 0; d < u.spec.ndim(); ++d)
            std::fprintf(f, "%.17g,", u.spec.axes[d].coord(idx[d]));
        std::fprintf(f, "%.17g,%.17g\n", u.values[flat].real(), u.values[flat].imag());
        for (int d = u.spec.ndim() - 1; d >= 0; --d) {
            if (++idx[d] < u.spec.axes[d].points)
                break;
            idx[d] = 0;
        }
    }
    std::fclose(f);
}

namespace {

// All binary I/O is little endian; this code targets little-endian hosts and
// the writers/readers below simply copy native doubles.
template <class T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

} // namespace

void write_binary(const GridFunction& u, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("write_binary: cannot open " + path);
    os.write("DQGRID01", 8);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(u.spec.ndim()));
    put<std::uint32_t>(os, u.tag == SpaceTag::POSITION ? 0u : 1u);
    for (const auto& ax : u.spec.axes) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(ax.role));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(ax.points));
        put<double>(os, ax.min);
        put<double>(os, ax.max);
    }
    os.write(reinterpret_cast<const char*>(u.values.data()),
             static_cast<std::streamsize>(u.values.size() * sizeof(cplx)));
    if (!os)
        throw IoError("write_binary: short write to " + path);
}

GridFunction read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("read_binary: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "DQGRID01", 8) != 0)
        throw IoError("read_binary: bad magic in " + path);
    auto ndim = get<std::uint32_t>(is);
    auto tag = get<std::uint32_t>(is);
    if (ndim == 0 || ndim > 64 || tag > 1)
        throw IoError("read_binary: corrupt header in " + path);
    GridSpec spec;
    for (std::uint32_t d = 0; d < ndim; ++d) {
        Axis ax;
        auto role = get<std::uint32_t>(is);
        if (role > 3)
            throw IoError("read_binary: bad axis role in " + path);
        ax.role = static_cast<AxisRole>(role);
        ax.points = static_cast<int>(get<std::uint32_t>(is));
        ax.min = get<double>(is);
        ax.max = get<double>(is);
        spec.axes.push_back(ax);
    }
    spec.validate();
    GridFunction g(spec, tag == 0 ? SpaceTag::POSITION : SpaceTag::FOURIER);
    is.read(reinterpret_cast<char*>(g.values.data()),
            static_cast<std::streamsize>(g.values.size() * sizeof(cplx)));
    if (!is)
        throw IoError("read_binary: truncated data in " + path);
    return g;
}

GridFunction read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw IoError("read_csv: cannot open " + path);
    std::string header;
    if (!std::getline(is, header))
        throw IoError("read_csv: empty file " + path);

    std::vector<AxisRole> roles;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col == "re" || col == "im")
                continue;
            if (col == "a")
                roles.push_back(AxisRole::A);
            else if (col == "l")
                roles.push_back(AxisRole::L);
            else if (col == "xi")
                roles.push_back(AxisRole::XI);
            else if (col.size() >= 1 && col[0] == 'v')
                roles.push_back(AxisRole::V);
            else
                throw IoError("read_csv: unknown column " + col);
        }
    }
    const int nd = static_cast<int>(roles.size());
    if (nd == 0)
        throw IoError("read_csv: no coordinate columns in " + path);

    // First pass: collect rows; axis extents are reconstructed from the
    // sorted unique coordinates (uniform spacing assumed, as written).
    std::vector<std::vector<double>> coords(nd);
    std::vector<double> re, im;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string cell;
        for (int d = 0; d < nd; ++d) {
            if (!std::getline(ss, cell, ','))
                throw IoError("read_csv: short row in " + path);
            coords[d].push_back(std::stod(cell));
        }
        if (!std::getline(ss, cell, ','))
            throw IoError("read_csv: missing re column in " + path);
        re.push_back(std::stod(cell));
        if (!std::getline(ss, cell, ','))
            throw IoError("read_csv: missing im column in " + path);
        im.push_back(std::stod(cell));
    }

    GridSpec spec;
    for (int d = 0; d < nd; ++d) {
        std::vector<double> u = coords[d];
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        Axis ax;
        ax.role = roles[d];
        ax.points = static_cast<int>(u.size());
        ax.min = u.front();
        ax.max = u.front() + (u.size() >= 2 ? (u[1] - u[0]) * u.size() : 1.0);
        spec.axes.push_back(ax);
    }
    spec.validate();
    if (spec.size() != static_cast<std::int64_t>(re.size()))
        throw IoError("read_csv: row count does not fill the grid in " + path);

    GridFunction g(spec, spec.axes.back().role == AxisRole::XI ? SpaceTag::FOURIER
                                                               : SpaceTag::POSITION);
    // Rows were written in storage order; trust it.
    for (std::size_t i = 0; i < re.size(); ++i)
        g.values[i] = cplx{re[i], im[i]};
    return g;
}

} // namespace solvq
