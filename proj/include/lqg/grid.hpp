#pragma once

// Cell-centred discretisation of the unit square. Cell (i, j) has centre
// ((i + 1/2)/n, (j + 1/2)/n); values are stored row-major with j the row.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lqg {

enum class BoundaryCondition : std::uint32_t { dirichlet = 0, free = 1 };

inline const char* to_string(BoundaryCondition bc) {
    return bc == BoundaryCondition::dirichlet ? "dirichlet" : "free";
}

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point p, Point q) { return std::hypot(p.x - q.x, p.y - q.y); }

/// Distance from p to the boundary of the unit square.
inline double boundary_distance(Point p) {
    return std::fmin(std::fmin(p.x, 1.0 - p.x), std::fmin(p.y, 1.0 - p.y));
}

struct Grid {
    int n = 0;
    double spacing = 0.0;
    BoundaryCondition bc = BoundaryCondition::dirichlet;

    Grid() = default;
    Grid(int n_, BoundaryCondition bc_ = BoundaryCondition::dirichlet) : n(n_), spacing(1.0 / n_), bc(bc_) {
        if (n_ < 16 || !std::has_single_bit(static_cast<unsigned>(n_))) {
            throw std::invalid_argument("Grid: n must be a power of two >= 16, got " + std::to_string(n_));
        }
    }

    std::size_t size() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n + i; }
    Point center(int i, int j) const { return {(i + 0.5) * spacing, (j + 0.5) * spacing}; }

    /// Cell containing p (clamped into the grid).
    std::pair<int, int> cell_of(Point p) const {
        auto clamp = [this](double u) {
            const int k = static_cast<int>(std::floor(u * n));
            return k < 0 ? 0 : (k >= n ? n - 1 : k);
        };
        return {clamp(p.x), clamp(p.y)};
    }

    bool operator==(const Grid&) const = default;
};

/// A sampled field on a grid; immutable once produced by a sampler.
struct GridField {
    Grid grid;
    std::vector<double> values;
    std::uint64_t seed = 0;

    GridField() = default;
    GridField(Grid g, std::uint64_t s = 0) : grid(g), values(g.size(), 0.0), seed(s) {}

    double at(int i, int j) const { return values[grid.index(i, j)]; }
    double& at(int i, int j) { return values[grid.index(i, j)]; }

    /// Value at a lattice index extended beyond the grid by reflection across
    /// the cell faces of the boundary: odd for Dirichlet, even for free.
    double extended(int i, int j) const {
        double sign = 1.0;
        const double flip = grid.bc == BoundaryCondition::dirichlet ? -1.0 : 1.0;
        const int n = grid.n;
        auto fold = [&](int k) {
            while (k < 0 || k >= n) {
                k = k < 0 ? -1 - k : 2 * n - 1 - k;
                sign *= flip;
            }
            return k;
        };
        i = fold(i);
        j = fold(j);
        return sign * at(i, j);
    }

    /// Bilinear interpolation between cell centres, using the reflected
    /// extension near and beyond the boundary.
    double interpolate(Point p) const {
        const double u = p.x * grid.n - 0.5;
        const double v = p.y * grid.n - 0.5;
        const double fu = std::floor(u);
        const double fv = std::floor(v);
        const int i0 = static_cast<int>(fu);
        const int j0 = static_cast<int>(fv);
        const double tx = u - fu;
        const double ty = v - fv;
        const int n = grid.n;
        double f00, f10, f01, f11;
        if (i0 >= 0 && j0 >= 0 && i0 + 1 < n && j0 + 1 < n) {
            const double* row0 = values.data() + grid.index(i0, j0);
            const double* row1 = row0 + n;
            f00 = row0[0];
            f10 = row0[1];
            f01 = row1[0];
            f11 = row1[1];
        } else {
            f00 = extended(i0, j0);
            f10 = extended(i0 + 1, j0);
            f01 = extended(i0, j0 + 1);
            f11 = extended(i0 + 1, j0 + 1);
        }
        return (1.0 - ty) * ((1.0 - tx) * f00 + tx * f10) + ty * ((1.0 - tx) * f01 + tx * f11);
    }
};

// Binary field dump: "LQGF", u32 version, u32 n, u32 bc, u64 seed, then n*n
// little-endian doubles in row-major order. Density grids use the same layout.
namespace io {

inline constexpr char kMagic[4] = {'L', 'Q', 'G', 'F'};
inline constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ofstream& out, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get_le(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("field file truncated");
    return v;
}

inline void write_field(const std::string& path, const GridField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.n));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.bc));
    put_le<std::uint64_t>(out, f.seed);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline GridField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error(path + ": not a field file");
    if (get_le<std::uint32_t>(in) != kVersion) throw std::runtime_error(path + ": unsupported version");
    const auto n = get_le<std::uint32_t>(in);
    const auto bc = get_le<std::uint32_t>(in);
    if (bc > 1) throw std::runtime_error(path + ": bad boundary tag");
    GridField f(Grid(static_cast<int>(n), static_cast<BoundaryCondition>(bc)), get_le<std::uint64_t>(in));
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": field data truncated");
    return f;
}

}  // namespace io
}  // namespace lqg
