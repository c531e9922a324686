#ifndef KGMV_GRID_HPP
#define KGMV_GRID_HPP

// Axisymmetric (r, x3) grid, cylindrical quadrature and the discrete
// differential operators shared by every other module.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgmv/errors.hpp"

namespace kgmv {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class AxisBC { Dirichlet0, Neumann0 };
enum class OuterBC { Dirichlet0, Neumann0 };

inline const char* to_string(AxisBC bc) { return bc == AxisBC::Dirichlet0 ? "dirichlet0" : "neumann0"; }
inline const char* to_string(OuterBC bc) { return bc == OuterBC::Dirichlet0 ? "dirichlet0" : "neumann0"; }

/// Cell-centred grid on [0, R] x [-Z, Z]. Node (i, j) sits at
/// r_i = (i + 1/2) dr and x3_j = -Z + (j + 1/2) dz, so no node lies on the axis.
/// Storage is row-major in r: index(i, j) = i * n_z + j.
class AxiGrid {
public:
    AxiGrid(int n_r, int n_z, double R, double Z) : n_r_(n_r), n_z_(n_z), R_(R), Z_(Z) {
        if (n_r < 4 || n_z < 4) throw std::invalid_argument("AxiGrid: n_r and n_z must be >= 4");
        if (!(R > 0.0) || !(Z > 0.0) || !std::isfinite(R) || !std::isfinite(Z))
            throw std::invalid_argument("AxiGrid: extents must be positive and finite");
        dr_ = R / n_r;
        dz_ = 2.0 * Z / n_z;
    }

    int n_r() const noexcept { return n_r_; }
    int n_z() const noexcept { return n_z_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_r_) * n_z_; }
    double R() const noexcept { return R_; }
    double Z() const noexcept { return Z_; }
    double dr() const noexcept { return dr_; }
    double dz() const noexcept { return dz_; }

    double r(int i) const noexcept { return (i + 0.5) * dr_; }
    double z(int j) const noexcept { return -Z_ + (j + 0.5) * dz_; }
    /// Radius of the face between radial cells i and i + 1 (i = -1 is the axis).
    double r_face(int i) const noexcept { return (i + 1) * dr_; }

    std::size_t index(int i, int j) const noexcept { return static_cast<std::size_t>(i) * n_z_ + j; }

    /// Volume of the ring cell around node (i, j): 2 pi r_i dr dz.
    double cell_volume(int i) const noexcept { return two_pi * r(i) * dr_ * dz_; }

    friend bool operator==(const AxiGrid& a, const AxiGrid& b) {
        return a.n_r_ == b.n_r_ && a.n_z_ == b.n_z_ && a.R_ == b.R_ && a.Z_ == b.Z_;
    }

private:
    int n_r_, n_z_;
    double R_, Z_;
    double dr_ = 0.0, dz_ = 0.0;
};

/// Real node data on an AxiGrid together with the boundary behaviour of the
/// quantity it holds.
class ScalarField {
public:
    explicit ScalarField(const AxiGrid& grid, AxisBC axis = AxisBC::Neumann0, OuterBC outer = OuterBC::Dirichlet0)
        : grid_(grid), axis_(axis), outer_(outer), values_(grid.size(), 0.0) {}

    template <class F>
    static ScalarField from_function(const AxiGrid& grid, F&& f, AxisBC axis = AxisBC::Neumann0,
                                     OuterBC outer = OuterBC::Dirichlet0) {
        ScalarField out(grid, axis, outer);
        for (int i = 0; i < grid.n_r(); ++i)
            for (int j = 0; j < grid.n_z(); ++j) out(i, j) = f(grid.r(i), grid.z(j));
        return out;
    }

    /// Same grid and boundary conditions, values set to zero.
    ScalarField zeros_like() const { return ScalarField(grid_, axis_, outer_); }

    const AxiGrid& grid() const noexcept { return grid_; }
    AxisBC axis_bc() const noexcept { return axis_; }
    OuterBC outer_bc() const noexcept { return outer_; }
    void set_axis_bc(AxisBC bc) noexcept { axis_ = bc; }
    void set_outer_bc(OuterBC bc) noexcept { outer_ = bc; }

    std::size_t size() const noexcept { return values_.size(); }
    double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
    double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }
    double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
    double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    AxiGrid grid_;
    AxisBC axis_;
    OuterBC outer_;
    std::vector<double> values_;
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("fields live on different grids");
}

/// 2 pi sum f(r_i, z_j) r_i dr dz.
inline double integrate_volume(const ScalarField& f) {
    const AxiGrid& g = f.grid();
    double total = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        double row = 0.0;
        for (int j = 0; j < g.n_z(); ++j) row += f(i, j);
        total += row * g.cell_volume(i);
    }
    return total;
}

/// Volume integral of a pointwise expression of node index k and radial index i.
template <class F>
double integrate_nodes(const AxiGrid& g, F&& f) {
    double total = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        double row = 0.0;
        for (int j = 0; j < g.n_z(); ++j) row += f(g.index(i, j), i);
        total += row * g.cell_volume(i);
    }
    return total;
}

/// Volume-weighted L2 norm.
inline double l2_norm(const ScalarField& f) {
    return std::sqrt(integrate_nodes(f.grid(), [&](std::size_t k, int) { return f[k] * f[k]; }));
}

/// Symmetric five-point operator S in flux form, so that
///   x^T S x = sum over interior faces c (x_a - x_b)^2 + sum over nodes bdry x^2.
/// c_r[k] couples node k = (i, j) with (i + 1, j); c_z[k] couples (i, j) with (i, j + 1).
/// Boundary faces enter only through `bdry` (ghost-cell closure folded into the diagonal).
struct AxiStencil {
    AxiGrid grid;
    std::vector<double> c_r, c_z, bdry;

    explicit AxiStencil(const AxiGrid& g) : grid(g), c_r(g.size(), 0.0), c_z(g.size(), 0.0), bdry(g.size(), 0.0) {}

    void apply(std::span<const double> x, std::span<double> y) const {
        const int nr = grid.n_r(), nz = grid.n_z();
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nz; ++j) {
                const std::size_t k = grid.index(i, j);
                double acc = bdry[k] * x[k];
                if (i + 1 < nr) acc += c_r[k] * (x[k] - x[k + nz]);
                if (i > 0) acc += c_r[k - nz] * (x[k] - x[k - nz]);
                if (j + 1 < nz) acc += c_z[k] * (x[k] - x[k + 1]);
                if (j > 0) acc += c_z[k - 1] * (x[k] - x[k - 1]);
                y[k] = acc;
            }
        }
    }

    double diagonal(std::size_t k) const {
        const int nz = grid.n_z();
        const int i = static_cast<int>(k / nz), j = static_cast<int>(k % nz);
        double d = bdry[k];
        if (i + 1 < grid.n_r()) d += c_r[k];
        if (i > 0) d += c_r[k - nz];
        if (j + 1 < nz) d += c_z[k];
        if (j > 0) d += c_z[k - 1];
        return d;
    }

    /// 1/2 x^T S x accumulated face by face, hence nonnegative.
    double half_quadratic(std::span<const double> x) const {
        const int nr = grid.n_r(), nz = grid.n_z();
        double acc = 0.0;
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nz; ++j) {
                const std::size_t k = grid.index(i, j);
                acc += bdry[k] * x[k] * x[k];
                if (i + 1 < nr) {
                    const double d = x[k] - x[k + nz];
                    acc += c_r[k] * d * d;
                }
                if (j + 1 < nz) {
                    const double d = x[k] - x[k + 1];
                    acc += c_z[k] * d * d;
                }
            }
        }
        return 0.5 * acc;
    }
};

/// S = W (-Laplacian) for the axisymmetric scalar Laplacian u_rr + u_r/r + u_zz,
/// W the diagonal of cell volumes. Face areas carry the factor r; the axis face
/// has r = 0, so the axis ghost value (odd or even reflection) drops out.
/// Outer faces use a ghost value -u (Dirichlet0) or +u (Neumann0).
inline AxiStencil laplacian_stencil(const AxiGrid& g, OuterBC outer) {
    AxiStencil s(g);
    const int nr = g.n_r(), nz = g.n_z();
    const double dr = g.dr(), dz = g.dz();
    const bool dirichlet = outer == OuterBC::Dirichlet0;
    for (int i = 0; i < nr; ++i) {
        const double cz = two_pi * g.r(i) * dr / dz;
        for (int j = 0; j < nz; ++j) {
            const std::size_t k = g.index(i, j);
            s.c_r[k] = (i + 1 < nr) ? two_pi * g.r_face(i) * dz / dr : 0.0;
            s.c_z[k] = (j + 1 < nz) ? cz : 0.0;
            if (dirichlet) {
                if (i == nr - 1) s.bdry[k] += 2.0 * two_pi * g.R() * dz / dr;
                if (j == 0 || j == nz - 1) s.bdry[k] += 2.0 * cz;
            }
        }
    }
    return s;
}

/// S = W b / r^2 for the reduced curl-curl operator b = -a_rr + a_r/r - a_zz,
/// written as b = -r d/dr (a_r / r) - a_zz. Face coefficients carry 1/r.
/// At the axis a = O(r^2), so the axis flux a_r/r is closed with 2 a_0 / r_0^2,
/// which is exact for a = r^2. Outer faces are Dirichlet0 (ghost -a).
inline AxiStencil magnetic_stencil(const AxiGrid& g) {
    AxiStencil s(g);
    const int nr = g.n_r(), nz = g.n_z();
    const double dr = g.dr(), dz = g.dz();
    const double r0 = g.r(0);
    for (int i = 0; i < nr; ++i) {
        const double cz = two_pi * dr / (dz * g.r(i));
        for (int j = 0; j < nz; ++j) {
            const std::size_t k = g.index(i, j);
            s.c_r[k] = (i + 1 < nr) ? two_pi * dz / (dr * g.r_face(i)) : 0.0;
            s.c_z[k] = (j + 1 < nz) ? cz : 0.0;
            if (i == 0) s.bdry[k] += two_pi * dz * 2.0 / (r0 * r0);
            if (i == nr - 1) s.bdry[k] += 2.0 * two_pi * dz / (dr * g.R());
            if (j == 0 || j == nz - 1) s.bdry[k] += 2.0 * cz;
        }
    }
    return s;
}

/// Delta u = u_rr + u_r/r + u_zz with second-order central differences; ghost
/// values come from the field's boundary conditions.
inline ScalarField laplacian_axisym(const ScalarField& u) {
    const AxiGrid& g = u.grid();
    const AxiStencil s = laplacian_stencil(g, u.outer_bc());
    ScalarField out = u.zeros_like();
    s.apply(u.values(), out.values());
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.cell_volume(i);
        for (int j = 0; j < g.n_z(); ++j) out(i, j) = -out(i, j) / w;
    }
    return out;
}

/// b in curl curl (a grad theta) = b grad theta, b = -a_rr + (1/r) a_r - a_zz.
inline ScalarField magnetic_operator(const ScalarField& a) {
    const AxiGrid& g = a.grid();
    const AxiStencil s = magnetic_stencil(g);
    ScalarField out(g, AxisBC::Dirichlet0, OuterBC::Dirichlet0);
    s.apply(a.values(), out.values());
    for (int i = 0; i < g.n_r(); ++i) {
        const double f = g.r(i) * g.r(i) / g.cell_volume(i);
        for (int j = 0; j < g.n_z(); ++j) out(i, j) *= f;
    }
    return out;
}

/// Centred first derivatives with ghost values from the boundary conditions.
/// Odd reflection across the axis for Dirichlet0, even for Neumann0.
inline ScalarField d_dr(const ScalarField& u) {
    const AxiGrid& g = u.grid();
    ScalarField out = u.zeros_like();
    const double axis_sign = u.axis_bc() == AxisBC::Dirichlet0 ? -1.0 : 1.0;
    const double outer_sign = u.outer_bc() == OuterBC::Dirichlet0 ? -1.0 : 1.0;
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) {
            const double lo = i > 0 ? u(i - 1, j) : axis_sign * u(0, j);
            const double hi = i + 1 < g.n_r() ? u(i + 1, j) : outer_sign * u(i, j);
            out(i, j) = (hi - lo) / (2.0 * g.dr());
        }
    return out;
}

inline ScalarField d_dz(const ScalarField& u) {
    const AxiGrid& g = u.grid();
    ScalarField out = u.zeros_like();
    const double outer_sign = u.outer_bc() == OuterBC::Dirichlet0 ? -1.0 : 1.0;
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) {
            const double lo = j > 0 ? u(i, j - 1) : outer_sign * u(i, j);
            const double hi = j + 1 < g.n_z() ? u(i, j + 1) : outer_sign * u(i, j);
            out(i, j) = (hi - lo) / (2.0 * g.dz());
        }
    return out;
}

struct Recentered {
    ScalarField u;
    std::vector<ScalarField> companions;
    double shift = 0.0;  ///< applied translation along x3 (length)
};

/// Translate u and its companions along x3 by the whole number of nodes
/// closest to -zbar, zbar the u^2-weighted centroid. Vacated rows are zero.
inline Recentered recenter_z(const ScalarField& u, const std::vector<ScalarField>& companions = {}) {
    const AxiGrid& g = u.grid();
    const double mass = integrate_nodes(g, [&](std::size_t k, int) { return u[k] * u[k]; });
    if (!(mass > 0.0)) throw ZeroMass("recenter_z: integral of u^2 vanishes");
    const double first = integrate_nodes(g, [&](std::size_t k, int) {
        return g.z(static_cast<int>(k % g.n_z())) * u[k] * u[k];
    });
    const double zbar = first / mass;
    const int nodes = static_cast<int>(std::lround(-zbar / g.dz()));

    auto translate = [&](const ScalarField& f) {
        require_same_grid(f, u);
        ScalarField out = f.zeros_like();
        for (int i = 0; i < g.n_r(); ++i)
            for (int j = 0; j < g.n_z(); ++j) {
                const int src = j - nodes;
                if (src >= 0 && src < g.n_z()) out(i, j) = f(i, src);
            }
        return out;
    };

    Recentered result{translate(u), {}, nodes * g.dz()};
    result.companions.reserve(companions.size());
    for (const auto& c : companions) result.companions.push_back(translate(c));
    return result;
}

}  // namespace kgmv

#endif  // KGMV_GRID_HPP
