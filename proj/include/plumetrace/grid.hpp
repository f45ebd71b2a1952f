#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace plumetrace {

using Field = Eigen::VectorXd;         // nodal scalar field, index = iy*nx + ix
using ComplexField = Eigen::VectorXcd;
using Vec2 = Eigen::Vector2d;

/// Uniform tensor grid on the rectangle [0,Lx] x [0,Ly].
struct Grid2D {
    double lx = 0.0;
    double ly = 0.0;
    int nx = 0;
    int ny = 0;

    Grid2D() = default;
    Grid2D(double lx_, double ly_, int nx_, int ny_) : lx(lx_), ly(ly_), nx(nx_), ny(ny_) {
        if (nx < 3 || ny < 3)
            throw std::invalid_argument("Grid2D: need at least 3 nodes per axis");
        if (!(lx > 0.0) || !(ly > 0.0))
            throw std::invalid_argument("Grid2D: domain side lengths must be positive");
    }

    double hx() const { return lx / (nx - 1); }
    double hy() const { return ly / (ny - 1); }
    double diag() const { return std::hypot(lx, ly); }
    int n_nodes() const { return nx * ny; }

    int index(int ix, int iy) const { return iy * nx + ix; }
    double x(int ix) const { return ix * hx(); }
    double y(int iy) const { return iy * hy(); }
    Vec2 node(int ix, int iy) const { return {x(ix), y(iy)}; }

    bool is_boundary(int ix, int iy) const {
        return ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
    }
    bool contains_interior(const Vec2& p) const {
        return p.x() > 0.0 && p.x() < lx && p.y() > 0.0 && p.y() < ly;
    }

    /// Trapezoid cell weights: w_i = hx*hy scaled by 1/2 per boundary axis.
    /// sum(w) == lx*ly; used as the discrete L2(Omega) inner product.
    Field cell_weights() const {
        Field w(n_nodes());
        const double a = hx() * hy();
        for (int iy = 0; iy < ny; ++iy) {
            const double fy = (iy == 0 || iy == ny - 1) ? 0.5 : 1.0;
            for (int ix = 0; ix < nx; ++ix) {
                const double fx = (ix == 0 || ix == nx - 1) ? 0.5 : 1.0;
                w[index(ix, iy)] = a * fx * fy;
            }
        }
        return w;
    }

    bool same_as(const Grid2D& o) const {
        return lx == o.lx && ly == o.ly && nx == o.nx && ny == o.ny;
    }
};

/// Observation window [0,T] split at the inactivity time T*:
/// nt_minus steps on (0,T*), nt_plus steps on (T*,T).
struct TimeMesh {
    double t_star = 0.0;
    double t_final = 0.0;
    int nt_minus = 0;
    int nt_plus = 0;

    TimeMesh() = default;
    TimeMesh(double t_star_, double t_final_, int nt_minus_, int nt_plus_)
        : t_star(t_star_), t_final(t_final_), nt_minus(nt_minus_), nt_plus(nt_plus_) {
        if (!(t_star > 0.0) || !(t_final > t_star))
            throw std::invalid_argument("TimeMesh: need 0 < T* < T");
        if (nt_minus < 1 || nt_plus < 1)
            throw std::invalid_argument("TimeMesh: need at least one step per window");
    }

    double dt_minus() const { return t_star / nt_minus; }
    double dt_plus() const { return (t_final - t_star) / nt_plus; }
    int n_levels() const { return nt_minus + nt_plus + 1; }
    int level_of_tstar() const { return nt_minus; }

    double level_time(int i) const {
        if (i <= nt_minus) return i * dt_minus();
        return t_star + (i - nt_minus) * dt_plus();
    }

    bool same_as(const TimeMesh& o) const {
        return t_star == o.t_star && t_final == o.t_final && nt_minus == o.nt_minus &&
               nt_plus == o.nt_plus;
    }
};

/// Edge ids in storage order.
enum class Edge : int { South = 0, North = 1, West = 2, East = 3 };
inline constexpr std::array<Edge, 4> all_edges{Edge::South, Edge::North, Edge::West, Edge::East};

inline const char* edge_name(Edge e) {
    switch (e) {
        case Edge::South: return "south";
        case Edge::North: return "north";
        case Edge::West: return "west";
        case Edge::East: return "east";
    }
    return "?";
}

/// Number of nodes along an edge.
inline int edge_nodes(const Grid2D& g, Edge e) {
    return (e == Edge::South || e == Edge::North) ? g.nx : g.ny;
}

/// Spacing along an edge.
inline double edge_spacing(const Grid2D& g, Edge e) {
    return (e == Edge::South || e == Edge::North) ? g.hx() : g.hy();
}

/// Grid node index of the k-th node of an edge.
inline int edge_node_index(const Grid2D& g, Edge e, int k) {
    switch (e) {
        case Edge::South: return g.index(k, 0);
        case Edge::North: return g.index(k, g.ny - 1);
        case Edge::West: return g.index(0, k);
        case Edge::East: return g.index(g.nx - 1, k);
    }
    return -1;
}

/// Physical position of the k-th node of an edge.
inline Vec2 edge_point(const Grid2D& g, Edge e, int k) {
    switch (e) {
        case Edge::South: return {g.x(k), 0.0};
        case Edge::North: return {g.x(k), g.ly};
        case Edge::West: return {0.0, g.y(k)};
        case Edge::East: return {g.lx, g.y(k)};
    }
    return {0.0, 0.0};
}

/// Outward unit normal of an edge.
inline Vec2 edge_normal(Edge e) {
    switch (e) {
        case Edge::South: return {0.0, -1.0};
        case Edge::North: return {0.0, 1.0};
        case Edge::West: return {-1.0, 0.0};
        case Edge::East: return {1.0, 0.0};
    }
    return {0.0, 0.0};
}

/// Trapezoid arclength weight of the k-th node of an edge. Corner nodes carry
/// half a spacing per adjacent edge, so summing over all four edges integrates
/// once around the closed boundary.
inline double edge_weight(const Grid2D& g, Edge e, int k) {
    const int n = edge_nodes(g, e);
    const double h = edge_spacing(g, e);
    return (k == 0 || k == n - 1) ? 0.5 * h : h;
}

}  // namespace plumetrace
