#pragma once

#include <array>
#include <complex>
#include <string>

#include "plumetrace/grid.hpp"

namespace plumetrace {

/// Boundary measurement phi = u|_Sigma sampled at every boundary node and
/// every time level of a TimeMesh. Corner nodes appear in both adjacent
/// edges and must agree.
struct BoundaryTrace {
    Grid2D grid;
    TimeMesh mesh;
    double kappa = 0.0;
    // edges[e] has shape (edge_nodes, n_levels)
    std::array<Eigen::MatrixXd, 4> edges;

    BoundaryTrace() = default;
    BoundaryTrace(const Grid2D& g, const TimeMesh& m, double kappa_)
        : grid(g), mesh(m), kappa(kappa_) {
        for (Edge e : all_edges)
            edges[static_cast<int>(e)] = Eigen::MatrixXd::Zero(edge_nodes(g, e), m.n_levels());
    }

    Eigen::MatrixXd& edge(Edge e) { return edges[static_cast<int>(e)]; }
    const Eigen::MatrixXd& edge(Edge e) const { return edges[static_cast<int>(e)]; }

    int n_levels() const { return mesh.n_levels(); }

    /// Max corner mismatch between adjacent edges over all time levels.
    double corner_mismatch() const;
    double rms() const;
    bool all_finite() const;
};

/// Neumann flux data on Sigma+ = boundary x (T*,T], sampled at the plus-window
/// levels (nt_plus+1 of them, level 0 = T*).
template <typename Scalar>
struct SigmaPlusFluxT {
    Grid2D grid;
    TimeMesh mesh;
    std::array<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>, 4> edges;

    SigmaPlusFluxT() = default;
    SigmaPlusFluxT(const Grid2D& g, const TimeMesh& m) : grid(g), mesh(m) {
        for (Edge e : all_edges)
            edges[static_cast<int>(e)].setZero(edge_nodes(g, e), m.nt_plus + 1);
    }

    auto& edge(Edge e) { return edges[static_cast<int>(e)]; }
    const auto& edge(Edge e) const { return edges[static_cast<int>(e)]; }

    int n_levels() const { return mesh.nt_plus + 1; }
    double level_time(int i) const { return mesh.t_star + i * mesh.dt_plus(); }
};

using SigmaPlusFlux = SigmaPlusFluxT<double>;
using SigmaPlusFluxC = SigmaPlusFluxT<std::complex<double>>;

// --- Trace container I/O (binary JSON-header format and CSV export) ---

void save_trace(const BoundaryTrace& trace, const std::string& path);
BoundaryTrace load_trace(const std::string& path);
void export_trace_csv(const BoundaryTrace& trace, const std::string& path);

}  // namespace plumetrace
