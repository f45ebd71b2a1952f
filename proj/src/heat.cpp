#include "plumetrace/heat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace plumetrace {

DiscreteSource deposit_point_source(const Grid2D& grid, const Vec2& position,
                                    const Eigen::VectorXd& intensity_samples) {
    if (!grid.contains_interior(position))
        throw std::invalid_argument("deposit_point_source: position must be strictly inside the domain");

    const double hx = grid.hx();
    const double hy = grid.hy();
    int ix = static_cast<int>(position.x() / hx);
    int iy = static_cast<int>(position.y() / hy);
    ix = std::min(ix, grid.nx - 2);
    iy = std::min(iy, grid.ny - 2);
    const double wx = position.x() / hx - ix;
    const double wy = position.y() / hy - iy;

    DiscreteSource::Point p;
    p.nodes = {grid.index(ix, iy), grid.index(ix + 1, iy), grid.index(ix, iy + 1),
               grid.index(ix + 1, iy + 1)};
    p.weights = {(1.0 - wx) * (1.0 - wy), wx * (1.0 - wy), (1.0 - wx) * wy, wx * wy};

    const Field area = grid.cell_weights();
    for (int c = 0; c < 4; ++c) p.loads[c] = p.weights[c] / area[p.nodes[c]];
    p.samples = intensity_samples;

    DiscreteSource src;
    src.active_levels = static_cast<int>(intensity_samples.size());
    src.points.push_back(p);
    return src;
}

namespace heat {

namespace {

// Factorization of (I - a * Lap1d) with ghost-node Neumann closure. The
// matrix is constant across rows and steps, so the Thomas sweep coefficients
// are precomputed once.
struct TridiagFactor {
    Eigen::VectorXd cp;       // modified superdiagonal
    Eigen::VectorXd inv_piv;  // 1 / pivot
    Eigen::VectorXd sub;      // subdiagonal
    int n = 0;

    void init(int n_, double a) {
        n = n_;
        cp.resize(n - 1);
        inv_piv.resize(n);
        sub.resize(n);
        const double diag = 1.0 + 2.0 * a;
        sub[0] = 0.0;
        for (int i = 1; i < n; ++i) sub[i] = (i == n - 1) ? -2.0 * a : -a;

        double piv = diag;
        inv_piv[0] = 1.0 / piv;
        cp[0] = -2.0 * a / piv;  // first superdiagonal entry is -2a
        for (int i = 1; i < n; ++i) {
            piv = diag - sub[i] * cp[i - 1];
            inv_piv[i] = 1.0 / piv;
            if (i < n - 1) cp[i] = -a * inv_piv[i];
        }
    }

    void solve(double* x, int stride) const {
        x[0] *= inv_piv[0];
        for (int i = 1; i < n; ++i)
            x[i * stride] = (x[i * stride] - sub[i] * x[(i - 1) * stride]) * inv_piv[i];
        for (int i = n - 2; i >= 0; --i) x[i * stride] -= cp[i] * x[(i + 1) * stride];
    }
};

// Second difference along x with Neumann doubling, scaled by `a`, added into out.
void add_lap_x(const Grid2D& g, double a, const Field& u, Field& out) {
    const int nx = g.nx, ny = g.ny;
    for (int iy = 0; iy < ny; ++iy) {
        const double* row = u.data() + iy * nx;
        double* o = out.data() + iy * nx;
        o[0] += a * 2.0 * (row[1] - row[0]);
        for (int ix = 1; ix < nx - 1; ++ix)
            o[ix] += a * (row[ix - 1] - 2.0 * row[ix] + row[ix + 1]);
        o[nx - 1] += a * 2.0 * (row[nx - 2] - row[nx - 1]);
    }
}

void add_lap_y(const Grid2D& g, double a, const Field& u, Field& out) {
    const int nx = g.nx, ny = g.ny;
    for (int iy = 0; iy < ny; ++iy) {
        const double* row = u.data() + iy * nx;
        const double* below = u.data() + (iy == 0 ? 1 : iy - 1) * nx;
        const double* above = u.data() + (iy == ny - 1 ? ny - 2 : iy + 1) * nx;
        double* o = out.data() + iy * nx;
        if (iy == 0 || iy == ny - 1) {
            for (int ix = 0; ix < nx; ++ix) o[ix] += a * 2.0 * (below[ix] - row[ix]);
        } else {
            for (int ix = 0; ix < nx; ++ix)
                o[ix] += a * (below[ix] - 2.0 * row[ix] + above[ix]);
        }
    }
}

// Inhomogeneous Neumann flux enters the ghost closure as a boundary source
// 2*omega/h per unit kappa-scaled Laplacian; accumulated here directly as the
// source-term contribution (independent of kappa).
void add_flux_term(const Grid2D& g, const std::array<Eigen::MatrixXd, 4>& flux, int lo, int hi,
                   double scale, Field& out) {
    for (Edge e : all_edges) {
        const auto& f = flux[static_cast<int>(e)];
        if (f.size() == 0) continue;
        // ghost spacing is perpendicular to the edge
        const double h_perp = (e == Edge::South || e == Edge::North) ? g.hy() : g.hx();
        const double c = scale * 2.0 / h_perp;
        const int n = edge_nodes(g, e);
        for (int kn = 0; kn < n; ++kn) {
            const double w = 0.5 * (f(kn, lo) + f(kn, hi));
            out[edge_node_index(g, e, kn)] += c * w;
        }
    }
}

struct StepContext {
    const Grid2D* grid;
    double kappa;
    double dt;
    TridiagFactor fx;
    TridiagFactor fy;

    void init(const Grid2D& g, double kappa_, double dt_) {
        grid = &g;
        kappa = kappa_;
        dt = dt_;
        fx.init(g.nx, kappa * dt / (2.0 * g.hx() * g.hx()));
        fy.init(g.ny, kappa * dt / (2.0 * g.hy() * g.hy()));
    }

    // One Peaceman-Rachford step; `source` is the combined midpoint source
    // (interior loads + flux boundary terms).
    void advance(Field& u, const Field& source, Field& work) const {
        const Grid2D& g = *grid;
        const double ax = kappa * dt / (2.0 * g.hx() * g.hx());
        const double ay = kappa * dt / (2.0 * g.hy() * g.hy());

        // (I - ax Lx) u* = u + ay Ly u + (dt/2) S
        work = u + 0.5 * dt * source;
        add_lap_y(g, ay, u, work);
        for (int iy = 0; iy < g.ny; ++iy) fx.solve(work.data() + iy * g.nx, 1);

        // (I - ay Ly) u+ = u* + ax Lx u* + (dt/2) S
        u = work + 0.5 * dt * source;
        add_lap_x(g, ax, work, u);
        for (int ix = 0; ix < g.nx; ++ix) fy.solve(u.data() + ix, g.nx);
    }
};

void check_finite(const Field& u, double t) {
    if (!u.allFinite())
        throw std::runtime_error("heat solver: non-finite values at t = " + std::to_string(t) +
                                 " (bad step size or corrupt source)");
}

void record_trace_level(const Grid2D& g, const Field& u, int level, BoundaryTrace& trace) {
    for (Edge e : all_edges) {
        auto& m = trace.edge(e);
        const int n = edge_nodes(g, e);
        for (int k = 0; k < n; ++k) m(k, level) = u[edge_node_index(g, e, k)];
    }
}

}  // namespace

ForwardResult solve_forward(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                            const DiscreteSource& source) {
    if (!(kappa > 0.0)) throw std::invalid_argument("solve_forward: kappa > 0 required");

    ForwardResult result;
    result.trace = BoundaryTrace(grid, mesh, kappa);

    Field u = Field::Zero(grid.n_nodes());
    Field load(grid.n_nodes());
    Field work(grid.n_nodes());
    record_trace_level(grid, u, 0, result.trace);

    StepContext ctx;
    ctx.init(grid, kappa, mesh.dt_minus());
    const int active = source.active_levels;  // levels 0..nt_minus carry intensity

    for (int s = 0; s < mesh.nt_minus + mesh.nt_plus; ++s) {
        if (s == mesh.nt_minus && mesh.dt_plus() != mesh.dt_minus())
            ctx.init(grid, kappa, mesh.dt_plus());
        load.setZero();
        if (s + 1 < active) {
            // step fully inside [0, T*]: midpoint load = average of levels s, s+1
            for (const auto& p : source.points) {
                const double gmid = 0.5 * (p.samples[s] + p.samples[s + 1]);
                for (int c = 0; c < 4; ++c) load[p.nodes[c]] += gmid * p.loads[c];
            }
        }
        ctx.advance(u, load, work);
        check_finite(u, mesh.level_time(s + 1));
        record_trace_level(grid, u, s + 1, result.trace);
        if (s + 1 == mesh.nt_minus) result.u_tstar = u;
    }
    result.u_final = u;
    if (result.u_tstar.size() == 0) result.u_tstar = u;
    return result;
}

Field solve_forward_neumann(const Grid2D& grid, double dt, int nt, double kappa,
                            const std::array<Eigen::MatrixXd, 4>& flux_edges,
                            const Field& initial) {
    if (!(kappa > 0.0)) throw std::invalid_argument("solve_forward_neumann: kappa > 0 required");
    for (Edge e : all_edges) {
        const auto& f = flux_edges[static_cast<int>(e)];
        if (f.rows() != edge_nodes(grid, e) || f.cols() != nt + 1)
            throw std::invalid_argument("solve_forward_neumann: flux sampled on a mismatched mesh");
    }

    Field u = initial.size() ? initial : Field::Zero(grid.n_nodes());
    Field source(grid.n_nodes());
    Field work(grid.n_nodes());

    StepContext ctx;
    ctx.init(grid, kappa, dt);
    for (int s = 0; s < nt; ++s) {
        source.setZero();
        add_flux_term(grid, flux_edges, s, s + 1, 1.0, source);
        ctx.advance(u, source, work);
        check_finite(u, (s + 1) * dt);
    }
    return u;
}

Field solve_adjoint_backward(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                             const SigmaPlusFlux& flux) {
    if (!flux.grid.same_as(grid) || !flux.mesh.same_as(mesh))
        throw std::invalid_argument("solve_adjoint_backward: flux sampled on a mismatched mesh");
    const int nt = mesh.nt_plus;
    // tau = T - t turns the terminal-value adjoint system into a forward
    // Neumann run; reverse the flux levels accordingly.
    std::array<Eigen::MatrixXd, 4> reversed;
    for (Edge e : all_edges) {
        const auto& f = flux.edge(e);
        Eigen::MatrixXd r(f.rows(), f.cols());
        for (int c = 0; c <= nt; ++c) r.col(c) = f.col(nt - c);
        reversed[static_cast<int>(e)] = std::move(r);
    }
    return solve_forward_neumann(grid, mesh.dt_plus(), nt, kappa, reversed, Field());
}

SourceSet transform_to_heat(const TransportParams& params, const SourceSet& sources) {
    if (!(params.kappa > 0.0))
        throw std::invalid_argument("transform_to_heat: kappa > 0 required");
    SourceSet out = sources;
    const double c = params.gamma +
                     params.velocity.squaredNorm() / (4.0 * params.kappa);
    for (auto& src : out.sources) {
        const double pos_factor =
            std::exp(-params.velocity.dot(src.position) / (2.0 * params.kappa));
        for (int i = 0; i < src.intensity.size(); ++i)
            src.intensity[i] *= pos_factor * std::exp(c * out.times[i]);
    }
    return out;
}

}  // namespace heat
}  // namespace plumetrace
