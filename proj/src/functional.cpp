#include "plumetrace/functional.hpp"

#include <stdexcept>

namespace plumetrace::rfunc {

namespace {

// trapezoid weights over the minus-window levels 0..nt_minus
double minus_time_weight(const TimeMesh& mesh, int level) {
    const double dt = mesh.dt_minus();
    return (level == 0 || level == mesh.nt_minus) ? 0.5 * dt : dt;
}

double plus_time_weight(const TimeMesh& mesh, int level_in_plus) {
    const double dt = mesh.dt_plus();
    return (level_in_plus == 0 || level_in_plus == mesh.nt_plus) ? 0.5 * dt : dt;
}

}  // namespace

Complex r_boundary_term(const BoundaryTrace& trace, const cgo::CGOFunction& v, double kappa) {
    const Grid2D& grid = trace.grid;
    const TimeMesh& mesh = trace.mesh;
    Complex sum{0.0, 0.0};
    for (Edge e : all_edges) {
        const auto& phi = trace.edge(e);
        const Vec2 n = edge_normal(e);
        const Complex rho_n = v.rho.x() * n.x() + v.rho.y() * n.y();
        const int nodes = edge_nodes(grid, e);
        for (int k = 0; k < nodes; ++k) {
            const double wk = edge_weight(grid, e, k);
            const Vec2 x = edge_point(grid, e, k);
            Complex acc{0.0, 0.0};
            for (int i = 0; i <= mesh.nt_minus; ++i)
                acc += minus_time_weight(mesh, i) * phi(k, i) * v.eval(x, mesh.level_time(i));
            sum += wk * rho_n * acc;
        }
    }
    return kappa * sum;
}

namespace {

template <typename FluxT>
Complex control_term_impl(const BoundaryTrace& trace, const FluxT& omega) {
    if (!omega.grid.same_as(trace.grid) || !omega.mesh.same_as(trace.mesh))
        throw std::invalid_argument("r_control_term: flux sampled on a mismatched mesh");
    const Grid2D& grid = trace.grid;
    const TimeMesh& mesh = trace.mesh;
    const int start = mesh.level_of_tstar();
    Complex sum{0.0, 0.0};
    for (Edge e : all_edges) {
        const auto& phi = trace.edge(e);
        const auto& w = omega.edge(e);
        const int nodes = edge_nodes(grid, e);
        for (int k = 0; k < nodes; ++k) {
            const double wk = edge_weight(grid, e, k);
            Complex acc{0.0, 0.0};
            for (int i = 0; i <= mesh.nt_plus; ++i)
                acc += plus_time_weight(mesh, i) * phi(k, start + i) * Complex(w(k, i));
            sum += wk * acc;
        }
    }
    return sum;
}

}  // namespace

Complex r_control_term(const BoundaryTrace& trace, const SigmaPlusFlux& omega) {
    return control_term_impl(trace, omega);
}

Complex r_control_term(const BoundaryTrace& trace, const SigmaPlusFluxC& omega) {
    return control_term_impl(trace, omega);
}

RValue evaluate_R(const BoundaryTrace& trace, const cgo::CGOFunction& v,
                  const control::ControlCache& cache, double kappa,
                  const EvaluateOptions& options) {
    if (!cache.grid.same_as(trace.grid) || !cache.mesh.same_as(trace.mesh))
        throw std::invalid_argument("evaluate_R: cache fingerprint does not match the trace mesh");

    const Grid2D& grid = trace.grid;
    const TimeMesh& mesh = trace.mesh;

    // target p = v(., T*) on the grid
    ComplexField target(grid.n_nodes());
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
            target[grid.index(ix, iy)] = v.eval(grid.node(ix, iy), mesh.t_star);

    const auto coeffs = control::fit_control(cache, target, options.fit);
    const SigmaPlusFluxC omega = control::assemble_control(coeffs, cache);

    RValue out;
    out.boundary_term = r_boundary_term(trace, v, kappa);
    out.control_term = r_control_term(trace, omega);
    out.value = out.boundary_term + out.control_term;
    out.fit_residual_re = coeffs.re.relative_residual();
    out.fit_residual_im = coeffs.im.relative_residual();
    const double target_norm = std::sqrt(coeffs.re.target_norm * coeffs.re.target_norm +
                                         coeffs.im.target_norm * coeffs.im.target_norm);
    if (target_norm > 0.0) {
        const double residual = std::sqrt(coeffs.re.residual * coeffs.re.residual +
                                          coeffs.im.residual * coeffs.im.residual);
        out.quality_warning = residual / target_norm > options.warn_residual;
    }
    return out;
}

Complex oracle_R_direct(const SourceSet& theta, const cgo::CGOFunction& v) {
    Complex sum{0.0, 0.0};
    const int n = static_cast<int>(theta.times.size());
    for (const auto& src : theta.sources) {
        Complex acc{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const double w = (i == 0 || i == n - 1)
                                 ? 0.5 * (i == 0 ? theta.times[1] - theta.times[0]
                                                 : theta.times[n - 1] - theta.times[n - 2])
                                 : 0.5 * (theta.times[i + 1] - theta.times[i - 1]);
            acc += w * src.intensity[i] * v.eval(src.position, theta.times[i]);
        }
        sum += acc;
    }
    return sum;
}

}  // namespace plumetrace::rfunc
