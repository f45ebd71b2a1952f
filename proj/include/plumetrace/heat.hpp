#pragma once

#include "plumetrace/grid.hpp"
#include "plumetrace/sources.hpp"
#include "plumetrace/trace.hpp"

namespace plumetrace::heat {

/// Constant coefficients of the advection-reaction-diffusion model
/// du/dt - kappa Lap(u) + v . grad(u) + gamma u = F.
struct TransportParams {
    Vec2 velocity{0.0, 0.0};
    double gamma = 0.0;
    double kappa = 1.0;
};

struct ForwardResult {
    BoundaryTrace trace;
    Field u_tstar;
    Field u_final;
};

/// Forward heat solve on [0,T]: du/dt = kappa Lap(u) + F, u(0) = 0, zero
/// Neumann flux. Peaceman-Rachford ADI, second order in space and time,
/// unconditionally stable. Returns the boundary trace and interior snapshots.
ForwardResult solve_forward(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                            const DiscreteSource& source);

/// Pure Neumann-flux forward run over `nt` steps of size `dt` starting from
/// `initial`: du/dt = kappa Lap(u), kappa du/dn = flux. `flux_edges[e]` has one
/// column per level 0..nt; per-step flux is the average of bracketing levels.
Field solve_forward_neumann(const Grid2D& grid, double dt, int nt, double kappa,
                            const std::array<Eigen::MatrixXd, 4>& flux_edges,
                            const Field& initial);

/// Backward adjoint solve on (T*,T): d psi/dt + kappa Lap(psi) = 0,
/// kappa d psi/dn = flux, psi(T) = 0. Substitutes tau = T - t and runs
/// solve_forward_neumann on the time-reversed flux. Returns psi(., T*).
Field solve_adjoint_backward(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                             const SigmaPlusFlux& flux);

/// Change of variables removing constant advection and reaction: positions are
/// unchanged and each intensity becomes
/// g_j(t) * exp(-v.s_j/(2 kappa) + (gamma + v.v/(4 kappa)) t).
/// The returned sources drive the pure-diffusion system whose solution u1
/// satisfies u = exp(v.x/(2 kappa) - (gamma + v.v/(4 kappa)) t) u1.
SourceSet transform_to_heat(const TransportParams& params, const SourceSet& sources);

}  // namespace plumetrace::heat
