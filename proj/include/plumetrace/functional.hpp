#pragma once

#include <complex>

#include "plumetrace/cgo.hpp"
#include "plumetrace/control.hpp"
#include "plumetrace/sources.hpp"
#include "plumetrace/trace.hpp"

namespace plumetrace::rfunc {

using Complex = std::complex<double>;

/// One evaluation of the data functional R(v) = boundary term + control term.
struct RValue {
    Complex value{0.0, 0.0};
    Complex boundary_term{0.0, 0.0};
    Complex control_term{0.0, 0.0};
    double fit_residual_re = 0.0;  // relative L2 residual of the control fit
    double fit_residual_im = 0.0;
    bool quality_warning = false;
    int id = -1;
};

/// kappa * int over Sigma- of phi dv/dn dsigma, composite trapezoid in
/// arclength and time (corners weighted half per adjacent edge).
Complex r_boundary_term(const BoundaryTrace& trace, const cgo::CGOFunction& v, double kappa);

/// int over Sigma+ of phi omega dsigma, trapezoid quadrature.
Complex r_control_term(const BoundaryTrace& trace, const SigmaPlusFlux& omega);
Complex r_control_term(const BoundaryTrace& trace, const SigmaPlusFluxC& omega);

struct EvaluateOptions {
    control::FitOptions fit;
    double warn_residual = 1e-2;  // relative fit residual above this sets the flag
};

/// Full evaluation: fit the boundary control for v(.,T*) against the cache,
/// assemble omega and combine both quadratures.
RValue evaluate_R(const BoundaryTrace& trace, const cgo::CGOFunction& v,
                  const control::ControlCache& cache, double kappa,
                  const EvaluateOptions& options = {});

/// Interior oracle (test/ground-truth only):
/// R(v) = Sum_j int_0^{T*} g_j(t) v(s_j, t) dt by trapezoid on theta's samples.
Complex oracle_R_direct(const SourceSet& theta, const cgo::CGOFunction& v);

}  // namespace plumetrace::rfunc
