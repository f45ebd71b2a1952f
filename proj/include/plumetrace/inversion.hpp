#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "plumetrace/cgo.hpp"
#include "plumetrace/grid.hpp"
#include "plumetrace/sources.hpp"
#include "plumetrace/trace.hpp"

namespace plumetrace::inversion {

using Complex = std::complex<double>;

/// Linear system of one Fourier mode, rows = test functions, cols = sources,
/// entries A[l,j] = exp(rho_l . s_j).
struct ModeSystem {
    int k = 0;
    Eigen::MatrixXcd A;
    Eigen::VectorXcd R;
};

ModeSystem assemble_mode_system(int k, const std::vector<cgo::CGOFunction>& directions,
                                const std::vector<Vec2>& positions, const Eigen::VectorXcd& r_values);

/// Recovered Fourier coefficients Lambda_k (half-frequency convention,
/// lambda_j(k) = int_0^{T*} g_j(t) exp(-i k pi t / T*) dt; k = 0 coincides
/// with the total intensity).
struct FourierTable {
    double t_star = 0.0;
    // coefficients[k] is the m-vector Lambda_k, k = 0..K
    std::vector<Eigen::VectorXcd> coefficients;

    int max_mode() const { return static_cast<int>(coefficients.size()) - 1; }
    int source_count() const { return coefficients.empty() ? 0 : static_cast<int>(coefficients[0].size()); }
};

struct LocateOptions {
    int restarts = 50;
    std::uint64_t seed = 0;
    double merge_radius_rel = 0.02;     // fraction of diag(Omega)
    double intensity_floor_rel = 0.01;  // fraction of max |lambda0|
    int max_lm_iterations = 300;
    double position_tolerance_rel = 1e-9;  // LM step tolerance, fraction of diag
    int threads = 0;
};

struct RestartDiagnostics {
    int index = 0;
    double objective = 0.0;
    int iterations = 0;
};

struct LocateResult {
    int m = 0;
    std::vector<Vec2> positions;
    Eigen::VectorXd lambda0;
    bool no_detectable_source = false;
    double objective = 0.0;       // best ||A0 Lambda0 - R0||^2
    double zero_objective = 0.0;  // ||R0||^2
    int rounds = 0;               // pruning rounds
    std::vector<RestartDiagnostics> restarts;
};

/// Step (ii): multistart variable-projection least squares over source
/// positions (box-constrained to Omega) with Lambda0 eliminated by an inner
/// real least-squares solve, followed by merge/drop pruning and re-solves at
/// the reduced count until stable.
LocateResult locate_sources(const Eigen::VectorXcd& r0, int M, const Grid2D& grid,
                            const LocateOptions& options = {});

struct ModeSolve {
    Eigen::VectorXcd lambda;
    double residual = 0.0;        // ||A lambda - R||_2
    double condition = 0.0;       // sigma_max / sigma_min of A
    bool ill_conditioned = false; // condition above 1e12 (still solved)
};

/// Step (iii): least-squares solve of A_k Lambda_k = R_k for fixed (m, S).
/// Negative k is handled by conjugation (Lambda_{-k} = conj(Lambda_k)).
ModeSolve recover_fourier(const ModeSystem& system);

/// Truncated series of the even periodic extension over [-T*, T*]:
/// g_j(t) = max(0, (1/T*) [Re lambda_j(0) + 2 Sum_k Re lambda_j(k) cos(k pi t/T*)]).
/// Returns one sampled curve per source on `samples` uniform points of [0, T*].
std::vector<Eigen::VectorXd> inverse_fourier_intensities(const FourierTable& table,
                                                         double t_star, int samples);

/// Forward-solve provider for the intensity-basis traces: given a source
/// position and intensity samples at the solver levels of [0,T*], returns the
/// boundary trace of the unit problem.
using ForwardTraceFn =
    std::function<BoundaryTrace(const Vec2& position, const Eigen::VectorXd& samples)>;

struct ApproximateOptions {
    int max_iterations = 1000;  // fit cap, same convention as the control fit
    double tolerance = 1e-13;
    int threads = 0;
};

struct ApproximateResult {
    std::vector<Eigen::VectorXd> intensities;  // per source, nonnegative
    Eigen::MatrixXd coefficients;              // (2L+1) x m, basis-major
    double residual = 0.0;                     // ||Sum b phi_lj - phi||_{L2(Sigma)}
    double trace_norm = 0.0;
    int iterations = 0;
};

/// Step (iv): fit the measured trace with the (2L+1)*m basis traces generated
/// by h_0 = 1, h(t) = cos(l pi t/T*), sin(l pi t/T*), l = 1..L, then rebuild
/// g_j = Sum_l b_lj h_l and truncate negatives.
ApproximateResult approximate_intensities(const std::vector<Vec2>& positions,
                                          const BoundaryTrace& trace, int L,
                                          const ForwardTraceFn& forward,
                                          const ApproximateOptions& options = {});

struct GershgorinBall {
    Complex center;
    double radius = 0.0;
};

/// Weighted column balls B(a_jj, p_j Sum_{l != j} |a_lj| / p_l); every
/// eigenvalue of A lies in their union.
std::vector<GershgorinBall> gershgorin_balls(const Eigen::MatrixXcd& A,
                                             const Eigen::VectorXd& p);

/// C(m; delta, r) = 1 - (m-1) exp(-r delta^2 / 2); requires the value to be
/// positive, i.e. delta > sqrt(2 ln(m-1) / r).
double stability_constant(int m, double delta, double r);

/// Spectral diagnostics of a source layout under source-adapted directions.
struct StabilityReport {
    double delta = 0.0;  // min pairwise distance
    double r = 0.0;
    double constant = 0.0;     // C(m; delta, r), 0 when the bound is vacuous
    double min_abs_eigenvalue = 0.0;
    std::vector<GershgorinBall> balls;
};

StabilityReport stability_report(const std::vector<Vec2>& positions, double r, double t_star,
                                 double kappa = 1.0);

/// Minimum-cost assignment between recovered and true positions (brute force,
/// m <= 9). Returns perm with recovered[i] matched to truth[perm[i]].
std::vector<int> best_assignment(const std::vector<Vec2>& recovered,
                                 const std::vector<Vec2>& truth);

/// ||S - S_hat||_2 / ||S||_2 over the stacked coordinates after optimal
/// assignment.
double position_error(const std::vector<Vec2>& recovered, const std::vector<Vec2>& truth);

}  // namespace plumetrace::inversion
