#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "plumetrace/grid.hpp"
#include "plumetrace/trace.hpp"

namespace plumetrace::control {

/// Index triple of one boundary-control basis function, 1 <= eta_j <= W_j.
struct BasisIndex {
    int eta1 = 1;
    int eta2 = 1;
    int eta3 = 1;
};

/// Temporal factor cos(((2 eta3 - 1)/2) pi (t - T*)/(T - T*)); vanishes at T.
double omega_time_factor(int eta3, double t, const TimeMesh& mesh);

/// Spatial factor of omega_eta on an edge node (sign pattern and sine factors
/// of the closed form; the south/west edges carry the minus signs and the
/// north/east edges the (-1)^eta alternations).
double omega_spatial_factor(const BasisIndex& eta, const Grid2D& grid, double kappa, Edge e,
                            int node);

/// The closed-form basis flux omega_eta sampled on the Sigma+ mesh.
SigmaPlusFlux omega_basis(const BasisIndex& eta, const Grid2D& grid, const TimeMesh& mesh,
                          double kappa);

std::uint64_t cache_fingerprint(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                                const std::array<int, 3>& w);

/// Offline-precomputed pairs (omega_eta, psi_eta(T*)). Columns of `psi` are
/// ordered lexicographically in (eta1, eta2, eta3), eta3 fastest. `gram` is
/// Psi^T diag(weights) Psi for the normal-equation fits.
struct ControlCache {
    Grid2D grid;
    TimeMesh mesh;
    double kappa = 0.0;
    std::array<int, 3> w{0, 0, 0};
    Eigen::MatrixXd psi;
    Eigen::MatrixXd gram;
    Field weights;
    std::uint64_t fingerprint = 0;

    int n_basis() const { return w[0] * w[1] * w[2]; }

    int column_of(const BasisIndex& eta) const {
        return (eta.eta1 - 1) * w[1] * w[2] + (eta.eta2 - 1) * w[2] + (eta.eta3 - 1);
    }
    BasisIndex index_of(int col) const {
        BasisIndex eta;
        eta.eta1 = col / (w[1] * w[2]) + 1;
        eta.eta2 = (col / w[2]) % w[1] + 1;
        eta.eta3 = col % w[2] + 1;
        return eta;
    }
};

/// Runs one backward solve per eta (W1*W2*W3 in total) and assembles the
/// cache. If `staging_dir` is non-empty, finished entries are persisted there
/// and reused on a rerun, making interrupted builds resumable.
ControlCache build_control_cache(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                                 const std::array<int, 3>& w, const std::string& staging_dir = "",
                                 int threads = 0);

void save_control_cache(const ControlCache& cache, const std::string& path);
ControlCache load_control_cache(const std::string& path);

/// Least-squares fit of Sum_eta a_eta psi_eta(T*) to a target field in the
/// weighted nodal L2 inner product, by conjugate gradients on the normal
/// equations with an iteration cap (the cap doubles as the only
/// regularization, matching the plain capped-LSQR setup).
struct FitOptions {
    int max_iterations = 1000;
    double tolerance = 1e-13;  // on the normal-equation residual, relative
};

struct ControlCoefficients {
    Eigen::VectorXd a;       // one real coefficient per basis index
    double residual = 0.0;   // ||Sum a_eta psi_eta - target||_{L2(Omega)}
    double target_norm = 0.0;
    int iterations = 0;

    double relative_residual() const {
        return target_norm > 0.0 ? residual / target_norm : 0.0;
    }
};

struct ComplexControlCoefficients {
    ControlCoefficients re;
    ControlCoefficients im;
};

ControlCoefficients fit_control(const ControlCache& cache, const Field& target,
                                const FitOptions& options = {});

/// Complex targets are fit as two independent real fits.
ComplexControlCoefficients fit_control(const ControlCache& cache, const ComplexField& target,
                                       const FitOptions& options = {});

/// Pointwise linear combination Sum_eta a_eta omega_eta on the Sigma+ mesh.
SigmaPlusFlux assemble_control(const Eigen::VectorXd& a, const ControlCache& cache);
SigmaPlusFluxC assemble_control(const ComplexControlCoefficients& coeffs,
                                const ControlCache& cache);

}  // namespace plumetrace::control
