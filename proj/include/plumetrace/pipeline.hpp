#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plumetrace/control.hpp"
#include "plumetrace/functional.hpp"
#include "plumetrace/inversion.hpp"
#include "plumetrace/trace.hpp"

namespace plumetrace::pipeline {

struct InvertConfig {
    int M = 7;          // initial source-count bound (3M zero-mode functions)
    int K = 8;          // highest Fourier mode
    int L = 8;          // intensity-basis order of the approximation method
    int restarts = 50;
    std::uint64_t seed = 0;
    std::string method = "both";  // "ifourier" | "approx" | "both"
    control::FitOptions fit;
    double warn_residual = 1e-2;
    int threads = 0;
    int intensity_samples = 0;  // 0 -> solver levels of [0, T*]
    inversion::LocateOptions locate;
};

struct RValueRecord {
    int k = 0;  // mode (0 for the static family)
    int l = 0;  // direction index within the mode, 1-based
    rfunc::RValue value;
};

struct InversionOutcome {
    inversion::LocateResult locate;
    inversion::FourierTable fourier;
    std::vector<double> mode_residuals;
    std::vector<double> mode_conditions;
    Eigen::VectorXd intensity_times;
    std::vector<Eigen::VectorXd> g_ifourier;
    std::vector<Eigen::VectorXd> g_approx;
    Eigen::MatrixXd approx_coefficients;
    double approx_residual = 0.0;
    int approx_iterations = 0;
    std::vector<RValueRecord> rvalues;
    inversion::StabilityReport stability;
    std::uint64_t cache_fingerprint = 0;

    bool no_source() const { return locate.no_detectable_source; }
};

/// The online pipeline: R batches from the trace and cache, then
/// locate -> per-mode Fourier solves -> intensity reconstruction.
InversionOutcome run_inversion(const BoundaryTrace& trace, const control::ControlCache& cache,
                               const InvertConfig& config);

struct ErrorReport {
    bool count_match = false;
    int m_true = 0;
    double position = 0.0;  // ||S - S_hat|| / ||S|| after optimal assignment
    double lambda0 = 0.0;   // ||Lambda0 - Lambda0_hat|| / ||Lambda0||
    std::vector<int> assignment;         // recovered i -> truth assignment[i]
    std::vector<double> ifourier_l2;     // per true source, relative L2 on [0,T*]
    std::vector<double> approx_l2;
};

ErrorReport compare_to_truth(const InversionOutcome& outcome, const SourceSet& truth);

std::string outcome_to_json(const InversionOutcome& outcome, const InvertConfig& config,
                            const std::optional<ErrorReport>& errors);

/// Plot-ready CSVs: per-source intensity curves, the R-value batch, the
/// location scatter and (with truth) the error table.
void write_result_csvs(const std::string& directory, const InversionOutcome& outcome,
                       const SourceSet* truth);

}  // namespace plumetrace::pipeline
