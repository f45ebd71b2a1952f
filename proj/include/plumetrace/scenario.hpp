#pragma once

#include <cstdint>
#include <string>

#include "plumetrace/grid.hpp"
#include "plumetrace/sources.hpp"
#include "plumetrace/trace.hpp"

namespace plumetrace::scenario {

/// A complete synthetic experiment: discretization, physics, ground truth and
/// optional relative measurement noise.
struct Scenario {
    Grid2D grid;
    TimeMesh mesh;
    double kappa = 1.0;
    SourceSet truth;
    double noise = 0.0;  // Gaussian std as a fraction of trace RMS
    std::uint64_t seed = 0;
};

/// The benchmark intensity shapes: q and g1..g6 (g5 = g6 = 4q), evaluated at
/// time t for inactivity time T*.
double paper_intensity(const std::string& name, double t, double t_star);

/// Intensity samples on a uniform grid of [0, T*] with `n` points.
Eigen::VectorXd sample_intensity(const std::string& name, double t_star, int n);

/// The 2/4/5/6-point benchmark layouts on [0,1000]^2 with kappa = 1,
/// T* = 138240 s, T = 172800 s, intensities g1..g6 assigned in order.
/// Discretization defaults: 101x101 nodes, 320 + 80 time steps.
Scenario build_paper_case(int n_points);

/// Names of the intensities used by build_paper_case, in order.
std::vector<std::string> paper_case_intensity_names(int n_points);

/// Deposit the truth, run the forward solver and extract the trace; optional
/// seeded Gaussian noise with std = noise * RMS(phi).
BoundaryTrace generate_measurement(const Scenario& scenario);

/// Forward solve retaining the interior snapshots as well (for tests that
/// need u(T*)).
struct MeasurementWithFields {
    BoundaryTrace trace;
    Field u_tstar;
    Field u_final;
};
MeasurementWithFields generate_measurement_with_fields(const Scenario& scenario);

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace plumetrace::scenario
