#include "plumetrace/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "plumetrace/heat.hpp"
#include "plumetrace/parallel.hpp"

namespace plumetrace::pipeline {

using nlohmann::json;

namespace {

std::vector<rfunc::RValue> evaluate_batch(const BoundaryTrace& trace,
                                          const control::ControlCache& cache,
                                          const std::vector<cgo::CGOFunction>& functions,
                                          const InvertConfig& config) {
    std::vector<rfunc::RValue> values(functions.size());
    rfunc::EvaluateOptions opt;
    opt.fit = config.fit;
    opt.warn_residual = config.warn_residual;
    parallel_for(
        static_cast<int>(functions.size()),
        [&](int i) {
            values[static_cast<std::size_t>(i)] =
                rfunc::evaluate_R(trace, functions[static_cast<std::size_t>(i)], cache,
                                  trace.kappa, opt);
        },
        config.threads);
    return values;
}

double diagnostic_r(const std::vector<Vec2>& positions, double delta) {
    // r just above the theorem's threshold 2 ln(m-1)/delta^2, capped so the
    // Gershgorin weights exp(r |s|^2 / 2) stay representable
    const int m = static_cast<int>(positions.size());
    if (m < 2 || delta <= 0.0) return 1e-6;
    double max_s2 = 0.0;
    for (const auto& s : positions) max_s2 = std::max(max_s2, s.squaredNorm());
    const double want = 4.0 * std::log(std::max(2.0, static_cast<double>(m))) / (delta * delta);
    const double cap = max_s2 > 0.0 ? 1200.0 / max_s2 : want;
    return std::min(want, cap);
}

}  // namespace

InversionOutcome run_inversion(const BoundaryTrace& trace, const control::ControlCache& cache,
                               const InvertConfig& config) {
    if (config.M < 1 || config.K < 0 || config.L < 1 || config.restarts < 1)
        throw std::invalid_argument("run_inversion: M, L, restarts >= 1 and K >= 0 required");

    InversionOutcome out;
    out.cache_fingerprint = cache.fingerprint;

    const Grid2D& grid = trace.grid;
    const TimeMesh& mesh = trace.mesh;
    const double t_star = mesh.t_star;

    // step (ii-1): the zero-mode batch
    const auto zero_family = cgo::make_zero_mode_functions(config.M, grid, trace.kappa);
    const auto r0_values = evaluate_batch(trace, cache, zero_family.functions, config);
    Eigen::VectorXcd r0(static_cast<long>(r0_values.size()));
    for (std::size_t i = 0; i < r0_values.size(); ++i) {
        r0[static_cast<long>(i)] = r0_values[i].value;
        RValueRecord rec;
        rec.k = 0;
        rec.l = static_cast<int>(i) + 1;
        rec.value = r0_values[i];
        rec.value.id = static_cast<int>(out.rvalues.size());
        out.rvalues.push_back(rec);
    }

    // step (ii): multistart localization with pruning
    inversion::LocateOptions locate_opt = config.locate;
    locate_opt.restarts = config.restarts;
    locate_opt.seed = config.seed;
    locate_opt.threads = config.threads;
    out.locate = inversion::locate_sources(r0, config.M, grid, locate_opt);
    if (out.locate.no_detectable_source) return out;

    double delta = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < out.locate.positions.size(); ++a)
        for (std::size_t b = a + 1; b < out.locate.positions.size(); ++b)
            delta = std::min(delta, (out.locate.positions[a] - out.locate.positions[b]).norm());
    if (out.locate.m <= 1) delta = 0.0;
    out.stability = inversion::stability_report(
        out.locate.positions, diagnostic_r(out.locate.positions, delta), t_star, trace.kappa);

    // step (iii): per-mode linear solves for the Fourier coefficients
    out.fourier.t_star = t_star;
    out.fourier.coefficients.resize(static_cast<std::size_t>(config.K) + 1);
    out.fourier.coefficients[0] = out.locate.lambda0.cast<inversion::Complex>();
    out.mode_residuals.assign(static_cast<std::size_t>(config.K) + 1, 0.0);
    out.mode_conditions.assign(static_cast<std::size_t>(config.K) + 1, 0.0);

    for (int k = 1; k <= config.K; ++k) {
        const auto family = cgo::make_mode_functions(k, config.M, t_star, trace.kappa, grid);
        const auto values = evaluate_batch(trace, cache, family.functions, config);
        Eigen::VectorXcd rk(static_cast<long>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) {
            rk[static_cast<long>(i)] = values[i].value;
            RValueRecord rec;
            rec.k = k;
            rec.l = static_cast<int>(i) + 1;
            rec.value = values[i];
            rec.value.id = static_cast<int>(out.rvalues.size());
            out.rvalues.push_back(rec);
        }
        const auto sys =
            inversion::assemble_mode_system(k, family.functions, out.locate.positions, rk);
        const auto solve = inversion::recover_fourier(sys);
        out.fourier.coefficients[static_cast<std::size_t>(k)] = solve.lambda;
        out.mode_residuals[static_cast<std::size_t>(k)] = solve.residual;
        out.mode_conditions[static_cast<std::size_t>(k)] = solve.condition;
    }

    const int samples = config.intensity_samples > 0 ? config.intensity_samples : mesh.nt_minus + 1;
    out.intensity_times = Eigen::VectorXd::LinSpaced(samples, 0.0, t_star);

    if (config.method == "ifourier" || config.method == "both")
        out.g_ifourier = inversion::inverse_fourier_intensities(out.fourier, t_star, samples);

    if (config.method == "approx" || config.method == "both") {
        inversion::ForwardTraceFn forward = [&](const Vec2& position,
                                                const Eigen::VectorXd& h_samples) {
            DiscreteSource src = deposit_point_source(grid, position, h_samples);
            return heat::solve_forward(grid, mesh, trace.kappa, src).trace;
        };
        inversion::ApproximateOptions appr_opt;
        appr_opt.max_iterations = config.fit.max_iterations;
        appr_opt.tolerance = config.fit.tolerance;
        appr_opt.threads = config.threads;
        auto appr = inversion::approximate_intensities(out.locate.positions, trace, config.L,
                                                       forward, appr_opt);
        // approximate_intensities returns curves on the solver levels; resample
        if (samples != mesh.nt_minus + 1) {
            for (auto& g : appr.intensities) {
                Eigen::VectorXd resampled(samples);
                for (int i = 0; i < samples; ++i) {
                    const double t = t_star * i / (samples - 1);
                    const double pos = t / mesh.dt_minus();
                    const int i0 = std::min(static_cast<int>(pos), mesh.nt_minus - 1);
                    const double w = pos - i0;
                    resampled[i] = (1.0 - w) * g[i0] + w * g[i0 + 1];
                }
                g = resampled;
            }
        }
        out.g_approx = std::move(appr.intensities);
        out.approx_coefficients = std::move(appr.coefficients);
        out.approx_residual = appr.residual;
        out.approx_iterations = appr.iterations;
    }
    return out;
}

namespace {

double relative_l2(const Eigen::VectorXd& times, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i + 1 < times.size(); ++i) {
        const double dt = times[i + 1] - times[i];
        const double da = a[i] - b[i], db = a[i + 1] - b[i + 1];
        num += 0.5 * dt * (da * da + db * db);
        den += 0.5 * dt * (b[i] * b[i] + b[i + 1] * b[i + 1]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

ErrorReport compare_to_truth(const InversionOutcome& outcome, const SourceSet& truth) {
    ErrorReport report;
    report.m_true = truth.count();
    report.count_match = outcome.locate.m == truth.count();
    if (!report.count_match || outcome.no_source()) return report;

    std::vector<Vec2> true_positions;
    for (const auto& s : truth.sources) true_positions.push_back(s.position);
    report.assignment = inversion::best_assignment(outcome.locate.positions, true_positions);
    report.position = inversion::position_error(outcome.locate.positions, true_positions);

    const Eigen::VectorXd lambda_true = truth.total_intensities();
    double num = 0.0;
    for (int i = 0; i < outcome.locate.m; ++i) {
        const double d = outcome.locate.lambda0[i] -
                         lambda_true[report.assignment[static_cast<std::size_t>(i)]];
        num += d * d;
    }
    report.lambda0 = std::sqrt(num) / lambda_true.norm();

    const auto& t = outcome.intensity_times;
    Eigen::VectorXd g_true(t.size());
    for (int i = 0; i < outcome.locate.m; ++i) {
        const int jt = report.assignment[static_cast<std::size_t>(i)];
        for (int s = 0; s < t.size(); ++s) g_true[s] = truth.intensity_at(jt, t[s]);
        if (!outcome.g_ifourier.empty()) {
            if (static_cast<int>(report.ifourier_l2.size()) < truth.count())
                report.ifourier_l2.resize(static_cast<std::size_t>(truth.count()), 0.0);
            report.ifourier_l2[static_cast<std::size_t>(jt)] =
                relative_l2(t, outcome.g_ifourier[static_cast<std::size_t>(i)], g_true);
        }
        if (!outcome.g_approx.empty()) {
            if (static_cast<int>(report.approx_l2.size()) < truth.count())
                report.approx_l2.resize(static_cast<std::size_t>(truth.count()), 0.0);
            report.approx_l2[static_cast<std::size_t>(jt)] =
                relative_l2(t, outcome.g_approx[static_cast<std::size_t>(i)], g_true);
        }
    }
    return report;
}

namespace {

json vec2_list(const std::vector<Vec2>& v) {
    json j = json::array();
    for (const auto& p : v) j.push_back({p.x(), p.y()});
    return j;
}

json curve_list(const std::vector<Eigen::VectorXd>& curves) {
    json j = json::array();
    for (const auto& c : curves)
        j.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    return j;
}

}  // namespace

std::string outcome_to_json(const InversionOutcome& outcome, const InvertConfig& config,
                            const std::optional<ErrorReport>& errors) {
    json j;
    j["no_detectable_source"] = outcome.no_source();
    j["m"] = outcome.locate.m;
    j["positions"] = vec2_list(outcome.locate.positions);
    j["lambda0"] = std::vector<double>(outcome.locate.lambda0.data(),
                                       outcome.locate.lambda0.data() + outcome.locate.lambda0.size());

    json fourier;
    fourier["frequency_convention"] = "half";  // lambda_k = int g exp(-i k pi t / T*) dt
    fourier["t_star"] = outcome.fourier.t_star;
    fourier["K"] = outcome.fourier.max_mode();
    json coeff = json::array();
    for (const auto& lam : outcome.fourier.coefficients) {
        json mode = json::array();
        for (int i = 0; i < lam.size(); ++i) mode.push_back({lam[i].real(), lam[i].imag()});
        coeff.push_back(mode);
    }
    fourier["coefficients"] = coeff;
    j["fourier"] = fourier;

    json intensity;
    intensity["time"] = std::vector<double>(outcome.intensity_times.data(),
                                            outcome.intensity_times.data() +
                                                outcome.intensity_times.size());
    if (!outcome.g_ifourier.empty()) intensity["ifourier"] = curve_list(outcome.g_ifourier);
    if (!outcome.g_approx.empty()) {
        intensity["approx"] = curve_list(outcome.g_approx);
        json coeffs = json::array();
        for (int jcol = 0; jcol < outcome.approx_coefficients.cols(); ++jcol)
            coeffs.push_back(std::vector<double>(
                outcome.approx_coefficients.col(jcol).data(),
                outcome.approx_coefficients.col(jcol).data() + outcome.approx_coefficients.rows()));
        intensity["approx_coefficients"] = coeffs;
    }
    j["intensity"] = intensity;

    json diag;
    diag["objective"] = outcome.locate.objective;
    diag["zero_objective"] = outcome.locate.zero_objective;
    diag["pruning_rounds"] = outcome.locate.rounds;
    diag["mode_residuals"] = outcome.mode_residuals;
    diag["mode_conditions"] = outcome.mode_conditions;
    diag["approx_residual"] = outcome.approx_residual;
    diag["approx_iterations"] = outcome.approx_iterations;
    json fits = json::array();
    int warnings = 0;
    for (const auto& rec : outcome.rvalues) {
        fits.push_back({{"id", rec.value.id},
                        {"k", rec.k},
                        {"l", rec.l},
                        {"re", rec.value.value.real()},
                        {"im", rec.value.value.imag()},
                        {"fit_residual_re", rec.value.fit_residual_re},
                        {"fit_residual_im", rec.value.fit_residual_im},
                        {"warning", rec.value.quality_warning}});
        warnings += rec.value.quality_warning ? 1 : 0;
    }
    diag["rvalues"] = fits;
    diag["quality_warnings"] = warnings;
    json stab;
    stab["delta"] = outcome.stability.delta;
    stab["r"] = outcome.stability.r;
    stab["constant"] = outcome.stability.constant;
    stab["min_abs_eigenvalue"] = outcome.stability.min_abs_eigenvalue;
    json balls = json::array();
    for (const auto& b : outcome.stability.balls)
        balls.push_back({{"center", {b.center.real(), b.center.imag()}}, {"radius", b.radius}});
    stab["gershgorin"] = balls;
    diag["stability"] = stab;
    j["diagnostics"] = diag;

    json cfg;
    cfg["M"] = config.M;
    cfg["K"] = config.K;
    cfg["L"] = config.L;
    cfg["restarts"] = config.restarts;
    cfg["seed"] = config.seed;
    cfg["method"] = config.method;
    cfg["fit_cap"] = config.fit.max_iterations;
    cfg["cache_fingerprint"] = outcome.cache_fingerprint;
    j["config"] = cfg;

    if (errors) {
        json e;
        e["count_match"] = errors->count_match;
        e["m_true"] = errors->m_true;
        if (errors->count_match) {
            e["position_rel"] = errors->position;
            e["lambda0_rel"] = errors->lambda0;
            e["assignment"] = errors->assignment;
            if (!errors->ifourier_l2.empty()) e["intensity_l2_ifourier"] = errors->ifourier_l2;
            if (!errors->approx_l2.empty()) e["intensity_l2_approx"] = errors->approx_l2;
        }
        j["errors"] = e;
    }
    return j.dump(2);
}

void write_result_csvs(const std::string& directory, const InversionOutcome& outcome,
                       const SourceSet* truth) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);

    {
        std::ofstream out(fs::path(directory) / "rvalues.csv", std::ios::trunc);
        out << "id,k,l,re,im,fit_residual_re,fit_residual_im,warning\n";
        out.precision(17);
        for (const auto& rec : outcome.rvalues)
            out << rec.value.id << ',' << rec.k << ',' << rec.l << ',' << rec.value.value.real()
                << ',' << rec.value.value.imag() << ',' << rec.value.fit_residual_re << ','
                << rec.value.fit_residual_im << ',' << (rec.value.quality_warning ? 1 : 0) << '\n';
    }
    {
        std::ofstream out(fs::path(directory) / "positions.csv", std::ios::trunc);
        out << "kind,index,x,y,lambda0\n";
        out.precision(17);
        for (int i = 0; i < outcome.locate.m; ++i)
            out << "recovered," << i << ',' << outcome.locate.positions[static_cast<std::size_t>(i)].x()
                << ',' << outcome.locate.positions[static_cast<std::size_t>(i)].y() << ','
                << outcome.locate.lambda0[i] << '\n';
        if (truth) {
            const Eigen::VectorXd lam = truth->total_intensities();
            for (int i = 0; i < truth->count(); ++i)
                out << "true," << i << ',' << truth->sources[static_cast<std::size_t>(i)].position.x()
                    << ',' << truth->sources[static_cast<std::size_t>(i)].position.y() << ','
                    << lam[i] << '\n';
        }
    }

    std::vector<int> assignment;
    if (truth && truth->count() == outcome.locate.m && !outcome.no_source()) {
        std::vector<Vec2> true_positions;
        for (const auto& s : truth->sources) true_positions.push_back(s.position);
        assignment = inversion::best_assignment(outcome.locate.positions, true_positions);
    }

    const auto& t = outcome.intensity_times;
    for (int i = 0; i < outcome.locate.m; ++i) {
        std::ofstream out(fs::path(directory) /
                              ("intensity_source_" + std::to_string(i + 1) + ".csv"),
                          std::ios::trunc);
        out << "t";
        const bool with_truth = !assignment.empty();
        if (with_truth) out << ",g_true";
        if (!outcome.g_ifourier.empty()) out << ",g_if";
        if (!outcome.g_approx.empty()) out << ",g_appr";
        out << '\n';
        out.precision(17);
        for (int s = 0; s < t.size(); ++s) {
            out << t[s];
            if (with_truth)
                out << ',' << truth->intensity_at(assignment[static_cast<std::size_t>(i)], t[s]);
            if (!outcome.g_ifourier.empty())
                out << ',' << outcome.g_ifourier[static_cast<std::size_t>(i)][s];
            if (!outcome.g_approx.empty())
                out << ',' << outcome.g_approx[static_cast<std::size_t>(i)][s];
            out << '\n';
        }
    }
}

}  // namespace plumetrace::pipeline
