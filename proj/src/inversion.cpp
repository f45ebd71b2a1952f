#include "plumetrace/inversion.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "plumetrace/parallel.hpp"
#include "plumetrace/rng.hpp"

namespace plumetrace::inversion {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

ModeSystem assemble_mode_system(int k, const std::vector<cgo::CGOFunction>& directions,
                                const std::vector<Vec2>& positions,
                                const Eigen::VectorXcd& r_values) {
    const int rows = static_cast<int>(directions.size());
    const int cols = static_cast<int>(positions.size());
    if (r_values.size() != rows)
        throw std::invalid_argument("assemble_mode_system: |directions| must equal |R_values|");

    ModeSystem sys;
    sys.k = k;
    sys.A.resize(rows, cols);
    sys.R = r_values;
    for (int l = 0; l < rows; ++l)
        for (int j = 0; j < cols; ++j) {
            const auto& rho = directions[static_cast<std::size_t>(l)].rho;
            const Complex e = rho.x() * positions[static_cast<std::size_t>(j)].x() +
                              rho.y() * positions[static_cast<std::size_t>(j)].y();
            if (e.real() > cgo::kMaxExponent)
                throw std::invalid_argument("assemble_mode_system: exponent overflow at (l,j) = (" +
                                            std::to_string(l) + "," + std::to_string(j) + ")");
            sys.A(l, j) = std::exp(e);
        }
    return sys;
}

namespace {

// --- variable-projection machinery for the zero mode ---

struct VpProblem {
    std::vector<cgo::CGOFunction> directions;  // 3M zero-mode functions
    Eigen::VectorXcd r0;
    Grid2D grid;

    int n_dirs() const { return static_cast<int>(directions.size()); }
};

struct VpState {
    Eigen::MatrixXcd A;         // n_dirs x m
    Eigen::VectorXd lambda;     // real Lambda0, inner least squares
    Eigen::VectorXcd residual;  // A lambda - R0
    double objective = 0.0;
};

Eigen::MatrixXd stack_real(const Eigen::MatrixXcd& a) {
    Eigen::MatrixXd s(2 * a.rows(), a.cols());
    s.topRows(a.rows()) = a.real();
    s.bottomRows(a.rows()) = a.imag();
    return s;
}

VpState vp_evaluate(const VpProblem& prob, const std::vector<Vec2>& positions) {
    const int n = prob.n_dirs();
    const int m = static_cast<int>(positions.size());
    VpState st;
    st.A.resize(n, m);
    for (int l = 0; l < n; ++l) {
        const auto& rho = prob.directions[static_cast<std::size_t>(l)].rho;
        for (int j = 0; j < m; ++j)
            st.A(l, j) = std::exp(rho.x() * positions[static_cast<std::size_t>(j)].x() +
                                  rho.y() * positions[static_cast<std::size_t>(j)].y());
    }
    const Eigen::MatrixXd as = stack_real(st.A);
    Eigen::VectorXd rs(2 * n);
    rs.head(n) = prob.r0.real();
    rs.tail(n) = prob.r0.imag();
    st.lambda = as.colPivHouseholderQr().solve(rs);
    st.residual = st.A * st.lambda.cast<Complex>() - prob.r0;
    st.objective = st.residual.squaredNorm();
    return st;
}

// Jacobian of the stacked residual w.r.t. positions at the inner optimum;
// at that point the extra dLambda/dS terms are orthogonal to the residual,
// so J^T r is the exact objective half-gradient.
Eigen::MatrixXd vp_jacobian(const VpProblem& prob, const std::vector<Vec2>& positions,
                            const VpState& st) {
    const int n = prob.n_dirs();
    const int m = static_cast<int>(positions.size());
    Eigen::MatrixXd jac(2 * n, 2 * m);
    for (int j = 0; j < m; ++j)
        for (int c = 0; c < 2; ++c) {
            for (int l = 0; l < n; ++l) {
                const auto& rho = prob.directions[static_cast<std::size_t>(l)].rho;
                const Complex d = st.lambda[j] * (c == 0 ? rho.x() : rho.y()) * st.A(l, j);
                jac(l, 2 * j + c) = d.real();
                jac(n + l, 2 * j + c) = d.imag();
            }
        }
    return jac;
}

struct LocalFit {
    std::vector<Vec2> positions;
    Eigen::VectorXd lambda;
    double objective = 0.0;
    int iterations = 0;
};

// Projected Levenberg-Marquardt on the VP residual, box = Omega.
LocalFit vp_local_solve(const VpProblem& prob, std::vector<Vec2> positions,
                        const LocateOptions& opt) {
    const double diag = prob.grid.diag();
    const double step_tol = opt.position_tolerance_rel * diag;
    const int m = static_cast<int>(positions.size());

    auto clamp_box = [&](std::vector<Vec2>& s) {
        for (auto& p : s) {
            p.x() = std::clamp(p.x(), 0.0, prob.grid.lx);
            p.y() = std::clamp(p.y(), 0.0, prob.grid.ly);
        }
    };
    clamp_box(positions);

    VpState st = vp_evaluate(prob, positions);
    double mu = 1e-6;
    int it = 0;
    bool converged = false;
    for (; it < opt.max_lm_iterations && !converged; ++it) {
        if (st.objective <= 1e-28 * std::max(1.0, prob.r0.squaredNorm())) break;

        const Eigen::MatrixXd jac = vp_jacobian(prob, positions, st);
        Eigen::VectorXd rs(2 * prob.n_dirs());
        rs.head(prob.n_dirs()) = st.residual.real();
        rs.tail(prob.n_dirs()) = st.residual.imag();
        const Eigen::VectorXd grad = jac.transpose() * rs;
        if (grad.lpNorm<Eigen::Infinity>() < 1e-16 * std::max(1.0, st.objective / diag)) break;

        Eigen::MatrixXd h = jac.transpose() * jac;
        Eigen::VectorXd scale = h.diagonal().cwiseMax(1e-12 * h.diagonal().maxCoeff());
        bool accepted = false;
        for (int tries = 0; tries < 25; ++tries) {
            Eigen::MatrixXd damped = h;
            damped.diagonal() += mu * scale;
            const Eigen::VectorXd delta = damped.ldlt().solve(-grad);

            std::vector<Vec2> trial(positions);
            for (int j = 0; j < m; ++j) {
                trial[static_cast<std::size_t>(j)].x() += delta[2 * j];
                trial[static_cast<std::size_t>(j)].y() += delta[2 * j + 1];
            }
            clamp_box(trial);
            double moved = 0.0;
            for (int j = 0; j < m; ++j)
                moved = std::max(moved,
                                 (trial[static_cast<std::size_t>(j)] - positions[static_cast<std::size_t>(j)])
                                     .lpNorm<Eigen::Infinity>());

            const VpState trial_state = vp_evaluate(prob, trial);
            if (trial_state.objective < st.objective) {
                positions = std::move(trial);
                st = trial_state;
                mu = std::max(mu / 3.0, 1e-14);
                accepted = true;
                converged = moved < step_tol;
                break;
            }
            mu *= 4.0;
            if (moved < step_tol && mu > 1e10) break;  // pinned against the box
        }
        if (!accepted) break;
    }

    LocalFit fit;
    fit.positions = std::move(positions);
    fit.lambda = st.lambda;
    fit.objective = st.objective;
    fit.iterations = it;
    return fit;
}

// Merge position pairs closer than the merge radius (union-find clusters,
// |lambda|-weighted means) and drop sources below the intensity floor.
struct PruneResult {
    std::vector<Vec2> positions;
    int removed = 0;
};

PruneResult prune_sources(const std::vector<Vec2>& positions, const Eigen::VectorXd& lambda,
                          double merge_radius, double intensity_floor_rel) {
    const int m = static_cast<int>(positions.size());
    std::vector<int> parent(static_cast<std::size_t>(m));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            if ((positions[static_cast<std::size_t>(a)] - positions[static_cast<std::size_t>(b)]).norm() <
                merge_radius)
                parent[static_cast<std::size_t>(find(a))] = find(b);

    struct Cluster {
        Vec2 weighted_sum{0.0, 0.0};
        Vec2 plain_sum{0.0, 0.0};
        double weight = 0.0;
        double lambda_sum = 0.0;
        int count = 0;
    };
    std::map<int, Cluster> clusters;
    for (int a = 0; a < m; ++a) {
        Cluster& c = clusters[find(a)];
        const double w = std::abs(lambda[a]);
        c.weighted_sum += w * positions[static_cast<std::size_t>(a)];
        c.plain_sum += positions[static_cast<std::size_t>(a)];
        c.weight += w;
        c.lambda_sum += lambda[a];
        ++c.count;
    }

    std::vector<Vec2> merged;
    std::vector<double> merged_lambda;
    for (const auto& [root, c] : clusters) {
        merged.push_back(c.weight > 0.0 ? Vec2(c.weighted_sum / c.weight)
                                        : Vec2(c.plain_sum / c.count));
        merged_lambda.push_back(c.lambda_sum);
    }

    double max_abs = 0.0;
    for (double v : merged_lambda) max_abs = std::max(max_abs, std::abs(v));
    PruneResult out;
    for (std::size_t i = 0; i < merged.size(); ++i)
        if (std::abs(merged_lambda[i]) >= intensity_floor_rel * max_abs && max_abs > 0.0)
            out.positions.push_back(merged[i]);
    out.removed = m - static_cast<int>(out.positions.size());
    return out;
}

}  // namespace

LocateResult locate_sources(const Eigen::VectorXcd& r0, int M, const Grid2D& grid,
                            const LocateOptions& options) {
    if (M < 1) throw std::invalid_argument("locate_sources: M >= 1 required");
    if (r0.size() != 3 * M)
        throw std::invalid_argument("locate_sources: R0 must hold 3M values");

    LocateResult result;
    result.zero_objective = r0.squaredNorm();
    if (result.zero_objective == 0.0) {
        result.no_detectable_source = true;
        return result;
    }

    VpProblem prob;
    prob.grid = grid;
    prob.r0 = r0;
    prob.directions = cgo::make_zero_mode_functions(M, grid).functions;

    Rng master(options.seed);
    const double merge_radius = options.merge_radius_rel * grid.diag();

    int m_current = M;
    std::vector<Vec2> warm_start;
    LocalFit best;
    best.objective = std::numeric_limits<double>::infinity();

    for (int round = 0;; ++round) {
        result.rounds = round + 1;
        std::vector<LocalFit> fits(static_cast<std::size_t>(options.restarts));
        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(options.restarts));
        for (int rtrial = 0; rtrial < options.restarts; ++rtrial)
            seeds[static_cast<std::size_t>(rtrial)] =
                master.split(static_cast<std::uint64_t>(round) * 100003ull +
                             static_cast<std::uint64_t>(rtrial))
                    .next_u64();

        parallel_for(
            options.restarts,
            [&](int rtrial) {
                std::vector<Vec2> start;
                if (rtrial == 0 && static_cast<int>(warm_start.size()) == m_current) {
                    start = warm_start;
                } else {
                    Rng rng(seeds[static_cast<std::size_t>(rtrial)]);
                    for (int j = 0; j < m_current; ++j)
                        start.emplace_back(rng.uniform(0.0, grid.lx), rng.uniform(0.0, grid.ly));
                }
                fits[static_cast<std::size_t>(rtrial)] = vp_local_solve(prob, std::move(start), options);
            },
            options.threads);

        best = fits[0];
        for (const auto& f : fits)
            if (f.objective < best.objective) best = f;
        if (round == 0) {
            for (int rtrial = 0; rtrial < options.restarts; ++rtrial)
                result.restarts.push_back({rtrial, fits[static_cast<std::size_t>(rtrial)].objective,
                                           fits[static_cast<std::size_t>(rtrial)].iterations});
        }

        if (best.objective >= result.zero_objective * (1.0 - 1e-12)) {
            result.no_detectable_source = true;
            result.objective = best.objective;
            return result;
        }

        const PruneResult pruned =
            prune_sources(best.positions, best.lambda, merge_radius, options.intensity_floor_rel);
        if (pruned.removed == 0) break;
        if (pruned.positions.empty()) {
            result.no_detectable_source = true;
            result.objective = best.objective;
            return result;
        }
        m_current -= pruned.removed;
        warm_start = pruned.positions;
    }

    result.m = static_cast<int>(best.positions.size());
    result.positions = best.positions;
    result.lambda0 = best.lambda;
    result.objective = best.objective;
    return result;
}

ModeSolve recover_fourier(const ModeSystem& system) {
    if (system.A.rows() < system.A.cols())
        throw std::invalid_argument("recover_fourier: need at least m test functions");
    ModeSolve out;
    out.lambda = system.A.colPivHouseholderQr().solve(system.R);
    out.residual = (system.A * out.lambda - system.R).norm();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(system.A);
    const auto& sv = svd.singularValues();
    out.condition = sv(sv.size() - 1) > 0.0
                        ? sv(0) / sv(sv.size() - 1)
                        : std::numeric_limits<double>::infinity();
    out.ill_conditioned = !(out.condition < 1e12);
    return out;
}

std::vector<Eigen::VectorXd> inverse_fourier_intensities(const FourierTable& table,
                                                         double t_star, int samples) {
    if (samples < 2)
        throw std::invalid_argument("inverse_fourier_intensities: need at least 2 samples");
    const int m = table.source_count();
    const int K = table.max_mode();
    std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(m),
                                     Eigen::VectorXd::Zero(samples));
    // Cosine series of the even periodic extension G(t) = g(|t|) over
    // [-T*, T*]: its k-th coefficient is Re(lambda_k) / T*, so only the real
    // parts of the measured coefficients enter (and a pure DC table already
    // reproduces a constant exactly).
    for (int j = 0; j < m; ++j) {
        auto& g = out[static_cast<std::size_t>(j)];
        for (int i = 0; i < samples; ++i) {
            const double t = t_star * i / (samples - 1);
            double value = table.coefficients[0][j].real();
            for (int k = 1; k <= K; ++k)
                value += 2.0 * table.coefficients[static_cast<std::size_t>(k)][j].real() *
                         std::cos(k * kPi * t / t_star);
            g[i] = std::max(0.0, value / t_star);
        }
    }
    return out;
}

namespace {

// Shared capped conjugate-gradient solve of the normal equations G x = b.
Eigen::VectorXd cgnr_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& b,
                           int max_iterations, double tolerance, int* iterations_out) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    Eigen::VectorXd d = r;
    Eigen::VectorXd gd(b.size());
    double rr = r.squaredNorm();
    const double stop = tolerance * tolerance * b.squaredNorm();
    int it = 0;
    while (it < max_iterations && rr > stop) {
        gd.noalias() = gram * d;
        const double dgd = d.dot(gd);
        if (!(dgd > 0.0)) break;
        const double alpha = rr / dgd;
        x += alpha * d;
        r -= alpha * gd;
        const double rr_new = r.squaredNorm();
        d = r + (rr_new / rr) * d;
        rr = rr_new;
        ++it;
    }
    if (iterations_out) *iterations_out = it;
    return x;
}

// Flatten a trace into one vector together with the Sigma quadrature weights.
void flatten_trace(const BoundaryTrace& trace, Eigen::VectorXd& values, Eigen::VectorXd* weights) {
    const Grid2D& grid = trace.grid;
    const TimeMesh& mesh = trace.mesh;
    const int levels = mesh.n_levels();
    long total = 0;
    for (Edge e : all_edges) total += edge_nodes(grid, e) * levels;
    values.resize(total);
    if (weights) weights->resize(total);

    auto time_weight = [&](int i) {
        const double dtm = mesh.dt_minus(), dtp = mesh.dt_plus();
        if (i == 0) return 0.5 * dtm;
        if (i < mesh.nt_minus) return dtm;
        if (i == mesh.nt_minus) return 0.5 * (dtm + dtp);
        if (i < levels - 1) return dtp;
        return 0.5 * dtp;
    };

    long pos = 0;
    for (Edge e : all_edges) {
        const auto& m = trace.edge(e);
        for (int k = 0; k < m.rows(); ++k) {
            const double wk = edge_weight(grid, e, k);
            for (int i = 0; i < levels; ++i, ++pos) {
                values[pos] = m(k, i);
                if (weights) (*weights)[pos] = wk * time_weight(i);
            }
        }
    }
}

}  // namespace

ApproximateResult approximate_intensities(const std::vector<Vec2>& positions,
                                          const BoundaryTrace& trace, int L,
                                          const ForwardTraceFn& forward,
                                          const ApproximateOptions& options) {
    const int m = static_cast<int>(positions.size());
    if (m < 1) throw std::invalid_argument("approximate_intensities: no sources");
    if (L < 1) throw std::invalid_argument("approximate_intensities: L >= 1 required");
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            if ((positions[static_cast<std::size_t>(a)] - positions[static_cast<std::size_t>(b)]).norm() == 0.0)
                throw std::invalid_argument(
                    "approximate_intensities: identical source positions (degenerate basis)");

    const TimeMesh& mesh = trace.mesh;
    const double t_star = mesh.t_star;
    const int n_basis = 2 * L + 1;
    const int levels_minus = mesh.nt_minus + 1;

    // h_0 = 1; h_{2l-1} = sin(l pi t / T*), h_{2l} = cos(l pi t / T*)
    Eigen::MatrixXd h(levels_minus, n_basis);
    for (int i = 0; i < levels_minus; ++i) {
        const double t = mesh.level_time(i);
        h(i, 0) = 1.0;
        for (int l = 1; l <= L; ++l) {
            h(i, 2 * l - 1) = std::sin(l * kPi * t / t_star);
            h(i, 2 * l) = std::cos(l * kPi * t / t_star);
        }
    }

    Eigen::VectorXd phi, weights;
    flatten_trace(trace, phi, &weights);

    const int n_cols = n_basis * m;
    Eigen::MatrixXd basis(phi.size(), n_cols);
    parallel_for(
        n_cols,
        [&](int col) {
            const int j = col / n_basis;
            const int l = col % n_basis;
            const BoundaryTrace response =
                forward(positions[static_cast<std::size_t>(j)], h.col(l));
            Eigen::VectorXd flat;
            flatten_trace(response, flat, nullptr);
            basis.col(col) = flat;
        },
        options.threads);

    const Eigen::MatrixXd gram = basis.transpose() * weights.asDiagonal() * basis;
    const Eigen::VectorXd rhs = basis.transpose() * (weights.asDiagonal() * phi);

    ApproximateResult out;
    int iterations = 0;
    const Eigen::VectorXd b = cgnr_solve(gram, rhs, options.max_iterations, options.tolerance,
                                         &iterations);
    out.iterations = iterations;
    out.coefficients.resize(n_basis, m);
    for (int col = 0; col < n_cols; ++col) out.coefficients(col % n_basis, col / n_basis) = b[col];

    const Eigen::VectorXd fitted = basis * b - phi;
    out.residual = std::sqrt(fitted.dot(weights.asDiagonal() * fitted));
    out.trace_norm = std::sqrt(phi.dot(weights.asDiagonal() * phi));

    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd g = h * out.coefficients.col(j);
        out.intensities.push_back(g.cwiseMax(0.0));
    }
    return out;
}

std::vector<GershgorinBall> gershgorin_balls(const Eigen::MatrixXcd& A, const Eigen::VectorXd& p) {
    if (A.rows() != A.cols()) throw std::invalid_argument("gershgorin_balls: square matrix required");
    if (p.size() != A.rows() || (p.array() <= 0.0).any())
        throw std::invalid_argument("gershgorin_balls: weights must be positive, one per row");
    std::vector<GershgorinBall> balls;
    for (int j = 0; j < A.cols(); ++j) {
        GershgorinBall ball;
        ball.center = A(j, j);
        double radius = 0.0;
        for (int l = 0; l < A.rows(); ++l)
            if (l != j) radius += std::abs(A(l, j)) / p[l];
        ball.radius = p[j] * radius;
        balls.push_back(ball);
    }
    return balls;
}

double stability_constant(int m, double delta, double r) {
    if (m < 1) throw std::invalid_argument("stability_constant: m >= 1 required");
    if (m == 1) return 1.0;
    const double tail = (m - 1) * std::exp(-r * delta * delta / 2.0);
    if (!(tail < 1.0))
        throw std::invalid_argument("stability_constant: bound vacuous, need delta > sqrt(2 ln(m-1)/r)");
    return 1.0 - tail;
}

StabilityReport stability_report(const std::vector<Vec2>& positions, double r, double t_star,
                                 double kappa) {
    const int m = static_cast<int>(positions.size());
    StabilityReport report;
    report.r = r;
    report.delta = std::numeric_limits<double>::infinity();
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            report.delta =
                std::min(report.delta, (positions[static_cast<std::size_t>(a)] -
                                        positions[static_cast<std::size_t>(b)]).norm());
    if (m <= 1) report.delta = 0.0;

    const auto adapted = cgo::make_source_adapted_functions(0, positions, r, t_star, kappa);
    const ModeSystem sys = assemble_mode_system(0, adapted, positions,
                                                Eigen::VectorXcd::Zero(m));
    Eigen::VectorXd p(m);
    for (int j = 0; j < m; ++j)
        p[j] = std::exp(0.5 * r * positions[static_cast<std::size_t>(j)].squaredNorm());
    report.balls = gershgorin_balls(sys.A, p);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(sys.A, false);
    report.min_abs_eigenvalue = eig.eigenvalues().cwiseAbs().minCoeff();

    if (m >= 2 && (m - 1) * std::exp(-r * report.delta * report.delta / 2.0) < 1.0)
        report.constant = stability_constant(m, report.delta, r);
    else
        report.constant = (m == 1) ? 1.0 : 0.0;
    return report;
}

std::vector<int> best_assignment(const std::vector<Vec2>& recovered,
                                 const std::vector<Vec2>& truth) {
    const int m = static_cast<int>(recovered.size());
    if (m != static_cast<int>(truth.size()))
        throw std::invalid_argument("best_assignment: source counts differ");
    if (m > 9) throw std::invalid_argument("best_assignment: brute force limited to m <= 9");
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (int i = 0; i < m; ++i)
            cost += (recovered[static_cast<std::size_t>(i)] -
                     truth[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])])
                        .squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double position_error(const std::vector<Vec2>& recovered, const std::vector<Vec2>& truth) {
    const auto perm = best_assignment(recovered, truth);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < recovered.size(); ++i) {
        num += (recovered[i] - truth[static_cast<std::size_t>(perm[i])]).squaredNorm();
        den += truth[static_cast<std::size_t>(perm[i])].squaredNorm();
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace plumetrace::inversion
