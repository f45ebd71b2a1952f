#include "plumetrace/control.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "plumetrace/heat.hpp"
#include "plumetrace/parallel.hpp"

namespace plumetrace::control {

using nlohmann::json;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr char kCacheMagic[8] = {'P', 'C', 'A', 'C', 'H', 'E', '0', '1'};
}  // namespace

double omega_time_factor(int eta3, double t, const TimeMesh& mesh) {
    const double phase = 0.5 * (2.0 * eta3 - 1.0) * kPi * (t - mesh.t_star) /
                         (mesh.t_final - mesh.t_star);
    return std::cos(phase);
}

double omega_spatial_factor(const BasisIndex& eta, const Grid2D& grid, double kappa, Edge e,
                            int node) {
    const double x = edge_point(grid, e, node).x();
    const double y = edge_point(grid, e, node).y();
    switch (e) {
        case Edge::South:
            return -kappa * std::sin(eta.eta1 * kPi * x / grid.lx) * (eta.eta2 * kPi / grid.ly);
        case Edge::North:
            return kappa * std::sin(eta.eta1 * kPi * x / grid.lx) * (eta.eta2 * kPi / grid.ly) *
                   ((eta.eta2 % 2 == 0) ? 1.0 : -1.0);
        case Edge::West:
            return -kappa * std::sin(eta.eta2 * kPi * y / grid.ly) * (eta.eta1 * kPi / grid.lx);
        case Edge::East:
            return kappa * std::sin(eta.eta2 * kPi * y / grid.ly) * (eta.eta1 * kPi / grid.lx) *
                   ((eta.eta1 % 2 == 0) ? 1.0 : -1.0);
    }
    return 0.0;
}

SigmaPlusFlux omega_basis(const BasisIndex& eta, const Grid2D& grid, const TimeMesh& mesh,
                          double kappa) {
    SigmaPlusFlux flux(grid, mesh);
    for (Edge e : all_edges) {
        auto& m = flux.edge(e);
        for (int k = 0; k < m.rows(); ++k) {
            const double space = omega_spatial_factor(eta, grid, kappa, e, k);
            for (int i = 0; i < m.cols(); ++i)
                m(k, i) = space * omega_time_factor(eta.eta3, flux.level_time(i), mesh);
        }
    }
    return flux;
}

std::uint64_t cache_fingerprint(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                                const std::array<int, 3>& w) {
    // FNV-1a over the bit patterns of the defining parameters
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const double doubles[5] = {grid.lx, grid.ly, mesh.t_star, mesh.t_final, kappa};
    const int ints[7] = {grid.nx, grid.ny, mesh.nt_minus, mesh.nt_plus, w[0], w[1], w[2]};
    mix(doubles, sizeof(doubles));
    mix(ints, sizeof(ints));
    return h;
}

namespace {

std::string entry_filename(const BasisIndex& eta) {
    return "psi_" + std::to_string(eta.eta1) + "_" + std::to_string(eta.eta2) + "_" +
           std::to_string(eta.eta3) + ".f64";
}

bool load_staged_entry(const std::filesystem::path& file, Eigen::Ref<Eigen::VectorXd> column) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return false;
    in.read(reinterpret_cast<char*>(column.data()),
            static_cast<std::streamsize>(column.size() * sizeof(double)));
    return static_cast<bool>(in) && in.peek() == EOF;
}

void save_staged_entry(const std::filesystem::path& file, const Eigen::Ref<const Eigen::VectorXd>& column) {
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(column.data()),
                  static_cast<std::streamsize>(column.size() * sizeof(double)));
        if (!out) throw std::runtime_error("control cache: cannot stage " + file.string());
    }
    std::filesystem::rename(tmp, file);
}

}  // namespace

ControlCache build_control_cache(const Grid2D& grid, const TimeMesh& mesh, double kappa,
                                 const std::array<int, 3>& w, const std::string& staging_dir,
                                 int threads) {
    if (w[0] < 1 || w[1] < 1 || w[2] < 1)
        throw std::invalid_argument("build_control_cache: W_j >= 1 required");

    ControlCache cache;
    cache.grid = grid;
    cache.mesh = mesh;
    cache.kappa = kappa;
    cache.w = w;
    cache.fingerprint = cache_fingerprint(grid, mesh, kappa, w);
    cache.weights = grid.cell_weights();
    const int p = cache.n_basis();
    cache.psi.resize(grid.n_nodes(), p);

    std::filesystem::path stage;
    if (!staging_dir.empty()) {
        stage = staging_dir;
        std::filesystem::create_directories(stage);
        // a fingerprint marker guards against mixing entries across setups
        const auto marker = stage / "fingerprint";
        std::string want = std::to_string(cache.fingerprint);
        std::ifstream check(marker);
        std::string have;
        if (check && std::getline(check, have) && have != want)
            throw std::runtime_error("build_control_cache: staging dir belongs to a different grid/mesh");
        if (!check) {
            std::ofstream out(marker, std::ios::trunc);
            out << want << "\n";
        }
    }

    parallel_for(
        p,
        [&](int col) {
            const BasisIndex eta = cache.index_of(col);
            if (!stage.empty()) {
                const auto file = stage / entry_filename(eta);
                if (load_staged_entry(file, cache.psi.col(col))) return;
            }
            const SigmaPlusFlux flux = omega_basis(eta, grid, mesh, kappa);
            Field psi;
            try {
                psi = heat::solve_adjoint_backward(grid, mesh, kappa, flux);
            } catch (const std::exception& err) {
                throw std::runtime_error("build_control_cache: solve failed for eta = (" +
                                         std::to_string(eta.eta1) + "," + std::to_string(eta.eta2) +
                                         "," + std::to_string(eta.eta3) + "): " + err.what());
            }
            cache.psi.col(col) = psi;
            if (!stage.empty()) save_staged_entry(stage / entry_filename(eta), cache.psi.col(col));
        },
        threads);

    cache.gram.noalias() = cache.psi.transpose() * cache.weights.asDiagonal() * cache.psi;
    return cache;
}

void save_control_cache(const ControlCache& cache, const std::string& path) {
    json header{{"format", "plumetrace-cache"},
                {"version", 1},
                {"w", {cache.w[0], cache.w[1], cache.w[2]}},
                {"grid", {{"lx", cache.grid.lx}, {"ly", cache.grid.ly}, {"nx", cache.grid.nx}, {"ny", cache.grid.ny}}},
                {"mesh",
                 {{"t_star", cache.mesh.t_star},
                  {"t_final", cache.mesh.t_final},
                  {"nt_minus", cache.mesh.nt_minus},
                  {"nt_plus", cache.mesh.nt_plus}}},
                {"kappa", cache.kappa},
                {"fingerprint", cache.fingerprint},
                {"entry_order", "eta1-major, eta3 fastest"},
                {"blocks", {"psi", "gram"}}};
    const std::string text = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("save_control_cache: cannot open " + tmp);
        out.write(kCacheMagic, sizeof(kCacheMagic));
        const std::uint64_t len = text.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.write(reinterpret_cast<const char*>(cache.psi.data()),
                  static_cast<std::streamsize>(cache.psi.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(cache.gram.data()),
                  static_cast<std::streamsize>(cache.gram.size() * sizeof(double)));
        if (!out) throw std::runtime_error("save_control_cache: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ControlCache load_control_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_control_cache: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCacheMagic, 8) != 0)
        throw std::runtime_error("load_control_cache: not a cache container: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const json header = json::parse(text);

    ControlCache cache;
    const auto& jg = header.at("grid");
    cache.grid = Grid2D(jg.at("lx").get<double>(), jg.at("ly").get<double>(),
                        jg.at("nx").get<int>(), jg.at("ny").get<int>());
    const auto& jm = header.at("mesh");
    cache.mesh = TimeMesh(jm.at("t_star").get<double>(), jm.at("t_final").get<double>(),
                          jm.at("nt_minus").get<int>(), jm.at("nt_plus").get<int>());
    cache.kappa = header.at("kappa").get<double>();
    const auto& jw = header.at("w");
    cache.w = {jw.at(0).get<int>(), jw.at(1).get<int>(), jw.at(2).get<int>()};
    cache.fingerprint = header.at("fingerprint").get<std::uint64_t>();
    if (cache.fingerprint != cache_fingerprint(cache.grid, cache.mesh, cache.kappa, cache.w))
        throw std::runtime_error("load_control_cache: fingerprint mismatch in " + path);

    cache.weights = cache.grid.cell_weights();
    const int p = cache.n_basis();
    cache.psi.resize(cache.grid.n_nodes(), p);
    cache.gram.resize(p, p);
    in.read(reinterpret_cast<char*>(cache.psi.data()),
            static_cast<std::streamsize>(cache.psi.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(cache.gram.data()),
            static_cast<std::streamsize>(cache.gram.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_control_cache: truncated payload in " + path);
    return cache;
}

ControlCoefficients fit_control(const ControlCache& cache, const Field& target,
                                const FitOptions& options) {
    if (target.size() != cache.grid.n_nodes())
        throw std::invalid_argument("fit_control: target defined on a different grid");

    ControlCoefficients fit;
    const int p = cache.n_basis();
    fit.a = Eigen::VectorXd::Zero(p);
    fit.target_norm = std::sqrt(target.dot(cache.weights.asDiagonal() * target));
    if (fit.target_norm == 0.0) return fit;

    // CG on the normal equations G a = b, G = Psi^T W Psi, b = Psi^T W target.
    const Eigen::VectorXd b = cache.psi.transpose() * (cache.weights.asDiagonal() * target);
    Eigen::VectorXd r = b;
    Eigen::VectorXd d = r;
    Eigen::VectorXd gd(p);
    double rr = r.squaredNorm();
    const double stop = options.tolerance * options.tolerance * b.squaredNorm();
    int it = 0;
    while (it < options.max_iterations && rr > stop) {
        gd.noalias() = cache.gram * d;
        const double dgd = d.dot(gd);
        if (!(dgd > 0.0)) break;  // numerically rank-deficient direction
        const double alpha = rr / dgd;
        fit.a += alpha * d;
        r -= alpha * gd;
        const double rr_new = r.squaredNorm();
        d = r + (rr_new / rr) * d;
        rr = rr_new;
        ++it;
    }
    fit.iterations = it;

    const Eigen::VectorXd residual_field = cache.psi * fit.a - target;
    fit.residual = std::sqrt(residual_field.dot(cache.weights.asDiagonal() * residual_field));
    return fit;
}

ComplexControlCoefficients fit_control(const ControlCache& cache, const ComplexField& target,
                                       const FitOptions& options) {
    ComplexControlCoefficients out;
    out.re = fit_control(cache, Field(target.real()), options);
    out.im = fit_control(cache, Field(target.imag()), options);
    return out;
}

SigmaPlusFlux assemble_control(const Eigen::VectorXd& a, const ControlCache& cache) {
    if (a.size() != cache.n_basis())
        throw std::invalid_argument("assemble_control: coefficients from a different cache");
    SigmaPlusFlux flux(cache.grid, cache.mesh);
    const int w1 = cache.w[0], w2 = cache.w[1], w3 = cache.w[2];
    const int levels = flux.n_levels();

    // omega_eta separates into time(eta3) x space(eta1,eta2); collapse eta3
    // first, then expand over edge nodes.
    Eigen::MatrixXd tfac(w3, levels);
    for (int e3 = 1; e3 <= w3; ++e3)
        for (int i = 0; i < levels; ++i)
            tfac(e3 - 1, i) = omega_time_factor(e3, flux.level_time(i), cache.mesh);

    Eigen::MatrixXd collapsed(w1 * w2, levels);  // sum_eta3 a_eta T_eta3(t)
    for (int e1 = 1; e1 <= w1; ++e1)
        for (int e2 = 1; e2 <= w2; ++e2) {
            const int row = (e1 - 1) * w2 + (e2 - 1);
            collapsed.row(row).setZero();
            for (int e3 = 1; e3 <= w3; ++e3) {
                const double c = a[cache.column_of({e1, e2, e3})];
                if (c != 0.0) collapsed.row(row) += c * tfac.row(e3 - 1);
            }
        }

    for (Edge e : all_edges) {
        auto& m = flux.edge(e);
        const int n = edge_nodes(cache.grid, e);
        Eigen::MatrixXd space(w1 * w2, n);
        for (int e1 = 1; e1 <= w1; ++e1)
            for (int e2 = 1; e2 <= w2; ++e2) {
                const int row = (e1 - 1) * w2 + (e2 - 1);
                for (int k = 0; k < n; ++k)
                    space(row, k) = omega_spatial_factor({e1, e2, 1}, cache.grid, cache.kappa, e, k);
            }
        m.noalias() = space.transpose() * collapsed;
    }
    return flux;
}

SigmaPlusFluxC assemble_control(const ComplexControlCoefficients& coeffs,
                                const ControlCache& cache) {
    const SigmaPlusFlux re = assemble_control(coeffs.re.a, cache);
    const SigmaPlusFlux im = assemble_control(coeffs.im.a, cache);
    SigmaPlusFluxC flux(cache.grid, cache.mesh);
    for (Edge e : all_edges) {
        const int idx = static_cast<int>(e);
        flux.edges[idx] = re.edges[idx].cast<std::complex<double>>() +
                          std::complex<double>(0.0, 1.0) * im.edges[idx].cast<std::complex<double>>();
    }
    return flux;
}

}  // namespace plumetrace::control
