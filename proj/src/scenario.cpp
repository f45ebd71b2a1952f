#include "plumetrace/scenario.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "plumetrace/heat.hpp"
#include "plumetrace/rng.hpp"

namespace plumetrace::scenario {

using nlohmann::json;

double paper_intensity(const std::string& name, double t, double t_star) {
    const double pi = 3.141592653589793238462643383279502884;
    const double q = 0.5 * (1.0 - std::tanh((t - 0.9 * t_star) / 21600.0));
    if (name == "q") return q;
    if (name == "g1") {
        const double b1 = 10.0 / t_star * (t - 36000.0);
        const double b2 = 15.0 / t_star * (t - 100500.0);
        return (3.0 + 1.5 * std::sin(2.0 * pi * t / t_star) + 3.0 * std::exp(-b1 * b1) +
                2.5 * std::exp(-b2 * b2)) *
               q;
    }
    if (name == "g2") return (5.0 + std::sin(4.0 * pi * t / t_star)) * q;
    if (name == "g3") return 6.0 * (1.0 - (t / t_star) * (t / t_star)) * q;
    if (name == "g4") return 5.0 * q;
    if (name == "g5" || name == "g6") return 4.0 * q;
    throw std::invalid_argument("paper_intensity: unknown intensity name '" + name + "'");
}

Eigen::VectorXd sample_intensity(const std::string& name, double t_star, int n) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = paper_intensity(name, t_star * i / (n - 1), t_star);
    return g;
}

std::vector<std::string> paper_case_intensity_names(int n_points) {
    std::vector<std::string> names{"g1", "g2", "g3", "g4", "g5", "g6"};
    if (n_points < 1 || n_points > 6)
        throw std::invalid_argument("paper_case_intensity_names: 1..6 sources supported");
    names.resize(static_cast<std::size_t>(n_points));
    return names;
}

Scenario build_paper_case(int n_points) {
    std::vector<Vec2> layout;
    switch (n_points) {
        case 2: layout = {{200, 800}, {200, 650}}; break;
        case 4: layout = {{200, 800}, {800, 200}, {400, 600}, {800, 800}}; break;
        case 5: layout = {{200, 800}, {800, 200}, {400, 600}, {800, 800}, {500, 100}}; break;
        case 6:
            layout = {{200, 800}, {800, 200}, {400, 600}, {800, 800}, {500, 100}, {900, 500}};
            break;
        default:
            throw std::invalid_argument("build_paper_case: cases 2, 4, 5 and 6 are defined");
    }

    Scenario sc;
    sc.grid = Grid2D(1000.0, 1000.0, 101, 101);
    sc.mesh = TimeMesh(138240.0, 172800.0, 320, 80);
    sc.kappa = 1.0;

    const auto names = paper_case_intensity_names(n_points);
    sc.truth.times = Eigen::VectorXd::LinSpaced(sc.mesh.nt_minus + 1, 0.0, sc.mesh.t_star);
    for (int j = 0; j < n_points; ++j) {
        SourceSet::Source src;
        src.position = layout[static_cast<std::size_t>(j)];
        src.intensity = sample_intensity(names[static_cast<std::size_t>(j)], sc.mesh.t_star,
                                         sc.mesh.nt_minus + 1);
        sc.truth.sources.push_back(std::move(src));
    }
    sc.truth.check_admissible(sc.grid);
    return sc;
}

MeasurementWithFields generate_measurement_with_fields(const Scenario& scenario) {
    DiscreteSource load;
    const int levels = scenario.mesh.nt_minus + 1;
    for (int j = 0; j < scenario.truth.count(); ++j) {
        Eigen::VectorXd samples(levels);
        for (int i = 0; i < levels; ++i)
            samples[i] = scenario.truth.intensity_at(j, scenario.mesh.level_time(i));
        load.add(deposit_point_source(scenario.grid,
                                      scenario.truth.sources[static_cast<std::size_t>(j)].position,
                                      samples));
    }
    if (scenario.truth.sources.empty()) load.active_levels = levels;

    auto fwd = heat::solve_forward(scenario.grid, scenario.mesh, scenario.kappa, load);

    if (scenario.noise > 0.0) {
        Rng rng(scenario.seed);
        const double sigma = scenario.noise * fwd.trace.rms();
        for (Edge e : all_edges) {
            auto& m = fwd.trace.edge(e);
            for (int k = 0; k < m.rows(); ++k)
                for (int i = 0; i < m.cols(); ++i) m(k, i) += sigma * rng.gaussian();
        }
    }
    return {std::move(fwd.trace), std::move(fwd.u_tstar), std::move(fwd.u_final)};
}

BoundaryTrace generate_measurement(const Scenario& scenario) {
    return generate_measurement_with_fields(scenario).trace;
}

std::string scenario_to_json(const Scenario& sc) {
    json sources = json::array();
    for (const auto& src : sc.truth.sources) {
        json s{{"position", {src.position.x(), src.position.y()}}};
        s["intensity"] = {{"samples", std::vector<double>(src.intensity.data(),
                                                          src.intensity.data() + src.intensity.size())}};
        sources.push_back(s);
    }
    json j{{"domain", {{"lx", sc.grid.lx}, {"ly", sc.grid.ly}}},
           {"grid", {{"nx", sc.grid.nx}, {"ny", sc.grid.ny}}},
           {"mesh",
            {{"t_star", sc.mesh.t_star},
             {"t_final", sc.mesh.t_final},
             {"nt_minus", sc.mesh.nt_minus},
             {"nt_plus", sc.mesh.nt_plus}}},
           {"kappa", sc.kappa},
           {"sources", sources},
           {"noise", sc.noise},
           {"seed", sc.seed}};
    return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
    const json j = json::parse(text);
    Scenario sc;
    sc.grid = Grid2D(j.at("domain").at("lx").get<double>(), j.at("domain").at("ly").get<double>(),
                     j.at("grid").at("nx").get<int>(), j.at("grid").at("ny").get<int>());
    const auto& jm = j.at("mesh");
    sc.mesh = TimeMesh(jm.at("t_star").get<double>(), jm.at("t_final").get<double>(),
                       jm.at("nt_minus").get<int>(), jm.at("nt_plus").get<int>());
    sc.kappa = j.at("kappa").get<double>();
    sc.noise = j.value("noise", 0.0);
    sc.seed = j.value("seed", std::uint64_t{0});

    const int levels = sc.mesh.nt_minus + 1;
    sc.truth.times = Eigen::VectorXd::LinSpaced(levels, 0.0, sc.mesh.t_star);
    for (const auto& s : j.at("sources")) {
        SourceSet::Source src;
        const auto& pos = s.at("position");
        src.position = Vec2(pos.at(0).get<double>(), pos.at(1).get<double>());
        const auto& intensity = s.at("intensity");
        if (intensity.is_string()) {
            src.intensity =
                sample_intensity(intensity.get<std::string>(), sc.mesh.t_star, levels);
        } else {
            const auto samples = intensity.at("samples").get<std::vector<double>>();
            src.intensity = Eigen::Map<const Eigen::VectorXd>(samples.data(),
                                                              static_cast<long>(samples.size()));
            if (src.intensity.size() != levels)
                throw std::invalid_argument(
                    "scenario_from_json: intensity samples must match nt_minus + 1 levels");
        }
        sc.truth.sources.push_back(std::move(src));
    }
    if (!sc.truth.sources.empty()) sc.truth.check_admissible(sc.grid);
    return sc;
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
    out << scenario_to_json(scenario) << "\n";
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scenario_from_json(text);
}

}  // namespace plumetrace::scenario
