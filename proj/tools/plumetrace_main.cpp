#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plumetrace/control.hpp"
#include "plumetrace/pipeline.hpp"
#include "plumetrace/scenario.hpp"
#include "plumetrace/trace.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace plumetrace;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    int paper_case = 0;                 // 2,4,5,6; 0 = none
    std::string scenario_path;
    std::string trace_path;
    std::string cache_path;
    std::array<int, 3> w{10, 10, 10};
    int M = 7, K = 8, L = 8, restarts = 50;
    std::string method = "both";
    std::string output = "results";
    std::uint64_t seed = 0;
    double noise = 0.0;
    int threads = 0;
    int fit_cap = 1000;
    std::string staging;
};

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config file not found: " + path);
    json j;
    in >> j;
    cfg.paper_case = j.value("case", 0);
    cfg.scenario_path = j.value("scenario", std::string{});
    cfg.trace_path = j.value("trace", std::string{});
    cfg.cache_path = j.value("cache", std::string{});
    if (j.contains("w")) {
        const auto w = j.at("w").get<std::vector<int>>();
        if (w.size() != 3) throw std::runtime_error("config: w must have 3 entries");
        cfg.w = {w[0], w[1], w[2]};
    }
    cfg.M = j.value("M", cfg.M);
    cfg.K = j.value("K", cfg.K);
    cfg.L = j.value("L", cfg.L);
    cfg.restarts = j.value("restarts", cfg.restarts);
    cfg.method = j.value("method", cfg.method);
    cfg.output = j.value("output", cfg.output);
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.noise = j.value("noise", 0.0);
    cfg.threads = j.value("threads", 0);
    cfg.fit_cap = j.value("fit_cap", 1000);
    cfg.staging = j.value("staging", std::string{});
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    return json{{"case", cfg.paper_case},
                {"scenario", cfg.scenario_path},
                {"trace", cfg.trace_path},
                {"cache", cfg.cache_path},
                {"w", {cfg.w[0], cfg.w[1], cfg.w[2]}},
                {"M", cfg.M},
                {"K", cfg.K},
                {"L", cfg.L},
                {"restarts", cfg.restarts},
                {"method", cfg.method},
                {"output", cfg.output},
                {"seed", cfg.seed},
                {"noise", cfg.noise},
                {"threads", cfg.threads},
                {"fit_cap", cfg.fit_cap},
                {"staging", cfg.staging}};
}

std::uint64_t fnv_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void write_manifest(const fs::path& path, const std::string& command, const RunConfig& cfg,
                    const json& extra) {
    const json cfg_json = config_to_json(cfg);
    json manifest{{"command", command},
                  {"version", kVersion},
                  {"config", cfg_json},
                  {"config_hash", fnv_hash(cfg_json.dump())},
                  {"seed", cfg.seed}};
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    std::ofstream out(path, std::ios::trunc);
    out << manifest.dump(2) << "\n";
}

scenario::Scenario resolve_scenario(const RunConfig& cfg) {
    if (!cfg.scenario_path.empty()) return scenario::load_scenario(cfg.scenario_path);
    if (cfg.paper_case != 0) {
        auto sc = scenario::build_paper_case(cfg.paper_case);
        sc.noise = cfg.noise;
        sc.seed = cfg.seed;
        return sc;
    }
    throw std::runtime_error("no scenario: pass --case 2|4|5|6 or --scenario file.json");
}

int cmd_generate(const RunConfig& cfg, const std::string& csv_path,
                 const std::string& save_scenario_path) {
    if (cfg.trace_path.empty()) throw std::runtime_error("generate: --out trace path required");
    const auto sc = resolve_scenario(cfg);
    const auto trace = scenario::generate_measurement(sc);
    save_trace(trace, cfg.trace_path);
    if (!csv_path.empty()) export_trace_csv(trace, csv_path);
    if (!save_scenario_path.empty()) scenario::save_scenario(sc, save_scenario_path);
    write_manifest(fs::path(cfg.trace_path).string() + ".manifest.json", "generate", cfg,
                   {{"trace_rms", trace.rms()}});
    std::cout << "wrote " << cfg.trace_path << " (" << trace.n_levels() << " levels, rms "
              << trace.rms() << ")\n";
    return 0;
}

int cmd_precompute(const RunConfig& cfg) {
    if (cfg.cache_path.empty()) throw std::runtime_error("precompute: --cache path required");
    Grid2D grid;
    TimeMesh mesh;
    double kappa = 1.0;
    if (!cfg.trace_path.empty() && fs::exists(cfg.trace_path)) {
        const auto trace = load_trace(cfg.trace_path);
        grid = trace.grid;
        mesh = trace.mesh;
        kappa = trace.kappa;
    } else {
        const auto sc = resolve_scenario(cfg);
        grid = sc.grid;
        mesh = sc.mesh;
        kappa = sc.kappa;
    }

    const auto fingerprint = control::cache_fingerprint(grid, mesh, kappa, cfg.w);
    if (fs::exists(cfg.cache_path)) {
        const auto existing = control::load_control_cache(cfg.cache_path);
        if (existing.fingerprint == fingerprint) {
            std::cout << "cache up to date (" << existing.n_basis() << " entries), no solves\n";
            return 0;
        }
    }

    const std::string staging =
        cfg.staging.empty() ? cfg.cache_path + ".staging" : cfg.staging;
    const auto cache = control::build_control_cache(grid, mesh, kappa, cfg.w, staging, cfg.threads);
    control::save_control_cache(cache, cfg.cache_path);
    std::error_code ec;
    fs::remove_all(staging, ec);  // staged entries are folded into the final file
    write_manifest(cfg.cache_path + ".manifest.json", "precompute", cfg,
                   {{"fingerprint", cache.fingerprint}, {"entries", cache.n_basis()}});
    std::cout << "wrote " << cfg.cache_path << " (" << cache.n_basis() << " entries)\n";
    return 0;
}

int cmd_invert(const RunConfig& cfg) {
    if (cfg.trace_path.empty()) throw std::runtime_error("invert: --trace path required");
    if (!fs::exists(cfg.trace_path))
        throw std::runtime_error("invert: trace not found: " + cfg.trace_path);
    if (cfg.cache_path.empty() || !fs::exists(cfg.cache_path))
        throw std::runtime_error("invert: control cache not found (" + cfg.cache_path +
                                 "); run `plumetrace precompute` first");

    const auto trace = load_trace(cfg.trace_path);
    const auto cache = control::load_control_cache(cfg.cache_path);

    pipeline::InvertConfig icfg;
    icfg.M = cfg.M;
    icfg.K = cfg.K;
    icfg.L = cfg.L;
    icfg.restarts = cfg.restarts;
    icfg.seed = cfg.seed;
    icfg.method = cfg.method;
    icfg.fit.max_iterations = cfg.fit_cap;
    icfg.threads = cfg.threads;

    const auto outcome = pipeline::run_inversion(trace, cache, icfg);

    std::optional<pipeline::ErrorReport> errors;
    const SourceSet* truth = nullptr;
    scenario::Scenario sc;
    if (!cfg.scenario_path.empty() || cfg.paper_case != 0) {
        sc = resolve_scenario(cfg);
        truth = &sc.truth;
        errors = pipeline::compare_to_truth(outcome, sc.truth);
    }

    fs::create_directories(cfg.output);
    {
        std::ofstream out(fs::path(cfg.output) / "result.json", std::ios::trunc);
        out << pipeline::outcome_to_json(outcome, icfg, errors) << "\n";
    }
    pipeline::write_result_csvs(cfg.output, outcome, truth);
    write_manifest(fs::path(cfg.output) / "manifest.json", "invert", cfg,
                   {{"cache_fingerprint", outcome.cache_fingerprint}});

    if (outcome.no_source()) {
        std::cout << "no detectable source (objective did not improve on the zero model)\n";
        return 2;
    }
    std::cout << "m = " << outcome.locate.m << "\n";
    for (int i = 0; i < outcome.locate.m; ++i)
        std::cout << "  source " << i + 1 << ": ("
                  << outcome.locate.positions[static_cast<std::size_t>(i)].x() << ", "
                  << outcome.locate.positions[static_cast<std::size_t>(i)].y()
                  << "), lambda0 = " << outcome.locate.lambda0[i] << "\n";
    if (errors && errors->count_match) {
        std::cout << "position error " << 100.0 * errors->position << "%, lambda0 error "
                  << 100.0 * errors->lambda0 << "%\n";
    }
    std::cout << "results in " << cfg.output << "\n";
    return 0;
}

int cmd_report(const std::string& result_path) {
    std::ifstream in(result_path);
    if (!in) throw std::runtime_error("report: cannot open " + result_path);
    json j;
    in >> j;

    if (j.value("no_detectable_source", false)) {
        std::cout << "no detectable source\n";
        return 0;
    }
    std::cout << "sources: " << j.at("m").get<int>() << "\n";
    const auto& pos = j.at("positions");
    const auto& lam = j.at("lambda0");
    for (std::size_t i = 0; i < pos.size(); ++i)
        std::cout << "  " << i + 1 << ": (" << pos[i][0].get<double>() << ", "
                  << pos[i][1].get<double>() << ")  lambda0 = " << lam[i].get<double>() << "\n";

    const auto& diag = j.at("diagnostics");
    std::cout << "objective " << diag.at("objective").get<double>() << " (zero model "
              << diag.at("zero_objective").get<double>() << "), quality warnings "
              << diag.at("quality_warnings").get<int>() << "\n";
    const auto& stab = diag.at("stability");
    std::cout << "stability: delta = " << stab.at("delta").get<double>()
              << ", C = " << stab.at("constant").get<double>()
              << ", min |eig| = " << stab.at("min_abs_eigenvalue").get<double>() << "\n";
    if (j.contains("errors")) {
        const auto& e = j.at("errors");
        if (e.value("count_match", false)) {
            std::cout << "vs truth: position " << 100.0 * e.at("position_rel").get<double>()
                      << "%, lambda0 " << 100.0 * e.at("lambda0_rel").get<double>() << "%\n";
            auto print_row = [](const char* name, const json& row) {
                std::cout << name;
                for (const auto& v : row) std::cout << " " << 100.0 * v.get<double>() << "%";
                std::cout << "\n";
            };
            if (e.contains("intensity_l2_ifourier"))
                print_row("  I-F method:  ", e.at("intensity_l2_ifourier"));
            if (e.contains("intensity_l2_approx"))
                print_row("  Appr method: ", e.at("intensity_l2_approx"));
        } else {
            std::cout << "vs truth: source count mismatch (true m = "
                      << e.at("m_true").get<int>() << ")\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point-source reconstruction from boundary concentration data"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config; flags override its fields")
        ->expected(1);

    RunConfig flags;
    bool has_case = false, has_noise = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", flags.seed, "RNG seed");
        cmd->add_option("--threads", flags.threads, "worker threads (0 = auto)");
    };

    auto* gen = app.add_subcommand("generate", "simulate a scenario and write the trace");
    std::string gen_csv, gen_scenario_out;
    gen->add_option("--case", flags.paper_case, "benchmark layout: 2, 4, 5 or 6 sources")
        ->check(CLI::IsMember({2, 4, 5, 6}));
    gen->add_option("--scenario", flags.scenario_path, "scenario JSON with ground truth");
    gen->add_option("--out", flags.trace_path, "output trace container");
    gen->add_option("--csv", gen_csv, "also export the trace as CSV");
    gen->add_option("--save-scenario", gen_scenario_out, "write the resolved scenario JSON");
    gen->add_option("--noise", flags.noise, "relative Gaussian noise level");
    add_common(gen);

    auto* pre = app.add_subcommand("precompute", "build the boundary-control cache (offline)");
    pre->add_option("--case", flags.paper_case, "take grid/mesh from a benchmark case");
    pre->add_option("--scenario", flags.scenario_path, "take grid/mesh from a scenario JSON");
    pre->add_option("--trace", flags.trace_path, "take grid/mesh from an existing trace");
    pre->add_option("--cache", flags.cache_path, "output cache file");
    pre->add_option("--w", flags.w, "basis index bounds W1 W2 W3")->expected(3);
    pre->add_option("--staging", flags.staging, "staging dir for resumable builds");
    add_common(pre);

    auto* inv = app.add_subcommand("invert", "run the two-step reconstruction");
    inv->add_option("--trace", flags.trace_path, "measured trace container");
    inv->add_option("--cache", flags.cache_path, "precomputed control cache");
    inv->add_option("--out", flags.output, "output directory");
    inv->add_option("--case", flags.paper_case, "benchmark case providing ground truth");
    inv->add_option("--scenario", flags.scenario_path, "scenario JSON providing ground truth");
    inv->add_option("--method", flags.method, "ifourier | approx | both")
        ->check(CLI::IsMember({"ifourier", "approx", "both"}));
    inv->add_option("--M", flags.M, "initial source-count bound");
    inv->add_option("--K", flags.K, "highest Fourier mode");
    inv->add_option("--L", flags.L, "intensity basis order");
    inv->add_option("--restarts", flags.restarts, "multistart trials");
    inv->add_option("--fit-cap", flags.fit_cap, "iteration cap of the least-squares fits");
    add_common(inv);

    auto* rep = app.add_subcommand("report", "summarize a result JSON");
    std::string result_path = "results/result.json";
    rep->add_option("--result", result_path, "result.json from invert");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        // flags override config fields they were given for
        auto merge = [&](CLI::App* cmd) {
            if (cmd->count("--case")) cfg.paper_case = flags.paper_case;
            if (cmd->count("--scenario")) cfg.scenario_path = flags.scenario_path;
            if (cmd->count("--seed")) cfg.seed = flags.seed;
            if (cmd->count("--threads")) cfg.threads = flags.threads;
        };
        if (gen->parsed()) {
            merge(gen);
            if (gen->count("--out")) cfg.trace_path = flags.trace_path;
            if (gen->count("--noise")) cfg.noise = flags.noise;
            return cmd_generate(cfg, gen_csv, gen_scenario_out);
        }
        if (pre->parsed()) {
            merge(pre);
            if (pre->count("--trace")) cfg.trace_path = flags.trace_path;
            if (pre->count("--cache")) cfg.cache_path = flags.cache_path;
            if (pre->count("--w")) cfg.w = flags.w;
            if (pre->count("--staging")) cfg.staging = flags.staging;
            return cmd_precompute(cfg);
        }
        if (inv->parsed()) {
            merge(inv);
            if (inv->count("--trace")) cfg.trace_path = flags.trace_path;
            if (inv->count("--cache")) cfg.cache_path = flags.cache_path;
            if (inv->count("--out")) cfg.output = flags.output;
            if (inv->count("--method")) cfg.method = flags.method;
            if (inv->count("--M")) cfg.M = flags.M;
            if (inv->count("--K")) cfg.K = flags.K;
            if (inv->count("--L")) cfg.L = flags.L;
            if (inv->count("--restarts")) cfg.restarts = flags.restarts;
            if (inv->count("--fit-cap")) cfg.fit_cap = flags.fit_cap;
            return cmd_invert(cfg);
        }
        if (rep->parsed()) return cmd_report(result_path);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
