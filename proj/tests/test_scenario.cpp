#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "plumetrace/rng.hpp"
#include "plumetrace/scenario.hpp"
#include "plumetrace/trace.hpp"
#include "test_support.hpp"

using namespace plumetrace;
using testsupport::kPi;

TEST_SUITE("scenario") {

TEST_CASE("benchmark intensity shapes") {
    const double t_star = 138240.0;

    SUBCASE("g4 starts at 5 up to the tanh onset") {
        CHECK(std::abs(scenario::paper_intensity("g4", 0.0, t_star) - 5.0) <= 1e-4);
    }

    SUBCASE("g3 vanishes at T*") {
        CHECK(scenario::paper_intensity("g3", t_star, t_star) == 0.0);
    }

    SUBCASE("g5 and g6 are 4q") {
        for (double t : {0.0, 0.3 * t_star, 0.9 * t_star}) {
            const double q = scenario::paper_intensity("q", t, t_star);
            CHECK(scenario::paper_intensity("g5", t, t_star) == 4.0 * q);
            CHECK(scenario::paper_intensity("g6", t, t_star) == 4.0 * q);
        }
    }

    SUBCASE("g2 minus 5q is the odd harmonic") {
        Rng rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const double t = rng.uniform(0.0, t_star);
            const double q = scenario::paper_intensity("q", t, t_star);
            const double expected = q * std::sin(4.0 * kPi * t / t_star);
            CHECK(scenario::paper_intensity("g2", t, t_star) - 5.0 * q ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }

    SUBCASE("the tanh roll-off leaves a finite jump at T*") {
        // (T* - 0.9 T*) / 21600 = 0.64, so q(T*) = (1 - tanh 0.64)/2, about
        // 0.2175; the scenario enforces inactivity after T* by windowing
        const double q_end = scenario::paper_intensity("q", t_star, t_star);
        CHECK(q_end == doctest::Approx(0.5 * (1.0 - std::tanh(0.64))).epsilon(1e-12));
        CHECK(q_end < 0.22);
        CHECK(q_end > 0.21);
    }

    SUBCASE("unknown name rejected") {
        CHECK_THROWS_AS(scenario::paper_intensity("g9", 0.0, t_star), std::invalid_argument);
    }

    SUBCASE("all intensities nonnegative on [0, T*]") {
        for (const char* name : {"q", "g1", "g2", "g3", "g4", "g5", "g6"})
            for (int i = 0; i <= 200; ++i)
                CHECK(scenario::paper_intensity(name, t_star * i / 200.0, t_star) >= 0.0);
    }
}

TEST_CASE("benchmark layouts") {
    const auto two = scenario::build_paper_case(2);
    REQUIRE(two.truth.count() == 2);
    CHECK(two.truth.sources[0].position == Vec2(200.0, 800.0));
    CHECK(two.truth.sources[1].position == Vec2(200.0, 650.0));
    CHECK(two.kappa == 1.0);
    CHECK(two.mesh.t_star == 138240.0);
    CHECK(two.mesh.t_final == 172800.0);
    CHECK(two.grid.lx == 1000.0);

    const auto five = scenario::build_paper_case(5);
    REQUIRE(five.truth.count() == 5);
    CHECK(five.truth.sources[4].position == Vec2(500.0, 100.0));

    const auto six = scenario::build_paper_case(6);
    REQUIRE(six.truth.count() == 6);
    CHECK(six.truth.sources[5].position == Vec2(900.0, 500.0));

    CHECK_THROWS_AS(scenario::build_paper_case(3), std::invalid_argument);
}

TEST_CASE("measurement generation") {
    scenario::Scenario sc;
    sc.grid = Grid2D(1000.0, 1000.0, 33, 33);
    sc.mesh = TimeMesh(50000.0, 65000.0, 40, 12);
    sc.kappa = 1.0;
    sc.truth.times = Eigen::VectorXd::LinSpaced(41, 0.0, 50000.0);

    SUBCASE("zero intensities give the zero trace") {
        sc.truth.sources.push_back({Vec2(400.0, 500.0), Eigen::VectorXd::Zero(41)});
        const auto trace = scenario::generate_measurement(sc);
        CHECK(trace.rms() == 0.0);
    }

    Eigen::VectorXd g(41);
    for (int i = 0; i < 41; ++i) g[i] = 2.0 + std::sin(2.0 * kPi * i / 40.0);
    sc.truth.sources.push_back({Vec2(400.0, 500.0), g});

    SUBCASE("noise-free generation is deterministic") {
        const auto a = scenario::generate_measurement(sc);
        const auto b = scenario::generate_measurement(sc);
        for (Edge e : all_edges) CHECK((a.edge(e) - b.edge(e)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.corner_mismatch() == 0.0);
        CHECK(a.all_finite());
    }

    SUBCASE("noise level matches the requested fraction of the trace RMS") {
        const auto clean = scenario::generate_measurement(sc);
        sc.noise = 0.01;
        sc.seed = 99;
        const auto noisy = scenario::generate_measurement(sc);
        double ss = 0.0;
        long count = 0;
        for (Edge e : all_edges) {
            ss += (noisy.edge(e) - clean.edge(e)).squaredNorm();
            count += clean.edge(e).size();
        }
        const double perturbation_rms = std::sqrt(ss / static_cast<double>(count));
        CHECK(perturbation_rms ==
              doctest::Approx(0.01 * clean.rms()).epsilon(0.05));

        // seeded: same seed reproduces, different seed does not
        const auto noisy2 = scenario::generate_measurement(sc);
        CHECK((noisy2.edge(Edge::South) - noisy.edge(Edge::South)).cwiseAbs().maxCoeff() == 0.0);
        sc.seed = 100;
        const auto other = scenario::generate_measurement(sc);
        CHECK((other.edge(Edge::South) - noisy.edge(Edge::South)).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("scenario JSON round trip") {
    auto sc = scenario::build_paper_case(2);
    sc.noise = 0.02;
    sc.seed = 1234;
    const auto text = scenario::scenario_to_json(sc);
    const auto back = scenario::scenario_from_json(text);
    CHECK(back.grid.same_as(sc.grid));
    CHECK(back.mesh.same_as(sc.mesh));
    CHECK(back.kappa == sc.kappa);
    CHECK(back.noise == sc.noise);
    CHECK(back.seed == sc.seed);
    REQUIRE(back.truth.count() == 2);
    CHECK(back.truth.sources[1].position == sc.truth.sources[1].position);
    CHECK((back.truth.sources[0].intensity - sc.truth.sources[0].intensity).cwiseAbs().maxCoeff() ==
          0.0);

    // named intensities are sampled on load
    const std::string named = R"({
        "domain": {"lx": 1000.0, "ly": 1000.0},
        "grid": {"nx": 21, "ny": 21},
        "mesh": {"t_star": 138240.0, "t_final": 172800.0, "nt_minus": 32, "nt_plus": 8},
        "kappa": 1.0,
        "sources": [{"position": [200.0, 800.0], "intensity": "g4"}]
    })";
    const auto parsed = scenario::scenario_from_json(named);
    REQUIRE(parsed.truth.count() == 1);
    CHECK(parsed.truth.sources[0].intensity[0] ==
          doctest::Approx(scenario::paper_intensity("g4", 0.0, 138240.0)).epsilon(1e-14));
}

TEST_CASE("trace container round trip") {
    scenario::Scenario sc;
    sc.grid = Grid2D(800.0, 600.0, 17, 13);
    sc.mesh = TimeMesh(1000.0, 1400.0, 8, 4);
    sc.kappa = 2.0;
    sc.truth.times = Eigen::VectorXd::LinSpaced(9, 0.0, 1000.0);
    Eigen::VectorXd g(9);
    for (int i = 0; i < 9; ++i) g[i] = 1.0 + i * 0.1;
    sc.truth.sources.push_back({Vec2(300.0, 200.0), g});
    const auto trace = scenario::generate_measurement(sc);

    const auto dir = std::filesystem::temp_directory_path() / "pt_trace_roundtrip";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "trace.pt").string();
    save_trace(trace, path);
    const auto loaded = load_trace(path);
    CHECK(loaded.grid.same_as(trace.grid));
    CHECK(loaded.mesh.same_as(trace.mesh));
    CHECK(loaded.kappa == trace.kappa);
    for (Edge e : all_edges) {
        const auto& a = loaded.edge(e);
        const auto& b = trace.edge(e);
        REQUIRE(a.rows() == b.rows());
        for (int k = 0; k < a.rows(); ++k)
            for (int i = 0; i < a.cols(); ++i) CHECK(a(k, i) == b(k, i));
    }

    export_trace_csv(trace, (dir / "trace.csv").string());
    CHECK(std::filesystem::file_size(dir / "trace.csv") > 0);

    CHECK_THROWS_AS(load_trace((dir / "trace.csv").string()), std::runtime_error);
}

}  // TEST_SUITE
