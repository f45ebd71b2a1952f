#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "plumetrace/trace.hpp"

namespace plumetrace {

using nlohmann::json;

double BoundaryTrace::corner_mismatch() const {
    // (edge a, node) vs (edge b, node) pairs meeting at each corner
    struct CornerPair {
        Edge a;
        int ka;
        Edge b;
        int kb;
    };
    const int nx = grid.nx, ny = grid.ny;
    const CornerPair corners[4] = {
        {Edge::South, 0, Edge::West, 0},
        {Edge::South, nx - 1, Edge::East, 0},
        {Edge::North, 0, Edge::West, ny - 1},
        {Edge::North, nx - 1, Edge::East, ny - 1},
    };
    double worst = 0.0;
    for (const auto& c : corners) {
        const auto& ea = edge(c.a);
        const auto& eb = edge(c.b);
        worst = std::max(worst, (ea.row(c.ka) - eb.row(c.kb)).cwiseAbs().maxCoeff());
    }
    return worst;
}

double BoundaryTrace::rms() const {
    double ss = 0.0;
    long count = 0;
    for (const auto& e : edges) {
        ss += e.squaredNorm();
        count += e.size();
    }
    return count ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
}

bool BoundaryTrace::all_finite() const {
    for (const auto& e : edges)
        if (!e.allFinite()) return false;
    return true;
}

namespace {

constexpr char kTraceMagic[8] = {'P', 'T', 'R', 'A', 'C', 'E', '0', '1'};

json grid_to_json(const Grid2D& g) {
    return json{{"lx", g.lx}, {"ly", g.ly}, {"nx", g.nx}, {"ny", g.ny}};
}

Grid2D grid_from_json(const json& j) {
    return Grid2D(j.at("lx").get<double>(), j.at("ly").get<double>(), j.at("nx").get<int>(),
                  j.at("ny").get<int>());
}

json mesh_to_json(const TimeMesh& m) {
    return json{{"t_star", m.t_star},
                {"t_final", m.t_final},
                {"nt_minus", m.nt_minus},
                {"nt_plus", m.nt_plus}};
}

TimeMesh mesh_from_json(const json& j) {
    return TimeMesh(j.at("t_star").get<double>(), j.at("t_final").get<double>(),
                    j.at("nt_minus").get<int>(), j.at("nt_plus").get<int>());
}

void write_blob(std::ofstream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

}  // namespace

void save_trace(const BoundaryTrace& trace, const std::string& path) {
    json header{{"format", "plumetrace-trace"},
                {"version", 1},
                {"grid", grid_to_json(trace.grid)},
                {"mesh", mesh_to_json(trace.mesh)},
                {"kappa", trace.kappa},
                {"units", {{"length", "m"}, {"time", "s"}, {"value", "concentration"}}},
                {"edge_order", {"south", "north", "west", "east"}},
                {"layout", "edge-node-time"}};
    const std::string text = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("save_trace: cannot open " + tmp);
        write_blob(out, kTraceMagic, sizeof(kTraceMagic));
        const std::uint64_t len = text.size();
        write_blob(out, &len, sizeof(len));
        write_blob(out, text.data(), text.size());
        for (Edge e : all_edges) {
            const auto& m = trace.edge(e);
            // row-major (node, time)
            for (int k = 0; k < m.rows(); ++k)
                for (int i = 0; i < m.cols(); ++i) {
                    const double v = m(k, i);
                    write_blob(out, &v, sizeof(v));
                }
        }
        if (!out) throw std::runtime_error("save_trace: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

BoundaryTrace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_trace: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kTraceMagic, 8) != 0)
        throw std::runtime_error("load_trace: not a trace container: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const json header = json::parse(text);

    BoundaryTrace trace(grid_from_json(header.at("grid")), mesh_from_json(header.at("mesh")),
                        header.at("kappa").get<double>());
    for (Edge e : all_edges) {
        auto& m = trace.edge(e);
        for (int k = 0; k < m.rows(); ++k)
            for (int i = 0; i < m.cols(); ++i) {
                double v;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                m(k, i) = v;
            }
    }
    if (!in) throw std::runtime_error("load_trace: truncated payload in " + path);
    return trace;
}

void export_trace_csv(const BoundaryTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("export_trace_csv: cannot open " + path);
    out << "edge,index,t,value\n";
    out.precision(17);
    for (Edge e : all_edges) {
        const auto& m = trace.edge(e);
        for (int k = 0; k < m.rows(); ++k)
            for (int i = 0; i < m.cols(); ++i)
                out << edge_name(e) << ',' << k << ',' << trace.mesh.level_time(i) << ','
                    << m(k, i) << '\n';
    }
}

}  // namespace plumetrace
