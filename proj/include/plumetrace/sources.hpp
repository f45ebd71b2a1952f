#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "plumetrace/grid.hpp"

namespace plumetrace {

/// Ground-truth or estimated source set theta = {m, (s_j, g_j)}. Intensities
/// are real samples on a shared uniform time grid over [0, T*]; sources are
/// inactive on (T*, T) by construction.
struct SourceSet {
    struct Source {
        Vec2 position;
        Eigen::VectorXd intensity;  // samples at `times`
    };
    Eigen::VectorXd times;  // uniform, times[0] = 0, times[last] = T*
    std::vector<Source> sources;

    int count() const { return static_cast<int>(sources.size()); }
    double t_star() const { return times.size() ? times[times.size() - 1] : 0.0; }

    /// Linear interpolation of g_j at time t; zero outside [0, T*].
    double intensity_at(int j, double t) const {
        const auto& g = sources[static_cast<std::size_t>(j)].intensity;
        const int n = static_cast<int>(times.size());
        if (n == 0 || t < times[0] || t > times[n - 1]) return 0.0;
        const double dt = times[1] - times[0];
        int i = static_cast<int>((t - times[0]) / dt);
        if (i >= n - 1) return g[n - 1];
        const double w = (t - times[i]) / dt;
        return (1.0 - w) * g[i] + w * g[i + 1];
    }

    /// Trapezoid total intensity per source, lambda_j(0) = int_0^{T*} g_j dt.
    Eigen::VectorXd total_intensities() const {
        Eigen::VectorXd lam(count());
        const int n = static_cast<int>(times.size());
        for (int j = 0; j < count(); ++j) {
            const auto& g = sources[static_cast<std::size_t>(j)].intensity;
            double s = 0.0;
            for (int i = 0; i + 1 < n; ++i)
                s += 0.5 * (g[i] + g[i + 1]) * (times[i + 1] - times[i]);
            lam[j] = s;
        }
        return lam;
    }

    /// H1: pairwise-distinct interior positions (throws when violated).
    void check_admissible(const Grid2D& grid) const {
        for (std::size_t a = 0; a < sources.size(); ++a) {
            if (!grid.contains_interior(sources[a].position))
                throw std::invalid_argument("SourceSet: position on or outside the boundary");
            for (std::size_t b = a + 1; b < sources.size(); ++b)
                if ((sources[a].position - sources[b].position).norm() == 0.0)
                    throw std::invalid_argument("SourceSet: positions must be distinct");
        }
    }
};

/// Discretized Sum_j g_j(t) delta(x - s_j): per point, the four enclosing
/// nodes with bilinear weights divided by the nodal control area, plus the
/// intensity sampled at the solver's time levels over [0, T*] (levels
/// 0..nt_minus; the source is identically zero afterwards).
struct DiscreteSource {
    struct Point {
        std::array<int, 4> nodes;
        std::array<double, 4> loads;   // per unit intensity, area-normalized
        std::array<double, 4> weights; // bilinear weights, sum = 1
        Eigen::VectorXd samples;       // g at levels 0..nt_minus
    };
    std::vector<Point> points;
    int active_levels = 0;  // nt_minus + 1

    void add(const DiscreteSource& other) {
        if (active_levels == 0) active_levels = other.active_levels;
        if (other.active_levels != active_levels)
            throw std::invalid_argument("DiscreteSource::add: mismatched time sampling");
        points.insert(points.end(), other.points.begin(), other.points.end());
    }

    /// Discrete integral of the load field at a level (equals Sum_j g_j there).
    double total_mass(int level) const {
        double s = 0.0;
        for (const auto& p : points)
            if (level < p.samples.size())
                s += p.samples[level];  // weights sum to 1 and loads are area-normalized
        return s;
    }
};

/// Bilinear (area-weight) deposition of one point source. `intensity_samples`
/// holds g at the solver time levels 0..nt_minus. The position must be
/// strictly inside the domain.
DiscreteSource deposit_point_source(const Grid2D& grid, const Vec2& position,
                                    const Eigen::VectorXd& intensity_samples);

}  // namespace plumetrace
