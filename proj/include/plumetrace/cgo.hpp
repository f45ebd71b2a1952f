#pragma once

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "plumetrace/grid.hpp"

namespace plumetrace::cgo {

using Complex = std::complex<double>;
using Vec2c = Eigen::Vector2cd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
/// Largest real exponent accepted by eval(); e^x overflows near 709.
inline constexpr double kMaxExponent = 700.0;

/// Complex dot product without conjugation, rho . rho = rho_x^2 + rho_y^2.
inline Complex dot_unconjugated(const Vec2c& a, const Vec2c& b) {
    return a.x() * b.x() + a.y() * b.y();
}

/// One test function v(x,t) = exp(alpha*t + rho.x). Valid instances satisfy
/// alpha + kappa * rho.rho = 0, so v solves the adjoint equation
/// dv/dt + kappa * Laplace(v) = 0.
struct CGOFunction {
    Complex alpha{0.0, 0.0};
    Vec2c rho{Complex(0, 0), Complex(0, 0)};
    double kappa = 1.0;

    Complex exponent_at(const Vec2& x, double t) const {
        return alpha * t + rho.x() * x.x() + rho.y() * x.y();
    }

    Complex eval(const Vec2& x, double t) const {
        const Complex e = exponent_at(x, t);
        if (e.real() > kMaxExponent)
            throw std::domain_error("CGOFunction::eval: exponent " + std::to_string(e.real()) +
                                    " exceeds overflow guard (ill-scaled direction scheme)");
        return std::exp(e);
    }

    /// d v / d n at a boundary point, computed analytically as (rho.n) v.
    Complex eval_normal_derivative(const Vec2& x, double t, const Vec2& n) const {
        const Complex rho_n = rho.x() * n.x() + rho.y() * n.y();
        return rho_n * eval(x, t);
    }

    /// |alpha + kappa rho.rho|, zero for members of the admissible family.
    double membership_residual() const {
        return std::abs(alpha + kappa * dot_unconjugated(rho, rho));
    }

    CGOFunction conjugate() const {
        CGOFunction c;
        c.alpha = std::conj(alpha);
        c.rho = {std::conj(rho.x()), std::conj(rho.y())};
        c.kappa = kappa;
        return c;
    }
};

/// Direction bookkeeping for one mode, serializable for run reproducibility.
struct DirectionScheme {
    int k = 0;
    double r = 0.0;
    std::vector<double> betas;
    std::vector<double> gammas;
};

struct CGOFamily {
    DirectionScheme scheme;
    std::vector<CGOFunction> functions;
};

/// Given a real vector a with |a| >= sqrt(|k| pi), returns b such that
/// rho = a + i b satisfies rho.rho = 2 k pi i. Here k may be any real number.
inline Vec2 make_vector_b(const Vec2& a, double k) {
    const double norm_a = a.norm();
    if (norm_a == 0.0) {
        if (k != 0.0)
            throw std::invalid_argument("make_vector_b: |a| = 0 requires k = 0");
        return Vec2::Zero();
    }
    double arg = k * kPi / (norm_a * norm_a);
    if (std::abs(arg) > 1.0 + 1e-12)
        throw std::invalid_argument("make_vector_b: |a| < sqrt(|k| pi), arccos argument " +
                                    std::to_string(arg) + " out of range");
    arg = std::clamp(arg, -1.0, 1.0);
    const double beta = std::atan2(a.y(), a.x());
    const double gamma = beta + std::acos(arg);
    return norm_a * Vec2(std::cos(gamma), std::sin(gamma));
}

/// The 3M static test functions of the zero mode: alpha = 0,
/// rho_l = r0 ((cos b_l, sin b_l) + i (cos g_l, sin g_l)) with g_l = b_l - pi/2
/// and r0 = 2 sqrt(2) / diag(Omega). Every rho satisfies rho.rho = 0.
inline CGOFamily make_zero_mode_functions(int M, const Grid2D& grid, double kappa = 1.0) {
    if (M < 1) throw std::invalid_argument("make_zero_mode_functions: M >= 1 required");
    const double r0 = 2.0 * std::sqrt(2.0) / grid.diag();
    CGOFamily fam;
    fam.scheme.k = 0;
    fam.scheme.r = r0;
    for (int l = 1; l <= 3 * M; ++l) {
        const double beta = 2.0 * l * kPi / (3.0 * M);
        const double gamma = beta - kPi / 2.0;
        CGOFunction v;
        v.kappa = kappa;
        v.alpha = Complex(0.0, 0.0);
        v.rho = {Complex(r0 * std::cos(beta), r0 * std::cos(gamma)),
                 Complex(r0 * std::sin(beta), r0 * std::sin(gamma))};
        fam.scheme.betas.push_back(beta);
        fam.scheme.gammas.push_back(gamma);
        fam.functions.push_back(v);
    }
    return fam;
}

/// Half-frequency test functions for mode k >= 1 (even periodic extension):
/// v(x,t) = exp(rho.x) exp(-i k pi t / T*). Directions
/// rho_l = r_k ((cos b_l, sin b_l) + i (cos g_l, sin g_l)) with
/// g_l = b_l - arccos(k pi / (2 kappa r_k^2 T*)), so alpha + kappa rho.rho = 0.
/// r_k = 0 selects the default max{2 sqrt(2)/diag, sqrt(k pi/(2 kappa T*))}.
inline CGOFamily make_mode_functions(int k, int M, double t_star, double kappa,
                                     const Grid2D& grid, double r_k = 0.0) {
    if (k < 1) throw std::invalid_argument("make_mode_functions: k >= 1 required");
    if (M < 1) throw std::invalid_argument("make_mode_functions: M >= 1 required");
    if (!(kappa > 0.0)) throw std::invalid_argument("make_mode_functions: kappa > 0 required");
    const double r_min = std::sqrt(k * kPi / (2.0 * kappa * t_star));
    if (r_k == 0.0) r_k = std::max(2.0 * std::sqrt(2.0) / grid.diag(), r_min);
    double arg = k * kPi / (2.0 * kappa * r_k * r_k * t_star);
    if (arg > 1.0 + 1e-12)
        throw std::invalid_argument("make_mode_functions: r_k too small; minimal admissible r_k = " +
                                    std::to_string(r_min));
    arg = std::min(arg, 1.0);

    CGOFamily fam;
    fam.scheme.k = k;
    fam.scheme.r = r_k;
    const double shift = std::acos(arg);
    for (int l = 1; l <= M; ++l) {
        const double beta = 2.0 * l * kPi / M;
        const double gamma = beta - shift;
        CGOFunction v;
        v.kappa = kappa;
        v.alpha = Complex(0.0, -k * kPi / t_star);
        v.rho = {Complex(r_k * std::cos(beta), r_k * std::cos(gamma)),
                 Complex(r_k * std::sin(beta), r_k * std::sin(gamma))};
        fam.scheme.betas.push_back(beta);
        fam.scheme.gammas.push_back(gamma);
        fam.functions.push_back(v);
    }
    return fam;
}

/// Source-adapted directions rho_l = r s_l + i b_l used by the stability
/// theory: the resulting matrix A_k = [exp(rho_l . s_j)] is Hermitian for
/// k = 0 and its eigenvalues stay away from zero. Full-frequency convention
/// alpha_k = -2 k pi i / T*.
inline std::vector<CGOFunction> make_source_adapted_functions(
    int k, const std::vector<Vec2>& positions, double r, double t_star, double kappa = 1.0) {
    if (!(r > 0.0)) throw std::invalid_argument("source-adapted directions: r > 0 required");
    std::vector<CGOFunction> out;
    const double k_eff = k / (kappa * t_star);  // rho.rho = 2 k_eff pi i
    for (const Vec2& s : positions) {
        const Vec2 a = r * s;
        const Vec2 b = make_vector_b(a, k_eff);
        CGOFunction v;
        v.kappa = kappa;
        v.alpha = Complex(0.0, -2.0 * k * kPi / t_star);
        v.rho = {Complex(a.x(), b.x()), Complex(a.y(), b.y())};
        out.push_back(v);
    }
    return out;
}

std::string direction_scheme_to_json(const DirectionScheme& scheme);
DirectionScheme direction_scheme_from_json(const std::string& text);

}  // namespace plumetrace::cgo
