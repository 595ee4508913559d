#pragma once

// Regime classification and the endemic equilibrium of the capped closed loop.

#include "epinet/dynamics.hpp"
#include "epinet/error.hpp"
#include "epinet/graph.hpp"
#include "epinet/spectral.hpp"

#include "json.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epinet {

enum class Regime { DFEOnly, Endemic };

inline const char* to_string(Regime r) noexcept { return r == Regime::DFEOnly ? "DFE" : "endemic"; }

struct EquilibriumOptions {
    double tol = 1e-12;             // on ||closed_loop_field(x)||_inf
    long max_iter = 100'000;        // sweeps
    double marginal_band = 1e-8;    // |s| within this band is reported DFE and flagged marginal
    SpectralOptions spectral{};
};

struct EquilibriumReport {
    Regime regime = Regime::DFEOnly;
    std::optional<std::vector<double>> endemic_point;
    double spectral_abscissa = 0.0;
    double residual = 0.0;
    long iterations = 0;
    bool marginal = false;
};

/// Smaller root in [0, 1/c] of gamma x = beta (1 - c x)(1 - x) S, i.e. of
/// beta c S x^2 - (beta (1 + c) S + gamma) x + beta S = 0.
inline double scalar_cap_root(double beta, double gamma, double c, double S)
{
    if (S <= 0.0) {
        return 0.0;
    }
    if (gamma == 0.0) {
        return 1.0 / c;
    }
    const double qa = beta * c * S;
    const double qb = beta * (1.0 + c) * S + gamma;
    const double qc = beta * S;
    const double disc = qb * qb - 4.0 * qa * qc;
    assert(disc >= 0.0);
    // Cancellation-free form of (qb - sqrt(disc)) / (2 qa).
    return 2.0 * qc / (qb + std::sqrt(std::max(disc, 0.0)));
}

/// ||closed_loop_field(x)||_inf
inline double equilibrium_residual(const EpidemicParams& p, const Network& net, std::span<const double> x)
{
    std::vector<double> f(x.size());
    closed_loop_field(p, net, x, f);
    double r = 0.0;
    for (double v : f) {
        r = std::max(r, std::abs(v));
    }
    return r;
}

struct EndemicSolution {
    std::vector<double> point;
    double residual = 0.0;
    long iterations = 0;
};

namespace detail {

inline double row_dot(const Network& net, std::size_t i, std::span<const double> x)
{
    const auto row = net.weights().row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        s += row[j] * x[j];
    }
    return s;
}

} // namespace detail

/// Fixed-point solve of the endemic equilibrium by Gauss-Seidel sweeps of scalar_cap_root,
/// started from the cap vector unless `start` is given. Falls back to damped Jacobi when the
/// residual stops improving (less than 0.1% relative progress over 100 sweeps).
inline EndemicSolution solve_endemic_from(const EpidemicParams& p, const Network& net,
                                          std::optional<std::vector<double>> start,
                                          const EquilibriumOptions& opts = {})
{
    require_same_size(p.size(), net.size(), "network");
    const std::size_t n = net.size();
    const auto beta = p.beta();
    const auto gamma = p.gamma();
    const auto c = p.cap_c();

    std::vector<double> x = start ? std::move(*start) : p.caps();
    require_same_size(n, x.size(), "start");

    bool jacobi = false;
    double checkpoint = std::numeric_limits<double>::infinity();
    std::vector<double> next(n);
    double residual = equilibrium_residual(p, net, x);
    for (long sweep = 1; sweep <= opts.max_iter; ++sweep) {
        if (!jacobi) {
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = scalar_cap_root(beta[i], gamma[i], c[i], detail::row_dot(net, i, x));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                next[i] = scalar_cap_root(beta[i], gamma[i], c[i], detail::row_dot(net, i, x));
            }
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = 0.5 * x[i] + 0.5 * next[i];
            }
        }
        residual = equilibrium_residual(p, net, x);
        if (residual <= opts.tol) {
            return {std::move(x), residual, sweep};
        }
        if (sweep % 100 == 0) {
            if (!jacobi && residual > (1.0 - 1e-3) * checkpoint) {
                jacobi = true;
            }
            checkpoint = residual;
        }
    }
    throw Error(ErrorKind::NoConvergence, "endemic solve stopped at residual " + std::to_string(residual) +
                                              " after " + std::to_string(opts.max_iter) + " sweeps");
}

/// Endemic equilibrium x with 0 < x_i <= 1/c_i. Requires s(BA - Gamma) > 0.
inline EndemicSolution solve_endemic(const EpidemicParams& p, const Network& net,
                                     const EquilibriumOptions& opts = {})
{
    const double s = spectral_abscissa(build_linearized(p, net), opts.spectral).abscissa;
    if (s <= opts.marginal_band) {
        throw Error(ErrorKind::WrongRegime,
                    "spectral abscissa " + std::to_string(s) + " is not positive; only the DFE exists");
    }
    return solve_endemic_from(p, net, std::nullopt, opts);
}

/// DFE-only iff s(BA - Gamma) <= 0 (with |s| <= marginal_band counted as zero);
/// otherwise endemic, with the equilibrium attached.
inline EquilibriumReport classify(const EpidemicParams& p, const Network& net,
                                  const EquilibriumOptions& opts = {})
{
    if (!is_strongly_connected(net)) {
        throw Error(ErrorKind::NotIrreducible, "interaction graph is not strongly connected");
    }
    EquilibriumReport report;
    report.spectral_abscissa = spectral_abscissa(build_linearized(p, net), opts.spectral).abscissa;
    report.marginal = std::abs(report.spectral_abscissa) <= opts.marginal_band;
    if (report.spectral_abscissa <= opts.marginal_band) {
        report.regime = Regime::DFEOnly;
        return report;
    }
    auto sol = solve_endemic_from(p, net, std::nullopt, opts);
    report.regime = Regime::Endemic;
    report.endemic_point = std::move(sol.point);
    report.residual = sol.residual;
    report.iterations = sol.iterations;
    return report;
}

inline void to_json(nlohmann::json& j, const EquilibriumReport& r)
{
    j = nlohmann::json{{"regime", to_string(r.regime)},
                       {"spectral_abscissa", r.spectral_abscissa},
                       {"residual", r.residual},
                       {"iterations", r.iterations},
                       {"marginal", r.marginal}};
    j["endemic_point"] = r.endemic_point ? nlohmann::json(*r.endemic_point) : nlohmann::json(nullptr);
}

} // namespace epinet
