#pragma once

// Growth-rate oracle for the spectral abscissa: (1/t) log ||exp(M t) v0||_inf, with exp(M t) v0
// obtained by integrating dy/dt = M y. The state is renormalised every `chunk` time units and
// the logarithms of the scale factors are accumulated, which leaves the estimate unchanged.
// With a burn-in, only the growth over [burn_in, t_end] is averaged.

#include "epinet/integrate.hpp"
#include "epinet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

inline double semigroup_growth(const epinet::MetzlerMatrix& m, std::vector<double> v0, double t_end,
                               double dt = 0.01, double chunk = 10.0, double burn_in = 0.0)
{
    const auto field = epinet::linear_field(m.matrix());
    epinet::RunOptions opts;
    opts.method = epinet::Method::RK4Fixed;
    opts.dt = dt;
    opts.t_end = chunk;
    opts.record_every = chunk;
    double log_scale = 0.0;
    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double e : v) s = std::max(s, std::abs(e));
        return s;
    };
    const double n0 = norm(v0);
    for (auto& e : v0) e /= n0;
    log_scale += std::log(n0);
    for (double t = 0.0; t < t_end - 1e-9; t += chunk) {
        auto traj = epinet::integrate(field, v0, opts);
        v0 = traj.final_state();
        const double s = norm(v0);
        for (auto& e : v0) e /= s;
        if (t + chunk > burn_in + 1e-9) {
            log_scale += std::log(s);
        } else {
            log_scale = 0.0;
        }
    }
    return log_scale / (t_end - burn_in);
}

/// Random irreducible Metzler matrix: a directed ring guarantees irreducibility, extra
/// off-diagonal entries appear with probability `density`, diagonal entries in [-1, 0].
inline epinet::MetzlerMatrix random_metzler(std::size_t n, std::mt19937_64& rng, double density = 0.1,
                                            double max_weight = 0.1)
{
    std::uniform_real_distribution<double> w(0.0, max_weight), diag(-1.0, 0.0), u(0.0, 1.0);
    epinet::DenseMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                m(i, j) = diag(rng);
            } else if (j == (i + 1) % n) {
                m(i, j) = 0.5 * max_weight + w(rng);
            } else if (u(rng) < density) {
                m(i, j) = w(rng);
            }
        }
    }
    return epinet::MetzlerMatrix(std::move(m));
}

} // namespace oracle
