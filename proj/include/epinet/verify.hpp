#pragma once

// Trajectory-level verdicts: cap-box invariance, decrease of the max-ratio distance to the
// endemic point, and paired open/closed-loop comparisons.

#include "epinet/dynamics.hpp"
#include "epinet/error.hpp"
#include "epinet/graph.hpp"
#include "epinet/integrate.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace epinet {

struct InvarianceReport {
    double max_cap_violation = -std::numeric_limits<double>::infinity(); // max x_i(t) - 1/c_i
    double max_negativity = -std::numeric_limits<double>::infinity();    // max -x_i(t)
    double cap_tol = 1e-7;
    double negativity_tol = 1e-9;
    bool pass = true;
};

inline InvarianceReport check_cap_invariance(const Trajectory& traj, std::span<const double> cap_c,
                                             double cap_tol = 1e-7, double negativity_tol = 1e-9)
{
    InvarianceReport r;
    r.cap_tol = cap_tol;
    r.negativity_tol = negativity_tol;
    for (const auto& x : traj.states) {
        require_same_size(cap_c.size(), x.size(), "state");
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.max_cap_violation = std::max(r.max_cap_violation, x[i] - 1.0 / cap_c[i]);
            r.max_negativity = std::max(r.max_negativity, -x[i]);
        }
    }
    r.pass = r.max_cap_violation <= cap_tol && r.max_negativity <= negativity_tol;
    return r;
}

struct LyapunovReport {
    std::vector<double> values;
    double max_uptick = 0.0; // largest positive increment between consecutive samples
    double tol = 1e-6;
    bool pass = true;
};

namespace detail {

inline LyapunovReport finish_lyapunov(std::vector<double> values, double tol, std::size_t skip)
{
    LyapunovReport r;
    r.tol = tol;
    for (std::size_t k = skip + 1; k < values.size(); ++k) {
        r.max_uptick = std::max(r.max_uptick, values[k] - values[k - 1]);
    }
    r.values = std::move(values);
    r.pass = r.max_uptick <= tol;
    return r;
}

} // namespace detail

/// V(t) = max_i |x_i(t) - xbar_i| / xbar_i along the samples. Upticks are measured between
/// consecutive samples from index `skip` onwards.
inline LyapunovReport check_lyapunov_decrease(const Trajectory& traj, std::span<const double> endemic,
                                              double tol = 1e-6, std::size_t skip = 0)
{
    for (std::size_t i = 0; i < endemic.size(); ++i) {
        if (!(endemic[i] > 0.0)) {
            throw Error(ErrorKind::InvalidParameter,
                        "endemic component " + std::to_string(i) + " is not positive; V is undefined");
        }
    }
    std::vector<double> values;
    values.reserve(traj.states.size());
    for (const auto& x : traj.states) {
        require_same_size(endemic.size(), x.size(), "state");
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            v = std::max(v, std::abs(x[i] - endemic[i]) / endemic[i]);
        }
        values.push_back(v);
    }
    return detail::finish_lyapunov(std::move(values), tol, skip);
}

/// Decrease surrogate for DFE-regime runs: ||x(t)||_inf.
inline LyapunovReport check_norm_decrease(const Trajectory& traj, double tol = 1e-6, std::size_t skip = 0)
{
    std::vector<double> values;
    values.reserve(traj.states.size());
    for (const auto& x : traj.states) {
        values.push_back(detail::max_abs(x));
    }
    return detail::finish_lyapunov(std::move(values), tol, skip);
}

struct PairedSummary {
    std::vector<double> peak_open;
    std::vector<double> peak_closed;
    std::vector<double> terminal_open;
    std::vector<double> terminal_closed;
    std::vector<double> terminal_gap; // open - closed
    double max_peak_excess = 0.0;     // max_i (peak_closed_i - peak_open_i), clipped below at 0
    double tol = 1e-7;
    bool suppressed = true;           // max_peak_excess <= tol
};

struct PairedRun {
    Trajectory open;
    Trajectory closed;
    PairedSummary summary;
};

inline PairedSummary summarize_pair(const Trajectory& open, const Trajectory& closed, double tol = 1e-7)
{
    const std::size_t n = closed.dimension();
    require_same_size(n, open.dimension(), "open-loop trajectory");
    PairedSummary s;
    s.tol = tol;
    auto peaks = [n](const Trajectory& tr) {
        std::vector<double> p(n, -std::numeric_limits<double>::infinity());
        for (const auto& x : tr.states) {
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = std::max(p[i], x[i]);
            }
        }
        return p;
    };
    s.peak_open = peaks(open);
    s.peak_closed = peaks(closed);
    s.terminal_open = open.final_state();
    s.terminal_closed = closed.final_state();
    s.terminal_gap.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.terminal_gap[i] = s.terminal_open[i] - s.terminal_closed[i];
        s.max_peak_excess = std::max(s.max_peak_excess, s.peak_closed[i] - s.peak_open[i]);
    }
    s.suppressed = s.max_peak_excess <= tol;
    return s;
}

/// Integrates both loops from the same cap-respecting start and compares them node by node.
inline PairedRun compare_open_closed(const EpidemicParams& p, const Network& net, const StateVector& x0,
                                     const RunOptions& opts, double tol = 1e-7)
{
    require_same_size(p.size(), x0.size(), "initial state");
    for (std::size_t i = 0; i < x0.size(); ++i) {
        if (!(x0[i] >= 0.0 && x0[i] <= p.cap(i))) {
            throw Error(ErrorKind::InvalidParameter, "x0[" + std::to_string(i) + "] lies outside [0, 1/c]");
        }
    }
    PairedRun run;
    run.open = integrate(open_loop(p, net), x0, opts);
    run.closed = integrate(closed_loop(p, net), x0, opts);
    run.summary = summarize_pair(run.open, run.closed, tol);
    return run;
}

inline void to_json(nlohmann::json& j, const InvarianceReport& r)
{
    j = nlohmann::json{{"max_cap_violation", r.max_cap_violation},
                       {"max_negativity", r.max_negativity},
                       {"cap_tol", r.cap_tol},
                       {"negativity_tol", r.negativity_tol},
                       {"pass", r.pass}};
}

inline void to_json(nlohmann::json& j, const LyapunovReport& r)
{
    j = nlohmann::json{{"max_uptick", r.max_uptick},
                       {"tol", r.tol},
                       {"pass", r.pass},
                       {"initial", r.values.empty() ? 0.0 : r.values.front()},
                       {"final", r.values.empty() ? 0.0 : r.values.back()}};
}

inline void to_json(nlohmann::json& j, const PairedSummary& s)
{
    j = nlohmann::json{{"peak_open", s.peak_open},
                       {"peak_closed", s.peak_closed},
                       {"terminal_open", s.terminal_open},
                       {"terminal_closed", s.terminal_closed},
                       {"terminal_gap", s.terminal_gap},
                       {"max_peak_excess", s.max_peak_excess},
                       {"tol", s.tol},
                       {"suppressed", s.suppressed}};
}

} // namespace epinet
