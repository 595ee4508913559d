#pragma once

// Explicit integrators for the open- and closed-loop fields. States are never clamped or
// projected; invariance of the cap box is checked after the fact by the verifier.

#include "epinet/dynamics.hpp"
#include "epinet/error.hpp"
#include "epinet/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epinet {

enum class Method { RK4Fixed, RK45Adaptive };

inline const char* to_string(Method m) noexcept { return m == Method::RK4Fixed ? "rk4" : "rk45"; }

struct RunOptions {
    Method method = Method::RK4Fixed;
    double dt = 0.01;       // RK4 step, also the initial step for RK45
    double abs_tol = 1e-9;  // RK45 only
    double rel_tol = 1e-9;  // RK45 only
    double t_end = 200.0;
    double record_every = 0.1;
    std::optional<double> converge_tol;
    std::optional<double> converge_window;
    bool record_controls = false;

    void validate() const
    {
        if (!(t_end > 0.0) || !(dt > 0.0) || dt > t_end || !(record_every > 0.0)) {
            throw Error(ErrorKind::InvalidParameter, "run options need 0 < dt <= t_end and record_every > 0");
        }
        if (method == Method::RK45Adaptive && (!(abs_tol > 0.0) || !(rel_tol > 0.0))) {
            throw Error(ErrorKind::InvalidParameter, "adaptive tolerances must be positive");
        }
        if ((converge_tol && !(*converge_tol >= 0.0)) || (converge_window && !(*converge_window > 0.0))) {
            throw Error(ErrorKind::InvalidParameter, "convergence tolerance/window must be non-negative/positive");
        }
    }
};

using FieldFn = std::function<void(std::span<const double>, std::span<double>)>;

/// Right-hand side plus, optionally, the control it contains (recorded on request).
struct VectorField {
    FieldFn rhs;
    FieldFn control;
};

inline VectorField open_loop(EpidemicParams p, Network net)
{
    return {[p = std::move(p), net = std::move(net)](std::span<const double> x, std::span<double> out) {
                open_loop_field(p, net, x, out);
            },
            {}};
}

inline VectorField closed_loop(const EpidemicParams& p, const Network& net)
{
    return {[p, net](std::span<const double> x, std::span<double> out) { closed_loop_field(p, net, x, out); },
            [p, net](std::span<const double> x, std::span<double> out) { control_input(p, net, x, out); }};
}

/// Linear field dy/dt = M y.
inline VectorField linear_field(DenseMatrix m)
{
    return {[m = std::move(m)](std::span<const double> y, std::span<double> out) {
                const std::size_t n = m.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const auto row = m.row(i);
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        s += row[j] * y[j];
                    }
                    out[i] = s;
                }
            },
            {}};
}

struct TrajectoryMeta {
    std::string scenario_hash;
    Method method = Method::RK4Fixed;
    double dt = 0.0;
    double abs_tol = 0.0;
    double rel_tol = 0.0;
    double record_every = 0.0;
    long steps = 0;
    long rejected_steps = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    std::optional<std::vector<std::vector<double>>> controls;
    TrajectoryMeta meta;

    std::size_t dimension() const { return states.empty() ? 0 : states.front().size(); }
    const StateVector& final_state() const { return states.back(); }
};

enum class ConvergenceStatus { Converged, TimedOut };

inline const char* to_string(ConvergenceStatus s) noexcept
{
    return s == ConvergenceStatus::Converged ? "converged" : "timed_out";
}

namespace detail {

inline double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double e : v) {
        m = std::max(m, std::abs(e));
    }
    return m;
}

inline void check_finite(std::span<const double> x, double t)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw Error(ErrorKind::NonFiniteState,
                        "component " + std::to_string(i) + " at t = " + std::to_string(t));
        }
    }
}

// Advances a state between recording instants.
class Stepper {
public:
    Stepper(const FieldFn& f, std::size_t n, const RunOptions& opts)
        : f_(f), opts_(opts), n_(n), h_(opts.dt)
    {
        for (auto& k : k_) {
            k.resize(n);
        }
        tmp_.resize(n);
    }

    void advance(std::vector<double>& x, double t0, double t1)
    {
        if (opts_.method == Method::RK4Fixed) {
            advance_rk4(x, t0, t1);
        } else {
            advance_dp45(x, t0, t1);
        }
    }

    long steps() const noexcept { return steps_; }
    long rejected() const noexcept { return rejected_; }

private:
    void advance_rk4(std::vector<double>& x, double t0, double t1)
    {
        // Uniform steps of at most dt that land exactly on t1.
        const double span = t1 - t0;
        const auto count = std::max<long>(1, static_cast<long>(std::ceil(span / opts_.dt - 1e-9)));
        const double h = span / static_cast<double>(count);
        auto& [k1, k2, k3, k4, k5, k6, k7] = k_;
        for (long s = 0; s < count; ++s) {
            f_(x, k1);
            for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * h * k1[i];
            f_(tmp_, k2);
            for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * h * k2[i];
            f_(tmp_, k3);
            for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * k3[i];
            f_(tmp_, k4);
            for (std::size_t i = 0; i < n_; ++i) {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            ++steps_;
            check_finite(x, t0 + static_cast<double>(s + 1) * h);
        }
    }

    // Dormand-Prince 5(4) with FSAL and the usual step-size controller.
    void advance_dp45(std::vector<double>& x, double t0, double t1)
    {
        static constexpr double a21 = 1.0 / 5.0;
        static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                                a54 = -212.0 / 729.0;
        static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                                a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                                b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        auto& [k1, k2, k3, k4, k5, k6, k7] = k_;
        std::vector<double> y(n_);
        double t = t0;
        f_(x, k1);
        while (t < t1) {
            const bool last = t + h_ >= t1;
            const double h = last ? t1 - t : h_;
            if (h < 1e-14 * std::max(1.0, std::abs(t))) {
                throw Error(ErrorKind::StepUnderflow, "step " + std::to_string(h) + " at t = " + std::to_string(t));
            }
            for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * a21 * k1[i];
            f_(tmp_, k2);
            for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
            f_(tmp_, k3);
            for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            f_(tmp_, k4);
            for (std::size_t i = 0; i < n_; ++i)
                tmp_[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            f_(tmp_, k5);
            for (std::size_t i = 0; i < n_; ++i)
                tmp_[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            f_(tmp_, k6);
            for (std::size_t i = 0; i < n_; ++i)
                y[i] = x[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            f_(y, k7);

            double err = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                const double e =
                    h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double scale = opts_.abs_tol + opts_.rel_tol * std::max(std::abs(x[i]), std::abs(y[i]));
                err = std::max(err, std::abs(e) / scale);
            }
            if (!std::isfinite(err)) {
                err = 1e10;
            }
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                t = last ? t1 : t + h;
                x.swap(y);
                std::swap(k1, k7);
                ++steps_;
                check_finite(x, t);
                // A step clipped to hit t1 says little about the natural step size.
                if (!last) {
                    h_ = h * factor;
                }
            } else {
                h_ = h * std::min(1.0, factor);
                ++rejected_;
            }
        }
    }

    const FieldFn& f_;
    const RunOptions& opts_;
    std::size_t n_;
    double h_;
    std::array<std::vector<double>, 7> k_;
    std::vector<double> tmp_;
    long steps_ = 0;
    long rejected_ = 0;
};

// Recording instants k * record_every below t_end, then t_end itself.
inline double record_time(const RunOptions& opts, long k)
{
    return std::min(opts.t_end, static_cast<double>(k) * opts.record_every);
}

inline bool is_last_record(const RunOptions& opts, double t)
{
    return t >= opts.t_end || opts.t_end - t <= 1e-12 * opts.t_end;
}

class Recorder {
public:
    Recorder(const VectorField& field, const RunOptions& opts, std::size_t n) : field_(field)
    {
        traj_.meta.method = opts.method;
        traj_.meta.dt = opts.dt;
        traj_.meta.abs_tol = opts.abs_tol;
        traj_.meta.rel_tol = opts.rel_tol;
        traj_.meta.record_every = opts.record_every;
        if (opts.record_controls && field.control) {
            traj_.controls.emplace();
        }
        u_.resize(n);
    }

    void record(double t, const std::vector<double>& x)
    {
        traj_.times.push_back(t);
        traj_.states.push_back(x);
        if (traj_.controls) {
            field_.control(x, u_);
            traj_.controls->push_back(u_);
        }
    }

    Trajectory finish(const Stepper& stepper)
    {
        traj_.meta.steps = stepper.steps();
        traj_.meta.rejected_steps = stepper.rejected();
        return std::move(traj_);
    }

private:
    const VectorField& field_;
    Trajectory traj_;
    std::vector<double> u_;
};

} // namespace detail

/// Integrates from t = 0 to opts.t_end, recording at multiples of record_every and at t_end.
inline Trajectory integrate(const VectorField& field, StateVector x0, const RunOptions& opts)
{
    opts.validate();
    detail::check_finite(x0, 0.0);
    const std::size_t n = x0.size();
    detail::Stepper stepper(field.rhs, n, opts);
    detail::Recorder rec(field, opts, n);
    std::vector<double> x = std::move(x0);
    double t = 0.0;
    rec.record(t, x);
    for (long k = 1; !detail::is_last_record(opts, t); ++k) {
        double next = detail::record_time(opts, k);
        if (detail::is_last_record(opts, next)) {
            next = opts.t_end;
        }
        stepper.advance(x, t, next);
        t = next;
        rec.record(t, x);
    }
    return rec.finish(stepper);
}

struct ConvergedRun {
    Trajectory trajectory;
    ConvergenceStatus status = ConvergenceStatus::TimedOut;
    double stop_time = 0.0;
};

/// Integrates until ||rhs(x)||_inf <= converge_tol has held at every recorded sample for a
/// trailing window of converge_window time units, or until t_end.
inline ConvergedRun simulate_until_converged(const VectorField& field, StateVector x0, const RunOptions& opts)
{
    opts.validate();
    if (!opts.converge_tol || !opts.converge_window) {
        throw Error(ErrorKind::InvalidParameter, "converge_tol and converge_window must be set");
    }
    detail::check_finite(x0, 0.0);
    const std::size_t n = x0.size();
    detail::Stepper stepper(field.rhs, n, opts);
    detail::Recorder rec(field, opts, n);
    std::vector<double> x = std::move(x0);
    std::vector<double> fx(n);

    auto quiet = [&] {
        field.rhs(x, fx);
        return detail::max_abs(fx) <= *opts.converge_tol;
    };

    double t = 0.0;
    rec.record(t, x);
    // Start of the current run of samples satisfying the criterion; negative when there is none.
    double quiet_since = quiet() ? 0.0 : -1.0;
    for (long k = 1; !detail::is_last_record(opts, t); ++k) {
        double next = detail::record_time(opts, k);
        if (detail::is_last_record(opts, next)) {
            next = opts.t_end;
        }
        stepper.advance(x, t, next);
        t = next;
        rec.record(t, x);
        if (quiet()) {
            if (quiet_since < 0.0) {
                quiet_since = t;
            }
            if (t - quiet_since >= *opts.converge_window) {
                return {rec.finish(stepper), ConvergenceStatus::Converged, t};
            }
        } else {
            quiet_since = -1.0;
        }
    }
    return {rec.finish(stepper), ConvergenceStatus::TimedOut, t};
}

namespace detail {

inline void append_number(std::string& out, double v)
{
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    out.append(buf.data(), res.ptr);
}

} // namespace detail

/// CSV body: header "t,x_1,...,x_n[,u_1,...,u_n]", one row per sample, 17 significant digits, LF.
inline std::string trajectory_csv(const Trajectory& traj)
{
    const std::size_t n = traj.dimension();
    std::string out = "t";
    for (std::size_t i = 1; i <= n; ++i) {
        out += ",x_" + std::to_string(i);
    }
    if (traj.controls) {
        for (std::size_t i = 1; i <= n; ++i) {
            out += ",u_" + std::to_string(i);
        }
    }
    out += '\n';
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        detail::append_number(out, traj.times[k]);
        for (double v : traj.states[k]) {
            out += ',';
            detail::append_number(out, v);
        }
        if (traj.controls) {
            for (double v : (*traj.controls)[k]) {
                out += ',';
                detail::append_number(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

} // namespace epinet
