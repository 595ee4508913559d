#pragma once

// Scenario files: one JSON document bundling a graph description, epidemic parameters, caps,
// the initial state, integrator settings and a seed. Node ids in scenario files are 1-based.

#include "epinet/dynamics.hpp"
#include "epinet/error.hpp"
#include "epinet/graph.hpp"
#include "epinet/integrate.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace epinet {

struct GeometricGraphSpec {
    std::size_t n = 100;
    double side = 100.0;
    double radius = 25.0;
    double self_weight = 0.3;
    double cross_weight = 0.003;
    bool clustered = false;
    double cluster_fraction = 0.3;
    double cluster_extent = 30.0;

    friend bool operator==(const GeometricGraphSpec&, const GeometricGraphSpec&) = default;
};

struct PositionsGraphSpec {
    std::vector<Point> positions;
    double radius = 25.0;
    double self_weight = 0.3;
    double cross_weight = 0.003;

    friend bool operator==(const PositionsGraphSpec&, const PositionsGraphSpec&) = default;
};

struct ExplicitGraphSpec {
    DenseMatrix weights;
    std::optional<std::vector<Point>> positions;

    friend bool operator==(const ExplicitGraphSpec&, const ExplicitGraphSpec&) = default;
};

using GraphSpec = std::variant<GeometricGraphSpec, PositionsGraphSpec, ExplicitGraphSpec>;

/// A scalar (uniform over nodes) or a per-node vector.
using Broadcastable = std::variant<double, std::vector<double>>;

/// Cap level 1/c for the 1-based node range [lo, hi].
struct CapBand {
    std::size_t lo = 1;
    std::size_t hi = 1;
    double cap = 0.5;

    friend bool operator==(const CapBand&, const CapBand&) = default;
};

/// Cap levels 1/c: uniform, per node, or banded.
using CapSpec = std::variant<double, std::vector<double>, std::vector<CapBand>>;

struct InfectedSeed {
    std::vector<std::size_t> nodes; // 1-based
    double level = 0.1;

    friend bool operator==(const InfectedSeed&, const InfectedSeed&) = default;
};

using InitialSpec = std::variant<std::vector<double>, InfectedSeed>;

struct Scenario {
    GraphSpec graph = GeometricGraphSpec{};
    Broadcastable beta = 0.8;
    Broadcastable gamma = 0.3;
    // Exactly one of cap_c (parameters c) and caps (levels 1/c) is set.
    std::optional<Broadcastable> cap_c;
    std::optional<CapSpec> caps;
    InitialSpec x0 = InfectedSeed{};
    RunOptions run;
    std::uint64_t seed = 1;
};

/// Everything a run needs, with dimensions reconciled and x0 checked against the caps.
struct ResolvedScenario {
    Network network;
    EpidemicParams params;
    StateVector x0;
    RunOptions run;
    std::uint64_t seed = 0;
    std::string hash;
};

namespace detail {

[[noreturn]] inline void scenario_error(const std::string& field, const std::string& what)
{
    throw Error(ErrorKind::InvalidScenario, "field '" + field + "': " + what);
}

// Runs `fn`, converting json and parameter errors into InvalidScenario naming `field`.
template <class Fn>
auto scenario_field(const std::string& field, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        scenario_error(field, e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidScenario) {
            if (e.detail().rfind("field '", 0) == 0) {
                throw;
            }
            scenario_error(field, e.detail());
        }
        scenario_error(field, e.what());
    }
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback)
{
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

inline std::vector<Point> points_from_json(const nlohmann::json& j)
{
    std::vector<Point> pts;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) {
            throw Error(ErrorKind::InvalidScenario, "position must be [x, y]");
        }
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return pts;
}

inline nlohmann::json points_to_json(const std::vector<Point>& pts)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : pts) {
        out.push_back({p.x, p.y});
    }
    return out;
}

inline Broadcastable broadcastable_from_json(const nlohmann::json& j)
{
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_array()) {
        return j.get<std::vector<double>>();
    }
    throw Error(ErrorKind::InvalidScenario, "expected a number or an array of numbers");
}

inline nlohmann::json broadcastable_to_json(const Broadcastable& b)
{
    return std::visit([](const auto& v) { return nlohmann::json(v); }, b);
}

inline std::vector<double> expand(const Broadcastable& b, std::size_t n)
{
    if (const auto* s = std::get_if<double>(&b)) {
        return std::vector<double>(n, *s);
    }
    const auto& v = std::get<std::vector<double>>(b);
    require_same_size(n, v.size(), "per-node vector");
    return v;
}

inline GraphSpec graph_from_json(const nlohmann::json& j)
{
    if (j.contains("weights")) {
        auto net = network_from_json(j);
        return ExplicitGraphSpec{net.weights(), net.positions()};
    }
    const auto gen = j.at("generator").get<std::string>();
    if (gen == "geometric" || gen == "clustered") {
        GeometricGraphSpec g;
        g.n = j.at("n").get<std::size_t>();
        g.side = number_or(j, "side", g.side);
        g.radius = number_or(j, "radius", g.radius);
        g.self_weight = number_or(j, "self_weight", g.self_weight);
        g.cross_weight = number_or(j, "cross_weight", g.cross_weight);
        g.clustered = gen == "clustered";
        g.cluster_fraction = number_or(j, "cluster_fraction", g.cluster_fraction);
        g.cluster_extent = number_or(j, "cluster_extent", g.cluster_extent);
        return g;
    }
    if (gen == "positions") {
        PositionsGraphSpec g;
        g.positions = points_from_json(j.at("positions"));
        g.radius = number_or(j, "radius", g.radius);
        g.self_weight = number_or(j, "self_weight", g.self_weight);
        g.cross_weight = number_or(j, "cross_weight", g.cross_weight);
        return g;
    }
    throw Error(ErrorKind::InvalidScenario, "unknown generator '" + gen + "'");
}

struct GraphToJson {
    nlohmann::json operator()(const GeometricGraphSpec& g) const
    {
        nlohmann::json j{{"generator", g.clustered ? "clustered" : "geometric"},
                         {"n", g.n},
                         {"side", g.side},
                         {"radius", g.radius},
                         {"self_weight", g.self_weight},
                         {"cross_weight", g.cross_weight}};
        if (g.clustered) {
            j["cluster_fraction"] = g.cluster_fraction;
            j["cluster_extent"] = g.cluster_extent;
        }
        return j;
    }
    nlohmann::json operator()(const PositionsGraphSpec& g) const
    {
        return {{"generator", "positions"},
                {"positions", points_to_json(g.positions)},
                {"radius", g.radius},
                {"self_weight", g.self_weight},
                {"cross_weight", g.cross_weight}};
    }
    nlohmann::json operator()(const ExplicitGraphSpec& g) const
    {
        nlohmann::json j;
        to_json(j, Network(g.weights, g.positions));
        return j;
    }
};

inline CapSpec caps_from_json(const nlohmann::json& j)
{
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_array() && !j.empty() && j.front().is_object()) {
        std::vector<CapBand> bands;
        for (const auto& b : j) {
            const auto& range = b.at("range");
            if (!range.is_array() || range.size() != 2) {
                throw Error(ErrorKind::InvalidScenario, "band range must be [lo, hi]");
            }
            bands.push_back({range[0].get<std::size_t>(), range[1].get<std::size_t>(), b.at("cap").get<double>()});
        }
        return bands;
    }
    if (j.is_array()) {
        return j.get<std::vector<double>>();
    }
    throw Error(ErrorKind::InvalidScenario, "caps must be a number, an array or a list of bands");
}

struct CapsToJson {
    nlohmann::json operator()(double v) const { return v; }
    nlohmann::json operator()(const std::vector<double>& v) const { return v; }
    nlohmann::json operator()(const std::vector<CapBand>& bands) const
    {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& b : bands) {
            out.push_back({{"range", {b.lo, b.hi}}, {"cap", b.cap}});
        }
        return out;
    }
};

inline std::vector<double> expand_caps(const CapSpec& caps, std::size_t n)
{
    if (const auto* s = std::get_if<double>(&caps)) {
        return std::vector<double>(n, *s);
    }
    if (const auto* v = std::get_if<std::vector<double>>(&caps)) {
        require_same_size(n, v->size(), "caps");
        return *v;
    }
    std::vector<double> levels(n, 0.0);
    std::vector<char> covered(n, 0);
    for (const auto& b : std::get<std::vector<CapBand>>(caps)) {
        if (b.lo < 1 || b.hi < b.lo || b.hi > n) {
            throw Error(ErrorKind::InvalidScenario, "band [" + std::to_string(b.lo) + ", " +
                                                        std::to_string(b.hi) + "] outside 1.." + std::to_string(n));
        }
        for (std::size_t i = b.lo; i <= b.hi; ++i) {
            levels[i - 1] = b.cap;
            covered[i - 1] = 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!covered[i]) {
            throw Error(ErrorKind::InvalidScenario, "node " + std::to_string(i + 1) + " has no cap band");
        }
    }
    return levels;
}

inline RunOptions run_from_json(const nlohmann::json& j)
{
    RunOptions r;
    if (j.contains("method")) {
        const auto m = j.at("method").get<std::string>();
        if (m == "rk4") {
            r.method = Method::RK4Fixed;
        } else if (m == "rk45") {
            r.method = Method::RK45Adaptive;
        } else {
            throw Error(ErrorKind::InvalidScenario, "method must be 'rk4' or 'rk45'");
        }
    }
    r.dt = number_or(j, "dt", r.dt);
    r.abs_tol = number_or(j, "abs_tol", r.abs_tol);
    r.rel_tol = number_or(j, "rel_tol", r.rel_tol);
    r.t_end = number_or(j, "t_end", r.t_end);
    r.record_every = number_or(j, "record_every", r.record_every);
    if (j.contains("converge_tol")) {
        r.converge_tol = j.at("converge_tol").get<double>();
    }
    if (j.contains("converge_window")) {
        r.converge_window = j.at("converge_window").get<double>();
    }
    if (j.contains("record_controls")) {
        r.record_controls = j.at("record_controls").get<bool>();
    }
    r.validate();
    return r;
}

inline nlohmann::json run_to_json(const RunOptions& r)
{
    nlohmann::json j{{"method", to_string(r.method)}, {"dt", r.dt},         {"abs_tol", r.abs_tol},
                     {"rel_tol", r.rel_tol},          {"t_end", r.t_end},   {"record_every", r.record_every},
                     {"record_controls", r.record_controls}};
    if (r.converge_tol) {
        j["converge_tol"] = *r.converge_tol;
    }
    if (r.converge_window) {
        j["converge_window"] = *r.converge_window;
    }
    return j;
}

inline std::string fnv1a_hex(const std::string& text)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

} // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j)
{
    using detail::scenario_field;
    if (!j.is_object()) {
        detail::scenario_error("<root>", "scenario must be a JSON object");
    }
    Scenario s;
    s.graph = scenario_field("graph", [&] { return detail::graph_from_json(j.at("graph")); });
    const auto& params = scenario_field("params", [&]() -> const nlohmann::json& { return j.at("params"); });
    s.beta = scenario_field("params.beta", [&] { return detail::broadcastable_from_json(params.at("beta")); });
    s.gamma = scenario_field("params.gamma", [&] { return detail::broadcastable_from_json(params.at("gamma")); });
    if (params.contains("cap_c")) {
        s.cap_c = scenario_field("params.cap_c", [&] { return detail::broadcastable_from_json(params.at("cap_c")); });
    }
    if (j.contains("caps")) {
        s.caps = scenario_field("caps", [&] { return detail::caps_from_json(j.at("caps")); });
    }
    if (s.cap_c.has_value() == s.caps.has_value()) {
        detail::scenario_error("caps", "give exactly one of 'caps' (levels 1/c) and 'params.cap_c'");
    }
    s.x0 = scenario_field("x0", [&]() -> InitialSpec {
        const auto& x = j.at("x0");
        if (x.is_array()) {
            return x.get<std::vector<double>>();
        }
        return InfectedSeed{x.at("infected_nodes").get<std::vector<std::size_t>>(), x.at("level").get<double>()};
    });
    if (j.contains("run")) {
        s.run = scenario_field("run", [&] { return detail::run_from_json(j.at("run")); });
    }
    if (j.contains("seed")) {
        s.seed = scenario_field("seed", [&] { return j.at("seed").get<std::uint64_t>(); });
    }
    return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s)
{
    nlohmann::json params{{"beta", detail::broadcastable_to_json(s.beta)},
                          {"gamma", detail::broadcastable_to_json(s.gamma)}};
    if (s.cap_c) {
        params["cap_c"] = detail::broadcastable_to_json(*s.cap_c);
    }
    nlohmann::json j{{"graph", std::visit(detail::GraphToJson{}, s.graph)},
                     {"params", std::move(params)},
                     {"run", detail::run_to_json(s.run)},
                     {"seed", s.seed}};
    if (s.caps) {
        j["caps"] = std::visit(detail::CapsToJson{}, *s.caps);
    }
    if (const auto* v = std::get_if<std::vector<double>>(&s.x0)) {
        j["x0"] = *v;
    } else {
        const auto& seed = std::get<InfectedSeed>(s.x0);
        j["x0"] = {{"infected_nodes", seed.nodes}, {"level", seed.level}};
    }
    return j;
}

/// Builds the network for a graph description; generators are seeded with `seed`.
inline Network build_network(const GraphSpec& graph, std::uint64_t seed)
{
    if (const auto* g = std::get_if<GeometricGraphSpec>(&graph)) {
        return g->clustered ? clustered_geometric(g->n, g->side, g->radius, g->self_weight, g->cross_weight, seed,
                                                  g->cluster_fraction, g->cluster_extent)
                            : random_geometric(g->n, g->side, g->radius, g->self_weight, g->cross_weight, seed);
    }
    if (const auto* g = std::get_if<PositionsGraphSpec>(&graph)) {
        return from_positions(g->positions, g->radius, g->self_weight, g->cross_weight);
    }
    const auto& g = std::get<ExplicitGraphSpec>(graph);
    return Network(g.weights, g.positions);
}

inline ResolvedScenario resolve(const Scenario& s)
{
    using detail::scenario_field;
    Network net = scenario_field("graph", [&] { return build_network(s.graph, s.seed); });
    const std::size_t n = net.size();

    const auto beta = scenario_field("params.beta", [&] { return detail::expand(s.beta, n); });
    const auto gamma = scenario_field("params.gamma", [&] { return detail::expand(s.gamma, n); });
    std::vector<double> cap_c;
    if (s.cap_c) {
        cap_c = scenario_field("params.cap_c", [&] { return detail::expand(*s.cap_c, n); });
    } else {
        cap_c = scenario_field("caps", [&] {
            auto levels = detail::expand_caps(*s.caps, n);
            for (double& level : levels) {
                if (!(level > 0.0 && level < 1.0)) {
                    throw Error(ErrorKind::InvalidScenario, "cap levels must lie in (0, 1)");
                }
                level = 1.0 / level;
            }
            return levels;
        });
    }
    EpidemicParams params = scenario_field("params", [&] { return EpidemicParams(beta, gamma, cap_c); });

    StateVector x0 = scenario_field("x0", [&] {
        if (const auto* v = std::get_if<std::vector<double>>(&s.x0)) {
            require_same_size(n, v->size(), "x0");
            return *v;
        }
        const auto& seed = std::get<InfectedSeed>(s.x0);
        StateVector x(n, 0.0);
        for (std::size_t id : seed.nodes) {
            if (id < 1 || id > n) {
                throw Error(ErrorKind::InvalidScenario, "infected node " + std::to_string(id) + " outside 1.." +
                                                            std::to_string(n));
            }
            x[id - 1] = seed.level;
        }
        return x;
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x0[i] >= 0.0 && x0[i] <= params.cap(i))) {
            detail::scenario_error("x0", "x0[" + std::to_string(i + 1) + "] = " + std::to_string(x0[i]) +
                                             " lies outside [0, 1/c] = [0, " + std::to_string(params.cap(i)) + "]");
        }
    }
    std::string hash = detail::fnv1a_hex(scenario_to_json(s).dump());
    return {std::move(net), std::move(params), std::move(x0), s.run, s.seed, std::move(hash)};
}

} // namespace epinet
