#pragma once

// Weighted interaction graph: dense storage, connectivity checks, geometric generators.

#include "epinet/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epinet {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Row-major square matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Weighted directed interaction graph. Entry (i, j) is the influence of node j on node i.
///
/// Immutable once built; the constructor rejects negative or non-finite weights.
class Network {
public:
    explicit Network(DenseMatrix weights, std::optional<std::vector<Point>> positions = std::nullopt)
        : weights_(std::move(weights))
        , positions_(std::move(positions))
    {
        if (weights_.size() == 0) {
            throw Error(ErrorKind::InvalidParameter, "network needs at least one node");
        }
        for (double w : weights_.data()) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw Error(ErrorKind::InvalidParameter, "weights must be finite and non-negative");
            }
        }
        if (positions_) {
            require_same_size(weights_.size(), positions_->size(), "positions");
        }
    }

    std::size_t size() const noexcept { return weights_.size(); }
    double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }
    const DenseMatrix& weights() const noexcept { return weights_; }
    const std::optional<std::vector<Point>>& positions() const noexcept { return positions_; }

    friend bool operator==(const Network&, const Network&) = default;

private:
    DenseMatrix weights_;
    std::optional<std::vector<Point>> positions_;
};

namespace detail {

// Nodes reachable from `start` following edges j -> i wherever a(i, j) > 0
// (forward == true) or the reverse direction.
inline std::vector<char> reachable(const DenseMatrix& a, std::size_t start, bool forward)
{
    const std::size_t n = a.size();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
            const double w = forward ? a(v, u) : a(u, v);
            if (w > 0.0 && !seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

} // namespace detail

/// True iff the support graph of the matrix is strongly connected (the matrix is irreducible).
/// A single node counts as connected only when its self-weight is positive.
inline bool is_strongly_connected(const DenseMatrix& a)
{
    const std::size_t n = a.size();
    if (n == 0) {
        return false;
    }
    if (n == 1) {
        return a(0, 0) > 0.0;
    }
    auto all = [](const std::vector<char>& s) {
        return std::all_of(s.begin(), s.end(), [](char c) { return c != 0; });
    };
    return all(detail::reachable(a, 0, true)) && all(detail::reachable(a, 0, false));
}

inline bool is_strongly_connected(const Network& net) { return is_strongly_connected(net.weights()); }

/// Closed-ball proximity graph over fixed positions: a(i, j) = cross_weight when the
/// distance between i and j is at most `radius`, a(i, i) = self_weight.
inline Network from_positions(std::vector<Point> positions, double radius, double self_weight,
                              double cross_weight)
{
    if (positions.empty()) {
        throw Error(ErrorKind::InvalidParameter, "positions must be non-empty");
    }
    if (!(radius > 0.0) || !(self_weight >= 0.0) || !(cross_weight >= 0.0)) {
        throw Error(ErrorKind::InvalidParameter,
                    "radius must be positive and weights non-negative");
    }
    const std::size_t n = positions.size();
    DenseMatrix w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w(i, i) = self_weight;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::hypot(positions[i].x - positions[j].x, positions[i].y - positions[j].y);
            if (d <= radius) {
                w(i, j) = cross_weight;
                w(j, i) = cross_weight;
            }
        }
    }
    return Network(std::move(w), std::move(positions));
}

/// Name of the generator behind all seeded constructions, reported in run metadata.
inline constexpr const char* rng_algorithm = "mt19937_64";

/// Maximum number of position redraws before a generator gives up on connectivity.
inline constexpr int max_regeneration_attempts = 1000;

namespace detail {

// 53-bit uniform in [0, 1); independent of the standard library's distribution code.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class Draw>
Network regenerate_until_connected(Draw&& draw, double radius, double self_weight, double cross_weight,
                                   std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (int attempt = 1; attempt <= max_regeneration_attempts; ++attempt) {
        Network net = from_positions(draw(rng), radius, self_weight, cross_weight);
        if (is_strongly_connected(net)) {
            return net;
        }
    }
    throw Error(ErrorKind::Disconnected, "no strongly connected layout after " +
                                             std::to_string(max_regeneration_attempts) + " attempts");
}

inline void check_generator_args(std::size_t n, double side, double radius, double self_weight,
                                 double cross_weight)
{
    if (n < 1 || !(side > 0.0) || !(radius > 0.0) || !(self_weight >= 0.0) || !(cross_weight >= 0.0)) {
        throw Error(ErrorKind::InvalidParameter,
                    "generator needs n >= 1, side > 0, radius > 0 and non-negative weights");
    }
}

} // namespace detail

/// Random geometric graph: positions uniform on [0, side]^2, redrawn until the graph is
/// strongly connected. Deterministic for a given seed.
inline Network random_geometric(std::size_t n, double side, double radius, double self_weight,
                                double cross_weight, std::uint64_t seed)
{
    detail::check_generator_args(n, side, radius, self_weight, cross_weight);
    auto draw = [&](std::mt19937_64& rng) {
        std::vector<Point> pts(n);
        for (auto& p : pts) {
            p.x = side * detail::unit_uniform(rng);
            p.y = side * detail::unit_uniform(rng);
        }
        return pts;
    };
    return detail::regenerate_until_connected(draw, radius, self_weight, cross_weight, seed);
}

/// Geometric graph with a dense corner: round(cluster_fraction * n) randomly chosen nodes are
/// placed uniformly in [0, cluster_extent]^2, the rest uniformly on the whole area.
inline Network clustered_geometric(std::size_t n, double side, double radius, double self_weight,
                                   double cross_weight, std::uint64_t seed, double cluster_fraction = 0.3,
                                   double cluster_extent = 30.0)
{
    detail::check_generator_args(n, side, radius, self_weight, cross_weight);
    if (!(cluster_fraction >= 0.0 && cluster_fraction <= 1.0) || !(cluster_extent > 0.0) ||
        cluster_extent > side) {
        throw Error(ErrorKind::InvalidParameter,
                    "cluster_fraction must lie in [0, 1] and cluster_extent in (0, side]");
    }
    const auto members = static_cast<std::size_t>(std::lround(cluster_fraction * static_cast<double>(n)));
    auto draw = [&](std::mt19937_64& rng) {
        // Fisher-Yates on node ids picks the cluster members.
        std::vector<std::size_t> ids(n);
        for (std::size_t i = 0; i < n; ++i) {
            ids[i] = i;
        }
        for (std::size_t i = n; i > 1; --i) {
            const auto k = static_cast<std::size_t>(detail::unit_uniform(rng) * static_cast<double>(i));
            std::swap(ids[i - 1], ids[std::min(k, i - 1)]);
        }
        std::vector<char> in_cluster(n, 0);
        for (std::size_t k = 0; k < members; ++k) {
            in_cluster[ids[k]] = 1;
        }
        std::vector<Point> pts(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double extent = in_cluster[i] ? cluster_extent : side;
            pts[i].x = extent * detail::unit_uniform(rng);
            pts[i].y = extent * detail::unit_uniform(rng);
        }
        return pts;
    };
    return detail::regenerate_until_connected(draw, radius, self_weight, cross_weight, seed);
}

/// out[i] = sum_j a(i, j) x[j]
inline void neighbor_sum(const Network& net, std::span<const double> x, std::span<double> out)
{
    const std::size_t n = net.size();
    require_same_size(n, x.size(), "state");
    require_same_size(n, out.size(), "output");
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = net.weights().row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += row[j] * x[j];
        }
        out[i] = s;
    }
}

inline std::vector<double> neighbor_sum(const Network& net, std::span<const double> x)
{
    std::vector<double> out(net.size());
    neighbor_sum(net, x, out);
    return out;
}

// JSON: {"n": int, "weights": [[...], ...], "positions": [[x, y], ...]?}

inline void to_json(nlohmann::json& j, const Network& net)
{
    const std::size_t n = net.size();
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = net.weights().row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j = nlohmann::json{{"n", n}, {"weights", std::move(rows)}};
    if (net.positions()) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : *net.positions()) {
            pts.push_back({p.x, p.y});
        }
        j["positions"] = std::move(pts);
    }
}

inline Network network_from_json(const nlohmann::json& j)
{
    try {
        const auto& rows = j.at("weights");
        const std::size_t n = j.contains("n") ? j.at("n").get<std::size_t>() : rows.size();
        require_same_size(n, rows.size(), "weights");
        DenseMatrix w(n);
        for (std::size_t i = 0; i < n; ++i) {
            require_same_size(n, rows[i].size(), "weights row");
            for (std::size_t k = 0; k < n; ++k) {
                w(i, k) = rows[i][k].get<double>();
            }
        }
        std::optional<std::vector<Point>> positions;
        if (j.contains("positions")) {
            positions.emplace();
            for (const auto& p : j.at("positions")) {
                if (p.size() != 2) {
                    throw Error(ErrorKind::InvalidParameter, "position must be [x, y]");
                }
                positions->push_back({p[0].get<double>(), p[1].get<double>()});
            }
        }
        return Network(std::move(w), std::move(positions));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidParameter, std::string("network json: ") + e.what());
    }
}

} // namespace epinet
