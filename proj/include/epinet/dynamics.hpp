#pragma once

#include "epinet/error.hpp"
#include "epinet/graph.hpp"

#include "json.hpp"

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epinet {

/// Per-node infection rates, healing rates and cap parameters c (node cap is 1/c).
///
/// Validated once on construction: beta > 0, gamma >= 0, c > 1, equal lengths.
class EpidemicParams {
public:
    EpidemicParams(std::vector<double> beta, std::vector<double> gamma, std::vector<double> cap_c)
        : beta_(std::move(beta))
        , gamma_(std::move(gamma))
        , cap_c_(std::move(cap_c))
    {
        if (beta_.empty()) {
            throw Error(ErrorKind::InvalidParameter, "parameters need at least one node");
        }
        require_same_size(beta_.size(), gamma_.size(), "gamma");
        require_same_size(beta_.size(), cap_c_.size(), "cap_c");
        for (std::size_t i = 0; i < beta_.size(); ++i) {
            if (!(beta_[i] > 0.0) || !std::isfinite(beta_[i])) {
                throw Error(ErrorKind::InvalidParameter, "beta[" + std::to_string(i) + "] must be > 0");
            }
            if (!(gamma_[i] >= 0.0) || !std::isfinite(gamma_[i])) {
                throw Error(ErrorKind::InvalidParameter, "gamma[" + std::to_string(i) + "] must be >= 0");
            }
            if (!(cap_c_[i] > 1.0) || !std::isfinite(cap_c_[i])) {
                throw Error(ErrorKind::InvalidParameter, "cap_c[" + std::to_string(i) + "] must be > 1");
            }
        }
    }

    static EpidemicParams uniform(std::size_t n, double beta, double gamma, double cap_c)
    {
        return {std::vector<double>(n, beta), std::vector<double>(n, gamma), std::vector<double>(n, cap_c)};
    }

    std::size_t size() const noexcept { return beta_.size(); }
    std::span<const double> beta() const noexcept { return beta_; }
    std::span<const double> gamma() const noexcept { return gamma_; }
    std::span<const double> cap_c() const noexcept { return cap_c_; }

    /// Infection ceiling 1/c for node i.
    double cap(std::size_t i) const { return 1.0 / cap_c_[i]; }

    std::vector<double> caps() const
    {
        std::vector<double> out(cap_c_.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = 1.0 / cap_c_[i];
        }
        return out;
    }

    EpidemicParams with_gamma(std::vector<double> gamma) const { return {beta_, std::move(gamma), cap_c_}; }
    EpidemicParams with_beta(std::vector<double> beta) const { return {std::move(beta), gamma_, cap_c_}; }
    EpidemicParams with_cap_c(std::vector<double> cap_c) const { return {beta_, gamma_, std::move(cap_c)}; }

    friend bool operator==(const EpidemicParams&, const EpidemicParams&) = default;

private:
    std::vector<double> beta_;
    std::vector<double> gamma_;
    std::vector<double> cap_c_;
};

using StateVector = std::vector<double>;

namespace detail {

inline void check_dims(const EpidemicParams& p, const Network& net, std::span<const double> x,
                       std::span<double> out)
{
    require_same_size(p.size(), net.size(), "network");
    require_same_size(p.size(), x.size(), "state");
    require_same_size(p.size(), out.size(), "output");
}

} // namespace detail

// The three fields share the neighbour sum S_i = sum_j a_ij x_j. They are evaluated on all
// of [0,1]^n, including states above the caps; caps are checked by the verifier.

/// dx_i = beta_i (1 - x_i) S_i - gamma_i x_i
inline void open_loop_field(const EpidemicParams& p, const Network& net, std::span<const double> x,
                            std::span<double> out)
{
    detail::check_dims(p, net, x, out);
    neighbor_sum(net, x, out);
    const auto beta = p.beta();
    const auto gamma = p.gamma();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = beta[i] * (1.0 - x[i]) * out[i] - gamma[i] * x[i];
    }
}

/// u_i = -beta_i c_i x_i (1 - x_i) S_i, never positive on [0,1]^n.
inline void control_input(const EpidemicParams& p, const Network& net, std::span<const double> x,
                          std::span<double> out)
{
    detail::check_dims(p, net, x, out);
    neighbor_sum(net, x, out);
    const auto beta = p.beta();
    const auto c = p.cap_c();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = -beta[i] * c[i] * x[i] * (1.0 - x[i]) * out[i];
    }
}

/// dx_i = beta_i (1 - c_i x_i)(1 - x_i) S_i - gamma_i x_i
inline void closed_loop_field(const EpidemicParams& p, const Network& net, std::span<const double> x,
                              std::span<double> out)
{
    detail::check_dims(p, net, x, out);
    neighbor_sum(net, x, out);
    const auto beta = p.beta();
    const auto gamma = p.gamma();
    const auto c = p.cap_c();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = beta[i] * (1.0 - c[i] * x[i]) * (1.0 - x[i]) * out[i] - gamma[i] * x[i];
    }
}

/// Interaction multiplier b_i = 1 - c_i x_i imposed by the controller.
inline std::vector<double> scaling_factor(const EpidemicParams& p, std::span<const double> x)
{
    require_same_size(p.size(), x.size(), "state");
    std::vector<double> b(x.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        b[i] = 1.0 - p.cap_c()[i] * x[i];
    }
    return b;
}

#define EPINET_VALUE_OVERLOAD(name)                                                                          \
    inline std::vector<double> name(const EpidemicParams& p, const Network& net, std::span<const double> x) \
    {                                                                                                        \
        std::vector<double> out(x.size());                                                                   \
        name(p, net, x, out);                                                                                \
        return out;                                                                                          \
    }

EPINET_VALUE_OVERLOAD(open_loop_field)
EPINET_VALUE_OVERLOAD(control_input)
EPINET_VALUE_OVERLOAD(closed_loop_field)

#undef EPINET_VALUE_OVERLOAD

namespace detail {

inline std::vector<double> broadcast(const nlohmann::json& v, std::size_t n, const char* field)
{
    if (v.is_number()) {
        return std::vector<double>(n, v.get<double>());
    }
    if (v.is_array()) {
        auto out = v.get<std::vector<double>>();
        require_same_size(n, out.size(), field);
        return out;
    }
    throw Error(ErrorKind::InvalidParameter, std::string(field) + " must be a number or an array");
}

} // namespace detail

/// Parses {"beta", "gamma", "cap_c"}; a scalar stands for a uniform vector of length n.
inline EpidemicParams params_from_json(const nlohmann::json& j, std::size_t n)
{
    try {
        return {detail::broadcast(j.at("beta"), n, "beta"), detail::broadcast(j.at("gamma"), n, "gamma"),
                detail::broadcast(j.at("cap_c"), n, "cap_c")};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidParameter, std::string("params json: ") + e.what());
    }
}

inline void to_json(nlohmann::json& j, const EpidemicParams& p)
{
    auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
    j = nlohmann::json{{"beta", vec(p.beta())}, {"gamma", vec(p.gamma())}, {"cap_c", vec(p.cap_c())}};
}

} // namespace epinet
