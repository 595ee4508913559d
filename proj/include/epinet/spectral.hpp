#pragma once

// Spectral abscissa and Perron vector of irreducible Metzler matrices.
//
// s(M) is obtained as rho(M + sigma I) - sigma with sigma = max_i |m_ii| + 1. The shifted
// matrix is non-negative, irreducible and has a positive diagonal, so it is primitive and
// plain power iteration from the all-ones vector converges to its Perron pair.

#include "epinet/dynamics.hpp"
#include "epinet/error.hpp"
#include "epinet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace epinet {

/// Square matrix with non-negative off-diagonal entries.
class MetzlerMatrix {
public:
    explicit MetzlerMatrix(DenseMatrix m) : m_(std::move(m))
    {
        if (m_.size() == 0) {
            throw Error(ErrorKind::InvalidParameter, "empty matrix");
        }
        for (std::size_t i = 0; i < m_.size(); ++i) {
            for (std::size_t j = 0; j < m_.size(); ++j) {
                const double v = m_(i, j);
                if (!std::isfinite(v) || (i != j && v < 0.0)) {
                    throw Error(ErrorKind::InvalidParameter,
                                "entry (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") breaks the Metzler sign pattern");
                }
            }
        }
    }

    std::size_t size() const noexcept { return m_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const DenseMatrix& matrix() const noexcept { return m_; }

    /// M + alpha I
    MetzlerMatrix shifted(double alpha) const
    {
        DenseMatrix out = m_;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out(i, i) += alpha;
        }
        return MetzlerMatrix(std::move(out));
    }

    /// Irreducibility depends only on the off-diagonal pattern; a 1x1 matrix is irreducible.
    bool is_irreducible() const { return m_.size() == 1 || is_strongly_connected(m_); }

private:
    DenseMatrix m_;
};

struct SpectralResult {
    double abscissa = 0.0;
    std::vector<double> perron; // unit max-norm, strictly positive
    long iterations = 0;
    double residual = 0.0; // ||M v - s v||_inf
};

struct SpectralOptions {
    double tol = 1e-10;
    long max_iter = 1'000'000;
};

/// Linearization at the disease-free state: entry (i, j) = beta_i a_ij - [i == j] gamma_i.
inline MetzlerMatrix build_linearized(const EpidemicParams& p, const Network& net)
{
    require_same_size(p.size(), net.size(), "network");
    const std::size_t n = net.size();
    DenseMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m(i, j) = p.beta()[i] * net.weight(i, j);
        }
        m(i, i) -= p.gamma()[i];
    }
    return MetzlerMatrix(std::move(m));
}

inline SpectralResult spectral_abscissa(const MetzlerMatrix& m, SpectralOptions opts = {})
{
    if (!(opts.tol > 0.0) || opts.max_iter < 1) {
        throw Error(ErrorKind::InvalidParameter, "tol must be positive and max_iter >= 1");
    }
    if (!m.is_irreducible()) {
        throw Error(ErrorKind::NotIrreducible, "support graph of the matrix is not strongly connected");
    }
    const std::size_t n = m.size();
    double sigma = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sigma = std::max(sigma, std::abs(m(i, i)));
    }
    sigma += 1.0;

    std::vector<double> v(n, 1.0);
    std::vector<double> w(n);
    double residual = 0.0;
    for (long it = 1; it <= opts.max_iter; ++it) {
        // w = (M + sigma I) v, with ||v||_inf = 1 so mu = ||w||_inf estimates rho(M + sigma I).
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = m.matrix().row(i);
            double acc = sigma * v[i];
            for (std::size_t j = 0; j < n; ++j) {
                acc += row[j] * v[j];
            }
            w[i] = acc;
            mu = std::max(mu, acc);
        }
        residual = 0.0;
        // Collatz-Wielandt bounds: min_i w_i / v_i <= rho <= max_i w_i / v_i.
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < n; ++i) {
            residual = std::max(residual, std::abs(w[i] - mu * v[i]));
            lo = std::min(lo, w[i] / v[i]);
            hi = std::max(hi, w[i] / v[i]);
        }
        if (residual <= opts.tol && hi - lo <= opts.tol) {
            if (!std::all_of(v.begin(), v.end(), [](double e) { return e > 0.0; })) {
                throw Error(ErrorKind::NoConvergence, "Perron vector lost positivity");
            }
            return {0.5 * (lo + hi) - sigma, std::move(v), it, residual};
        }
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = w[i] / mu;
        }
    }
    throw Error(ErrorKind::NoConvergence, "power iteration residual " + std::to_string(residual) + " after " +
                                              std::to_string(opts.max_iter) + " iterations");
}

} // namespace epinet
