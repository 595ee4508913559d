#pragma once

// Test-only reference computations. None of these share code paths with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

/// Largest real part among the eigenvalues of [[a, b], [c, d]].
inline double abscissa_2x2(double a, double b, double c, double d)
{
    const double mean = 0.5 * (a + d);
    const double disc = 0.25 * (a - d) * (a - d) + b * c;
    return disc >= 0.0 ? mean + std::sqrt(disc) : mean;
}

/// Largest real part among the eigenvalues of a 3x3 matrix via Cardano's formula on the
/// characteristic polynomial, polished by Newton steps on the real root it selects.
inline double abscissa_3x3(const std::array<std::array<double, 3>, 3>& m)
{
    const double tr = m[0][0] + m[1][1] + m[2][2];
    const double minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] +
                          m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    // p(l) = l^3 - tr l^2 + minors l - det; depressed with l = t + tr/3.
    const double a = -tr, b = minors, c = -det;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    using cd = std::complex<double>;
    const cd disc = std::sqrt(cd(q * q / 4.0 + p * p * p / 27.0));
    cd u = std::pow(cd(-q / 2.0) + disc, 1.0 / 3.0);
    const cd omega(-0.5, std::sqrt(3.0) / 2.0);
    double best = -1e300;
    bool best_real = false;
    for (int k = 0; k < 3; ++k) {
        const cd uk = u * std::pow(omega, k);
        const cd t = std::abs(uk) < 1e-300 ? cd(0.0) : uk - p / (3.0 * uk);
        const cd root = t - a / 3.0;
        if (root.real() > best) {
            best = root.real();
            best_real = std::abs(root.imag()) < 1e-7 * std::max(1.0, std::abs(root.real()));
        }
    }
    if (best_real) {
        for (int it = 0; it < 8; ++it) {
            const double f = ((best + a) * best + b) * best + c;
            const double df = (3.0 * best + 2.0 * a) * best + b;
            if (df == 0.0) {
                break;
            }
            best -= f / df;
        }
    }
    return best;
}

/// Smaller root of a x^2 + b x + c = 0 by the textbook formula (a > 0, real roots).
inline double smaller_root(double a, double b, double c) { return (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a); }

/// Bisection on [lo, hi] for a sign change of f.
template <class F>
double bisect(F&& f, double lo, double hi, int iters = 200)
{
    double flo = f(lo);
    for (int k = 0; k < iters; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace oracle
