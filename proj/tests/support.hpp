#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>

namespace testing {

inline double rel(std::complex<double> a, std::complex<double> b) { return std::abs(a - b) / std::abs(b); }

// Solves sum_k coeff_k * basis_k(tau_i) = y_i for three points (Cramer's rule).
inline std::array<double, 3> solve3(const std::array<std::array<double, 3>, 3>& m, const std::array<double, 3>& y) {
    auto det = [](const std::array<std::array<double, 3>, 3>& a) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    double d = det(m);
    std::array<double, 3> x{};
    for (int k = 0; k < 3; ++k) {
        auto mk = m;
        for (int i = 0; i < 3; ++i) mk[i][k] = y[i];
        x[k] = det(mk) / d;
    }
    return x;
}

// Exponential decay rate kappa of d(tau) ~ K tau^q e^{-kappa tau}, eliminating K and q
// from three samples.
inline double exponential_rate(const std::array<double, 3>& tau, const std::array<double, 3>& d) {
    std::array<std::array<double, 3>, 3> m;
    std::array<double, 3> y;
    for (int i = 0; i < 3; ++i) {
        m[i] = {1.0, std::log(tau[i]), -tau[i]};
        y[i] = std::log(d[i]);
    }
    return solve3(m, y)[2];
}

// Algebraic order p of d(tau) ~ K tau^{-p} (1 + e / tau), eliminating K and e.
inline double algebraic_order(const std::array<double, 3>& tau, const std::array<double, 3>& d) {
    std::array<std::array<double, 3>, 3> m;
    std::array<double, 3> y;
    for (int i = 0; i < 3; ++i) {
        m[i] = {1.0, -std::log(tau[i]), 1.0 / tau[i]};
        y[i] = std::log(d[i]);
    }
    return solve3(m, y)[1];
}

inline std::array<double, 3> sample3(const std::array<double, 3>& tau, const std::function<double(double)>& f) {
    return {f(tau[0]), f(tau[1]), f(tau[2])};
}

} // namespace testing
