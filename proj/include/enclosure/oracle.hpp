#pragma once

#include "enclosure/forward.hpp"
#include "enclosure/indicator.hpp"
#include "enclosure/logcomplex.hpp"
#include "enclosure/medium.hpp"
#include "enclosure/probe.hpp"

#include <functional>
#include <string>
#include <vector>

namespace enclosure {

/// (det R) T_12 e^{(a-b) z_2} = 1 + R_12 (e^{2(a-b) z_2} - e^{2 b z_1}) - e^{2 b z_1 + 2 (a-b) z_2}
/// for the two-layer conductor of problem A.
cplx two_layer_det_scaled(double a, double b, double gamma1, double gamma2, const ProbeFrequency& probe);

/// Principal part I^0 of the two-layer indicator with the single-layer probe
/// e^{x z_1}, from the closed-form representation in terms of w'(0) and w'(a):
///   D I^0 = 2 sqrt(g1 g2) T_21 w'(a) e^{b z_1 + (a-b) z_2}
///         - e^{2 b z_1} ((sqrt(g1) - sqrt(g2)) + (sqrt(g1) + sqrt(g2)) e^{2(a-b) z_2}) T_12 sqrt(g1) w'(0)
/// with D from two_layer_det_scaled. w'(a) is passed in log scale.
/// Throws NumericalError when det R is numerically zero.
LogComplex principal_indicator_two_layer(double a, double b, double gamma1, double gamma2, cplx w0, LogComplex wa,
                                         const ProbeFrequency& probe);

struct BvpEndpoints {
    LogComplex y0;
    LogComplex ya;
};

/// (gamma y')' - z^2 y = 0 on ]0, a[, y'(0) = w0, gamma(a) y'(a) + rho y(a) = 0,
/// integrated backward from a in variables scaled by e^{z S(x)} (exact mode
/// propagation per layer; Dormand-Prince for smooth media).
BvpEndpoints bvp_solve(const Conductor& truth, const ProbeFrequency& probe, cplx w0, RightBC right);

/// gamma(0) (w0 Psi(0) - y(0) Psi'(0)) with y from bvp_solve: the indicator
/// without its O(e^{-tau T}) remainder. Evaluated through the conserved
/// quantity gamma (y' Psi - y Psi') without cancellation: from the reflected
/// mode amplitude of the first layer for problem A, at x = a otherwise.
LogComplex exact_principal_indicator(const Conductor& truth, const KnownMedium& known, const ProbeFrequency& probe,
                                     cplx w0, RightBC right);

/// Leading term -2 sqrt(g_1 g_m) w0 (T_12...T_{m-1,m})^2 e^{2 phi(a)} {1 + 2 rho/(z sqrt(g_m))}.
LogComplex asymptotic_indicator_layered(const LayeredMedium& truth, double rho, cplx w0, const ProbeFrequency& probe);

/// Leading term -2 gamma(0)^{3/4} w0 e^{2 z S(a)}, S(a) = int_0^a dx / sqrt(gamma).
LogComplex asymptotic_indicator_smooth(const SmoothMedium& med, double a, const ProbeFrequency& probe, cplx w0);

/// Leading term y(a) ~ 2 w0 sqrt(g_1)/z e^{phi(a)} T_12...T_{m-1,m} {1 + rho/(z sqrt(g_m))}.
LogComplex asymptotic_endpoint_layered(const LayeredMedium& truth, double rho, cplx w0, const ProbeFrequency& probe);

struct WkbEndpoint {
    cplx ratio;          // ytilde(pi) K z e^{-K z pi} / 2, tends to 1
    LogComplex ytilde_pi;
    LogComplex y_a;      // physical y(a) for y'(0) = 1
};

/// Solves ytilde'' - (K^2 z^2 + g(s)) ytilde = 0, ytilde'(0) - h ytilde(0) = 1,
/// ytilde'(pi) + H ytilde(pi) = 0 backward in s (x(s) carried along).
WkbEndpoint wkb_endpoint_check(const LiouvilleFrame& frame, const ProbeFrequency& probe);

/// Wronskian e_1 e_2' - e_1' e_2 of the fundamental system e_1 ~ e^{K z s},
/// e_2 ~ e^{-K z s}, sampled at `samples` uniform points of [0, pi].
std::vector<cplx> wkb_wronskian(const LiouvilleFrame& frame, const ProbeFrequency& probe, std::size_t samples = 11);

enum class OracleKind { ExactPrincipal, TwoLayerPrincipal, LayeredAsymptotic, SmoothAsymptotic };
const char* to_string(OracleKind k);
OracleKind oracle_kind_from_string(const std::string& s);

/// w'(0) for a given probe.
using FluxTransform = std::function<cplx(const ProbeFrequency&)>;

/// Laplace transform of a flux function u_x(0, t) on [0, T] by the product
/// rule on `samples` uniform intervals.
FluxTransform flux_transform(const FluxFunction& g, double horizon, std::size_t samples = 20000);

/// Noise-free indicator samples over a tau grid. Oracle values are carried in
/// log scale, so no entry is flagged for underflow.
IndicatorSamples oracle_indicator(OracleKind kind, const Conductor& truth, const KnownMedium& known, RightBC right,
                                  const FluxTransform& w0, const std::vector<double>& taus, double c, ProbeMode mode);

} // namespace enclosure
