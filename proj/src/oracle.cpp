#include "enclosure/oracle.hpp"

#include "enclosure/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <numbers>
#include <sstream>

namespace enclosure {

namespace {

namespace odeint = boost::numeric::odeint;

using state2 = std::array<cplx, 2>;
using state3 = std::array<cplx, 3>;

// y and gamma y' at a point, y = lambda P e^{z S(x)}.
struct ScaledState {
    double x;
    cplx P;
    cplx Q;
    cplx zS; // z S(x)
    // layered media: amplitude of the e^{-z S} mode of the layer starting at x,
    // so that Q - sqrt(gamma) z P = -2 sqrt(gamma) z down without cancellation
    LogComplex down;
};

std::vector<ScaledState> bvp_layered(const LayeredMedium& med, const ProbeFrequency& probe, double rho) {
    auto b = med.breakpoints();
    auto g = med.conductivities();
    const std::size_t m = med.layers();
    const cplx z = probe.z;

    std::vector<ScaledState> out(m + 1);
    cplx zS = z * med.stack().slowness_integral(med.length());
    out[m] = {b[m], 1.0, -rho, zS, LogComplex()};
    // mode amplitudes at the right end of layer m-1
    cplx imp = std::sqrt(g[m - 1]) * z; // gamma_j z_j
    cplx c1 = 0.5 * (1.0 - rho / imp);
    LogComplex c2 = LogComplex::from_value(0.5 * (1.0 + rho / imp));
    for (std::size_t j = m; j-- > 0;) {
        const double sg = std::sqrt(g[j]);
        const double L = b[j + 1] - b[j];
        c2 = c2 * LogComplex::exp(2.0 * z / sg * L);
        const cplx c2v = c2.value();
        zS -= z * L / sg;
        out[j] = {b[j], c1 + c2v, imp * (c1 - c2v), zS, c2};
        if (j == 0) break;
        // continuity of y and gamma y' across b_j, mode by mode
        const cplx imp_left = std::sqrt(g[j - 1]) * z;
        const cplx r = imp / imp_left;
        const cplx n1 = 0.5 * ((1.0 + r) * c1 + (1.0 - r) * c2v);
        c2 = LogComplex::from_value(0.5 * (1.0 - r) * c1) + c2 * cplx(0.5 * (1.0 + r));
        c1 = n1;
        imp = imp_left;
    }
    out[0].zS = 0.0;
    return out;
}

std::vector<ScaledState> bvp_smooth(const SmoothSegment& seg, const ProbeFrequency& probe, double rho) {
    const SmoothMedium& med = seg.medium;
    const double a = seg.end;
    const cplx z = probe.z, z2 = probe.z2;
    auto rhs = [&med, z, z2](const state2& s, state2& ds, double x) {
        double gv = med.gamma(x);
        double sg = std::sqrt(gv);
        ds[0] = s[1] / gv - z * s[0] / sg;
        ds[1] = z2 * s[0] - z * s[1] / sg;
    };
    state2 s{cplx(1.0), cplx(-rho)};
    auto stepper = odeint::make_controlled(1e-12, 1e-10, odeint::runge_kutta_dopri5<state2>());
    double dt = -std::min(a / 50.0, 0.5 / std::abs(z));
    try {
        odeint::integrate_adaptive(stepper, rhs, s, a, 0.0, dt);
    } catch (const std::exception& e) {
        throw NumericalError(std::string("bvp: integration failed: ") + e.what());
    }
    if (!std::isfinite(s[0].real()) || !std::isfinite(s[1].real())) throw NumericalError("bvp: non-finite state");
    return {{0.0, s[0], s[1], 0.0}, {a, cplx(1.0), cplx(-rho), z * med.slowness_integral(a)}};
}

std::vector<ScaledState> bvp_states(const Conductor& truth, const ProbeFrequency& probe, double rho) {
    if (const auto* lm = std::get_if<LayeredMedium>(&truth)) return bvp_layered(*lm, probe, rho);
    return bvp_smooth(std::get<SmoothSegment>(truth), probe, rho);
}

// lambda with y(x) = lambda P(x) e^{z S(x)}, from gamma(0) y'(0) = gamma(0) w0.
LogComplex bvp_lambda(const std::vector<ScaledState>& st, double gamma0, cplx w0) {
    const ScaledState& s0 = st.front();
    if (s0.Q == cplx(0.0)) throw NumericalError("bvp: degenerate flux at x=0");
    return LogComplex::from_value(gamma0 * w0 / s0.Q);
}

} // namespace

cplx two_layer_det_scaled(double a, double b, double gamma1, double gamma2, const ProbeFrequency& probe) {
    const cplx z1 = probe.z / std::sqrt(gamma1), z2 = probe.z / std::sqrt(gamma2);
    const auto [T12, R12] = trans_refl(gamma1, gamma2);
    (void)T12;
    const cplx E1 = std::exp(2.0 * b * z1);
    const cplx E2 = std::exp(2.0 * (a - b) * z2);
    return 1.0 + R12 * (E2 - E1) - E1 * E2;
}

LogComplex principal_indicator_two_layer(double a, double b, double gamma1, double gamma2, cplx w0, LogComplex wa,
                                         const ProbeFrequency& probe) {
    if (!(0.0 < b && b < a)) throw ValidationError("two-layer indicator: need 0 < b < a");
    const double s1 = std::sqrt(gamma1), s2 = std::sqrt(gamma2);
    const cplx z1 = probe.z / s1, z2 = probe.z / s2;
    const auto [T12, R12] = trans_refl(gamma1, gamma2);
    const auto [T21, R21] = trans_refl(gamma2, gamma1);
    (void)R12;
    (void)R21;
    const cplx D = two_layer_det_scaled(a, b, gamma1, gamma2, probe);
    if (std::abs(D) < 1e-13) {
        std::ostringstream msg;
        msg << "two-layer indicator: det R vanishes at tau=" << probe.tau;
        throw NumericalError(msg.str());
    }
    const cplx E2 = std::exp(2.0 * (a - b) * z2);
    // The w'(a) weight is 2 sqrt(g1 g2) T_21, checked against a direct solve
    // of the two-layer Neumann problem.
    LogComplex t1 = wa * cplx(2.0 * s1 * s2 * T21) * LogComplex::exp(b * z1 + (a - b) * z2);
    LogComplex t2 = LogComplex::exp(2.0 * b * z1) * (((s1 - s2) + (s1 + s2) * E2) * T12 * s1 * w0);
    return (t1 - t2) * LogComplex::from_value(1.0 / D);
}

BvpEndpoints bvp_solve(const Conductor& truth, const ProbeFrequency& probe, cplx w0, RightBC right) {
    auto st = bvp_states(truth, probe, right.rho);
    LogComplex lambda = bvp_lambda(st, conductivity_at_origin(truth), w0);
    const ScaledState& s0 = st.front();
    const ScaledState& sa = st.back();
    return {lambda * s0.P, lambda * LogComplex::exp(sa.zS) * sa.P};
}

LogComplex exact_principal_indicator(const Conductor& truth, const KnownMedium& known, const ProbeFrequency& probe,
                                     cplx w0, RightBC right) {
    const Problem p = problem_of(known);
    const bool layered = std::holds_alternative<LayeredMedium>(truth);
    if ((p == Problem::C) == layered) throw ValidationError("exact indicator: medium kind does not match the problem");
    if (std::abs(known_gamma0(known) - conductivity_at_origin(truth)) > 1e-12 * known_gamma0(known)) {
        throw ValidationError("exact indicator: known and true conductivity differ at x=0");
    }

    auto st = bvp_states(truth, probe, right.rho);
    LogComplex lambda = bvp_lambda(st, conductivity_at_origin(truth), w0);

    if (p == Problem::A) {
        // Psi = e^{z_1 x} solves the true equation on [0, b_1]; only the e^{-z_1 x}
        // mode of y contributes to the conserved pairing.
        const double g1 = std::get<KnownA>(known).gamma1;
        return lambda * st[0].down * (-2.0 * std::sqrt(g1) * probe.z);
    }

    // The probe solves the true equation on all of [0, a]; gamma y' = -rho y at a.
    const ScaledState& s = st.back();
    ProbeSolution sol = make_probe_solution(known, probe);
    ProbePoint pt = sol.at(s.x);
    LogComplex y = lambda * LogComplex::exp(s.zS) * s.P;
    return -(y * (pt.psi * cplx(right.rho) + pt.flux));
}

LogComplex asymptotic_indicator_layered(const LayeredMedium& truth, double rho, cplx w0, const ProbeFrequency& probe) {
    auto g = truth.conductivities();
    const double g1 = g.front(), gm = g.back();
    const double T = transmission_product(g);
    cplx phi = layered_phase(truth.stack(), probe, truth.length());
    cplx corr = 1.0 + 2.0 * rho / (probe.z * std::sqrt(gm));
    return LogComplex::exp(2.0 * phi) * (-2.0 * std::sqrt(g1 * gm) * T * T * w0 * corr);
}

LogComplex asymptotic_indicator_smooth(const SmoothMedium& med, double a, const ProbeFrequency& probe, cplx w0) {
    const double g0 = med.gamma(0.0);
    return LogComplex::exp(2.0 * probe.z * med.slowness_integral(a)) * (-2.0 * std::pow(g0, 0.75) * w0);
}

LogComplex asymptotic_endpoint_layered(const LayeredMedium& truth, double rho, cplx w0, const ProbeFrequency& probe) {
    auto g = truth.conductivities();
    const double g1 = g.front(), gm = g.back();
    const double T = transmission_product(g);
    cplx phi = layered_phase(truth.stack(), probe, truth.length());
    cplx corr = 1.0 + rho / (probe.z * std::sqrt(gm));
    return LogComplex::exp(phi) * (2.0 * w0 * std::sqrt(g1) / probe.z * T * corr);
}

WkbEndpoint wkb_endpoint_check(const LiouvilleFrame& frame, const ProbeFrequency& probe) {
    const SmoothMedium& med = frame.medium();
    const double K = frame.K();
    const cplx kappa = K * probe.z;
    const cplx kappa2 = K * K * probe.z2;
    constexpr double pi = std::numbers::pi;

    // u = ytilde e^{-kappa (s - pi)}, v = ytilde' e^{-kappa (s - pi)}, x(s).
    auto rhs = [&](const state3& st, state3& ds, double) {
        const double x = std::clamp(st[2].real(), 0.0, frame.endpoint());
        ds[0] = st[1] - kappa * st[0];
        ds[1] = (kappa2 + frame.g_at_x(x)) * st[0] - kappa * st[1];
        ds[2] = K * std::sqrt(med.gamma(x));
    };
    state3 s{cplx(1.0), cplx(-frame.H()), cplx(frame.endpoint())};
    auto stepper = odeint::make_controlled(1e-12, 1e-10, odeint::runge_kutta_dopri5<state3>());
    try {
        odeint::integrate_adaptive(stepper, rhs, s, pi, 0.0, -std::min(0.05, 0.5 / std::abs(kappa)));
    } catch (const std::exception& e) {
        throw NumericalError(std::string("wkb endpoint: integration failed: ") + e.what());
    }
    const cplx denom = s[1] - frame.h() * s[0];
    WkbEndpoint out;
    out.ratio = kappa / (2.0 * denom);
    out.ytilde_pi = LogComplex::exp(kappa * pi) * (1.0 / denom);
    const double g0 = med.gamma(0.0), ga = med.gamma(frame.endpoint());
    out.y_a = out.ytilde_pi * cplx(K * std::pow(g0, 0.75) / std::pow(ga, 0.25));
    return out;
}

std::vector<cplx> wkb_wronskian(const LiouvilleFrame& frame, const ProbeFrequency& probe, std::size_t samples) {
    if (samples < 2) throw ValidationError("wkb wronskian: need at least two samples");
    const SmoothMedium& med = frame.medium();
    const double K = frame.K();
    const cplx kappa = K * probe.z;
    const cplx kappa2 = K * K * probe.z2;
    constexpr double pi = std::numbers::pi;

    std::vector<double> grid(samples);
    for (std::size_t i = 0; i < samples; ++i) grid[i] = pi * static_cast<double>(i) / static_cast<double>(samples - 1);
    grid.back() = pi;

    // e_k = p_k e^{sign_k kappa s}, e_k' = q_k e^{sign_k kappa s}
    auto run = [&](double sign, state3 start, bool backward) {
        auto rhs = [&, sign](const state3& st, state3& ds, double) {
            const double x = std::clamp(st[2].real(), 0.0, frame.endpoint());
            ds[0] = st[1] - sign * kappa * st[0];
            ds[1] = (kappa2 + frame.g_at_x(x)) * st[0] - sign * kappa * st[1];
            ds[2] = K * std::sqrt(med.gamma(x));
        };
        std::vector<state3> obs(samples);
        std::vector<double> times(grid);
        if (backward) std::reverse(times.begin(), times.end());
        std::size_t k = 0;
        auto observer = [&](const state3& st, double) {
            obs[backward ? samples - 1 - k : k] = st;
            ++k;
        };
        auto stepper = odeint::make_controlled(1e-12, 1e-10, odeint::runge_kutta_dopri5<state3>());
        double dt = std::min(0.05, 0.5 / std::abs(kappa));
        try {
            odeint::integrate_times(stepper, rhs, start, times.begin(), times.end(), backward ? -dt : dt, observer,
                                    odeint::max_step_checker(100000));
        } catch (const std::exception& e) {
            throw NumericalError(std::string("wkb wronskian: integration failed: ") + e.what());
        }
        return obs;
    };
    auto e1 = run(+1.0, {cplx(1.0), kappa, cplx(frame.endpoint())}, true);
    auto e2 = run(-1.0, {cplx(1.0), -kappa, cplx(0.0)}, false);
    std::vector<cplx> w(samples);
    for (std::size_t i = 0; i < samples; ++i) w[i] = e1[i][0] * e2[i][1] - e1[i][1] * e2[i][0];
    return w;
}

const char* to_string(OracleKind k) {
    switch (k) {
    case OracleKind::ExactPrincipal: return "exact-principal";
    case OracleKind::TwoLayerPrincipal: return "two-layer-principal";
    case OracleKind::LayeredAsymptotic: return "layered-asymptotic";
    case OracleKind::SmoothAsymptotic: return "smooth-asymptotic";
    }
    return "?";
}

OracleKind oracle_kind_from_string(const std::string& s) {
    for (OracleKind k : {OracleKind::ExactPrincipal, OracleKind::TwoLayerPrincipal, OracleKind::LayeredAsymptotic,
                         OracleKind::SmoothAsymptotic}) {
        if (s == to_string(k)) return k;
    }
    throw ValidationError("unknown oracle '" + s + "'");
}

FluxTransform flux_transform(const FluxFunction& g, double horizon, std::size_t samples) {
    if (!(horizon > 0.0) || samples < 2) throw ValidationError("flux transform: need T > 0 and >= 2 samples");
    auto times = std::make_shared<std::vector<double>>(samples + 1);
    auto values = std::make_shared<std::vector<double>>(samples + 1);
    for (std::size_t i = 0; i <= samples; ++i) {
        double t = horizon * static_cast<double>(i) / static_cast<double>(samples);
        (*times)[i] = t;
        (*values)[i] = g(t);
    }
    return [times, values](const ProbeFrequency& p) { return filon_laplace(*times, *values, p.z2); };
}

IndicatorSamples oracle_indicator(OracleKind kind, const Conductor& truth, const KnownMedium& known, RightBC right,
                                  const FluxTransform& w0, const std::vector<double>& taus, double c, ProbeMode mode) {
    IndicatorSamples out;
    out.problem = problem_of(known);
    out.mode = mode;
    out.c = c;
    out.source = to_string(kind);
    out.entries.reserve(taus.size());

    const LayeredMedium* lm = std::get_if<LayeredMedium>(&truth);
    const SmoothSegment* sm = std::get_if<SmoothSegment>(&truth);
    switch (kind) {
    case OracleKind::TwoLayerPrincipal:
        if (!lm || lm->layers() != 2 || out.problem != Problem::A) {
            throw ValidationError("two-layer oracle: needs problem A with a two-layer conductor");
        }
        break;
    case OracleKind::LayeredAsymptotic:
        if (!lm) throw ValidationError("layered oracle: needs a layered conductor");
        break;
    case OracleKind::SmoothAsymptotic:
        if (!sm) throw ValidationError("smooth oracle: needs a smooth conductor");
        break;
    case OracleKind::ExactPrincipal: break;
    }

    for (double tau : taus) {
        IndicatorEntry e;
        e.tau = tau;
        try {
            ProbeFrequency probe = make_probe(c, tau, mode);
            e.z = probe.z;
            e.w0 = w0(probe);
            switch (kind) {
            case OracleKind::ExactPrincipal: e.I = exact_principal_indicator(truth, known, probe, e.w0, right); break;
            case OracleKind::TwoLayerPrincipal: {
                auto b = lm->breakpoints();
                LogComplex wa;
                if (!right.is_neumann()) {
                    wa = bvp_solve(truth, probe, e.w0, right).ya * cplx(-right.rho / lm->conductivity(1));
                }
                e.I = principal_indicator_two_layer(b[2], b[1], lm->conductivity(0), lm->conductivity(1), e.w0, wa,
                                                    probe);
                break;
            }
            case OracleKind::LayeredAsymptotic: e.I = asymptotic_indicator_layered(*lm, right.rho, e.w0, probe); break;
            case OracleKind::SmoothAsymptotic:
                e.I = asymptotic_indicator_smooth(sm->medium, sm->end, probe, e.w0);
                break;
            }
        } catch (const DomainError&) {
            e.flag = SampleFlag::Unsolvable;
        } catch (const NumericalError&) {
            e.flag = SampleFlag::Unsolvable;
        }
        out.entries.push_back(e);
    }
    return out;
}

} // namespace enclosure
