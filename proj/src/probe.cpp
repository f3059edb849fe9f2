#include "enclosure/probe.hpp"

#include "enclosure/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

namespace enclosure {

const char* to_string(ProbeMode m) { return m == ProbeMode::Oscillatory ? "oscillatory" : "real-ray"; }

ProbeMode probe_mode_from_string(const std::string& s) {
    if (s == "oscillatory") return ProbeMode::Oscillatory;
    if (s == "real-ray" || s == "real_ray" || s == "realray") return ProbeMode::RealRay;
    throw ValidationError("unknown probe mode '" + s + "' (expected oscillatory or real-ray)");
}

ProbeFrequency make_probe(double c, double tau, ProbeMode mode) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("probe: c must be positive");
    if (!std::isfinite(tau)) throw DomainError("probe: tau must be finite");
    ProbeFrequency p;
    p.c = c;
    p.tau = tau;
    p.mode = mode;
    if (mode == ProbeMode::Oscillatory) {
        if (!(tau * c * c > 1.0)) {
            std::ostringstream msg;
            msg << "probe: oscillatory mode needs tau > 1/c^2 = " << 1.0 / (c * c) << " (got " << tau << ")";
            throw DomainError(msg.str());
        }
        double r = std::sqrt(1.0 - 1.0 / (c * c * tau));
        p.z = cplx(-c * tau, -c * tau * r);
        p.z2 = cplx(tau, 2.0 * c * c * tau * tau * r);
    } else {
        if (!(tau > 0.0)) throw DomainError("probe: real-ray mode needs tau > 0");
        p.z = cplx(-tau, 0.0);
        p.z2 = cplx(tau * tau, 0.0);
    }
    return p;
}

std::pair<double, double> trans_refl(double gamma_k, double gamma_l) {
    if (!(gamma_k > 0.0) || !(gamma_l > 0.0)) throw ValidationError("trans_refl: conductivities must be positive");
    double sk = std::sqrt(gamma_k), sl = std::sqrt(gamma_l);
    return {2.0 * sk / (sk + sl), (sk - sl) / (sk + sl)};
}

cplx psi_single(double x, const ProbeFrequency& probe, double gamma1) {
    return std::exp(x * probe.z / std::sqrt(gamma1));
}

double transmission_product(std::span<const double> gamma) {
    double t = 1.0;
    for (std::size_t j = 0; j + 1 < gamma.size(); ++j) t *= trans_refl(gamma[j], gamma[j + 1]).first;
    return t;
}

cplx layered_phase(const LayerStack& known, const ProbeFrequency& probe, double x) {
    auto b = known.interfaces();
    auto g = known.conductivities();
    cplx phi = 0.0;
    std::size_t j = 0;
    for (; j < b.size() && x > b[j]; ++j) {
        // phi_{j+1} = phi_j + b_j (z_j - z_{j+1})
        phi += b[j] * (probe.z / std::sqrt(g[j]) - probe.z / std::sqrt(g[j + 1]));
    }
    return x * probe.z / std::sqrt(g[j]) + phi;
}

// ------------------------------------------------------------- ProbeSolution

std::size_t ProbeSolution::layer_of(double x) const {
    std::size_t j = 0;
    while (j < interfaces_.size() && x > interfaces_[j]) ++j;
    return j;
}

cplx ProbeSolution::phase(double x) const {
    if (kind_ == Kind::Wkb) return probe_.z * medium_->slowness_integral(x);
    std::size_t j = layer_of(x);
    return x * zj_[j] + phi_[j];
}

LogComplex ProbeSolution::A(std::size_t j) const { return LogComplex::from_value(a_.at(j)) * LogComplex::exp(phi_[j]); }

LogComplex ProbeSolution::B(std::size_t j) const {
    if (j >= interfaces_.size()) return LogComplex::from_value(beta_.at(j));
    return LogComplex::from_value(beta_[j]) * LogComplex::exp(2.0 * interfaces_[j] * zj_[j] + phi_[j]);
}

namespace {

struct HermiteSample {
    cplx p, q;
};

} // namespace

ProbePoint ProbeSolution::at(double x) const {
    if (kind_ == Kind::Wkb) {
        const double M = grid_.back();
        if (x < 0.0 || x > M * (1.0 + 1e-14)) throw DomainError("probe: x outside [0, M]");
        x = std::min(x, M);
        const std::size_t n = grid_.size();
        const double h = grid_[1] - grid_[0];
        std::size_t k = std::min(static_cast<std::size_t>(x / h), n - 2);
        double t = (x - grid_[k]) / h;
        auto deriv = [&](std::size_t i) {
            Jet gj = medium_->eval(grid_[i]);
            double sg = std::sqrt(gj.v);
            const cplx z = probe_.z;
            return HermiteSample{q_[i] / gj.v - z * p_[i] / sg, probe_.z2 * p_[i] - z * q_[i] / sg};
        };
        HermiteSample d0 = deriv(k), d1 = deriv(k + 1);
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        cplx p = h00 * p_[k] + h * h10 * d0.p + h01 * p_[k + 1] + h * h11 * d1.p;
        cplx q = h00 * q_[k] + h * h10 * d0.q + h01 * q_[k + 1] + h * h11 * d1.q;
        LogComplex ph = LogComplex::exp(phase(x));
        return {LogComplex::from_value(p) * ph, LogComplex::from_value(q) * ph};
    }
    std::size_t j = layer_of(x);
    cplx refl = 0.0;
    if (j < interfaces_.size()) refl = beta_[j] * std::exp(2.0 * (interfaces_[j] - x) * zj_[j]);
    LogComplex ph = LogComplex::exp(phase(x));
    cplx flux = std::sqrt(gamma_[j]) * probe_.z * (a_[j] - refl);
    return {LogComplex::from_value(a_[j] + refl) * ph, LogComplex::from_value(flux) * ph};
}

cplx ProbeSolution::scaled(double x) const {
    ProbePoint p = at(x);
    return (p.psi / LogComplex::exp(phase(x))).value();
}

void ProbeSolution::write_debug_csv(std::ostream& out) const {
    out << "j,re_A,im_A,re_B,im_B\n";
    char buf[160];
    for (std::size_t j = 0; j < a_.size(); ++j) {
        int n = std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", j + 1, a_[j].real(), a_[j].imag(),
                              beta_[j].real(), beta_[j].imag());
        out.write(buf, n);
    }
}

ProbeSolution psi_single_solution(const ProbeFrequency& probe, double gamma1) {
    if (!(gamma1 > 0.0)) throw ValidationError("probe: gamma1 must be positive");
    ProbeSolution s;
    s.kind_ = ProbeSolution::Kind::Single;
    s.probe_ = probe;
    s.gamma_ = {gamma1};
    s.zj_ = {probe.z / std::sqrt(gamma1)};
    s.a_ = {1.0};
    s.beta_ = {0.0};
    s.phi_ = {0.0};
    s.psi0_ = 1.0;
    s.dpsi0_ = s.zj_[0];
    return s;
}

ProbeSolution psi_layered(const LayerStack& known, const ProbeFrequency& probe) {
    const std::size_t m = known.layers();
    auto g = known.conductivities();
    if (m == 1) {
        ProbeSolution s = psi_single_solution(probe, g[0]);
        s.kind_ = ProbeSolution::Kind::Layered;
        return s;
    }
    auto b = known.interfaces();
    ProbeSolution s;
    s.kind_ = ProbeSolution::Kind::Layered;
    s.probe_ = probe;
    s.interfaces_.assign(b.begin(), b.end());
    s.gamma_.assign(g.begin(), g.end());
    s.zj_.resize(m);
    s.phi_.resize(m);
    for (std::size_t j = 0; j < m; ++j) s.zj_[j] = probe.z / std::sqrt(g[j]);
    s.phi_[0] = 0.0;
    for (std::size_t j = 0; j + 1 < m; ++j) s.phi_[j + 1] = s.phi_[j] + b[j] * (s.zj_[j] - s.zj_[j + 1]);

    // unknowns (0-based layers): beta_0 .. beta_{m-2} at 2j, a_1 .. a_{m-1} at 2j-1
    const auto n = static_cast<Eigen::Index>(2 * (m - 1));
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    auto ia = [](std::size_t j) { return static_cast<Eigen::Index>(2 * j - 1); };
    auto ib = [](std::size_t j) { return static_cast<Eigen::Index>(2 * j); };
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const auto r0 = static_cast<Eigen::Index>(2 * j), r1 = r0 + 1;
        const double ratio = std::sqrt(g[j + 1] / g[j]);
        // left side: a_j + beta_j  and  a_j - beta_j
        if (j == 0) {
            rhs(r0) -= 1.0;
            rhs(r1) -= 1.0;
        } else {
            M(r0, ia(j)) += 1.0;
            M(r1, ia(j)) += 1.0;
        }
        M(r0, ib(j)) += 1.0;
        M(r1, ib(j)) -= 1.0;
        // right side: a_{j+1} + E beta_{j+1}  and  ratio (a_{j+1} - E beta_{j+1})
        M(r0, ia(j + 1)) -= 1.0;
        M(r1, ia(j + 1)) -= ratio;
        if (j + 2 < m) {
            cplx E = std::exp(2.0 * s.zj_[j + 1] * (b[j + 1] - b[j]));
            M(r0, ib(j + 1)) -= E;
            M(r1, ib(j + 1)) += ratio * E;
        }
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    s.rcond_ = lu.rcond();
    if (!(s.rcond_ > 1e-13)) {
        std::ostringstream msg;
        msg << "layered probe: transmission system is singular at tau=" << probe.tau
            << " (reciprocal condition " << s.rcond_ << ")";
        throw NumericalError(msg.str());
    }
    Eigen::VectorXcd sol = lu.solve(rhs);
    s.a_.assign(m, 0.0);
    s.beta_.assign(m, 0.0);
    s.a_[0] = 1.0;
    for (std::size_t j = 0; j + 1 < m; ++j) s.beta_[j] = sol(ib(j));
    for (std::size_t j = 1; j < m; ++j) s.a_[j] = sol(ia(j));
    cplx refl0 = s.beta_[0] * std::exp(2.0 * b[0] * s.zj_[0]);
    s.psi0_ = 1.0 + refl0;
    s.dpsi0_ = s.zj_[0] * (1.0 - refl0);
    return s;
}

std::pair<std::vector<cplx>, std::vector<cplx>> layered_recurrence(const LayerStack& known,
                                                                   const ProbeFrequency& probe) {
    const std::size_t m = known.layers();
    auto g = known.conductivities();
    auto b = known.interfaces();
    std::vector<cplx> a(m), beta(m);
    a[m - 1] = 1.0;
    beta[m - 1] = 0.0;
    for (std::size_t j = m - 1; j-- > 0;) {
        cplx E = 0.0;
        if (j + 2 < m) E = std::exp(2.0 * probe.z / std::sqrt(g[j + 1]) * (b[j + 1] - b[j]));
        cplx S = a[j + 1] + E * beta[j + 1];
        cplx D = a[j + 1] - E * beta[j + 1];
        double r = std::sqrt(g[j + 1] / g[j]);
        a[j] = 0.5 * (S + r * D);
        beta[j] = 0.5 * (S - r * D);
    }
    cplx norm = a[0];
    for (std::size_t j = 0; j < m; ++j) {
        a[j] /= norm;
        beta[j] /= norm;
    }
    return {a, beta};
}

// ----------------------------------------------------------------------- WKB

ProbeSolution psi_wkb(const SmoothMedium& med, const ProbeFrequency& probe, double M, std::size_t samples) {
    namespace odeint = boost::numeric::odeint;
    if (!(M > 0.0) || M > med.domain_end() * (1.0 + 1e-14)) throw DomainError("wkb probe: need 0 < M <= domain end");
    if (!(probe.z.real() < 0.0)) throw DomainError("wkb probe: Re z must be negative");
    if (samples < 3) throw ValidationError("wkb probe: need at least three samples");

    using state = std::array<cplx, 2>;
    const cplx z = probe.z, z2 = probe.z2;
    auto rhs = [&med, z, z2](const state& s, state& ds, double x) {
        Jet gj = med.eval(x);
        double sg = std::sqrt(gj.v);
        ds[0] = s[1] / gj.v - z * s[0] / sg;
        ds[1] = z2 * s[0] - z * s[1] / sg;
    };

    ProbeSolution sol;
    sol.kind_ = ProbeSolution::Kind::Wkb;
    sol.probe_ = probe;
    sol.medium_ = med;
    sol.grid_.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) sol.grid_[i] = M * static_cast<double>(i) / static_cast<double>(samples - 1);
    sol.grid_.back() = M;
    sol.p_.resize(samples);
    sol.q_.resize(samples);

    const double gM = med.gamma(M);
    state s{std::pow(gM, -0.25), z * std::pow(gM, 0.25)};
    std::vector<double> times(sol.grid_.rbegin(), sol.grid_.rend());
    std::size_t idx = samples;
    auto observer = [&](const state& st, double) {
        --idx;
        sol.p_[idx] = st[0];
        sol.q_[idx] = st[1];
    };
    auto stepper = odeint::make_controlled(1e-12, 1e-10, odeint::runge_kutta_dopri5<state>());
    double dt = -std::min(M / static_cast<double>(samples - 1), 0.5 / std::abs(z));
    try {
        odeint::integrate_times(stepper, rhs, s, times.begin(), times.end(), dt, observer,
                                odeint::max_step_checker(100000));
    } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "wkb probe: integration failed at tau=" << probe.tau << " (|z|=" << std::abs(z) << "): " << e.what();
        throw NumericalError(msg.str());
    }
    if (idx != 0) throw NumericalError("wkb probe: integration did not reach x=0");
    for (std::size_t i = 0; i < samples; ++i) {
        if (!std::isfinite(sol.p_[i].real()) || !std::isfinite(sol.q_[i].real())) {
            throw NumericalError("wkb probe: non-finite scaled solution");
        }
    }
    sol.psi0_ = sol.p_[0];
    sol.dpsi0_ = sol.q_[0] / med.gamma(0.0);
    return sol;
}

// ------------------------------------------------------------ transfer matrix

Mat2 k_matrix(double gamma) {
    double s = std::sqrt(gamma);
    Mat2 k;
    k << 1.0, 1.0, s, -s;
    return k;
}

Mat2 k_matrix_inverse(double gamma) {
    double s = std::sqrt(gamma);
    Mat2 k;
    k << s, 1.0, s, -1.0;
    return k / (2.0 * s);
}

Mat2 l_matrix(const LayeredMedium& med, const ProbeFrequency& probe) {
    const std::size_t m = med.layers();
    if (m < 2) throw ValidationError("l_matrix: need at least two layers");
    auto b = med.breakpoints();
    auto g = med.conductivities();
    Mat2 L = Mat2::Identity();
    for (std::size_t j = 0; j + 1 < m; ++j) {
        Mat2 alpha = Mat2::Zero();
        alpha(0, 0) = 1.0;
        alpha(1, 1) = std::exp(2.0 * (b[j + 2] - b[j + 1]) * probe.z / std::sqrt(g[j + 1]));
        L = L * k_matrix_inverse(g[j]) * k_matrix(g[j + 1]) * alpha;
    }
    return L;
}

Mat2 l_matrix_limit(const LayeredMedium& med) {
    if (med.layers() < 2) throw ValidationError("l_matrix: need at least two layers");
    auto g = med.conductivities();
    Mat2 lim = Mat2::Zero();
    lim(0, 0) = 1.0;
    lim(1, 0) = trans_refl(g[0], g[1]).second;
    return lim / transmission_product(g);
}

} // namespace enclosure
