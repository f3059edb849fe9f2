#include "enclosure/indicator.hpp"

#include "enclosure/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <exception>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace enclosure {

// ------------------------------------------------------------ special values

cplx lower_gamma(double a, cplx x) {
    if (!(a > 0.0)) throw DomainError("lower_gamma: a must be positive");
    if (x == cplx(0.0, 0.0)) return 0.0;
    if (x.real() < 0.0) throw DomainError("lower_gamma: Re x must be nonnegative");
    const double eps = 1e-16;
    if (std::abs(x) < std::max(6.0, a + 1.0)) {
        // x^a e^{-x} sum x^n / (a (a+1) ... (a+n))
        cplx term = 1.0 / a, sum = term;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < eps * std::abs(sum)) break;
        }
        return std::exp(a * std::log(x) - x) * sum;
    }
    // Gamma(a, x) by modified Lentz on the even Legendre fraction
    const double tiny = 1e-300;
    cplx b = x + 1.0 - a;
    cplx c = 1.0 / tiny;
    cplx d = 1.0 / b;
    cplx h = d;
    int i = 1;
    for (; i < 20000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        cplx del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    if (i >= 20000) throw NumericalError("lower_gamma: continued fraction did not converge");
    cplx upper = std::exp(a * std::log(x) - x) * h;
    return std::tgamma(a) - upper;
}

namespace {

// (1 - e^{-w}) / w and (1 - (1 + w) e^{-w}) / w^2
std::pair<cplx, cplx> filon_weights(cplx w) {
    if (std::abs(w) < 0.5) {
        cplx e1 = 0.0, e2 = 0.0, p = 1.0;
        for (int n = 0; n < 18; ++n) {
            e1 += p / static_cast<double>(n + 1);
            e2 += p / static_cast<double>(n + 2);
            p *= -w / static_cast<double>(n + 1);
        }
        return {e1, e2};
    }
    cplx em = std::exp(-w);
    return {(1.0 - em) / w, (1.0 - (1.0 + w) * em) / (w * w)};
}

} // namespace

cplx filon_laplace(std::span<const double> times, std::span<const double> values, cplx s) {
    const std::size_t n = times.size();
    if (n < 2 || values.size() != n) throw ValidationError("laplace transform: need matching samples");
    const double h = times[1] - times[0];
    auto [e1, e2] = filon_weights(s * h);
    const cplx wl = h * (e1 - e2), wr = h * e2;
    cplx sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double fl = values[k], fr = values[k + 1];
        if (fl == 0.0 && fr == 0.0) continue;
        sum += std::exp(-s * times[k]) * (fl * wl + fr * wr);
    }
    return sum;
}

cplx laplace_temperature(const BoundaryRecord& rec, cplx s, double gamma0) {
    const double alpha = -2.0 * rec.flux_left.front() / std::sqrt(std::numbers::pi * gamma0);
    if (alpha == 0.0) return filon_laplace(rec.times, rec.temp_left, s);
    std::vector<double> rem(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) rem[i] = rec.temp_left[i] - alpha * std::sqrt(rec.times[i]);
    // int_0^T e^{-s t} sqrt(t) dt = s^{-3/2} gamma(3/2, s T)
    cplx sing = std::pow(s, -1.5) * lower_gamma(1.5, s * rec.horizon);
    return filon_laplace(rec.times, rem, s) + alpha * sing;
}

cplx laplace_flux(const BoundaryRecord& rec, cplx s) { return filon_laplace(rec.times, rec.flux_left, s); }

cplx moment_transform(int m, double delta, const ProbeFrequency& probe) {
    if (m < 0) throw DomainError("moment_transform: m must be >= 0");
    if (!(delta > 0.0)) throw DomainError("moment_transform: delta must be positive");
    const double k = static_cast<double>(m + 1);
    // tau^{2k} s^{-k} gamma(k, s delta), evaluated as (tau^2 / s)^k
    cplx ratio = probe.tau * probe.tau / probe.z2;
    return std::pow(ratio, k) * lower_gamma(k, probe.z2 * delta);
}

// ----------------------------------------------------------------- pairings

cplx indicator_pairing(cplx w0, cplx flux_transform, cplx psi0, cplx dpsi0, double gamma0) {
    return -gamma0 * dpsi0 * w0 + psi0 * flux_transform;
}

cplx indicator_A(const BoundaryRecord& rec, const ProbeFrequency& probe, double gamma1) {
    cplx z1 = probe.z / std::sqrt(gamma1);
    return indicator_pairing(laplace_temperature(rec, probe.z2, gamma1), laplace_flux(rec, probe.z2), 1.0, z1,
                             gamma1);
}

cplx indicator_B(const BoundaryRecord& rec, const ProbeFrequency& probe, const LayerStack& known) {
    ProbeSolution p = psi_layered(known, probe);
    double g0 = known.conductivity(0);
    return indicator_pairing(laplace_temperature(rec, probe.z2, g0), laplace_flux(rec, probe.z2), p.psi0(),
                             p.dpsi0(), g0);
}

cplx indicator_C(const BoundaryRecord& rec, const ProbeFrequency& probe, const SmoothMedium& med, double M) {
    ProbeSolution p = psi_wkb(med, probe, M);
    double g0 = med.gamma(0.0);
    return indicator_pairing(laplace_temperature(rec, probe.z2, g0), laplace_flux(rec, probe.z2), p.psi0(),
                             p.dpsi0(), g0);
}

// ------------------------------------------------------------ known medium

const char* to_string(Problem p) {
    switch (p) {
    case Problem::A: return "A";
    case Problem::B: return "B";
    case Problem::C: return "C";
    }
    return "?";
}

Problem problem_from_string(const std::string& s) {
    if (s == "A") return Problem::A;
    if (s == "B") return Problem::B;
    if (s == "C") return Problem::C;
    throw ValidationError("unknown problem '" + s + "' (expected A, B or C)");
}

Problem problem_of(const KnownMedium& k) {
    if (std::holds_alternative<KnownA>(k)) return Problem::A;
    if (std::holds_alternative<KnownB>(k)) return Problem::B;
    return Problem::C;
}

double known_gamma0(const KnownMedium& k) {
    if (const auto* a = std::get_if<KnownA>(&k)) return a->gamma1;
    if (const auto* b = std::get_if<KnownB>(&k)) return b->stack.conductivity(0);
    return std::get<KnownC>(k).medium.gamma(0.0);
}

ProbeSolution make_probe_solution(const KnownMedium& known, const ProbeFrequency& probe) {
    if (const auto* a = std::get_if<KnownA>(&known)) return psi_single_solution(probe, a->gamma1);
    if (const auto* b = std::get_if<KnownB>(&known)) return psi_layered(b->stack, probe);
    const auto& c = std::get<KnownC>(known);
    return psi_wkb(c.medium, probe, c.M);
}

const char* to_string(SampleFlag f) {
    switch (f) {
    case SampleFlag::Ok: return "ok";
    case SampleFlag::Underflow: return "underflow";
    case SampleFlag::BelowFloor: return "below_floor";
    case SampleFlag::Unsolvable: return "unsolvable";
    case SampleFlag::Remainder: return "remainder";
    }
    return "?";
}

SampleFlag sample_flag_from_string(const std::string& s) {
    if (s == "ok") return SampleFlag::Ok;
    if (s == "underflow") return SampleFlag::Underflow;
    if (s == "below_floor") return SampleFlag::BelowFloor;
    if (s == "unsolvable") return SampleFlag::Unsolvable;
    if (s == "remainder") return SampleFlag::Remainder;
    throw ValidationError("unknown sample flag '" + s + "'");
}

// --------------------------------------------------------- IndicatorSamples

std::size_t IndicatorSamples::count(SampleFlag f) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [f](const IndicatorEntry& e) { return e.flag == f; }));
}

void IndicatorSamples::validate() const {
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (!(entries[i].tau > entries[i - 1].tau)) {
            throw ValidationError("indicator samples: tau must be strictly increasing");
        }
    }
}

void write_indicator_csv(const IndicatorSamples& s, std::ostream& out) {
    out << "# problem=" << to_string(s.problem) << "\n";
    out << "# mode=" << to_string(s.mode) << "\n";
    char buf[512];
    std::snprintf(buf, sizeof buf, "# c=%.17g\n", s.c);
    out << buf;
    out << "# source=" << s.source << "\n";
    out << "# medium_hash=" << s.medium_hash << "\n";
    out << "tau,re_I,im_I,log_abs,slope_sample,flag,arg_I,re_w0,im_w0,log_floor\n";
    for (const auto& e : s.entries) {
        cplx v = e.I.value();
        int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g,%.17g\n", e.tau,
                              v.real(), v.imag(), e.log_abs(), e.slope_sample(), to_string(e.flag), e.I.arg(),
                              e.w0.real(), e.w0.imag(), e.log_floor);
        out.write(buf, n);
    }
}

void write_indicator_csv(const IndicatorSamples& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    write_indicator_csv(s, f);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t lineno) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw ValidationError("indicator CSV: bad number '" + s + "' on line " + std::to_string(lineno));
    }
    return v;
}

} // namespace

IndicatorSamples read_indicator_csv(std::istream& in) {
    IndicatorSamples s;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2), val = line.substr(eq + 1);
            if (key == "problem") s.problem = problem_from_string(val);
            else if (key == "mode") s.mode = probe_mode_from_string(val);
            else if (key == "c") s.c = parse_double(val, lineno);
            else if (key == "source") s.source = val;
            else if (key == "medium_hash") s.medium_hash = val;
            continue;
        }
        if (!header) {
            if (line.rfind("tau,re_I,im_I,log_abs,slope_sample,flag", 0) != 0) {
                throw ValidationError("indicator CSV: unexpected header '" + line + "'");
            }
            header = true;
            continue;
        }
        auto f = split(line, ',');
        if (f.size() != 10) throw ValidationError("indicator CSV: expected 10 columns on line " + std::to_string(lineno));
        IndicatorEntry e;
        e.tau = parse_double(f[0], lineno);
        double log_abs = parse_double(f[3], lineno);
        e.flag = sample_flag_from_string(f[5]);
        double arg = parse_double(f[6], lineno);
        e.I = std::isinf(log_abs) && log_abs < 0 ? LogComplex() : LogComplex::from_log(cplx(log_abs, arg));
        e.w0 = cplx(parse_double(f[7], lineno), parse_double(f[8], lineno));
        e.log_floor = parse_double(f[9], lineno);
        s.entries.push_back(e);
    }
    if (!header) throw ValidationError("indicator CSV: missing header");
    s.validate();
    // z is a function of (c, tau, mode)
    for (auto& e : s.entries) {
        try {
            e.z = make_probe(s.c, e.tau, s.mode).z;
        } catch (const DomainError&) {
            throw ValidationError("indicator CSV: tau outside the admissible range of the probe");
        }
    }
    return s;
}

IndicatorSamples read_indicator_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "'");
    return read_indicator_csv(f);
}

std::vector<double> geometric_tau_grid(double tau_min, double tau_max, int per_decade) {
    if (!(tau_min > 0.0) || !(tau_max > tau_min) || per_decade < 1) {
        throw ValidationError("tau grid: need 0 < tau_min < tau_max and per_decade >= 1");
    }
    const double decades = std::log10(tau_max / tau_min);
    const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out[i] = tau_min * std::pow(tau_max / tau_min, static_cast<double>(i) / static_cast<double>(n));
    out.front() = tau_min;
    out.back() = tau_max;
    return out;
}

// -------------------------------------------------------------------- sweep

namespace {

struct RawEntry {
    IndicatorEntry e;
    double floor = 0.0;
};

RawEntry evaluate_one(const BoundaryRecord& rec, const BoundaryRecord* reference, const KnownMedium& known,
                      double tau, const IndicatorOptions& opts, double gamma0, const std::vector<double>& abs_u,
                      const std::vector<double>& abs_f, double max_u) {
    RawEntry r;
    r.e.tau = tau;
    ProbeFrequency probe = make_probe(opts.c, tau, opts.mode);
    r.e.z = probe.z;
    const cplx s = probe.z2;
    cplx wt = laplace_temperature(rec, s, gamma0);
    cplx wf = laplace_flux(rec, s);
    r.e.w0 = wf / gamma0;
    ProbeSolution psi;
    try {
        psi = make_probe_solution(known, probe);
    } catch (const NumericalError&) {
        r.e.flag = SampleFlag::Unsolvable;
        return r;
    }
    cplx I = indicator_pairing(wt, wf, psi.psi0(), psi.dpsi0(), gamma0);
    r.e.I = LogComplex::from_value(I);

    // rounding level of the cancellation, from a majorant of both terms
    const cplx sr(s.real(), 0.0);
    double majorant = std::abs(gamma0 * psi.dpsi0()) * std::abs(filon_laplace(rec.times, abs_u, sr)) +
                      std::abs(psi.psi0()) * std::abs(filon_laplace(rec.times, abs_f, sr));
    double floor = 64.0 * std::numeric_limits<double>::epsilon() * majorant;
    if (reference) {
        cplx Iref = indicator_pairing(laplace_temperature(*reference, s, gamma0), laplace_flux(*reference, s),
                                      psi.psi0(), psi.dpsi0(), gamma0);
        floor = std::max(floor, std::abs(I - Iref));
    }
    r.floor = opts.floor_safety * floor;
    r.e.log_floor = std::log(r.floor);
    if (std::abs(I) < 1e-290) {
        r.e.flag = SampleFlag::Underflow;
    } else {
        double log_rem = -s.real() * rec.horizon + std::log(std::abs(psi.psi0()) * max_u);
        if (log_rem > std::log(opts.remainder_tolerance * std::abs(I))) r.e.flag = SampleFlag::Remainder;
    }
    return r;
}

} // namespace

IndicatorSamples compute_indicator(const BoundaryRecord& rec, const BoundaryRecord* reference,
                                   const KnownMedium& known, const std::vector<double>& taus,
                                   const IndicatorOptions& opts) {
    rec.validate();
    if (reference) {
        reference->validate();
        if (std::abs(reference->horizon - rec.horizon) > 1e-12 * rec.horizon) {
            throw ValidationError("indicator: reference record has a different horizon");
        }
    }
    for (std::size_t i = 1; i < taus.size(); ++i) {
        if (!(taus[i] > taus[i - 1])) throw ValidationError("indicator: tau grid must be strictly increasing");
    }
    const double gamma0 = known_gamma0(known);
    std::vector<double> abs_u(rec.size()), abs_f(rec.size());
    double max_u = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        abs_u[i] = std::abs(rec.temp_left[i]);
        abs_f[i] = std::abs(rec.flux_left[i]);
        max_u = std::max(max_u, abs_u[i]);
    }

    std::vector<RawEntry> raw(taus.size());
    const auto n = static_cast<long>(taus.size());
    if (opts.execution == Execution::Parallel) {
        // exceptions must not escape the parallel region
        std::vector<std::exception_ptr> errors(taus.size());
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < n; ++i) {
            try {
                raw[static_cast<std::size_t>(i)] =
                    evaluate_one(rec, reference, known, taus[static_cast<std::size_t>(i)], opts, gamma0, abs_u, abs_f, max_u);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        // rethrow the first failure in tau order so both paths report the same error
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (std::size_t i = 0; i < taus.size(); ++i) {
            raw[i] = evaluate_one(rec, reference, known, taus[i], opts, gamma0, abs_u, abs_f, max_u);
        }
    }

    IndicatorSamples out;
    out.problem = problem_of(known);
    out.mode = opts.mode;
    out.c = opts.c;
    out.source = "pde";
    bool capped = false;
    for (auto& r : raw) {
        if (r.e.flag == SampleFlag::Ok && !(std::abs(r.e.I.value()) > r.floor)) capped = true;
        if (capped && r.e.flag == SampleFlag::Ok) r.e.flag = SampleFlag::BelowFloor;
        out.entries.push_back(r.e);
    }
    return out;
}

// ------------------------------------------------------------ admissibility

FluxAdmissibility flux_admissibility(const std::vector<double>& taus, const std::vector<cplx>& w0) {
    FluxAdmissibility fa;
    if (taus.size() != w0.size()) throw ValidationError("flux admissibility: size mismatch");
    std::vector<double> lt, lw;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        double a = std::abs(w0[i]);
        if (a > 1e-290 && std::isfinite(a)) {
            lt.push_back(std::log(taus[i]));
            lw.push_back(std::log(a));
        }
    }
    if (lt.size() < 8) {
        fa.message = "fewer than 8 nonzero transform values";
        return fa;
    }
    if (std::exp(lt.back()) < 10.0 * std::exp(lt.front()) * (1.0 - 1e-12)) {
        fa.window_min = std::exp(lt.front());
        fa.window_max = std::exp(lt.back());
        fa.message = "tau window spans less than a decade";
        return fa;
    }

    // The lower bound only has to hold beyond some tau0: take the first tail
    // window (>= 8 samples, >= one decade) on which the power law fits.
    auto fit_tail = [&](std::size_t first) {
        FluxAdmissibility f;
        const auto n = static_cast<Eigen::Index>(lt.size() - first);
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, 0) = lt[first + static_cast<std::size_t>(i)];
            X(i, 1) = 1.0;
            y(i) = lw[first + static_cast<std::size_t>(i)];
        }
        Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
        Eigen::VectorXd res = y - X * beta;
        f.mu_hat = beta(0);
        f.C_hat = std::exp(beta(1) + res.minCoeff());
        f.tau0 = std::exp(lt[first]);
        f.window_min = f.tau0;
        f.window_max = std::exp(lt.back());
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(std::expm1(res(i))));
        f.max_relative_residual = worst;
        f.pass = worst <= 0.2;
        return f;
    };
    fa = fit_tail(0);
    for (std::size_t first = 1; !fa.pass && first + 8 <= lt.size(); ++first) {
        if (std::exp(lt.back()) < 10.0 * std::exp(lt[first]) * (1.0 - 1e-12)) break;
        FluxAdmissibility f = fit_tail(first);
        if (f.pass) fa = f;
    }
    fa.message = fa.pass ? "power-law lower bound holds for tau >= tau0"
                         : "transform does not follow a power law within 20% on any tail window of a decade";
    return fa;
}

FluxAdmissibility flux_admissibility(const BoundaryRecord& rec, double gamma0, double c, ProbeMode mode,
                                     const std::vector<double>& taus) {
    if (taus.size() < 8) throw ValidationError("flux admissibility: need at least 8 tau samples");
    std::vector<cplx> w0(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        w0[i] = laplace_flux(rec, make_probe(c, taus[i], mode).z2) / gamma0;
    }
    return flux_admissibility(taus, w0);
}

std::string stable_hash(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace enclosure
