#pragma once

#include "enclosure/forward.hpp"
#include "enclosure/logcomplex.hpp"
#include "enclosure/medium.hpp"
#include "enclosure/probe.hpp"

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace enclosure {

/// Lower incomplete gamma function gamma(a, x) = int_0^x t^{a-1} e^{-t} dt for
/// a > 0 and Re x >= 0 (power series near the origin, Legendre continued
/// fraction for the complement elsewhere).
cplx lower_gamma(double a, cplx x);

/// int_0^T e^{-s t} f(t) dt for samples f on the uniform grid of `times`,
/// integrating the kernel exactly against the piecewise-linear interpolant.
cplx filon_laplace(std::span<const double> times, std::span<const double> values, cplx s);

/// w(0) = int_0^T e^{-s t} u(0,t) dt. The start-up term u(0,t) ~ alpha sqrt(t)
/// (alpha fixed by the flux at t = 0) is transformed in closed form and only
/// the smoother remainder goes through the product rule.
cplx laplace_temperature(const BoundaryRecord& rec, cplx s, double gamma0);

/// int_0^T e^{-s t} gamma(0) u_x(0,t) dt, i.e. gamma(0) w'(0).
cplx laplace_flux(const BoundaryRecord& rec, cplx s);

/// tau^{2(m+1)} int_0^delta e^{-z^2 t} t^m dt.
cplx moment_transform(int m, double delta, const ProbeFrequency& probe);

/// Pairing of the data with v = e^{-z^2 t} Psi(x):
///   I = -gamma0 Psi'(0) w(0) + Psi(0) gamma0 w'(0).
cplx indicator_pairing(cplx w0, cplx flux_transform, cplx psi0, cplx dpsi0, double gamma0);

cplx indicator_A(const BoundaryRecord& rec, const ProbeFrequency& probe, double gamma1);
cplx indicator_B(const BoundaryRecord& rec, const ProbeFrequency& probe, const LayerStack& known);
cplx indicator_C(const BoundaryRecord& rec, const ProbeFrequency& probe, const SmoothMedium& med, double M);

enum class Problem { A, B, C };
const char* to_string(Problem p);
Problem problem_from_string(const std::string& s);

/// What the observer knows about the conductor.
struct KnownA {
    double gamma1;
};
struct KnownB {
    LayerStack stack;
};
struct KnownC {
    SmoothMedium medium;
    double M;
};
using KnownMedium = std::variant<KnownA, KnownB, KnownC>;

Problem problem_of(const KnownMedium& k);
double known_gamma0(const KnownMedium& k);

/// Probe solution for the known medium at one frequency.
ProbeSolution make_probe_solution(const KnownMedium& known, const ProbeFrequency& probe);

enum class SampleFlag { Ok, Underflow, BelowFloor, Unsolvable, Remainder };
const char* to_string(SampleFlag f);
SampleFlag sample_flag_from_string(const std::string& s);

struct IndicatorEntry {
    double tau = 0.0;
    cplx z;
    LogComplex I;
    cplx w0;                 // w'(0) = int e^{-z^2 t} u_x(0,t) dt
    double log_floor = -std::numeric_limits<double>::infinity(); // ln of the noise floor
    SampleFlag flag = SampleFlag::Ok;

    double log_abs() const { return I.log_abs(); }
    double slope_sample() const { return I.log_abs() / tau; }
};

struct IndicatorSamples {
    Problem problem = Problem::A;
    ProbeMode mode = ProbeMode::Oscillatory;
    double c = 1.0;
    std::string source = "pde"; // pde | two-layer-principal | layered-asymptotic | smooth-asymptotic | ...
    std::string medium_hash;
    std::vector<IndicatorEntry> entries;

    std::size_t count(SampleFlag f) const;
    /// Throws ValidationError unless tau is strictly increasing.
    void validate() const;
};

/// CSV `tau,re_I,im_I,log_abs,slope_sample,flag,arg_I,re_w0,im_w0,log_floor`
/// preceded by `# key=value` metadata lines. log_abs and arg_I carry the
/// value when re_I, im_I are outside double range.
void write_indicator_csv(const IndicatorSamples& s, std::ostream& out);
void write_indicator_csv(const IndicatorSamples& s, const std::string& path);
IndicatorSamples read_indicator_csv(std::istream& in);
IndicatorSamples read_indicator_csv(const std::string& path);

/// Geometric grid with `per_decade` points per decade from tau_min to tau_max
/// (both included).
std::vector<double> geometric_tau_grid(double tau_min, double tau_max, int per_decade = 24);

enum class Execution { Serial, Parallel };

struct IndicatorOptions {
    ProbeMode mode = ProbeMode::Oscillatory;
    double c = 1.0;
    /// Samples are trusted only while |I| exceeds `floor_safety` times the
    /// estimated data error of I.
    double floor_safety = 3.0;
    /// Samples whose finite-horizon remainder estimate
    /// e^{-Re(z^2) T} |Psi(0)| max|u(0,t)| exceeds this fraction of |I| are
    /// flagged Remainder: there I is not yet dominated by its principal part.
    double remainder_tolerance = 1e-3;
    Execution execution = Execution::Parallel;
};

/// Indicator over a tau grid. `reference` is an independent (coarser) record
/// of the same experiment; |I(rec) - I(reference)| estimates the data error.
/// Entries from the first tau whose |I| falls below the floor onwards are
/// flagged BelowFloor; |I| < 1e-290 is flagged Underflow; tau values where
/// the probe cannot be built are flagged Unsolvable; see also Remainder.
IndicatorSamples compute_indicator(const BoundaryRecord& rec, const BoundaryRecord* reference,
                                   const KnownMedium& known, const std::vector<double>& taus,
                                   const IndicatorOptions& opts);

struct FluxAdmissibility {
    double mu_hat = 0.0;
    double C_hat = 0.0;
    double tau0 = 0.0;
    bool pass = false;
    double window_min = 0.0;
    double window_max = 0.0;
    double max_relative_residual = 0.0;
    std::string message;
};

/// Fits ln|w'(0, tau)| = mu ln tau + ln C over the given grid and checks the
/// lower bound C tau^mu <= |w'(0)| for tau >= tau0, tau0 being the first grid point
/// from which a tail window of >= 8 samples and >= one decade fits within 20%.
FluxAdmissibility flux_admissibility(const BoundaryRecord& rec, double gamma0, double c, ProbeMode mode,
                                     const std::vector<double>& taus);

/// Same fit from precomputed w'(0) values.
FluxAdmissibility flux_admissibility(const std::vector<double>& taus, const std::vector<cplx>& w0);

/// FNV-1a hash of a string, as 16 hex digits.
std::string stable_hash(const std::string& text);

} // namespace enclosure
