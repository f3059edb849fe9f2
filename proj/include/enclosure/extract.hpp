#pragma once

#include "enclosure/indicator.hpp"
#include "enclosure/medium.hpp"
#include "enclosure/probe.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace enclosure {

struct FitOptions {
    /// Fit ln|I / w'(0)| instead of ln|I|. The flux transform carries its own
    /// algebraic tau dependence, which is known from the data.
    bool normalize_w0 = true;
    /// Include the p ln(tau) term. After normalization by w'(0) the prefactor
    /// of the principal part is bounded above and below, so the default fit
    /// is s tau + q.
    bool free_power = false;
    double tau_min = 0.0;
    double tau_max = std::numeric_limits<double>::infinity();
    std::size_t min_samples = 8;
    std::size_t bootstrap = 400;
    std::uint64_t seed = 20240917;
};

struct SlopeFit {
    double s = 0.0;
    double p = 0.0;
    double q = 0.0;
    double half_width = 0.0; // 95% bootstrap half-width of s
    double residual = 0.0;   // RMS
    double window_min = 0.0;
    double window_max = 0.0;
    std::size_t used = 0;
    bool normalized = true;
    bool free_power = false;
};

/// Least squares ln|I| = s tau + p ln tau + q over the unflagged samples in
/// [tau_min, tau_max]. Throws ExtractionError (with the flag census) when
/// fewer than min_samples samples qualify.
SlopeFit fit_log_slope(const IndicatorSamples& samples, const FitOptions& opts = {});

/// ln|I(tau_N)| / tau_N at the largest unflagged sample.
double ratio_slope_estimate(const IndicatorSamples& samples, const FitOptions& opts = {});

/// b = -s sqrt(gamma1) / (2c).
double recover_interface(double s_star, double c, double gamma1);

/// Hidden end a of a layered conductor whose first m-1 layers are known.
double recover_boundary_layered(double s_star, double c, const LayerStack& known);

/// Solves 2c int_0^a dx/sqrt(gamma) = -s by bisection on [0, M] (c = 1 for
/// the real ray).
double recover_boundary_smooth(double s_star, double c, ProbeMode mode, const SmoothMedium& med, double M);

struct RhoEstimate {
    double rho = 0.0;
    double spread = 0.0;                 // max - min of the last three extrapolants
    std::vector<double> taus;            // samples used
    std::vector<double> sequence;        // Re of the bracketed expression per tau
    std::vector<double> extrapolants;    // three-point extrapolants to 1/tau = 0
};

/// Robin coefficient from the 1/z term of the indicator:
///   (I e^{-2 phi(a)} / (2 sqrt(g_1 g_m) w'(0) T^2) + 1) z sqrt(g_m) -> -2 rho,
/// extrapolated to 1/tau = 0 through three points at a time. Uses the
/// `use_last` largest unflagged taus (at least 5). Throws ExtractionError if
/// the last three extrapolants spread by more than 10% of max(|rho|, 0.5 sqrt(g_m)).
RhoEstimate recover_rho(const IndicatorSamples& samples, const LayeredMedium& med, std::size_t use_last = 8);

enum class RecoveredKind { Interface, Boundary };

struct ReconstructionReport {
    Problem problem = Problem::A;
    ProbeMode mode = ProbeMode::Oscillatory;
    double c = 1.0;
    SlopeFit fit;
    double travel_time = 0.0;
    RecoveredKind kind = RecoveredKind::Interface;
    double recovered = 0.0;
    std::optional<RhoEstimate> rho;
    std::optional<FluxAdmissibility> admissibility;
    std::size_t flagged_underflow = 0;
    std::size_t flagged_below_floor = 0;
    std::size_t flagged_unsolvable = 0;
    std::size_t flagged_remainder = 0;
    std::string source;
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
};

const char* to_string(RecoveredKind k);

/// Fit plus the geometric inversion appropriate to the known medium.
ReconstructionReport reconstruct(const IndicatorSamples& samples, const KnownMedium& known,
                                 const FitOptions& opts = {});

} // namespace enclosure
