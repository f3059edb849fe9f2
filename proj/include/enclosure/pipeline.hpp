#pragma once

#include "enclosure/extract.hpp"
#include "enclosure/forward.hpp"
#include "enclosure/indicator.hpp"
#include "enclosure/oracle.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace enclosure {

struct ProbeSpec {
    double c = 0.25;
    ProbeMode mode = ProbeMode::Oscillatory;
    double tau_min = 0.0; // 0: just above 1/c^2 (oscillatory) or 1 (real ray)
    double tau_max = 300.0;
    double oracle_tau_max = 1000.0;
    int per_decade = 24;

    std::vector<double> grid(double upper) const;
};

/// u_x(0, t) prescribed at the accessible end.
struct FluxSpec {
    std::string kind = "constant"; // constant | expr (variable x stands for t)
    double value = 1.0;
    std::string expr;

    FluxFunction function() const;
};

/// One experiment. JSON layout:
///   problem   "A" | "B" | "C"
///   medium    what is known: {"gamma1"} | {"interfaces", "conductivities"} | smooth medium JSON
///   truth     hidden geometry: {"breakpoints", "conductivities", "rho"} (A, B) | {"a", "rho"} (C)
///   M         a-priori bound of the hypotheses (A, B; C uses the domain end)
///   horizon, flux, probe, solver, fit, floor_safety, oracle, extract_rho, outputs
struct PipelineConfig {
    Problem problem = Problem::A;
    KnownMedium known = KnownA{1.0};
    std::optional<Conductor> truth;
    RightBC right = RightBC::neumann();
    double M = 0.0;
    double horizon = 1.2;
    FluxSpec flux;
    ProbeSpec probe;
    ForwardOptions solver;
    FitOptions fit;
    double floor_safety = 3.0;
    std::optional<OracleKind> oracle;
    bool extract_rho = false;
    std::string record_file = "record.csv";
    std::string reference_file = "record_ref.csv";
    std::string indicator_file = "indicator.csv";
    std::string report_file = "report.json";
    std::string slope_curve_file = "slope_curve.csv";
    nlohmann::json source;

    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path);

    /// Hash of the configuration document, stored with the indicator samples.
    std::string hash() const;
    /// Hypothesis guard on (M, c, T); throws ValidationError.
    void check_admissible() const;
    /// Guards that need the hidden geometry; throws ValidationError.
    void check_truth() const;
    /// Oracle used by --oracle when none is configured.
    OracleKind default_oracle() const;
};

struct SimulateOutput {
    ForwardResult result;
    std::vector<std::string> notes;
};

SimulateOutput run_simulate(const PipelineConfig& cfg);

struct IndicateOutput {
    IndicatorSamples samples;
    FluxAdmissibility admissibility;
};

IndicateOutput run_indicate(const PipelineConfig& cfg, const BoundaryRecord& rec, const BoundaryRecord* reference,
                            Execution exec = Execution::Parallel);
IndicateOutput run_indicate_oracle(const PipelineConfig& cfg, std::optional<OracleKind> kind = std::nullopt);

ReconstructionReport run_extract(const PipelineConfig& cfg, const IndicatorSamples& samples,
                                 const std::optional<FluxAdmissibility>& admissibility);

/// CSV `tau,slope_sample,fitted,asymptote`: ln|I|/tau, the fitted model over
/// tau and the fitted slope s.
void write_slope_curve(const IndicatorSamples& samples, const SlopeFit& fit, const std::string& path);

/// Human-readable summary table.
std::string summarize(const ReconstructionReport& r);

} // namespace enclosure
