#pragma once

#include "enclosure/medium.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace enclosure {

/// Boundary measurements on a uniform time grid t_0 = 0, ..., t_N = T.
struct BoundaryRecord {
    double horizon = 0.0;
    std::vector<double> times;
    std::vector<double> temp_left;                 // u(0, t)
    std::vector<double> flux_left;                 // gamma(0) u_x(0, t)
    std::optional<std::vector<double>> flux_right; // gamma(a) u_x(a, t)

    std::size_t size() const { return times.size(); }
    double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

    /// Throws ValidationError unless the grid is uniform on [0, T], the traces
    /// have matching lengths and u(0, 0) = 0.
    void validate() const;

    bool operator==(const BoundaryRecord&) const = default;
};

/// Writes `t,u0,flux0[,fluxa]` with 17 significant digits.
void write_record_csv(const BoundaryRecord& rec, std::ostream& out);
void write_record_csv(const BoundaryRecord& rec, const std::string& path);
BoundaryRecord read_record_csv(std::istream& in);
BoundaryRecord read_record_csv(const std::string& path);

/// Right-end boundary condition: gamma(a) u_x(a,t) + rho u(a,t) = 0.
struct RightBC {
    double rho = 0.0;

    static RightBC neumann() { return {0.0}; }
    static RightBC robin(double rho);
    bool is_neumann() const { return rho == 0.0; }
};

/// A smooth medium cut at the (hidden) end a <= M.
struct SmoothSegment {
    SmoothMedium medium;
    double end;
};

using Conductor = std::variant<LayeredMedium, SmoothSegment>;

double conductor_length(const Conductor& c);
double conductivity_at_origin(const Conductor& c);

struct ForwardOptions {
    std::size_t nx = 2000;     // space cells at the output level
    std::size_t nt = 20000;    // time steps at the output level
    bool richardson = true;    // combine with a run at (2 nx, halved substeps)
    bool graded_start = true;  // substep the first few intervals
    bool reference = true;     // also produce the half-resolution reference record
};

struct ForwardResult {
    BoundaryRecord record;
    /// Independent Richardson run at (nx/2, nt/2). Its distance to `record`
    /// bounds the data error of `record` from above.
    std::optional<BoundaryRecord> reference;
    std::vector<double> nodes;
    std::vector<double> final_field; // u(x, T) on `nodes`
    double error_estimate = 0.0;     // sup |record - reference| of u(0, t)
    std::vector<std::string> warnings;
};

/// Neumann input: u_x(0, t) = left_flux(t).
using FluxFunction = std::function<double(double)>;

/// Solves u_t = (gamma u_x)_x on ]0, a[ x ]0, T[ with u(x, 0) = 0.
///
/// Vertex-centred finite volumes (nodes on every breakpoint, harmonic face
/// conductivities) and Crank-Nicolson in time. When `graded_start` is set the
/// first output intervals are covered by geometrically refined substeps so
/// that the start-up singularity of an incompatible flux (u_x(0,0) != 0) does
/// not pollute the second-order error expansion.
ForwardResult solve_forward(const Conductor& conductor, const FluxFunction& left_flux, RightBC right,
                            double horizon, const ForwardOptions& opts = {});

/// Node positions used for a conductor at a given resolution.
std::vector<double> forward_grid(const Conductor& conductor, std::size_t nx);

/// Pairs (gamma_j u_x(b_j-), gamma_{j+1} u_x(b_j+)) at interior breakpoints,
/// from three-point one-sided differences of a field on `forward_grid` nodes.
std::vector<std::pair<double, double>> interface_fluxes(const LayeredMedium& med,
                                                        const std::vector<double>& nodes,
                                                        const std::vector<double>& field);

/// u(0, t) for u_t = gamma u_xx on ]0, a[, u_x(0,t) = 1, u_x(a,t) = 0, u(x,0) = 0,
/// by eigenfunction expansion:
///   u(0,t) = -gamma t / a - a/3 + sum_n 2a/(n pi)^2 exp(-gamma (n pi / a)^2 t).
/// Throws DomainError when the truncation tail bound exceeds 1e-12.
double exact_series_temperature(double a, double gamma, double t, std::size_t n_terms);

/// Boundary record of the constant-coefficient problem above on `samples`
/// uniform steps of [0, T].
BoundaryRecord exact_series_constant(double a, double gamma, double horizon, std::size_t n_terms,
                                     std::size_t samples);

} // namespace enclosure
