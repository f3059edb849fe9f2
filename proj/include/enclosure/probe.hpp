#pragma once

#include "enclosure/logcomplex.hpp"
#include "enclosure/medium.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace enclosure {

enum class ProbeMode { Oscillatory, RealRay };

const char* to_string(ProbeMode m);
ProbeMode probe_mode_from_string(const std::string& s);

/// Complex frequency of the probe e^{-z^2 t} Psi(x, z).
struct ProbeFrequency {
    double c = 1.0;
    double tau = 0.0;
    ProbeMode mode = ProbeMode::Oscillatory;
    cplx z;
    /// z^2 with the real part set to tau exactly in oscillatory mode.
    cplx z2;
};

/// Oscillatory: z = -c tau (1 + i sqrt(1 - 1/(c^2 tau))), requires tau > 1/c^2.
/// Real ray: z = -tau, requires tau > 0. Throws DomainError otherwise.
ProbeFrequency make_probe(double c, double tau, ProbeMode mode = ProbeMode::Oscillatory);

/// Transmission and reflection coefficients (T_kl, R_kl).
std::pair<double, double> trans_refl(double gamma_k, double gamma_l);

/// e^{x z / sqrt(gamma1)}.
cplx psi_single(double x, const ProbeFrequency& probe, double gamma1);

/// Values of a probe and of its flux gamma Psi' at one point, in log scale.
struct ProbePoint {
    LogComplex psi;
    LogComplex flux; // gamma(x) Psi'(x)
};

/// Solution Psi of (gamma Psi')' - z^2 Psi = 0 decaying to the right.
///
/// Layered: in layer j, with phi(x) = x z_j + phi_j continuous,
///   Psi(x) = e^{phi(x)} (a_j + beta_j e^{2 (b_j - x) z_j}),
/// so a_j = A_j e^{-phi_j} and beta_j = B_j e^{-b_j z_j - phi(b_j)} stay O(1)
/// for every tau. a_1 = 1 and beta_m = 0.
///
/// WKB: Psi(x) = Phat(x) e^{z S(x)}, gamma Psi'(x) = Qhat(x) e^{z S(x)}, with
/// S(x) the slowness integral; Phat, Qhat sampled on a uniform grid of [0, M].
class ProbeSolution {
public:
    enum class Kind { Single, Layered, Wkb };

    Kind kind() const { return kind_; }
    const ProbeFrequency& frequency() const { return probe_; }

    /// Psi(0) and Psi'(0); always representable.
    cplx psi0() const { return psi0_; }
    cplx dpsi0() const { return dpsi0_; }

    /// Psi and gamma Psi' at x (x <= M for WKB).
    ProbePoint at(double x) const;
    /// phi(x): Psi(x) = Psihat(x) e^{phi(x)}.
    cplx phase(double x) const;
    /// Psi(x) e^{-phi(x)}.
    cplx scaled(double x) const;

    // layered data (empty unless kind() == Layered)
    const std::vector<cplx>& a() const { return a_; }
    const std::vector<cplx>& beta() const { return beta_; }
    const std::vector<cplx>& layer_phase() const { return phi_; }
    /// Original coefficients A_j, B_j in log scale.
    LogComplex A(std::size_t j) const;
    LogComplex B(std::size_t j) const;
    /// Reciprocal condition number of the transmission system.
    double rcond() const { return rcond_; }

    // wkb data
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<cplx>& p_hat() const { return p_; }
    const std::vector<cplx>& q_hat() const { return q_; }

    /// CSV `j,re_A,im_A,re_B,im_B` of the scaled coefficients (a_j, beta_j).
    void write_debug_csv(std::ostream& out) const;

private:
    friend ProbeSolution psi_single_solution(const ProbeFrequency&, double);
    friend ProbeSolution psi_layered(const LayerStack&, const ProbeFrequency&);
    friend ProbeSolution psi_wkb(const SmoothMedium&, const ProbeFrequency&, double, std::size_t);

    std::size_t layer_of(double x) const;

    Kind kind_ = Kind::Single;
    ProbeFrequency probe_;
    cplx psi0_;
    cplx dpsi0_;

    std::vector<double> interfaces_;
    std::vector<double> gamma_;
    std::vector<cplx> zj_;
    std::vector<cplx> a_;
    std::vector<cplx> beta_;
    std::vector<cplx> phi_;
    double rcond_ = 1.0;

    std::optional<SmoothMedium> medium_;
    std::vector<double> grid_;
    std::vector<cplx> p_;
    std::vector<cplx> q_;
};

ProbeSolution psi_single_solution(const ProbeFrequency& probe, double gamma1);

/// Layered probe for the known stack (last layer extended to infinity).
/// Solves the 2(m-1) interface equations as one complex linear system in the
/// scaled unknowns. Throws NumericalError when the system is numerically
/// singular (tau below the solvability threshold).
ProbeSolution psi_layered(const LayerStack& known, const ProbeFrequency& probe);

/// Scaled coefficients (a_j, beta_j) from the backward recurrence across the
/// interfaces, starting from beta_m = 0. Independent of psi_layered's solve.
std::pair<std::vector<cplx>, std::vector<cplx>> layered_recurrence(const LayerStack& known,
                                                                   const ProbeFrequency& probe);

/// WKB probe on [0, M]: integrates the scaled equation backward from M with
/// the leading-order data Phat(M) = gamma(M)^{-1/4}, Qhat(M) = z gamma(M)^{1/4}
/// (adaptive Dormand-Prince, relative tolerance 1e-10). Requires Re z < 0.
ProbeSolution psi_wkb(const SmoothMedium& med, const ProbeFrequency& probe, double M,
                      std::size_t samples = 401);

using Mat2 = Eigen::Matrix2cd;

/// K_j = [[1, 1], [sqrt(g), -sqrt(g)]] and its closed-form inverse.
Mat2 k_matrix(double gamma);
Mat2 k_matrix_inverse(double gamma);

/// L(z) = prod_{j=1}^{m-1} K_j^{-1} K_{j+1} alpha_{j+1}, with
/// alpha_j = diag(1, e^{2 (b_j - b_{j-1}) z_j}).
Mat2 l_matrix(const LayeredMedium& med, const ProbeFrequency& probe);

/// (1 / (T_12 ... T_{m-1,m})) [[1, 0], [R_12, 0]].
Mat2 l_matrix_limit(const LayeredMedium& med);

/// Product T_12 T_23 ... T_{m-1,m} (1 for a single layer).
double transmission_product(std::span<const double> gamma);

/// phi at x for the stack: x z_j + phi_j in the layer containing x.
cplx layered_phase(const LayerStack& known, const ProbeFrequency& probe, double x);

} // namespace enclosure
