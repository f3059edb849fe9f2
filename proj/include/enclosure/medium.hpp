#pragma once

#include "enclosure/expr.hpp"

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace enclosure {

/// Piecewise-constant conductivity whose last layer extends to +infinity.
///
/// This is what an observer knows in the layered inverse problem: the
/// conductivities gamma_1..gamma_m and the interior interfaces
/// b_1 < ... < b_{m-1}, but not the end of the conductor.
class LayerStack {
public:
    LayerStack(std::vector<double> interfaces, std::vector<double> conductivities);

    std::size_t layers() const { return gamma_.size(); }
    std::span<const double> interfaces() const { return interfaces_; }
    std::span<const double> conductivities() const { return gamma_; }
    double conductivity(std::size_t layer) const { return gamma_.at(layer); }

    /// Layer index (0-based) containing x; interfaces belong to the left layer.
    std::size_t layer_of(double x) const;

    /// One-way slowness integral: integral of 1/sqrt(gamma) over [0, x].
    double slowness_integral(double x) const;

private:
    std::vector<double> interfaces_;
    std::vector<double> gamma_;
};

/// Layered conductor on [0, a]: breakpoints 0 = b_0 < b_1 < ... < b_m = a.
class LayeredMedium {
public:
    LayeredMedium(std::vector<double> breakpoints, std::vector<double> conductivities);

    std::size_t layers() const { return gamma_.size(); }
    double length() const { return breakpoints_.back(); }
    std::span<const double> breakpoints() const { return breakpoints_; }
    std::span<const double> conductivities() const { return gamma_; }
    double conductivity(std::size_t layer) const { return gamma_.at(layer); }

    /// The known part: same layers with the last one extended to infinity.
    LayerStack stack() const;

    nlohmann::json to_json() const;
    static LayeredMedium from_json(const nlohmann::json& j);

private:
    std::vector<double> breakpoints_;
    std::vector<double> gamma_;
};

/// Positive C^2 conductivity on [0, M], given in closed form or as samples.
class SmoothMedium {
public:
    using Profile = std::function<Jet(double)>;

    /// Closed-form profile returning gamma, gamma' and gamma''.
    SmoothMedium(double domain_end, Profile profile, std::string description);

    static SmoothMedium from_expression(double domain_end, const std::string& expr);

    /// Uniform samples on [0, M] (first sample at 0, last at M) of gamma and
    /// its first two derivatives; evaluated by cubic Hermite interpolation.
    static SmoothMedium from_samples(double domain_end, std::vector<double> values,
                                     std::vector<double> d1, std::vector<double> d2);

    static SmoothMedium constant(double domain_end, double gamma);

    double domain_end() const { return end_; }
    Jet eval(double x) const { return (*profile_)(x); }
    double gamma(double x) const { return eval(x).v; }
    const std::string& description() const { return description_; }

    /// Integral of 1/sqrt(gamma) over [0, x], adaptive Gauss-Kronrod.
    double slowness_integral(double x) const;

    nlohmann::json to_json() const;
    static SmoothMedium from_json(const nlohmann::json& j);

private:
    double end_;
    std::shared_ptr<const Profile> profile_;
    std::string description_;
    nlohmann::json source_;
};

/// Round-trip travel time through all layers: 2c * sum of thickness/sqrt(gamma).
double travel_time_layered(const LayeredMedium& med, double c);

/// Round-trip travel time up to breakpoint b_upto (1 <= upto <= m).
double travel_time_layered(const LayeredMedium& med, double c, std::size_t upto);

/// Round-trip travel time 2c * integral_0^x dt / sqrt(gamma(t)).
double travel_time_smooth(const SmoothMedium& med, double c, double x);

/// Liouville change of variables for (gamma y')' - z^2 y = 0 on [0, a]:
/// s = (1/K) integral_0^x dt/sqrt(gamma), amplitude f = gamma^{1/4}, and the
/// transformed equation  y~'' - (K^2 z^2 + g(s)) y~ = 0  on [0, pi] with Robin
/// data  y~'(0) - h y~(0) = 1,  y~'(pi) + H y~(pi) = 0.
///
/// The physical solution is recovered from y(x) = K gamma(0)^{3/4} y~(s) / f(s).
class LiouvilleFrame {
public:
    LiouvilleFrame(const SmoothMedium& med, double a, double rho);

    double K() const { return K_; }
    double h() const { return h_; }
    double H() const { return H_; }
    double endpoint() const { return a_; }
    double rho() const { return rho_; }

    double s_of_x(double x) const;
    double x_of_s(double s) const;
    double f(double s) const;
    /// Potential f''(s)/f(s), evaluated from gamma and its derivatives.
    double g(double s) const;
    /// Same potential at a physical position x.
    double g_at_x(double x) const;

    const SmoothMedium& medium() const { return med_; }

private:
    SmoothMedium med_;
    double a_;
    double rho_;
    double K_;
    double h_;
    double H_;
};

} // namespace enclosure
