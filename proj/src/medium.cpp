#include "enclosure/medium.hpp"

#include "enclosure/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace enclosure {

namespace {

void require_positive_finite(std::span<const double> gamma, const char* what) {
    for (double g : gamma) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw ValidationError(std::string(what) + ": conductivities must be positive and finite");
        }
    }
}

double integrate_slowness(const SmoothMedium::Profile& p, double x0, double x1) {
    if (x1 <= x0) return 0.0;
    auto f = [&p](double x) { return 1.0 / std::sqrt(p(x).v); };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, x0, x1, 15, 1e-12, &err);
}

} // namespace

// ---------------------------------------------------------------- LayerStack

LayerStack::LayerStack(std::vector<double> interfaces, std::vector<double> conductivities)
    : interfaces_(std::move(interfaces)), gamma_(std::move(conductivities)) {
    if (gamma_.empty()) throw ValidationError("layer stack: at least one layer required");
    if (interfaces_.size() + 1 != gamma_.size()) {
        throw ValidationError("layer stack: need exactly one interface fewer than layers");
    }
    require_positive_finite(gamma_, "layer stack");
    double prev = 0.0;
    for (double b : interfaces_) {
        if (!(b > prev) || !std::isfinite(b)) {
            throw ValidationError("layer stack: interfaces must be positive and strictly increasing");
        }
        prev = b;
    }
}

std::size_t LayerStack::layer_of(double x) const {
    auto it = std::lower_bound(interfaces_.begin(), interfaces_.end(), x);
    return static_cast<std::size_t>(it - interfaces_.begin());
}

double LayerStack::slowness_integral(double x) const {
    double acc = 0.0;
    double left = 0.0;
    for (std::size_t j = 0; j < gamma_.size(); ++j) {
        double right = j < interfaces_.size() ? interfaces_[j] : std::numeric_limits<double>::infinity();
        if (x <= right) return acc + (x - left) / std::sqrt(gamma_[j]);
        acc += (right - left) / std::sqrt(gamma_[j]);
        left = right;
    }
    return acc;
}

// ------------------------------------------------------------- LayeredMedium

LayeredMedium::LayeredMedium(std::vector<double> breakpoints, std::vector<double> conductivities)
    : breakpoints_(std::move(breakpoints)), gamma_(std::move(conductivities)) {
    if (gamma_.empty()) throw ValidationError("layered medium: at least one layer required");
    if (breakpoints_.size() != gamma_.size() + 1) {
        throw ValidationError("layered medium: need m+1 breakpoints for m layers");
    }
    if (breakpoints_.front() != 0.0) throw ValidationError("layered medium: first breakpoint must be 0");
    for (std::size_t j = 1; j < breakpoints_.size(); ++j) {
        if (!(breakpoints_[j] > breakpoints_[j - 1]) || !std::isfinite(breakpoints_[j])) {
            throw ValidationError("layered medium: breakpoints must be strictly increasing");
        }
    }
    require_positive_finite(gamma_, "layered medium");
}

LayerStack LayeredMedium::stack() const {
    std::vector<double> interior(breakpoints_.begin() + 1, breakpoints_.end() - 1);
    return LayerStack(std::move(interior), gamma_);
}

nlohmann::json LayeredMedium::to_json() const {
    return {{"breakpoints", breakpoints_}, {"conductivities", gamma_}};
}

LayeredMedium LayeredMedium::from_json(const nlohmann::json& j) {
    try {
        return LayeredMedium(j.at("breakpoints").get<std::vector<double>>(),
                             j.at("conductivities").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("layered medium JSON: ") + e.what());
    }
}

// -------------------------------------------------------------- SmoothMedium

SmoothMedium::SmoothMedium(double domain_end, Profile profile, std::string description)
    : end_(domain_end),
      profile_(std::make_shared<const Profile>(std::move(profile))),
      description_(std::move(description)) {
    if (!(end_ > 0.0) || !std::isfinite(end_)) throw ValidationError("smooth medium: M must be positive");
    constexpr int probes = 1000;
    for (int i = 0; i <= probes; ++i) {
        double x = end_ * i / probes;
        Jet j = (*profile_)(x);
        if (!(j.v > 0.0) || !std::isfinite(j.v) || !std::isfinite(j.d1) || !std::isfinite(j.d2)) {
            std::ostringstream msg;
            msg << "smooth medium: gamma must be positive with finite derivatives on [0, M] (x=" << x << ")";
            throw ValidationError(msg.str());
        }
    }
}

SmoothMedium SmoothMedium::from_expression(double domain_end, const std::string& expr) {
    auto e = Expression::parse(expr);
    SmoothMedium m(domain_end, [e](double x) { return e.eval(x); }, "expr:" + expr);
    m.source_ = {{"kind", "expr"}, {"expr", expr}};
    return m;
}

SmoothMedium SmoothMedium::constant(double domain_end, double gamma) {
    std::ostringstream d;
    d.precision(17);
    d << gamma;
    return from_expression(domain_end, d.str());
}

SmoothMedium SmoothMedium::from_samples(double domain_end, std::vector<double> values,
                                        std::vector<double> d1, std::vector<double> d2) {
    if (values.size() < 2) throw ValidationError("smooth medium samples: need at least two samples");
    if (d1.size() != values.size() || d2.size() != values.size()) {
        throw ValidationError("smooth medium samples: gamma' and gamma'' samples are required on the same grid");
    }
    auto table = std::make_shared<const std::array<std::vector<double>, 3>>(
        std::array<std::vector<double>, 3>{values, d1, d2});
    const double h = domain_end / static_cast<double>(values.size() - 1);
    const std::size_t n = values.size();
    auto profile = [table, h, n](double x) {
        const auto& [v, g1, g2] = *table;
        double u = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
        std::size_t i = std::min(static_cast<std::size_t>(u), n - 2);
        double t = u - static_cast<double>(i);
        // cubic Hermite basis
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        Jet j;
        j.v = h00 * v[i] + h * h10 * g1[i] + h01 * v[i + 1] + h * h11 * g1[i + 1];
        j.d1 = h00 * g1[i] + h * h10 * g2[i] + h01 * g1[i + 1] + h * h11 * g2[i + 1];
        j.d2 = (1 - t) * g2[i] + t * g2[i + 1];
        return j;
    };
    SmoothMedium m(domain_end, profile, "samples:" + std::to_string(n));
    m.source_ = {{"kind", "samples"}, {"values", values}, {"d1", d1}, {"d2", d2}};
    return m;
}

double SmoothMedium::slowness_integral(double x) const {
    if (x < 0.0 || x > end_ * (1.0 + 1e-14)) {
        throw DomainError("slowness integral: x outside [0, M]");
    }
    return integrate_slowness(*profile_, 0.0, std::min(x, end_));
}

nlohmann::json SmoothMedium::to_json() const {
    if (source_.is_null()) throw ValidationError("smooth medium: callback profiles cannot be serialized");
    return {{"M", end_}, {"gamma", source_}};
}

SmoothMedium SmoothMedium::from_json(const nlohmann::json& j) {
    try {
        double M = j.at("M").get<double>();
        const auto& g = j.at("gamma");
        std::string kind = g.at("kind").get<std::string>();
        if (kind == "expr") return from_expression(M, g.at("expr").get<std::string>());
        if (kind == "samples") {
            if (!g.contains("d1") || !g.contains("d2")) {
                throw ValidationError("smooth medium samples: gamma' and gamma'' samples are required");
            }
            return from_samples(M, g.at("values").get<std::vector<double>>(),
                                g.at("d1").get<std::vector<double>>(), g.at("d2").get<std::vector<double>>());
        }
        throw ValidationError("smooth medium JSON: unknown gamma kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("smooth medium JSON: ") + e.what());
    }
}

// --------------------------------------------------------------- travel time

double travel_time_layered(const LayeredMedium& med, double c) {
    return travel_time_layered(med, c, med.layers());
}

double travel_time_layered(const LayeredMedium& med, double c, std::size_t upto) {
    if (!(c > 0.0)) throw DomainError("travel time: c must be positive");
    if (upto < 1 || upto > med.layers()) throw DomainError("travel time: layer index out of range");
    auto b = med.breakpoints();
    auto g = med.conductivities();
    double sum = 0.0;
    for (std::size_t j = 0; j < upto; ++j) sum += (b[j + 1] - b[j]) / std::sqrt(g[j]);
    return 2.0 * c * sum;
}

double travel_time_smooth(const SmoothMedium& med, double c, double x) {
    if (!(c > 0.0)) throw DomainError("travel time: c must be positive");
    return 2.0 * c * med.slowness_integral(x);
}

// ------------------------------------------------------------ LiouvilleFrame

LiouvilleFrame::LiouvilleFrame(const SmoothMedium& med, double a, double rho)
    : med_(med), a_(a), rho_(rho) {
    if (!(a > 0.0) || a > med.domain_end()) throw DomainError("Liouville frame: need 0 < a <= M");
    if (!(rho >= 0.0)) throw DomainError("Liouville frame: rho must be nonnegative");
    K_ = med_.slowness_integral(a) / std::numbers::pi;
    Jet g0 = med_.eval(0.0);
    Jet ga = med_.eval(a);
    h_ = K_ * g0.d1 / (4.0 * std::sqrt(g0.v));
    H_ = K_ * (4.0 * rho - ga.d1) / (4.0 * std::sqrt(ga.v));
}

double LiouvilleFrame::s_of_x(double x) const {
    if (x < 0.0 || x > a_ * (1.0 + 1e-14)) throw DomainError("Liouville frame: x outside [0, a]");
    if (x >= a_) return std::numbers::pi;
    return med_.slowness_integral(x) / K_;
}

double LiouvilleFrame::x_of_s(double s) const {
    if (s < 0.0 || s > std::numbers::pi * (1.0 + 1e-14)) throw DomainError("Liouville frame: s outside [0, pi]");
    if (s <= 0.0) return 0.0;
    if (s >= std::numbers::pi) return a_;
    auto fn = [this, s](double x) {
        double val = s_of_x(x) - s;
        double der = 1.0 / (K_ * std::sqrt(med_.gamma(x)));
        return std::make_pair(val, der);
    };
    // initial guess from linear interpolation in s
    double guess = a_ * s / std::numbers::pi;
    std::uintmax_t iters = 100;
    return boost::math::tools::newton_raphson_iterate(fn, guess, 0.0, a_, 50, iters);
}

double LiouvilleFrame::f(double s) const { return std::pow(med_.gamma(x_of_s(s)), 0.25); }

double LiouvilleFrame::g_at_x(double x) const {
    Jet j = med_.eval(x);
    return K_ * K_ * (0.25 * j.d2 - j.d1 * j.d1 / (16.0 * j.v));
}

double LiouvilleFrame::g(double s) const { return g_at_x(x_of_s(s)); }

} // namespace enclosure
