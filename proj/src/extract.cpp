#include "enclosure/extract.hpp"

#include "enclosure/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace enclosure {

namespace {

struct FitData {
    std::vector<double> tau;
    std::vector<double> y;
};

FitData select(const IndicatorSamples& samples, const FitOptions& opts) {
    FitData d;
    for (const auto& e : samples.entries) {
        if (e.flag != SampleFlag::Ok || e.tau < opts.tau_min || e.tau > opts.tau_max) continue;
        double y = e.I.log_abs();
        if (opts.normalize_w0) {
            if (std::abs(e.w0) == 0.0) continue;
            y -= std::log(std::abs(e.w0));
        }
        if (!std::isfinite(y)) continue;
        d.tau.push_back(e.tau);
        d.y.push_back(y);
    }
    return d;
}

Eigen::MatrixXd design(const std::vector<double>& tau, bool free_power) {
    const Eigen::Index n = static_cast<Eigen::Index>(tau.size());
    Eigen::MatrixXd A(n, free_power ? 3 : 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = tau[static_cast<std::size_t>(i)];
        if (free_power) {
            A(i, 1) = std::log(tau[static_cast<std::size_t>(i)]);
            A(i, 2) = 1.0;
        } else {
            A(i, 1) = 1.0;
        }
    }
    return A;
}

std::string census(const IndicatorSamples& s) {
    std::ostringstream o;
    o << s.entries.size() << " samples: " << s.count(SampleFlag::Ok) << " ok, " << s.count(SampleFlag::Underflow)
      << " underflow, " << s.count(SampleFlag::BelowFloor) << " below_floor, " << s.count(SampleFlag::Unsolvable)
      << " unsolvable, " << s.count(SampleFlag::Remainder) << " remainder";
    return o.str();
}

} // namespace

SlopeFit fit_log_slope(const IndicatorSamples& samples, const FitOptions& opts) {
    FitData d = select(samples, opts);
    const std::size_t need = std::max<std::size_t>(opts.min_samples, opts.free_power ? 4 : 3);
    if (d.tau.size() < need) {
        std::ostringstream msg;
        msg << "slope fit: " << d.tau.size() << " usable samples in [" << opts.tau_min << ", " << opts.tau_max
            << "], need " << need << " (" << census(samples) << ")";
        throw ExtractionError(msg.str());
    }

    const Eigen::MatrixXd A = design(d.tau, opts.free_power);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), static_cast<Eigen::Index>(d.y.size()));
    const auto qr = A.colPivHouseholderQr();
    const Eigen::VectorXd coef = qr.solve(y);
    const Eigen::VectorXd fitted = A * coef;
    const Eigen::VectorXd res = y - fitted;

    SlopeFit fit;
    fit.s = coef(0);
    if (opts.free_power) {
        fit.p = coef(1);
        fit.q = coef(2);
    } else {
        fit.q = coef(1);
    }
    fit.residual = std::sqrt(res.squaredNorm() / static_cast<double>(res.size()));
    fit.window_min = d.tau.front();
    fit.window_max = d.tau.back();
    fit.used = d.tau.size();
    fit.normalized = opts.normalize_w0;
    fit.free_power = opts.free_power;

    // residual bootstrap
    if (opts.bootstrap > 1) {
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<Eigen::Index> pick(0, res.size() - 1);
        std::vector<double> slopes;
        slopes.reserve(opts.bootstrap);
        Eigen::VectorXd yb(res.size());
        for (std::size_t b = 0; b < opts.bootstrap; ++b) {
            for (Eigen::Index i = 0; i < res.size(); ++i) yb(i) = fitted(i) + res(pick(rng));
            slopes.push_back(qr.solve(yb)(0));
        }
        std::sort(slopes.begin(), slopes.end());
        auto quant = [&](double p) {
            double pos = p * static_cast<double>(slopes.size() - 1);
            auto lo = static_cast<std::size_t>(std::floor(pos));
            auto hi = std::min(lo + 1, slopes.size() - 1);
            return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
        };
        fit.half_width = 0.5 * (quant(0.975) - quant(0.025));
    }
    return fit;
}

double ratio_slope_estimate(const IndicatorSamples& samples, const FitOptions& opts) {
    FitData d = select(samples, opts);
    if (d.tau.empty()) throw ExtractionError("ratio estimate: no usable samples (" + census(samples) + ")");
    return d.y.back() / d.tau.back();
}

double recover_interface(double s_star, double c, double gamma1) {
    if (!(c > 0.0) || !(gamma1 > 0.0)) throw ValidationError("recover_interface: need c > 0 and gamma1 > 0");
    if (!(s_star < 0.0)) throw ExtractionError("recover_interface: slope must be negative");
    return -s_star * std::sqrt(gamma1) / (2.0 * c);
}

double recover_boundary_layered(double s_star, double c, const LayerStack& known) {
    if (!(c > 0.0)) throw ValidationError("recover_boundary_layered: need c > 0");
    if (!(s_star < 0.0)) throw ExtractionError("recover_boundary_layered: slope must be negative");
    auto b = known.interfaces();
    auto g = known.conductivities();
    const double last = b.empty() ? 0.0 : b.back();
    const double remaining = -s_star / (2.0 * c) - known.slowness_integral(last);
    if (!(remaining > 0.0)) {
        std::ostringstream msg;
        msg << "recover_boundary_layered: travel time " << -s_star << " does not exceed that of the known layers ("
            << 2.0 * c * known.slowness_integral(last) << ")";
        throw ExtractionError(msg.str());
    }
    return last + std::sqrt(g.back()) * remaining;
}

double recover_boundary_smooth(double s_star, double c, ProbeMode mode, const SmoothMedium& med, double M) {
    if (mode == ProbeMode::RealRay) c = 1.0;
    if (!(c > 0.0)) throw ValidationError("recover_boundary_smooth: need c > 0");
    if (!(M > 0.0) || M > med.domain_end()) throw ValidationError("recover_boundary_smooth: need 0 < M <= domain end");
    if (!(s_star < 0.0)) throw ExtractionError("recover_boundary_smooth: slope must be negative");
    const double target = -s_star / (2.0 * c);
    const double full = med.slowness_integral(M);
    if (target > full) {
        std::ostringstream msg;
        msg << "recover_boundary_smooth: travel time " << -s_star << " exceeds the travel time to M ("
            << 2.0 * c * full << ")";
        throw ExtractionError(msg.str());
    }
    auto fn = [&](double x) { return med.slowness_integral(x) - target; };
    auto tol = [](double lo, double hi) { return hi - lo < 1e-10; };
    std::uintmax_t iters = 200;
    auto [lo, hi] = boost::math::tools::bisect(fn, 0.0, M, tol, iters);
    return 0.5 * (lo + hi);
}

RhoEstimate recover_rho(const IndicatorSamples& samples, const LayeredMedium& med, std::size_t use_last) {
    use_last = std::max<std::size_t>(use_last, 5);
    auto g = med.conductivities();
    const double g1 = g.front(), gm = g.back();
    const double T = transmission_product(g);
    const LayerStack stack = med.stack();

    std::vector<const IndicatorEntry*> ok;
    for (const auto& e : samples.entries) {
        if (e.flag == SampleFlag::Ok && std::abs(e.w0) > 0.0) ok.push_back(&e);
    }
    if (ok.size() < 5) {
        throw ExtractionError("recover_rho: need at least five unflagged samples (" + census(samples) + ")");
    }
    if (ok.size() > use_last) ok.erase(ok.begin(), ok.end() - static_cast<std::ptrdiff_t>(use_last));

    RhoEstimate est;
    for (const IndicatorEntry* e : ok) {
        ProbeFrequency probe = make_probe(samples.c, e->tau, samples.mode);
        cplx phi = layered_phase(stack, probe, med.length());
        LogComplex lead = LogComplex::exp(2.0 * phi) * (2.0 * std::sqrt(g1 * gm) * T * T * e->w0);
        cplx ratio = (e->I / lead).value();
        cplx x = (ratio + 1.0) * probe.z * std::sqrt(gm);
        est.taus.push_back(e->tau);
        est.sequence.push_back(x.real());
    }
    // quadratic through three points in h = 1/tau, evaluated at h = 0
    for (std::size_t i = 0; i + 2 < est.taus.size(); ++i) {
        double h[3], v[3];
        for (int k = 0; k < 3; ++k) {
            h[k] = 1.0 / est.taus[i + static_cast<std::size_t>(k)];
            v[k] = est.sequence[i + static_cast<std::size_t>(k)];
        }
        double L = 0.0;
        for (int k = 0; k < 3; ++k) {
            double w = 1.0;
            for (int l = 0; l < 3; ++l) {
                if (l != k) w *= h[l] / (h[l] - h[k]);
            }
            L += w * v[k];
        }
        est.extrapolants.push_back(-0.5 * L);
    }
    const std::size_t n = est.extrapolants.size();
    auto first = est.extrapolants.end() - static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, n));
    auto [mn, mx] = std::minmax_element(first, est.extrapolants.end());
    est.spread = *mx - *mn;
    est.rho = est.extrapolants.back();
    const double scale = std::max(std::abs(est.rho), 0.5 * std::sqrt(gm));
    if (est.spread > 0.1 * scale) {
        std::ostringstream msg;
        msg << "recover_rho: extrapolants do not settle (spread " << est.spread << " around " << est.rho << ")";
        throw ExtractionError(msg.str());
    }
    return est;
}

const char* to_string(RecoveredKind k) { return k == RecoveredKind::Interface ? "interface" : "boundary"; }

nlohmann::json ReconstructionReport::to_json() const {
    nlohmann::json j;
    j["problem"] = enclosure::to_string(problem);
    j["mode"] = enclosure::to_string(mode);
    j["c"] = c;
    j["source"] = source;
    j["slope"] = fit.s;
    j["slope_half_width"] = fit.half_width;
    j["travel_time"] = travel_time;
    j["recovered"] = {{"kind", enclosure::to_string(kind)}, {"value", recovered}};
    j["fit_window"] = {fit.window_min, fit.window_max};
    j["fit_samples"] = fit.used;
    j["residual"] = fit.residual;
    j["model_terms"] = {{"s", fit.s}, {"p", fit.p}, {"q", fit.q}};
    j["fit_options"] = {{"normalized_by_w0", fit.normalized}, {"free_power", fit.free_power}};
    j["flags"] = {{"underflow", flagged_underflow},
                  {"below_floor", flagged_below_floor},
                  {"unsolvable", flagged_unsolvable},
                  {"remainder", flagged_remainder}};
    if (rho) {
        j["rho"] = {{"value", rho->rho},
                    {"spread", rho->spread},
                    {"taus", rho->taus},
                    {"sequence", rho->sequence},
                    {"extrapolants", rho->extrapolants}};
    } else {
        j["rho"] = nullptr;
    }
    if (admissibility) {
        const auto& a = *admissibility;
        j["admissibility"] = {{"mu_hat", a.mu_hat},
                              {"C_hat", a.C_hat},
                              {"tau0", a.tau0},
                              {"pass", a.pass},
                              {"window", {a.window_min, a.window_max}},
                              {"max_relative_residual", a.max_relative_residual},
                              {"message", a.message}};
    } else {
        j["admissibility"] = nullptr;
    }
    j["notes"] = notes;
    return j;
}

ReconstructionReport reconstruct(const IndicatorSamples& samples, const KnownMedium& known, const FitOptions& opts) {
    if (problem_of(known) != samples.problem) throw ValidationError("reconstruct: samples and known medium disagree on the problem");
    ReconstructionReport r;
    r.problem = samples.problem;
    r.mode = samples.mode;
    r.c = samples.c;
    r.source = samples.source;
    r.flagged_underflow = samples.count(SampleFlag::Underflow);
    r.flagged_below_floor = samples.count(SampleFlag::BelowFloor);
    r.flagged_unsolvable = samples.count(SampleFlag::Unsolvable);
    r.flagged_remainder = samples.count(SampleFlag::Remainder);
    r.fit = fit_log_slope(samples, opts);
    r.travel_time = -r.fit.s;
    if (!(r.travel_time > 0.0)) throw ExtractionError("reconstruct: fitted slope is not negative");

    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, KnownA>) {
                r.kind = RecoveredKind::Interface;
                r.recovered = recover_interface(r.fit.s, samples.c, k.gamma1);
            } else if constexpr (std::is_same_v<K, KnownB>) {
                r.kind = RecoveredKind::Boundary;
                r.recovered = recover_boundary_layered(r.fit.s, samples.c, k.stack);
            } else {
                r.kind = RecoveredKind::Boundary;
                r.recovered = recover_boundary_smooth(r.fit.s, samples.c, samples.mode, k.medium, k.M);
            }
        },
        known);
    return r;
}

} // namespace enclosure
