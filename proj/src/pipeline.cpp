#include "enclosure/pipeline.hpp"

#include "enclosure/errors.hpp"
#include "enclosure/expr.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace enclosure {

namespace {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

std::vector<double> ProbeSpec::grid(double upper) const {
    double lo = tau_min;
    if (lo <= 0.0) lo = mode == ProbeMode::Oscillatory ? 1.05 / (c * c) : 1.0;
    if (!(upper > lo)) throw ValidationError("probe: tau_max must exceed tau_min");
    return geometric_tau_grid(lo, upper, per_decade);
}

FluxFunction FluxSpec::function() const {
    if (kind == "constant") {
        double v = value;
        return [v](double) { return v; };
    }
    if (kind == "expr") {
        auto e = std::make_shared<Expression>(Expression::parse(expr));
        return [e](double t) { return (*e)(t); };
    }
    throw ValidationError("flux: unknown kind '" + kind + "'");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    try {
        cfg.source = j;
        cfg.problem = problem_from_string(j.at("problem").get<std::string>());
        const auto& med = j.at("medium");
        switch (cfg.problem) {
        case Problem::A: cfg.known = KnownA{med.at("gamma1").get<double>()}; break;
        case Problem::B:
            cfg.known = KnownB{LayerStack(get_or(med, "interfaces", std::vector<double>{}),
                                          med.at("conductivities").get<std::vector<double>>())};
            break;
        case Problem::C: {
            SmoothMedium sm = SmoothMedium::from_json(med);
            cfg.known = KnownC{sm, sm.domain_end()};
            break;
        }
        }
        if (known_gamma0(cfg.known) <= 0.0) throw ValidationError("config: gamma at x=0 must be positive");

        if (j.contains("truth")) {
            const auto& t = j.at("truth");
            double rho = get_or(t, "rho", 0.0);
            cfg.right = rho == 0.0 ? RightBC::neumann() : RightBC::robin(rho);
            if (cfg.problem == Problem::C) {
                cfg.truth = SmoothSegment{std::get<KnownC>(cfg.known).medium, t.at("a").get<double>()};
            } else {
                cfg.truth = LayeredMedium::from_json(t);
            }
        }

        cfg.M = cfg.problem == Problem::C ? std::get<KnownC>(cfg.known).M : j.at("M").get<double>();
        cfg.horizon = j.at("horizon").get<double>();

        if (j.contains("flux")) {
            const auto& f = j.at("flux");
            cfg.flux.kind = get_or<std::string>(f, "kind", "constant");
            cfg.flux.value = get_or(f, "value", 1.0);
            cfg.flux.expr = get_or<std::string>(f, "expr", "");
            (void)cfg.flux.function();
        }
        if (j.contains("probe")) {
            const auto& p = j.at("probe");
            cfg.probe.c = get_or(p, "c", cfg.probe.c);
            cfg.probe.mode = probe_mode_from_string(get_or<std::string>(p, "mode", "oscillatory"));
            cfg.probe.tau_min = get_or(p, "tau_min", 0.0);
            cfg.probe.tau_max = get_or(p, "tau_max", cfg.probe.tau_max);
            cfg.probe.oracle_tau_max = get_or(p, "oracle_tau_max", cfg.probe.oracle_tau_max);
            cfg.probe.per_decade = get_or(p, "per_decade", cfg.probe.per_decade);
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            cfg.solver.nx = get_or<std::size_t>(s, "nx", cfg.solver.nx);
            cfg.solver.nt = get_or<std::size_t>(s, "nt", cfg.solver.nt);
            cfg.solver.richardson = get_or(s, "richardson", cfg.solver.richardson);
            cfg.solver.graded_start = get_or(s, "graded_start", cfg.solver.graded_start);
            cfg.solver.reference = get_or(s, "reference", cfg.solver.reference);
        }
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            cfg.fit.normalize_w0 = get_or(f, "normalize_w0", cfg.fit.normalize_w0);
            cfg.fit.free_power = get_or(f, "free_power", cfg.fit.free_power);
            cfg.fit.tau_min = get_or(f, "tau_min", cfg.fit.tau_min);
            cfg.fit.tau_max = get_or(f, "tau_max", cfg.fit.tau_max);
            cfg.fit.min_samples = get_or<std::size_t>(f, "min_samples", cfg.fit.min_samples);
            cfg.fit.bootstrap = get_or<std::size_t>(f, "bootstrap", cfg.fit.bootstrap);
            cfg.fit.seed = get_or<std::uint64_t>(f, "seed", cfg.fit.seed);
        }
        cfg.floor_safety = get_or(j, "floor_safety", cfg.floor_safety);
        if (j.contains("oracle")) cfg.oracle = oracle_kind_from_string(j.at("oracle").get<std::string>());
        cfg.extract_rho = get_or(j, "extract_rho", false);
        if (j.contains("outputs")) {
            const auto& o = j.at("outputs");
            cfg.record_file = get_or(o, "record", cfg.record_file);
            cfg.reference_file = get_or(o, "reference", cfg.reference_file);
            cfg.indicator_file = get_or(o, "indicator", cfg.indicator_file);
            cfg.report_file = get_or(o, "report", cfg.report_file);
            cfg.slope_curve_file = get_or(o, "slope_curve", cfg.slope_curve_file);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    if (!(cfg.probe.c > 0.0)) throw ValidationError("config: probe.c must be positive");
    if (!(cfg.horizon > 0.0)) throw ValidationError("config: horizon must be positive");
    if (!(cfg.M > 0.0)) throw ValidationError("config: M must be positive");
    if (cfg.probe.per_decade < 2) throw ValidationError("config: probe.per_decade must be at least 2");
    if (cfg.solver.nx < 2 || cfg.solver.nt < 2) throw ValidationError("config: solver nx, nt must be >= 2");
    if (!(cfg.floor_safety > 0.0)) throw ValidationError("config: floor_safety must be positive");
    cfg.check_admissible();
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
    return from_json(j);
}

std::string PipelineConfig::hash() const { return stable_hash(source.dump()); }

void PipelineConfig::check_admissible() const {
    if (probe.mode != ProbeMode::Oscillatory) return;
    const double c = probe.c, T = horizon;
    std::ostringstream msg;
    switch (problem) {
    case Problem::A:
        if (!(M * c < T)) msg << "problem A needs M c < T (M=" << M << ", c=" << c << ", T=" << T << ")";
        break;
    case Problem::B: {
        const auto& st = std::get<KnownB>(known).stack;
        if (st.layers() == 1) {
            if (!(2.0 * M * c < T)) msg << "single-layer problem needs 2 M c < T (M=" << M << ", c=" << c << ", T=" << T << ")";
        } else if (!(M * c < T)) {
            msg << "problem B needs M c < T (M=" << M << ", c=" << c << ", T=" << T << ")";
        }
        break;
    }
    case Problem::C: {
        const auto& kc = std::get<KnownC>(known);
        double tt = 2.0 * c * kc.medium.slowness_integral(kc.M);
        if (!(tt < T)) msg << "problem C needs 2c int_0^M dx/sqrt(gamma) = " << tt << " < T = " << T;
        break;
    }
    }
    if (!msg.str().empty()) throw ValidationError(msg.str());
}

void PipelineConfig::check_truth() const {
    if (!truth) throw ValidationError("config: this stage needs the hidden geometry ('truth')");
    std::ostringstream msg;
    if (problem == Problem::C) {
        double a = std::get<SmoothSegment>(*truth).end;
        if (!(a > 0.0 && a <= M)) msg << "truth: need 0 < a <= M (a=" << a << ", M=" << M << ")";
    } else {
        const auto& lm = std::get<LayeredMedium>(*truth);
        auto b = lm.breakpoints();
        auto g = lm.conductivities();
        if (problem == Problem::A) {
            double g1 = std::get<KnownA>(known).gamma1;
            if (g[0] != g1) msg << "truth: gamma_1 differs from the known value";
            double depth = b.size() > 2 ? b[1] : b.back();
            if (M < 2.0 * depth / std::sqrt(g1)) msg << "truth: M must be >= 2 b / sqrt(gamma_1) = " << 2.0 * depth / std::sqrt(g1);
        } else {
            const auto& st = std::get<KnownB>(known).stack;
            auto ki = st.interfaces();
            auto kg = st.conductivities();
            bool same = kg.size() == g.size() && ki.size() + 2 == b.size();
            for (std::size_t i = 0; same && i < kg.size(); ++i) same = kg[i] == g[i];
            for (std::size_t i = 0; same && i < ki.size(); ++i) same = ki[i] == b[i + 1];
            if (!same) msg << "truth: layers do not match the known interior layers";
            double bound = g.size() == 1 ? b.back() / std::sqrt(g[0]) : travel_time_layered(lm, 1.0);
            if (M < bound) msg << "truth: M must be >= " << bound;
        }
    }
    if (!msg.str().empty()) throw ValidationError(msg.str());
}

OracleKind PipelineConfig::default_oracle() const {
    if (oracle) return *oracle;
    switch (problem) {
    case Problem::A:
        if (truth && std::get<LayeredMedium>(*truth).layers() == 2) return OracleKind::TwoLayerPrincipal;
        return OracleKind::ExactPrincipal;
    case Problem::B: return OracleKind::LayeredAsymptotic;
    case Problem::C: return OracleKind::SmoothAsymptotic;
    }
    return OracleKind::ExactPrincipal;
}

SimulateOutput run_simulate(const PipelineConfig& cfg) {
    cfg.check_truth();
    SimulateOutput out;
    out.result = solve_forward(*cfg.truth, cfg.flux.function(), cfg.right, cfg.horizon, cfg.solver);
    const auto& rec = out.result.record;

    double mass = trapezoid(out.result.nodes, out.result.final_field);
    std::vector<double> net(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        net[i] = (rec.flux_right ? (*rec.flux_right)[i] : 0.0) - rec.flux_left[i];
    }
    double injected = trapezoid(rec.times, net);
    out.notes.push_back("energy balance: int u(x,T) dx = " + fmt(mass) + ", int (flux_a - flux_0) dt = " +
                        fmt(injected) + ", difference " + fmt(mass - injected));
    out.notes.push_back("data error estimate sup|u - u_ref| at x=0: " + fmt(out.result.error_estimate));

    if (cfg.problem == Problem::A) {
        const auto& lm = std::get<LayeredMedium>(*cfg.truth);
        if (lm.layers() >= 2) {
            auto b = lm.breakpoints();
            auto g = lm.conductivities();
            double t1 = b[1] / std::sqrt(g[0]), t2 = (b[2] - b[1]) / std::sqrt(g[1]);
            std::string cs = t1 < t2 ? "case (a): b/sqrt(g1) < (a-b)/sqrt(g2)" : "case (b): b/sqrt(g1) >= (a-b)/sqrt(g2)";
            if (t1 >= t2 && !cfg.right.is_neumann()) cs += "; w'(a) is not controlled, reconstruction not claimed";
            if (cfg.right.is_neumann()) cs += "; w'(a) = 0 (Neumann)";
            out.notes.push_back(cs);
        }
    }
    for (const auto& w : out.result.warnings) out.notes.push_back("warning: " + w);
    return out;
}

IndicateOutput run_indicate(const PipelineConfig& cfg, const BoundaryRecord& rec, const BoundaryRecord* reference,
                            Execution exec) {
    rec.validate();
    IndicatorOptions opts;
    opts.mode = cfg.probe.mode;
    opts.c = cfg.probe.c;
    opts.floor_safety = cfg.floor_safety;
    opts.execution = exec;
    auto taus = cfg.probe.grid(cfg.probe.tau_max);
    IndicateOutput out;
    out.samples = compute_indicator(rec, reference, cfg.known, taus, opts);
    out.samples.medium_hash = cfg.hash();

    std::vector<double> adm_taus;
    std::vector<cplx> adm_w0;
    for (const auto& e : out.samples.entries) {
        // w'(0) comes from the prescribed flux alone, so it stays usable past the noise floor
        if (e.flag != SampleFlag::Unsolvable) {
            adm_taus.push_back(e.tau);
            adm_w0.push_back(e.w0);
        }
    }
    out.admissibility = flux_admissibility(adm_taus, adm_w0);
    return out;
}

IndicateOutput run_indicate_oracle(const PipelineConfig& cfg, std::optional<OracleKind> kind) {
    cfg.check_truth();
    OracleKind k = kind ? *kind : cfg.default_oracle();
    auto taus = cfg.probe.grid(cfg.probe.oracle_tau_max);
    FluxTransform w0 = flux_transform(cfg.flux.function(), cfg.horizon);
    IndicateOutput out;
    out.samples = oracle_indicator(k, *cfg.truth, cfg.known, cfg.right, w0, taus, cfg.probe.c, cfg.probe.mode);
    out.samples.medium_hash = cfg.hash();
    std::vector<double> t;
    std::vector<cplx> w;
    for (const auto& e : out.samples.entries) {
        if (e.flag != SampleFlag::Unsolvable) {
            t.push_back(e.tau);
            w.push_back(e.w0);
        }
    }
    out.admissibility = flux_admissibility(t, w);
    return out;
}

ReconstructionReport run_extract(const PipelineConfig& cfg, const IndicatorSamples& samples,
                                 const std::optional<FluxAdmissibility>& admissibility) {
    samples.validate();
    if (samples.problem != cfg.problem) throw ValidationError("extract: samples were computed for another problem");
    ReconstructionReport r = reconstruct(samples, cfg.known, cfg.fit);
    r.admissibility = admissibility;
    if (admissibility && !admissibility->pass) r.notes.push_back("flux admissibility check failed: " + admissibility->message);
    if (r.fit.window_max < 10.0 * r.fit.window_min) {
        r.notes.push_back("fit window spans less than a decade (" + fmt(r.fit.window_min) + " to " +
                          fmt(r.fit.window_max) + ")");
    }
    if (cfg.extract_rho) {
        if (cfg.problem != Problem::B) throw ValidationError("extract: rho extraction is defined for problem B");
        LayeredMedium geometry = cfg.truth ? std::get<LayeredMedium>(*cfg.truth) : [&] {
            const auto& st = std::get<KnownB>(cfg.known).stack;
            std::vector<double> b{0.0};
            for (double x : st.interfaces()) b.push_back(x);
            b.push_back(r.recovered);
            return LayeredMedium(b, std::vector<double>(st.conductivities().begin(), st.conductivities().end()));
        }();
        r.rho = recover_rho(samples, geometry);
        r.notes.push_back(std::string("rho extracted with the ") + (cfg.truth ? "supplied" : "recovered") + " geometry");
    }
    return r;
}

void write_slope_curve(const IndicatorSamples& samples, const SlopeFit& fit, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << "tau,slope_sample,fitted,asymptote\n";
    char buf[128];
    for (const auto& e : samples.entries) {
        if (e.flag != SampleFlag::Ok) continue;
        double model = fit.s * e.tau + fit.p * std::log(e.tau) + fit.q;
        if (fit.normalized) model += std::log(std::abs(e.w0));
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", e.tau, e.slope_sample(), model / e.tau, fit.s);
        out << buf;
    }
}

std::string summarize(const ReconstructionReport& r) {
    std::ostringstream o;
    o << std::left;
    auto row = [&](const std::string& k, const std::string& v) { o << "  " << std::setw(22) << k << v << "\n"; };
    row("problem", to_string(r.problem));
    row("probe", std::string(to_string(r.mode)) + ", c=" + fmt(r.c));
    row("source", r.source);
    row("slope s*", fmt(r.fit.s) + " +/- " + fmt(r.fit.half_width));
    row("model p, q", fmt(r.fit.p) + ", " + fmt(r.fit.q));
    row("fit window", "[" + fmt(r.fit.window_min) + ", " + fmt(r.fit.window_max) + "], " +
                          std::to_string(r.fit.used) + " samples");
    row("rms residual", fmt(r.fit.residual));
    row("travel time", fmt(r.travel_time));
    row(std::string("recovered ") + (r.kind == RecoveredKind::Interface ? "b" : "a"), fmt(r.recovered));
    if (r.rho) row("recovered rho", fmt(r.rho->rho) + " (spread " + fmt(r.rho->spread) + ")");
    row("flagged", std::to_string(r.flagged_below_floor) + " below floor, " + std::to_string(r.flagged_underflow) +
                       " underflow, " + std::to_string(r.flagged_unsolvable) + " unsolvable, " +
                       std::to_string(r.flagged_remainder) + " remainder");
    if (r.admissibility) {
        row("flux admissibility", std::string(r.admissibility->pass ? "pass" : "fail") + " (mu=" +
                                      fmt(r.admissibility->mu_hat) + ")");
    }
    for (const auto& n : r.notes) row("note", n);
    return o.str();
}

} // namespace enclosure
