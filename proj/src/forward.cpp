#include "enclosure/forward.hpp"

#include "enclosure/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace enclosure {

// ------------------------------------------------------------ BoundaryRecord

void BoundaryRecord::validate() const {
    const std::size_t n = times.size();
    if (n < 2) throw ValidationError("boundary record: need at least two samples");
    if (temp_left.size() != n || flux_left.size() != n || (flux_right && flux_right->size() != n)) {
        throw ValidationError("boundary record: trace lengths differ from the time grid");
    }
    if (times.front() != 0.0) throw ValidationError("boundary record: first time must be 0");
    if (std::abs(times.back() - horizon) > 1e-12 * std::max(1.0, horizon)) {
        throw ValidationError("boundary record: last time must equal the horizon");
    }
    const double h = horizon / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(times[i] - h * static_cast<double>(i)) > 1e-9 * h) {
            throw ValidationError("boundary record: time grid is not uniform");
        }
    }
    if (temp_left.front() != 0.0) throw ValidationError("boundary record: u(0,0) must be 0");
}

void write_record_csv(const BoundaryRecord& rec, std::ostream& out) {
    out << (rec.flux_right ? "t,u0,flux0,fluxa\n" : "t,u0,flux0\n");
    char buf[128];
    for (std::size_t i = 0; i < rec.size(); ++i) {
        int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", rec.times[i], rec.temp_left[i],
                              rec.flux_left[i]);
        out.write(buf, n);
        if (rec.flux_right) {
            n = std::snprintf(buf, sizeof buf, ",%.17g", (*rec.flux_right)[i]);
            out.write(buf, n);
        }
        out << '\n';
    }
}

void write_record_csv(const BoundaryRecord& rec, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    write_record_csv(rec, f);
}

BoundaryRecord read_record_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("boundary record CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool right = false;
    if (line == "t,u0,flux0,fluxa") right = true;
    else if (line != "t,u0,flux0") throw ValidationError("boundary record CSV: unexpected header '" + line + "'");

    BoundaryRecord rec;
    if (right) rec.flux_right.emplace();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const char* p = line.c_str();
        double vals[4];
        const int want = right ? 4 : 3;
        for (int k = 0; k < want; ++k) {
            char* end = nullptr;
            vals[k] = std::strtod(p, &end);
            if (end == p) throw ValidationError("boundary record CSV: bad number on line " + std::to_string(lineno));
            p = end;
            if (k + 1 < want) {
                if (*p != ',') throw ValidationError("boundary record CSV: missing column on line " + std::to_string(lineno));
                ++p;
            }
        }
        rec.times.push_back(vals[0]);
        rec.temp_left.push_back(vals[1]);
        rec.flux_left.push_back(vals[2]);
        if (right) rec.flux_right->push_back(vals[3]);
    }
    if (rec.times.empty()) throw ValidationError("boundary record CSV: no data rows");
    rec.horizon = rec.times.back();
    rec.validate();
    return rec;
}

BoundaryRecord read_record_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "'");
    return read_record_csv(f);
}

RightBC RightBC::robin(double rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw ValidationError("Robin coefficient must be >= 0");
    return {rho};
}

// ----------------------------------------------------------------- conductor

double conductor_length(const Conductor& c) {
    return std::visit(
        [](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LayeredMedium>) return m.length();
            else return m.end;
        },
        c);
}

double conductivity_at_origin(const Conductor& c) {
    return std::visit(
        [](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LayeredMedium>) return m.conductivity(0);
            else return m.medium.gamma(0.0);
        },
        c);
}

namespace {

void check_segment(const SmoothSegment& s) {
    if (!(s.end > 0.0) || s.end > s.medium.domain_end()) {
        throw ValidationError("smooth segment: need 0 < a <= M");
    }
}

// Face conductivities k_i for the face between nodes i and i+1.
std::vector<double> face_conductivities(const Conductor& conductor, const std::vector<double>& nodes) {
    std::vector<double> k(nodes.size() - 1);
    if (const auto* lm = std::get_if<LayeredMedium>(&conductor)) {
        auto b = lm->breakpoints();
        std::size_t layer = 0;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            double mid = 0.5 * (nodes[i] + nodes[i + 1]);
            while (layer + 1 < lm->layers() && mid > b[layer + 1]) ++layer;
            k[i] = lm->conductivity(layer);
        }
    } else {
        const auto& seg = std::get<SmoothSegment>(conductor);
        std::vector<double> g(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) g[i] = seg.medium.gamma(nodes[i]);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) k[i] = 2.0 * g[i] * g[i + 1] / (g[i] + g[i + 1]);
    }
    return k;
}

/// Crank-Nicolson stepping of  V du/dt = A u + s(t)  with tridiagonal A.
class Stepper {
public:
    Stepper(std::vector<double> vol, std::vector<double> lower, std::vector<double> diag,
            std::vector<double> upper)
        : vol_(std::move(vol)), lo_(std::move(lower)), di_(std::move(diag)), up_(std::move(upper)),
          cp_(vol_.size()), den_(vol_.size()), rhs_(vol_.size()) {}

    /// One theta-step of length h; `src0` is the theta-weighted source in row 0.
    void step(std::vector<double>& u, double h, double theta, double src0) {
        const std::size_t n = u.size();
        if (h != last_h_ || theta != last_theta_) factor(h, theta);
        const double w = (1.0 - theta) * h;
        rhs_[0] = vol_[0] * u[0] + w * (di_[0] * u[0] + up_[0] * u[1]) + h * src0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            rhs_[i] = vol_[i] * u[i] + w * (lo_[i] * u[i - 1] + di_[i] * u[i] + up_[i] * u[i + 1]);
        }
        rhs_[n - 1] = vol_[n - 1] * u[n - 1] + w * (lo_[n - 1] * u[n - 2] + di_[n - 1] * u[n - 1]);
        // forward sweep with the cached factorization
        u[0] = rhs_[0] / den_[0];
        for (std::size_t i = 1; i < n; ++i) u[i] = (rhs_[i] + theta * h * lo_[i] * u[i - 1]) / den_[i];
        for (std::size_t i = n - 1; i-- > 0;) u[i] -= cp_[i] * u[i + 1];
    }

private:
    void factor(double h, double theta) {
        const std::size_t n = vol_.size();
        const double a = theta * h;
        // matrix M = V - a A ; sub = -a lo, sup = -a up
        den_[0] = vol_[0] - a * di_[0];
        cp_[0] = -a * up_[0] / den_[0];
        for (std::size_t i = 1; i < n; ++i) {
            double sub = -a * lo_[i];
            den_[i] = vol_[i] - a * di_[i] - sub * cp_[i - 1];
            cp_[i] = i + 1 < n ? -a * up_[i] / den_[i] : 0.0;
        }
        last_h_ = h;
        last_theta_ = theta;
    }

    std::vector<double> vol_, lo_, di_, up_;
    std::vector<double> cp_, den_, rhs_;
    double last_h_ = -1.0;
    double last_theta_ = -1.0;
};

struct LevelOutput {
    std::vector<double> nodes;
    std::vector<double> temp_left;
    std::vector<double> temp_right;
    std::vector<double> field;
};

LevelOutput run_level(const Conductor& conductor, const FluxFunction& g, double rho, double horizon,
                      std::size_t nx, std::size_t nt, bool graded, int split) {
    LevelOutput out;
    out.nodes = forward_grid(conductor, nx);
    if (split == 2) {
        std::vector<double> refined;
        refined.reserve(2 * out.nodes.size());
        for (std::size_t i = 0; i + 1 < out.nodes.size(); ++i) {
            refined.push_back(out.nodes[i]);
            refined.push_back(0.5 * (out.nodes[i] + out.nodes[i + 1]));
        }
        refined.push_back(out.nodes.back());
        out.nodes = std::move(refined);
    }
    const auto& x = out.nodes;
    const std::size_t n = x.size();
    std::vector<double> k = face_conductivities(conductor, x);
    std::vector<double> vol(n, 0.0), lo(n, 0.0), di(n, 0.0), up(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double hx = x[i + 1] - x[i];
        double kf = k[i] / hx;
        vol[i] += 0.5 * hx;
        vol[i + 1] += 0.5 * hx;
        di[i] -= kf;
        up[i] += kf;
        di[i + 1] -= kf;
        lo[i + 1] += kf;
    }
    di[n - 1] -= rho;
    const double gamma0 = conductivity_at_origin(conductor);
    Stepper stepper(vol, lo, di, up);

    std::vector<double> u(n, 0.0);
    const double dt = horizon / static_cast<double>(nt);
    out.temp_left.assign(nt + 1, 0.0);
    out.temp_right.assign(nt + 1, 0.0);

    // the fine Richardson level halves every substep of the coarse schedule
    auto substep = [&](double t0, double h, double theta) {
        const double hs = h / split;
        for (int k = 0; k < split; ++k) {
            double ts = t0 + hs * k;
            double src = -gamma0 * ((1.0 - theta) * g(ts) + theta * g(ts + hs));
            stepper.step(u, hs, theta, src);
        }
    };

    const std::size_t graded_intervals = graded ? std::max<std::size_t>(2, (nt + 499) / 500) : 0;
    for (std::size_t step = 0; step < nt; ++step) {
        const double t0 = dt * static_cast<double>(step);
        if (graded && step == 0) {
            // geometric substeps; two implicit Euler steps damp the start-up jump
            double h = dt * 1e-8;
            double t = 0.0;
            int count = 0;
            while (t + h < dt) {
                substep(t, h, count < 2 ? 1.0 : 0.5);
                t += h;
                h *= 1.15;
                ++count;
            }
            substep(t, dt - t, 0.5);
        } else if (graded && step < graded_intervals) {
            const double ratio = static_cast<double>(graded_intervals) / static_cast<double>(step + 1);
            const auto q = static_cast<std::size_t>(std::ceil(std::pow(ratio, 1.5)));
            const double h = dt / static_cast<double>(q);
            for (std::size_t j = 0; j < q; ++j) substep(t0 + h * static_cast<double>(j), h, 0.5);
        } else {
            substep(t0, dt, 0.5);
        }
        out.temp_left[step + 1] = u.front();
        out.temp_right[step + 1] = u.back();
    }
    out.field = std::move(u);
    return out;
}

// Two levels (nx, one step per substep) and (2 nx, two half steps per
// substep) combined to cancel the leading h^2 error.
LevelOutput richardson(const Conductor& conductor, const FluxFunction& g, double rho, double horizon,
                       std::size_t nx, std::size_t nt, bool graded) {
    LevelOutput coarse = run_level(conductor, g, rho, horizon, nx, nt, graded, 1);
    LevelOutput fine = run_level(conductor, g, rho, horizon, nx, nt, graded, 2);
    LevelOutput out;
    out.temp_left.resize(nt + 1);
    out.temp_right.resize(nt + 1);
    for (std::size_t i = 0; i <= nt; ++i) {
        out.temp_left[i] = (4.0 * fine.temp_left[i] - coarse.temp_left[i]) / 3.0;
        out.temp_right[i] = (4.0 * fine.temp_right[i] - coarse.temp_right[i]) / 3.0;
    }
    out.field.resize(coarse.nodes.size());
    for (std::size_t i = 0; i < coarse.nodes.size(); ++i) {
        out.field[i] = (4.0 * fine.field[2 * i] - coarse.field[i]) / 3.0;
    }
    out.nodes = std::move(coarse.nodes);
    return out;
}

} // namespace

std::vector<double> forward_grid(const Conductor& conductor, std::size_t nx) {
    if (nx < 2) throw ValidationError("forward solver: nx must be at least 2");
    std::vector<double> x;
    if (const auto* lm = std::get_if<LayeredMedium>(&conductor)) {
        auto b = lm->breakpoints();
        const double a = lm->length();
        x.push_back(0.0);
        for (std::size_t j = 0; j < lm->layers(); ++j) {
            double len = b[j + 1] - b[j];
            auto cells = static_cast<std::size_t>(std::llround(static_cast<double>(nx) * len / a));
            cells = std::max<std::size_t>(cells, 2);
            for (std::size_t i = 1; i <= cells; ++i) {
                x.push_back(i == cells ? b[j + 1] : b[j] + len * static_cast<double>(i) / static_cast<double>(cells));
            }
        }
    } else {
        const auto& seg = std::get<SmoothSegment>(conductor);
        check_segment(seg);
        x.resize(nx + 1);
        for (std::size_t i = 0; i <= nx; ++i) x[i] = seg.end * static_cast<double>(i) / static_cast<double>(nx);
        x.back() = seg.end;
    }
    return x;
}

ForwardResult solve_forward(const Conductor& conductor, const FluxFunction& left_flux, RightBC right,
                            double horizon, const ForwardOptions& opts) {
    if (opts.nx < 2 || opts.nt < 2) throw ValidationError("forward solver: nx and nt must be at least 2");
    if (!(horizon > 0.0)) throw ValidationError("forward solver: horizon must be positive");
    if (!(right.rho >= 0.0)) throw ValidationError("forward solver: rho must be >= 0");
    if (const auto* seg = std::get_if<SmoothSegment>(&conductor)) check_segment(*seg);

    ForwardResult res;
    const double gamma0 = conductivity_at_origin(conductor);
    const std::size_t nt = opts.nt;
    const double dt = horizon / static_cast<double>(nt);

    // flux resolution check on the output grid
    {
        double gmax = 0.0, jump = 0.0, prev = left_flux(0.0);
        for (std::size_t i = 0; i <= nt; ++i) {
            double v = left_flux(dt * static_cast<double>(i));
            if (!std::isfinite(v)) {
                throw ValidationError("forward solver: prescribed flux is not finite at t=" +
                                      std::to_string(dt * static_cast<double>(i)));
            }
            gmax = std::max(gmax, std::abs(v));
            if (i > 0) jump = std::max(jump, std::abs(v - prev));
            prev = v;
        }
        if (gmax > 0.0 && jump > 0.05 * gmax) {
            res.warnings.push_back("time step too coarse to resolve the prescribed flux (max step change " +
                                   std::to_string(jump / gmax) + " of its peak)");
        }
    }

    auto check_finite = [](const ForwardResult& r) {
        for (std::size_t i = 0; i < r.record.size(); ++i) {
            if (!std::isfinite(r.record.temp_left[i]) || !std::isfinite((*r.record.flux_right)[i])) {
                throw NumericalError("forward solver: non-finite boundary trace at t=" +
                                     std::to_string(r.record.times[i]));
            }
        }
    };

    auto make_record = [&](std::size_t steps, const std::vector<double>& tl, const std::vector<double>& tr) {
        BoundaryRecord rec;
        rec.horizon = horizon;
        rec.times.resize(steps + 1);
        rec.flux_left.resize(steps + 1);
        const double h = horizon / static_cast<double>(steps);
        for (std::size_t i = 0; i <= steps; ++i) {
            rec.times[i] = i == steps ? horizon : h * static_cast<double>(i);
            rec.flux_left[i] = gamma0 * left_flux(rec.times[i]);
        }
        rec.temp_left = tl;
        rec.flux_right.emplace(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i) (*rec.flux_right)[i] = -right.rho * tr[i];
        return rec;
    };

    if (!opts.richardson) {
        LevelOutput coarse = run_level(conductor, left_flux, right.rho, horizon, opts.nx, nt, opts.graded_start, 1);
        res.record = make_record(nt, coarse.temp_left, coarse.temp_right);
        res.nodes = std::move(coarse.nodes);
        res.final_field = std::move(coarse.field);
        check_finite(res);
        return res;
    }

    LevelOutput main = richardson(conductor, left_flux, right.rho, horizon, opts.nx, nt, opts.graded_start);
    res.record = make_record(nt, main.temp_left, main.temp_right);
    res.nodes = std::move(main.nodes);
    res.final_field = std::move(main.field);
    check_finite(res);

    if (opts.reference && nt % 2 == 0 && nt >= 4 && opts.nx >= 4) {
        LevelOutput half = richardson(conductor, left_flux, right.rho, horizon, opts.nx / 2, nt / 2, opts.graded_start);
        res.reference = make_record(nt / 2, half.temp_left, half.temp_right);
        double err = 0.0;
        for (std::size_t i = 0; i <= nt / 2; ++i) {
            err = std::max(err, std::abs(res.record.temp_left[2 * i] - half.temp_left[i]));
        }
        res.error_estimate = err;
    }
    return res;
}

std::vector<std::pair<double, double>> interface_fluxes(const LayeredMedium& med, const std::vector<double>& nodes,
                                                        const std::vector<double>& field) {
    std::vector<std::pair<double, double>> out;
    auto b = med.breakpoints();
    for (std::size_t j = 1; j + 1 < b.size(); ++j) {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), b[j] - 1e-12 * med.length());
        if (it == nodes.end() || std::abs(*it - b[j]) > 1e-12 * med.length()) {
            throw ValidationError("interface_fluxes: grid has no node on breakpoint");
        }
        auto i = static_cast<std::size_t>(it - nodes.begin());
        if (i < 2 || i + 2 >= nodes.size()) throw ValidationError("interface_fluxes: layer too thin");
        double hl = nodes[i] - nodes[i - 1];
        double hr = nodes[i + 1] - nodes[i];
        double left = (3.0 * field[i] - 4.0 * field[i - 1] + field[i - 2]) / (2.0 * hl);
        double rightd = (-3.0 * field[i] + 4.0 * field[i + 1] - field[i + 2]) / (2.0 * hr);
        out.emplace_back(med.conductivity(j - 1) * left, med.conductivity(j) * rightd);
    }
    return out;
}

// ------------------------------------------------------------- exact series

double exact_series_temperature(double a, double gamma, double t, std::size_t n_terms) {
    if (!(a > 0.0) || !(gamma > 0.0) || t < 0.0) throw ValidationError("exact series: invalid parameters");
    if (t == 0.0) return 0.0;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double kappa = gamma * pi2 / (a * a);
    const double n1 = static_cast<double>(n_terms + 1);
    const double tail = 2.0 * a / (pi2 * static_cast<double>(std::max<std::size_t>(n_terms, 1))) *
                        std::exp(-kappa * n1 * n1 * t);
    if (tail > 1e-12) throw DomainError("exact series: too few terms for the requested time");
    double sum = 0.0;
    // smallest terms first
    for (std::size_t n = n_terms; n >= 1; --n) {
        double dn = static_cast<double>(n);
        double e = std::exp(-kappa * dn * dn * t);
        if (e == 0.0) continue;
        sum += 2.0 * a / (pi2 * dn * dn) * e;
    }
    return -gamma * t / a - a / 3.0 + sum;
}

BoundaryRecord exact_series_constant(double a, double gamma, double horizon, std::size_t n_terms,
                                     std::size_t samples) {
    if (samples < 2) throw ValidationError("exact series: need at least two samples");
    BoundaryRecord rec;
    rec.horizon = horizon;
    const double dt = horizon / static_cast<double>(samples);
    for (std::size_t i = 0; i <= samples; ++i) {
        double t = i == samples ? horizon : dt * static_cast<double>(i);
        rec.times.push_back(t);
        rec.temp_left.push_back(exact_series_temperature(a, gamma, t, n_terms));
        rec.flux_left.push_back(gamma);
    }
    rec.flux_right.emplace(samples + 1, 0.0);
    return rec;
}

} // namespace enclosure
