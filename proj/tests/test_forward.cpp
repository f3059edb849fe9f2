#include "enclosure/errors.hpp"
#include "enclosure/forward.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace enclosure;

namespace {

FluxFunction constant(double v) {
    return [v](double) { return v; };
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
    return s;
}

// max |r_p - r_q| of u(0, t) over the output times t >= t_min of the coarsest record
double trace_distance(const BoundaryRecord& coarse, const BoundaryRecord& p, const BoundaryRecord& q, double t_min) {
    std::size_t kp = (p.size() - 1) / (coarse.size() - 1), kq = (q.size() - 1) / (coarse.size() - 1);
    double d = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        if (coarse.times[i] < t_min) continue;
        d = std::max(d, std::abs(p.temp_left[i * kp] - q.temp_left[i * kq]));
    }
    return d;
}

// Ratio of successive differences for grids (nx, nt), (2nx, 2nt), (4nx, 4nt), (8nx, 8nt).
std::pair<double, double> self_convergence(const Conductor& c, RightBC right, std::size_t nx, std::size_t nt) {
    std::vector<BoundaryRecord> r;
    for (std::size_t k : {1, 2, 4, 8}) {
        ForwardOptions o;
        o.nx = nx * k;
        o.nt = nt * k;
        o.richardson = false;
        o.reference = false;
        r.push_back(solve_forward(c, constant(1.0), right, 1.2, o).record);
    }
    double t_min = 0.12;
    double d01 = trace_distance(r[0], r[0], r[1], t_min);
    double d12 = trace_distance(r[0], r[1], r[2], t_min);
    double d23 = trace_distance(r[0], r[2], r[3], t_min);
    return {d01 / d12, d12 / d23};
}

} // namespace

TEST_CASE("zero flux gives zero traces") {
    ForwardOptions o;
    o.nx = 100;
    o.nt = 200;
    auto r = solve_forward(LayeredMedium({0, 0.5, 1}, {1, 3}), constant(0.0), RightBC::robin(1.0), 1.0, o);
    for (double v : r.record.temp_left) CHECK(v == 0.0);
    for (double v : r.record.flux_left) CHECK(v == 0.0);
    for (double v : r.final_field) CHECK(v == 0.0);
}

TEST_CASE("constant conductivity agrees with the eigenfunction series at t = T") {
    auto r = solve_forward(LayeredMedium({0, 1}, {1}), constant(1.0), RightBC::neumann(), 1.2);
    double exact = exact_series_temperature(1.0, 1.0, 1.2, 2000);
    CHECK(std::abs(r.record.temp_left.back() - exact) <= 1e-6 * std::abs(exact));
    CHECK(r.record.temp_left.front() == 0.0);
    CHECK(r.record.flux_left[5] == doctest::Approx(1.0));
}

TEST_CASE("energy balance with Neumann data at both ends") {
    // d/dt int u dx = gamma u_x(a) - gamma u_x(0), so int u(x, T) dx = -int_0^T gamma(0) u_x(0, t) dt.
    ForwardOptions o;
    o.nx = 400;
    o.nt = 1200;
    o.richardson = false;
    for (const Conductor& c : {Conductor(LayeredMedium({0, 0.3, 1.1}, {2, 0.5})),
                               Conductor(SmoothSegment{SmoothMedium::from_expression(1.5, "(1+x)^2"), 1.0})}) {
        auto g = [](double t) { return 1.0 + 2.0 * t; };
        auto r = solve_forward(c, g, RightBC::neumann(), 1.0, o);
        double injected = trapezoid(r.record.times, r.record.flux_left);
        double exact_injected = conductivity_at_origin(c) * 2.0;
        double mass = trapezoid(r.nodes, r.final_field);
        CHECK(std::abs(mass + exact_injected) < 1e-8);
        CHECK(injected == doctest::Approx(exact_injected).epsilon(1e-12));
    }
}

TEST_CASE("grid has nodes on every breakpoint") {
    LayeredMedium m({0, 0.37, 0.9, 1.4}, {1, 4, 2.25});
    auto x = forward_grid(m, 101);
    for (double b : m.breakpoints()) CHECK(std::find(x.begin(), x.end(), b) != x.end());
    CHECK(std::is_sorted(x.begin(), x.end()));
}

TEST_CASE("interface flux continuity") {
    LayeredMedium m({0, 0.4, 0.9, 1.4}, {1, 4, 2.25});
    ForwardOptions o;
    o.nx = 1400;
    o.nt = 2000;
    auto r = solve_forward(m, constant(1.0), RightBC::robin(1.0), 0.8, o);
    auto pairs = interface_fluxes(m, r.nodes, r.final_field);
    REQUIRE(pairs.size() == 2);
    for (auto [left, right] : pairs) CHECK(std::abs(left - right) < 1e-4 * std::abs(left));
}

TEST_CASE("maximum principle for injected heat") {
    ForwardOptions o;
    o.nx = 300;
    o.nt = 600;
    // u_x(0, t) = -1 injects heat through x = 0
    for (const Conductor& c : {Conductor(LayeredMedium({0, 0.5, 1.0}, {1, 5})),
                               Conductor(SmoothSegment{SmoothMedium::from_expression(2.0, "1+x*x"), 2.0})}) {
        for (RightBC bc : {RightBC::neumann(), RightBC::robin(2.0)}) {
            auto r = solve_forward(c, constant(-1.0), bc, 1.0, o);
            CHECK(*std::min_element(r.final_field.begin(), r.final_field.end()) >= -1e-12);
            CHECK(*std::min_element(r.record.temp_left.begin(), r.record.temp_left.end()) >= -1e-12);
        }
    }
}

TEST_CASE("second-order self-convergence away from the start-up layer") {
    auto [r1, r2] = self_convergence(LayeredMedium({0, 1}, {1}), RightBC::neumann(), 50, 500);
    CHECK(r1 == doctest::Approx(4.0).epsilon(0.125));
    CHECK(r2 == doctest::Approx(4.0).epsilon(0.125));
    auto [s1, s2] = self_convergence(SmoothSegment{SmoothMedium::from_expression(1.5, "(1+x)^2"), 1.0},
                                     RightBC::neumann(), 50, 500);
    CHECK(s1 == doctest::Approx(4.0).epsilon(0.125));
    CHECK(s2 == doctest::Approx(4.0).epsilon(0.125));
    auto [l1, l2] = self_convergence(LayeredMedium({0, 0.4, 0.9, 1.4}, {1, 4, 2.25}), RightBC::robin(1.0), 100, 1000);
    CHECK(l1 == doctest::Approx(4.0).epsilon(0.125));
    CHECK(l2 == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("reference record bounds the error of the output record") {
    auto r = solve_forward(LayeredMedium({0, 1}, {1}), constant(1.0), RightBC::neumann(), 1.2);
    REQUIRE(r.reference);
    double err = 0.0;
    for (std::size_t i = 0; i < r.record.size(); ++i) {
        err = std::max(err, std::abs(r.record.temp_left[i] -
                                     exact_series_temperature(1.0, 1.0, r.record.times[i], 4000)));
    }
    CHECK(r.error_estimate >= err);
}

TEST_CASE("coarse time step warning") {
    ForwardOptions o;
    o.nx = 50;
    o.nt = 10;
    auto r = solve_forward(LayeredMedium({0, 1}, {1}), [](double t) { return std::sin(40 * t); }, RightBC::neumann(),
                           1.0, o);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("solver argument validation") {
    ForwardOptions o;
    o.nx = 1;
    CHECK_THROWS_AS(solve_forward(LayeredMedium({0, 1}, {1}), constant(1.0), RightBC::neumann(), 1.0, o),
                    ValidationError);
    CHECK_THROWS_AS(RightBC::robin(-1.0), ValidationError);
    CHECK_THROWS_AS(solve_forward(SmoothSegment{SmoothMedium::constant(1.0, 1.0), 1.5}, constant(1.0),
                                  RightBC::neumann(), 1.0),
                    ValidationError);
}

TEST_CASE("exact series oracle") {
    CHECK(exact_series_temperature(1.0, 1.0, 0.0, 200000) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK_THROWS_AS(exact_series_temperature(1.0, 1.0, 1e-4, 10), DomainError);
    // long-time drift: u(0, t) decreases linearly at rate gamma / a
    double a = 1.5, g = 2.0;
    double u1 = exact_series_temperature(a, g, 3.0, 200), u2 = exact_series_temperature(a, g, 4.0, 200);
    CHECK(u2 - u1 == doctest::Approx(-g / a).epsilon(1e-12));
    // short times see a half-space: u(0, t) = -2 sqrt(gamma t / pi)
    CHECK(exact_series_temperature(1.0, 1.0, 1e-4, 2000) == doctest::Approx(-2 * std::sqrt(1e-4 / M_PI)).epsilon(1e-10));
    auto rec = exact_series_constant(1.0, 1.0, 1.2, 20000, 120);
    CHECK(rec.temp_left.front() == 0.0);
    CHECK(rec.size() == 121);
    CHECK_NOTHROW(rec.validate());
}

TEST_CASE("boundary record CSV round trip is bit exact") {
    ForwardOptions o;
    o.nx = 60;
    o.nt = 90;
    auto r = solve_forward(LayeredMedium({0, 0.5, 1}, {1, 2}), constant(1.0), RightBC::robin(0.5), 1.0, o);
    std::stringstream ss;
    write_record_csv(r.record, ss);
    auto back = read_record_csv(ss);
    CHECK(back == r.record);
    REQUIRE(back.flux_right);

    BoundaryRecord plain = exact_series_constant(1.0, 1.0, 1.0, 2000, 50);
    plain.flux_right.reset();
    std::stringstream s2;
    write_record_csv(plain, s2);
    CHECK(s2.str().rfind("t,u0,flux0\n", 0) == 0);
    CHECK(read_record_csv(s2) == plain);
}

TEST_CASE("boundary record validation") {
    BoundaryRecord r = exact_series_constant(1.0, 1.0, 1.0, 2000, 10);
    auto bad = r;
    bad.temp_left[0] = 1e-3;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = r;
    bad.times[3] += 1e-3;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = r;
    bad.flux_left.pop_back();
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    std::stringstream s("t,u0\n0,0\n");
    CHECK_THROWS_AS(read_record_csv(s), ValidationError);
}
