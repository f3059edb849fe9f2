#include "enclosure/errors.hpp"
#include "enclosure/expr.hpp"
#include "enclosure/medium.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace enclosure;
using std::numbers::pi;

TEST_CASE("expression grammar and exact derivatives") {
    auto e = Expression::parse("(1+x)^2");
    Jet j = e.eval(0.5);
    CHECK(j.v == doctest::Approx(2.25));
    CHECK(j.d1 == doctest::Approx(3.0));
    CHECK(j.d2 == doctest::Approx(2.0));

    CHECK(Expression::parse("-x^2")(3.0) == doctest::Approx(-9.0));
    CHECK(Expression::parse("2^3^2")(0.0) == doctest::Approx(512.0));
    CHECK(Expression::parse("exp(x)*log(x)/sqrt(x)")(2.0) ==
          doctest::Approx(std::exp(2.0) * std::log(2.0) / std::sqrt(2.0)));

    // d/dx of x^x through exp and log
    Jet k = Expression::parse("exp(x*log(x))").eval(1.5);
    CHECK(k.d1 == doctest::Approx(std::pow(1.5, 1.5) * (std::log(1.5) + 1.0)));

    CHECK_THROWS_AS(Expression::parse("1+"), ValidationError);
    CHECK_THROWS_AS(Expression::parse("(x"), ValidationError);
    CHECK_THROWS_AS(Expression::parse("y"), ValidationError);
    CHECK_THROWS_AS(Expression::parse("sin(x)"), ValidationError);
}

TEST_CASE("layered medium validation") {
    CHECK_NOTHROW(LayeredMedium({0, 1}, {1}));
    CHECK_THROWS_AS(LayeredMedium({0.1, 1}, {1}), ValidationError);
    CHECK_THROWS_AS(LayeredMedium({0, 1, 1}, {1, 2}), ValidationError);
    CHECK_THROWS_AS(LayeredMedium({0, 1}, {0}), ValidationError);
    CHECK_THROWS_AS(LayeredMedium({0, 1}, {1, 2}), ValidationError);
    CHECK_THROWS_AS(LayeredMedium({0, 1}, {INFINITY}), ValidationError);
    CHECK_THROWS_AS(LayerStack({}, {}), ValidationError);
    CHECK_THROWS_AS(LayerStack({0.5, 0.2}, {1, 2, 3}), ValidationError);
}

TEST_CASE("travel_time_layered examples") {
    CHECK(travel_time_layered(LayeredMedium({0, 1}, {1}), 1.0) == doctest::Approx(2.0));
    CHECK(travel_time_layered(LayeredMedium({0, 0.5, 2}, {1, 4}), 0.25) == doctest::Approx(0.625));
    CHECK(travel_time_layered(LayeredMedium({0, 0.3, 0.7, 1.2}, {2, 2, 2}), 0.4) ==
          doctest::Approx(2 * 0.4 * 1.2 / std::sqrt(2.0)));
    CHECK(travel_time_layered(LayeredMedium({0, 0.5, 2}, {1, 4}), 0.25, 1) == doctest::Approx(0.25));
    CHECK_THROWS_AS(travel_time_layered(LayeredMedium({0, 1}, {1}), 0.0), DomainError);
}

TEST_CASE("travel_time_layered is additive under splitting a layer") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        int m = 1 + trial % 5;
        std::vector<double> b{0.0}, g;
        for (int j = 0; j < m; ++j) {
            b.push_back(b.back() + u(rng));
            g.push_back(u(rng));
        }
        LayeredMedium med(b, g);
        std::size_t j = trial % m;
        double cut = 0.5 * (b[j] + b[j + 1]);
        std::vector<double> b2 = b, g2 = g;
        b2.insert(b2.begin() + j + 1, cut);
        g2.insert(g2.begin() + j, g[j]);
        LayeredMedium split(b2, g2);
        double c = u(rng);
        CHECK(travel_time_layered(split, c) == doctest::Approx(travel_time_layered(med, c)).epsilon(1e-14));
    }
}

TEST_CASE("layer stack slowness integral") {
    LayerStack s({0.4, 0.9}, {1, 4, 2.25});
    CHECK(s.slowness_integral(0.4) == doctest::Approx(0.4));
    CHECK(s.slowness_integral(1.4) == doctest::Approx(0.4 + 0.25 + 0.5 / 1.5));
    CHECK(s.layer_of(0.4) == 0);
    CHECK(s.layer_of(0.41) == 1);
    CHECK(s.layer_of(5.0) == 2);
}

TEST_CASE("travel_time_smooth examples and properties") {
    auto one = SmoothMedium::constant(3.0, 1.0);
    CHECK(travel_time_smooth(one, 0.7, 2.0) == doctest::Approx(2 * 0.7 * 2.0));
    auto sq = SmoothMedium::from_expression(1.5, "(1+x)^2");
    CHECK(travel_time_smooth(sq, 1.0, 1.0) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-12));
    auto g0 = SmoothMedium::constant(2.0, 9.0);
    CHECK(travel_time_smooth(g0, 0.5, 1.5) == doctest::Approx(2 * 0.5 * 1.5 / 3.0));
    CHECK_THROWS_AS(travel_time_smooth(sq, 1.0, 1.6), DomainError);
    CHECK_THROWS_AS(travel_time_smooth(sq, 1.0, -0.1), DomainError);

    auto wavy = SmoothMedium::from_expression(2.0, "2+x*x-x^3/4");
    double prev = 0.0;
    for (int i = 1; i <= 40; ++i) {
        double x = 2.0 * i / 40;
        double t = travel_time_smooth(wavy, 1.0, x);
        CHECK(t > prev);
        CHECK(travel_time_smooth(wavy, 3.0, x) == doctest::Approx(3.0 * t).epsilon(1e-13));
        prev = t;
    }
}

TEST_CASE("sampled smooth media interpolate gamma and its derivatives") {
    std::size_t n = 201;
    double M = 2.0;
    std::vector<double> v(n), d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = M * i / (n - 1);
        v[i] = (1 + x) * (1 + x);
        d1[i] = 2 * (1 + x);
        d2[i] = 2;
    }
    auto s = SmoothMedium::from_samples(M, v, d1, d2);
    CHECK(s.gamma(0.1234) == doctest::Approx(1.1234 * 1.1234).epsilon(1e-12));
    CHECK(travel_time_smooth(s, 1.0, 1.0) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-10));
    CHECK_THROWS_AS(SmoothMedium::from_samples(M, v, d1, {}), ValidationError);
    CHECK_THROWS_AS(SmoothMedium::from_json({{"M", 1.0}, {"gamma", {{"kind", "samples"}, {"values", v}}}}),
                    ValidationError);
    CHECK_THROWS_AS(SmoothMedium::from_expression(2.0, "1-x"), ValidationError);
}

TEST_CASE("medium JSON round trips") {
    LayeredMedium l({0, 0.4, 0.9, 1.4}, {1, 4, 2.25});
    auto l2 = LayeredMedium::from_json(l.to_json());
    CHECK(std::vector<double>(l2.breakpoints().begin(), l2.breakpoints().end()) ==
          std::vector<double>(l.breakpoints().begin(), l.breakpoints().end()));
    CHECK(std::vector<double>(l2.conductivities().begin(), l2.conductivities().end()) ==
          std::vector<double>(l.conductivities().begin(), l.conductivities().end()));

    auto s = SmoothMedium::from_expression(1.5, "(1+x)^2");
    auto s2 = SmoothMedium::from_json(s.to_json());
    CHECK(s2.domain_end() == 1.5);
    CHECK(s2.gamma(0.77) == s.gamma(0.77));
    CHECK(s2.to_json() == s.to_json());
    CHECK_THROWS_AS(LayeredMedium::from_json({{"breakpoints", {0, 1}}}), ValidationError);
}

TEST_CASE("Liouville frame of a constant medium") {
    LiouvilleFrame f(SmoothMedium::constant(1.0, 1.0), 1.0, 0.0);
    CHECK(f.K() == doctest::Approx(1 / pi));
    CHECK(f.h() == doctest::Approx(0.0));
    CHECK(f.H() == doctest::Approx(0.0));
    for (double x : {0.0, 0.25, 0.5, 1.0}) {
        CHECK(f.s_of_x(x) == doctest::Approx(pi * x));
        CHECK(f.g_at_x(x) == doctest::Approx(0.0));
    }
}

TEST_CASE("Liouville frame of (1+x)^2") {
    auto med = SmoothMedium::from_expression(1.5, "(1+x)^2");
    LiouvilleFrame f(med, 1.0, 0.0);
    CHECK(f.K() == doctest::Approx(std::log(2.0) / pi).epsilon(1e-12));
    for (double x : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        CHECK(f.s_of_x(x) == doctest::Approx(pi * std::log1p(x) / std::log(2.0)).epsilon(1e-12));
        CHECK(f.x_of_s(f.s_of_x(x)) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(std::abs(f.s_of_x(1.0) - pi) < 1e-12);
    CHECK_THROWS_AS(LiouvilleFrame(med, 1.6, 0.0), DomainError);
}

TEST_CASE("Liouville frame of (1+x)^4: potential against the closed form") {
    // f = gamma^{1/4} = 1 + x, dx/ds = K (1+x)^2, so f''/f = 2 K^2 (1+x)^2 with K = 1/(2 pi).
    auto med = SmoothMedium::from_expression(1.0, "(1+x)^4");
    LiouvilleFrame f(med, 1.0, 0.0);
    double K = 1 / (2 * pi);
    CHECK(f.K() == doctest::Approx(K).epsilon(1e-12));
    for (double s : {0.0, 0.5, 1.3, 2.2, pi}) {
        double x = f.x_of_s(s);
        CHECK(f.f(s) == doctest::Approx(1 + x).epsilon(1e-12));
        CHECK(f.g(s) == doctest::Approx(2 * K * K * (1 + x) * (1 + x)).epsilon(1e-10));
    }
}

TEST_CASE("Liouville potential matches second differences of f") {
    auto med = SmoothMedium::from_expression(2.0, "2+sqrt(1+x)*x-x^2/3");
    LiouvilleFrame f(med, 1.7, 0.3);
    double h = 1e-3;
    for (double s : {0.2, 0.9, 1.6, 2.4, 2.9}) {
        double fd = (f.f(s + h) - 2 * f.f(s) + f.f(s - h)) / (h * h) / f.f(s);
        CHECK(std::abs(fd - f.g(s)) < 1e-5 * (1 + std::abs(f.g(s))));
    }
}

TEST_CASE("Liouville boundary constants turn the physical conditions into ytilde conditions") {
    // For any y with y'(0) = 1 and gamma(a) y'(a) + rho y(a) = 0, ytilde = gamma^{1/4} y / (K gamma0^{3/4})
    // satisfies ytilde'(0) - h ytilde(0) = 1 and ytilde'(pi) + H ytilde(pi) = 0.
    auto med = SmoothMedium::from_expression(2.0, "(1+x)^2");
    double a = 1.2, rho = 0.7;
    LiouvilleFrame f(med, a, rho);
    double ga = med.gamma(a);
    // y(x) = x + alpha x^2 + 1, with alpha fixed by the Robin condition at a
    double alpha = -(rho * (a + 1) + ga) / (rho * a * a + 2 * a * ga);
    auto y = [&](double x) { return 1 + x + alpha * x * x; };
    double g0 = med.gamma(0.0);
    auto yt = [&](double s) {
        double x = f.x_of_s(s);
        return std::pow(med.gamma(x), 0.25) * y(x) / (f.K() * std::pow(g0, 0.75));
    };
    double h = 1e-5;
    double d0 = (-3 * yt(0) + 4 * yt(h) - yt(2 * h)) / (2 * h);
    double dpi = (3 * yt(pi) - 4 * yt(pi - h) + yt(pi - 2 * h)) / (2 * h);
    CHECK(d0 - f.h() * yt(0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(dpi + f.H() * yt(pi)) < 1e-7 * std::abs(yt(pi)));
}
