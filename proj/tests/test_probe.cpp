#include "enclosure/errors.hpp"
#include "enclosure/probe.hpp"

#include "support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

using namespace enclosure;
using testing::exponential_rate;
using testing::algebraic_order;

namespace {

LayerStack random_stack(std::mt19937_64& rng, std::size_t m) {
    std::uniform_real_distribution<double> thick(0.1, 0.8), cond(0.2, 5.0);
    std::vector<double> b, g{cond(rng)};
    double x = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
        x += thick(rng);
        b.push_back(x);
        g.push_back(cond(rng));
    }
    return LayerStack(b, g);
}

} // namespace

TEST_CASE("make_probe examples") {
    auto p = make_probe(1.0, 2.0);
    CHECK(p.z.real() == doctest::Approx(-2.0));
    CHECK(p.z.imag() == doctest::Approx(-std::sqrt(2.0)));
    CHECK(std::abs(make_probe(1.0, 1.0 + 1e-12).z - cplx(-1.0, 0.0)) < 1e-5);
    CHECK_THROWS_AS(make_probe(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(make_probe(0.25, 15.0), DomainError);
    CHECK_THROWS_AS(make_probe(1.0, -1.0, ProbeMode::RealRay), DomainError);

    auto r = make_probe(0.3, 7.0, ProbeMode::RealRay);
    CHECK(r.z == cplx(-7.0, 0.0));
    CHECK(r.z2 == cplx(49.0, 0.0));
}

TEST_CASE("probe frequency invariants") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uc(0.05, 3.0), ut(1.001, 1000.0);
    for (int i = 0; i < 200; ++i) {
        double c = uc(rng), tau = ut(rng) / (c * c);
        auto p = make_probe(c, tau);
        CHECK(p.z2.real() == tau);
        CHECK(p.z2.imag() == doctest::Approx(2 * c * c * tau * tau * std::sqrt(1 - 1 / (c * c * tau))));
        CHECK(std::abs(p.z * p.z - p.z2) < 1e-12 * std::abs(p.z2));
        CHECK(p.z.real() < 0.0);
    }
}

TEST_CASE("trans_refl") {
    auto [t, r] = trans_refl(1.0, 4.0);
    CHECK(t == doctest::Approx(2.0 / 3));
    CHECK(r == doctest::Approx(-1.0 / 3));
    auto [t1, r1] = trans_refl(2.5, 2.5);
    CHECK(t1 == 1.0);
    CHECK(r1 == 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 100.0);
    for (int i = 0; i < 100; ++i) {
        auto [tk, rk] = trans_refl(u(rng), u(rng));
        CHECK(tk == doctest::Approx(1.0 + rk).epsilon(1e-14));
    }
}

TEST_CASE("single-layer probe") {
    auto p = make_probe(1.0, 2.0);
    CHECK(psi_single(0.0, p, 3.0) == cplx(1.0, 0.0));
    CHECK(testing::rel(psi_single(1.0, p, 1.0), std::exp(cplx(-2.0, -std::sqrt(2.0)))) < 1e-14);
    auto s = psi_single_solution(p, 4.0);
    for (double x : {0.0, 0.3, 2.0}) {
        ProbePoint pt = s.at(x);
        // gamma Psi' / Psi = gamma z / sqrt(gamma)
        CHECK(testing::rel((pt.flux / pt.psi).value(), 4.0 * p.z / 2.0) < 1e-13);
        CHECK(pt.psi.log_abs() == doctest::Approx(x * p.z.real() / 2.0));
    }
}

TEST_CASE("layered probe with one layer is the exponential") {
    auto p = make_probe(0.5, 40.0);
    auto s = psi_layered(LayerStack({}, {2.0}), p);
    CHECK(s.psi0() == cplx(1.0, 0.0));
    CHECK(testing::rel(s.dpsi0(), p.z / std::sqrt(2.0)) < 1e-14);
}

TEST_CASE("invisible interface") {
    auto p = make_probe(1.0, 30.0);
    auto s = psi_layered(LayerStack({0.7}, {3.0, 3.0}), p);
    CHECK(std::abs(s.beta()[0]) < 1e-14);
    CHECK(std::abs(s.a()[1] - 1.0) < 1e-14);
    CHECK(std::abs(s.psi0() - 1.0) < 1e-14);
}

TEST_CASE("two-layer probe against a brute-force interface solve") {
    // Psi = e^{x z1} + B1 e^{-x z1} on [0, b], A2 e^{x z2} beyond; continuity of Psi and gamma Psi' at b,
    // solved for the interface values u = B1 e^{-b z1}, v = A2 e^{b z2}.
    double g1 = 1, g2 = 4, b = 0.5;
    auto p = make_probe(1.0, 50.0);
    cplx z1 = p.z / std::sqrt(g1), z2 = p.z / std::sqrt(g2);
    cplx e = std::exp(b * z1);
    Eigen::Matrix2cd M;
    Eigen::Vector2cd rhs;
    M << 1.0, -1.0, -g1 * z1, -g2 * z2;
    rhs << -e, -g1 * z1 * e;
    Eigen::Vector2cd uv = M.fullPivLu().solve(rhs);
    Eigen::Vector2cd x;
    x << uv(0) * e, uv(1) * std::exp(-b * z2);
    auto s = psi_layered(LayerStack({b}, {g1, g2}), p);
    CHECK(testing::rel(s.B(0).value(), x(0)) < 1e-10);
    CHECK(testing::rel(s.A(1).value(), x(1)) < 1e-10);
    CHECK(testing::rel(s.psi0(), 1.0 + x(0)) < 1e-10);
    CHECK(testing::rel(s.dpsi0(), z1 * (1.0 - x(0))) < 1e-10);
}

TEST_CASE("layered probe is continuous with continuous flux at every interface") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        auto stack = random_stack(rng, 2 + trial % 4);
        double c = 0.25 + 0.05 * (trial % 5);
        auto p = make_probe(c, (5.0 + 10.0 * trial) / (c * c));
        auto s = psi_layered(stack, p);
        auto b = stack.interfaces();
        for (std::size_t j = 0; j < b.size(); ++j) {
            // right-layer representation e^{phi(b)} (a + beta e^{2 (b_next - b) z}) evaluated at b
            std::size_t r = j + 1;
            double g = stack.conductivity(r);
            cplx zr = p.z / std::sqrt(g);
            cplx e = r < b.size() ? std::exp(2.0 * (b[r] - b[j]) * zr) : cplx(0.0);
            cplx psi_r = s.a()[r] + s.beta()[r] * e;
            cplx flux_r = g * zr * (s.a()[r] - s.beta()[r] * e);
            ProbePoint left = s.at(b[j]);
            LogComplex phase = LogComplex::exp(s.phase(b[j]));
            cplx psi_l = (left.psi / phase).value(), flux_l = (left.flux / phase).value();
            CHECK(std::abs(psi_l - psi_r) <= 1e-10 * std::abs(psi_l));
            CHECK(std::abs(flux_l - flux_r) <= 1e-10 * std::abs(flux_l));
        }
    }
}

TEST_CASE("direct solve matches the backward recurrence on random media") {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t m = 1 + trial % 5;
        auto stack = random_stack(rng, m);
        double c = 0.25 + 0.25 * (trial % 4);
        double tau = (1.5 + 40.0 * ((trial * 7) % 13)) / (c * c);
        auto p = make_probe(c, tau);
        auto s = psi_layered(stack, p);
        auto [a, beta] = layered_recurrence(stack, p);
        // the recurrence is normalized by a_m = 1, the direct solve by a_1 = 1
        cplx k = s.a()[0] / a[0];
        for (std::size_t j = 0; j < m; ++j) {
            worst = std::max(worst, std::abs(k * a[j] - s.a()[j]) / std::abs(s.a()[j]));
            worst = std::max(worst, std::abs(k * beta[j] - s.beta()[j]) / std::max(1.0, std::abs(s.beta()[j])));
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("scaled coefficients approach their limits at rate e^{-2 c delta tau}") {
    // interior layers 2 and 3 have slowness 0.3/1.5 = 0.2 and 0.5/2 = 0.25, so delta = 0.2
    LayerStack stack({0.6, 0.9, 1.4}, {1.0, 2.25, 4.0, 0.81});
    double c = 0.5, delta = 0.2;
    auto g = stack.conductivities();
    auto limit_a = [&](std::size_t j) {
        double t = 1.0;
        for (std::size_t k = 0; k < j; ++k) t *= trans_refl(g[k], g[k + 1]).first;
        return t;
    };
    auto err = [&](double tau) {
        auto s = psi_layered(stack, make_probe(c, tau));
        double e = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            e = std::max(e, std::abs(s.a()[j] - limit_a(j)));
            if (j < 3) e = std::max(e, std::abs(s.beta()[j] - trans_refl(g[j], g[j + 1]).second * limit_a(j)));
        }
        return e;
    };
    std::array<double, 3> taus{20.0, 40.0, 80.0};
    double kappa = exponential_rate(taus, testing::sample3(taus, err));
    CHECK(kappa == doctest::Approx(2 * c * delta).epsilon(0.1));
}

TEST_CASE("endpoint asymptotics: Psi e^{-phi} tends to the transmission product") {
    LayerStack stack({0.4, 0.9}, {1, 4, 2.25});
    double T = transmission_product(stack.conductivities());
    CHECK(T == doctest::Approx(16.0 / 21));
    for (double tau : {50.0, 200.0, 800.0}) {
        auto p = make_probe(0.25, tau);
        auto s = psi_layered(stack, p);
        double a = 1.4;
        CHECK(testing::rel(s.phase(a), p.z * stack.slowness_integral(a)) < 1e-14);
        CHECK(testing::rel(layered_phase(stack, p, a), p.z * stack.slowness_integral(a)) < 1e-14);
        // remaining reflection inside layer 2 decays like e^{-2 c tau 0.5/2}
        CHECK(std::abs(s.scaled(a) - T) < std::exp(-2 * 0.25 * tau * 0.25) + 1e-14);
    }
}

TEST_CASE("K matrices and the transfer matrix limit") {
    for (double g : {0.3, 1.0, 7.0}) {
        CHECK((k_matrix_inverse(g) * k_matrix(g) - Mat2::Identity()).norm() < 1e-14);
    }
    LayeredMedium equal({0, 0.5, 1.0}, {2.0, 2.0});
    Mat2 lim = l_matrix_limit(equal);
    CHECK(std::abs(lim(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(lim(1, 0)) < 1e-15);
    CHECK(std::abs(lim(0, 1)) + std::abs(lim(1, 1)) == 0.0);
    CHECK((l_matrix(equal, make_probe(1.0, 200.0)) - lim).norm() < 1e-12);
    CHECK_THROWS_AS(l_matrix(LayeredMedium({0, 1}, {1}), make_probe(1.0, 2.0)), ValidationError);
}

TEST_CASE("transfer matrix converges at rate e^{-2 c delta tau}") {
    // slownesses of layers 2..4: 0.3/1.5, 0.5/2, 0.6/0.9; delta = 0.2
    LayeredMedium med({0, 0.6, 0.9, 1.4, 2.0}, {1.0, 2.25, 4.0, 0.81});
    double c = 0.5, delta = 0.2;
    Mat2 lim = l_matrix_limit(med);
    auto g = med.conductivities();
    CHECK(std::abs(lim(0, 0) - 1.0 / transmission_product(g)) < 1e-14);
    auto err = [&](double tau) { return (l_matrix(med, make_probe(c, tau)) - lim).norm(); };
    std::array<double, 3> taus{20.0, 40.0, 80.0};
    CHECK(exponential_rate(taus, testing::sample3(taus, err)) == doctest::Approx(2 * c * delta).epsilon(0.1));
}

TEST_CASE("WKB probe in constant media is exact") {
    auto p = make_probe(0.5, 30.0);
    auto one = psi_wkb(SmoothMedium::constant(1.0, 1.0), p, 1.0);
    for (double x : {0.0, 0.4, 1.0}) CHECK(std::abs(one.scaled(x) - 1.0) < 1e-9);
    double g0 = 3.0;
    auto three = psi_wkb(SmoothMedium::constant(1.0, g0), p, 1.0);
    for (double x : {0.0, 0.4, 1.0}) {
        cplx exact = std::pow(g0, -0.25) * std::exp(x * p.z / std::sqrt(g0));
        CHECK(testing::rel(three.at(x).psi.value(), exact) < 1e-9);
    }
    CHECK(testing::rel(three.dpsi0(), std::pow(g0, -0.25) * p.z / std::sqrt(g0)) < 1e-9);
}

TEST_CASE("WKB probe satisfies the scaled equation") {
    // Psi = P e^{z S}, gamma Psi' = Q e^{z S}:  P' = Q/gamma - z P/sqrt(gamma),  Q' = z^2 P - z Q/sqrt(gamma)
    auto med = SmoothMedium::from_expression(1.5, "(1+x)^2");
    auto p = make_probe(0.25, 40.0);
    auto s = psi_wkb(med, p, 1.5, 1501);
    const auto& x = s.grid();
    const auto& P = s.p_hat();
    const auto& Q = s.q_hat();
    double h = x[1] - x[0];
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < x.size(); i += 50) {
        cplx dP = (-P[i + 2] + 8.0 * P[i + 1] - 8.0 * P[i - 1] + P[i - 2]) / (12 * h);
        cplx dQ = (-Q[i + 2] + 8.0 * Q[i + 1] - 8.0 * Q[i - 1] + Q[i - 2]) / (12 * h);
        double g = med.gamma(x[i]), sg = std::sqrt(g);
        cplx r1 = dP - (Q[i] / g - p.z * P[i] / sg);
        cplx r2 = dQ - (p.z2 * P[i] - p.z * Q[i] / sg);
        worst = std::max(worst, std::abs(r1) / std::abs(p.z * P[i]) + std::abs(r2) / std::abs(p.z2 * P[i]));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("WKB amplitude approaches gamma^{-1/4} like 1/tau") {
    auto med = SmoothMedium::from_expression(1.5, "(1+x)^2");
    auto disc = [&](double tau) {
        auto s = psi_wkb(med, make_probe(1.0, tau, ProbeMode::RealRay), 1.5);
        double e = 0.0;
        for (double x : {0.0, 0.5, 1.0}) e = std::max(e, std::abs(s.scaled(x) * std::pow(med.gamma(x), 0.25) - 1.0));
        return e;
    };
    std::array<double, 3> taus{20.0, 40.0, 80.0};
    CHECK(algebraic_order(taus, testing::sample3(taus, disc)) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("WKB probe rejects points beyond M") {
    auto s = psi_wkb(SmoothMedium::constant(2.0, 1.0), make_probe(1.0, 5.0), 1.0);
    CHECK_THROWS_AS(s.at(1.5), DomainError);
}

TEST_CASE("debug dump of scaled coefficients") {
    auto s = psi_layered(LayerStack({0.5}, {1, 4}), make_probe(1.0, 10.0));
    std::ostringstream out;
    s.write_debug_csv(out);
    std::string text = out.str();
    CHECK(text.rfind("j,re_A,im_A,re_B,im_B\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
