#include <catch2/catch_amalgamated.hpp>

#include <quadom/model.hpp>

#include "test_util.hpp"

using namespace quadom;
using Catch::Approx;

TEST_CASE("geometric coupling constant and equal-frequency ratio") {
    // pi^2/3 + 1/4
    REQUIRE(coupling_geometry == Approx(3.5398681336964529).epsilon(1e-15));

    auto p = test_util::reference_params();
    const auto d = derive_params(p);
    // rho at Omega = omega is half the geometric constant
    REQUIRE(d.rho == Approx(1.7699340668482264).epsilon(1e-14));
    REQUIRE(d.rho == Approx(0.5 * coupling_geometry).epsilon(1e-15));
}

TEST_CASE("critical frequency ratio") {
    const double r = critical_frequency_ratio();
    REQUIRE(r == Approx(0.5 * std::sqrt(coupling_geometry)).epsilon(1e-15));
    REQUIRE(std::abs(r - 0.94073) < 1e-4);
    REQUIRE(r == Approx(0.94072686441076681).epsilon(1e-12));
}

TEST_CASE("derived couplings at the reference point") {
    auto p = test_util::reference_params();
    const auto d = derive_params(p);

    // beta = rho*eps/2 = (K/4)*eps; at eps = 2pi*5 Hz this is 2pi*4.42484 Hz
    REQUIRE(d.beta / two_pi == Approx(4.4248351671205661).epsilon(1e-12));
    REQUIRE(d.beta == Approx(0.5 * d.rho * p.epsilon).epsilon(1e-15));
    REQUIRE(d.zeta / two_pi == Approx(9.4248351671205661).epsilon(1e-12));
    REQUIRE(d.chi / two_pi == Approx(0.5751648328794339).epsilon(1e-11));

    REQUIRE(d.omega_eff / two_pi == Approx(720006.92483516712).epsilon(1e-14));
    REQUIRE(d.Omega_eff / two_pi == Approx(720004.42483516712).epsilon(1e-14));

    REQUIRE(rho_active(p, d) == Approx(d.rho).epsilon(1e-15));
}

TEST_CASE("coupling ratio scales with the square of the frequency ratio") {
    auto p = test_util::reference_params();
    const double rho1 = derive_params(p).rho;
    p.Omega_bare *= 2.0;
    REQUIRE(derive_params(p).rho == Approx(4.0 * rho1).epsilon(1e-14));
    p.Omega_bare = test_util::reference_params().Omega_bare * 0.56;
    REQUIRE(derive_params(p).rho == Approx(0.56 * 0.56 * rho1).epsilon(1e-14));
}

TEST_CASE("beta is proportional to epsilon at fixed geometry") {
    auto p = test_util::reference_params();
    const auto d1 = derive_params(p);
    p.epsilon *= 100.0;
    const auto d2 = derive_params(p);
    REQUIRE(d2.beta == Approx(100.0 * d1.beta).epsilon(1e-14));
    REQUIRE(d2.rho == Approx(d1.rho).epsilon(1e-15));  // rho is geometry only
}

TEST_CASE("disabling the momentum interaction zeroes beta consistently") {
    auto p = test_util::reference_params();
    p.include_nonstandard = false;
    const auto d = derive_params(p);
    REQUIRE(d.beta == 0.0);
    REQUIRE(d.zeta == p.epsilon);
    REQUIRE(d.chi == p.epsilon);
    REQUIRE(d.omega_eff == Approx(p.omega_bare + 0.5 * p.epsilon).epsilon(1e-15));
    REQUIRE(d.Omega_eff == p.Omega_bare);
    REQUIRE(rho_active(p, d) == 0.0);
    REQUIRE(d.rho > 0.0);  // reporting value survives the toggle
}

TEST_CASE("thermal occupancy of the mechanical mode") {
    // 720 kHz at 40 mK sits deep in the classical regime
    const double n_th = thermal_occupancy(two_pi * 720000.0, 0.04);
    REQUIRE(n_th == Approx(1157.08).margin(0.05));
    REQUIRE(std::abs(n_th - 1157.0) < 1.0);

    REQUIRE(thermal_occupancy(two_pi * 720000.0, 0.0) == 0.0);

    // classical limit: n_th ~ kT/(hbar Omega) - 1/2
    const double W = two_pi * 1000.0;
    const double T = 300.0;
    const double classical = k_boltzmann * T / (hbar * W) - 0.5;
    REQUIRE(thermal_occupancy(W, T) == Approx(classical).epsilon(1e-6));

    // deep quantum limit: n_th ~ exp(-hbar Omega / kT)
    const double Wq = two_pi * 1e12;
    const double Tq = 0.5;
    const double xq = hbar * Wq / (k_boltzmann * Tq);
    REQUIRE(thermal_occupancy(Wq, Tq) == Approx(std::exp(-xq)).epsilon(1e-3));
}

TEST_CASE("validation names the offending field") {
    auto expect_field = [](SystemParams p, const std::string& field) {
        try {
            validate(p);
            FAIL("expected invalid_parameter for " + field);
        } catch (const invalid_parameter& e) {
            REQUIRE(e.field == field);
        }
    };

    auto p = test_util::reference_params();
    REQUIRE_NOTHROW(validate(p));

    { auto q = p; q.omega_bare = 0.0; expect_field(q, "omega_bare"); }
    { auto q = p; q.omega_bare = -1.0; expect_field(q, "omega_bare"); }
    { auto q = p; q.Omega_bare = 0.0; expect_field(q, "Omega_bare"); }
    { auto q = p; q.kappa = 0.0; expect_field(q, "kappa"); }
    { auto q = p; q.Gamma = 0.0; expect_field(q, "Gamma"); }
    { auto q = p; q.epsilon = -1.0; expect_field(q, "epsilon"); }
    { auto q = p; q.alpha_mag = -1.0; expect_field(q, "alpha_mag"); }
    { auto q = p; q.temperature = -0.1; expect_field(q, "temperature"); }
    { auto q = p; q.alpha_phase = std::nan(""); expect_field(q, "alpha_phase"); }
    { auto q = p; q.omega_bare = std::numeric_limits<double>::infinity();
      expect_field(q, "omega_bare"); }

    // overdamped configurations are rejected
    { auto q = p; q.kappa = q.omega_bare; expect_field(q, "kappa"); }
    { auto q = p; q.Gamma = q.Omega_bare * 2.0; expect_field(q, "Gamma"); }

    // epsilon = 0 and alpha = 0 are legal parameter points
    { auto q = p; q.epsilon = 0.0; REQUIRE_NOTHROW(validate(q)); }
    { auto q = p; q.alpha_mag = 0.0; REQUIRE_NOTHROW(validate(q)); }
}
