#include <doctest.h>

#include <cmath>
#include <random>

#include "quadcool/atomic_model.hpp"
#include "quadcool/constants.hpp"

using namespace quadcool;
namespace kc = quadcool::constants;

TEST_CASE("lande g-factors") {
    CHECK(lande_g(2, 0.5, 2.5) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(lande_g(0, 0.5, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(lande_g(1, 0.5, 0.5) == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(lande_g(1, 0.5, 1.5) == doctest::Approx(4.0 / 3).epsilon(1e-12));
    CHECK(lande_g(2, 0.5, 1.5) == doctest::Approx(0.8).epsilon(1e-12));

    auto s = build_ca40_scheme();
    // stored g matches the Lande formula; S1/2 carries the free-electron-like
    // correction and is allowed to deviate at the 1e-3 level
    for (const auto& l : s.levels) {
        double ref = lande_g(l.L, l.S, l.J);
        if (l.id == LevelId::S12) {
            CHECK(l.g == doctest::Approx(2.002).epsilon(1e-12));
            CHECK(std::abs(l.g - ref) < 0.0025);
        } else {
            CHECK(l.g == doctest::Approx(ref).epsilon(1e-12));
        }
    }
}

TEST_CASE("scheme branching fractions sum to one per upper level") {
    auto s = build_ca40_scheme();
    for (LevelId up : {LevelId::P12, LevelId::P32, LevelId::D32, LevelId::D52}) {
        double tot = 0;
        for (const auto& t : s.transitions)
            if (t.upper == up) tot += t.branching;
        CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
    }
    // total decay rate of P3/2 is its full linewidth
    CHECK(s.total_decay_rate(LevelId::P32) ==
          doctest::Approx(kc::gamma_p32).epsilon(1e-12));
    CHECK(s.total_decay_rate(LevelId::S12) == 0.0);
}

TEST_CASE("transition lookup by wavelength") {
    auto s = build_ca40_scheme();
    CHECK(s.transition_at(729e-9).upper == LevelId::D52);
    CHECK(s.transition_at(854.4e-9).upper == LevelId::P32);
    CHECK(s.transition_at(854.4e-9).lower == LevelId::D52);
    CHECK(s.find_transition(800e-9) == nullptr);
    CHECK_THROWS_AS((void)s.transition_at(800e-9), ModelError);
}

TEST_CASE("scheme text round-trip") {
    auto s = build_ca40_scheme();
    auto s2 = scheme_from_text(scheme_to_text(s));
    REQUIRE(s2.levels.size() == s.levels.size());
    REQUIRE(s2.transitions.size() == s.transitions.size());
    for (size_t i = 0; i < s.levels.size(); ++i) {
        CHECK(s2.levels[i].id == s.levels[i].id);
        CHECK(s2.levels[i].g == doctest::Approx(s.levels[i].g).epsilon(1e-14));
        CHECK(s2.levels[i].J == s.levels[i].J);
    }
    for (size_t i = 0; i < s.transitions.size(); ++i) {
        CHECK(s2.transitions[i].lambda ==
              doctest::Approx(s.transitions[i].lambda).epsilon(1e-14));
        CHECK(s2.transitions[i].gamma_upper_total ==
              doctest::Approx(s.transitions[i].gamma_upper_total).epsilon(1e-14));
        CHECK(s2.transitions[i].branching ==
              doctest::Approx(s.transitions[i].branching).epsilon(1e-14));
        CHECK(s2.transitions[i].kind == s.transitions[i].kind);
    }
    CHECK_THROWS_AS(scheme_from_text("bogus line\n"), ModelError);
}

TEST_CASE("rabi frequency from beam power") {
    // 729 nm, 250 mW focused to w = 50 um: Omega = 2pi x 1.1493 MHz
    // (I = 2P/(pi w^2) = 6.366e7 W/m^2, Isat = 4.723e-7 W/m^2)
    auto s = build_ca40_scheme();
    const auto& t729 = s.transition_at(729e-9);
    double om = rabi_from_power(0.25, 50e-6, t729.lambda, t729.gamma_partial());
    CHECK(om == doctest::Approx(7.2213e6).epsilon(1e-4));
    CHECK(saturation_intensity(729e-9, t729.gamma_partial()) ==
          doctest::Approx(4.7231e-7).epsilon(1e-4));

    // scaling: Omega ~ sqrt(P), Omega ~ 1/w
    double om4 = rabi_from_power(1.0, 50e-6, t729.lambda, t729.gamma_partial());
    CHECK(om4 == doctest::Approx(2 * om).epsilon(1e-12));
    double omw = rabi_from_power(0.25, 100e-6, t729.lambda, t729.gamma_partial());
    CHECK(omw == doctest::Approx(om / 2).epsilon(1e-12));

    // 854 nm, 1 mW at w = 280 um: Omega = 2pi x 55.81 MHz
    const auto& t854 = s.transition_at(854e-9);
    double om854 = rabi_from_power(1e-3, 280e-6, t854.lambda, t854.gamma_partial());
    CHECK(om854 == doctest::Approx(3.5067e8).epsilon(1e-4));

    CHECK_THROWS_AS(rabi_from_power(0.25, 0.0, 729e-9, 1.0), ModelError);
    CHECK_THROWS_AS(rabi_from_power(-1.0, 50e-6, 729e-9, 1.0), ModelError);
}

TEST_CASE("zeeman line enumeration on the 729 nm line") {
    auto s = build_ca40_scheme();
    auto lines = enumerate_zeeman_lines(s, s.transition_at(729e-9));
    CHECK(lines.size() == 10);

    // m = -1/2 -> m' = -3/2: c = 1.2*(-3/2) - 2.002*(-1/2) = -0.799
    // at B = 1.2 G the shift is -2pi x 1.34196 MHz
    bool found = false;
    for (const auto& l : lines) {
        if (l.two_ml == -1 && l.two_mu == -3) {
            found = true;
            CHECK(l.shift_coeff == doctest::Approx(-0.799).epsilon(1e-12));
            CHECK(l.delta_m() == -1);
            CHECK(zeeman_shift(l, 1.2e-4) / kc::two_pi ==
                  doctest::Approx(-1.34196e6).epsilon(1e-5));
        }
        if (l.two_ml == -1 && l.two_mu == 1) {
            // c = 1.2*(1/2) + 2.002*(1/2) = 1.601 -> +2.68896 MHz at 1.2 G
            CHECK(l.shift_coeff == doctest::Approx(1.601).epsilon(1e-12));
            CHECK(zeeman_shift(l, 1.2e-4) / kc::two_pi ==
                  doctest::Approx(2.68896e6).epsilon(1e-5));
        }
    }
    CHECK(found);
    CHECK(zeeman_shift(lines[0], 0.0) == 0.0);

    // dipole line has |delta_m| <= 1: S1/2-P3/2 has 2x4 minus two forbidden = 6
    auto dl = enumerate_zeeman_lines(s, s.transition_at(393e-9));
    CHECK(dl.size() == 6);
}

TEST_CASE("quadrupole geometry factors") {
    Vec3 z = Vec3::UnitZ(), x = Vec3::UnitX(), y = Vec3::UnitY();

    SUBCASE("B parallel to k selects delta_m = +-1 only") {
        for (const Vec3& pol : {x, y, Vec3(1, 1, 0).normalized()}) {
            CHECK(quadrupole_geometry_factor(z, z, pol, 0) ==
                  doctest::Approx(0.0).epsilon(1e-12));
            CHECK(quadrupole_geometry_factor(z, z, pol, 2) ==
                  doctest::Approx(0.0).epsilon(1e-12));
            CHECK(quadrupole_geometry_factor(z, z, pol, -2) ==
                  doctest::Approx(0.0).epsilon(1e-12));
            double g1 = quadrupole_geometry_factor(z, z, pol, 1);
            double gm1 = quadrupole_geometry_factor(z, z, pol, -1);
            CHECK(g1 == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
            CHECK(gm1 == doctest::Approx(g1).epsilon(1e-12));
        }
    }

    SUBCASE("sum of squared factors over the five channels is 1/3") {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int it = 0; it < 50; ++it) {
            Vec3 k(u(rng), u(rng), u(rng));
            if (k.norm() < 0.1) continue;
            k.normalize();
            Vec3 b(u(rng), u(rng), u(rng));
            if (b.norm() < 0.1) continue;
            b.normalize();
            Vec3 pol = k.cross(Vec3(u(rng), u(rng), u(rng)));
            if (pol.norm() < 0.1) continue;
            pol.normalize();
            double tot = 0;
            for (int dm = -2; dm <= 2; ++dm) {
                double g = quadrupole_geometry_factor(b, k, pol, dm);
                CHECK(g >= 0.0);
                CHECK(g <= 1.0);
                tot += g * g;
            }
            CHECK(tot == doctest::Approx(1.0 / 3).epsilon(1e-10));
        }
    }

    SUBCASE("45 degrees, polarization in plane: delta_m 0 and 2 active") {
        Vec3 kdir = Vec3(1, 0, 1).normalized();
        Vec3 pol = Vec3(1, 0, -1).normalized();  // in (k,B) plane, transverse
        double g0 = quadrupole_geometry_factor(z, kdir, pol, 0);
        CHECK(g0 == doctest::Approx(0.5).epsilon(1e-12));  // |cos g sin 2phi|/2
        double g1 = quadrupole_geometry_factor(z, kdir, pol, 1);
        CHECK(g1 == doctest::Approx(0.0).epsilon(1e-12));  // cos 2phi = 0
        double g2 = quadrupole_geometry_factor(z, kdir, pol, 2);
        CHECK(g2 == doctest::Approx(0.5 / std::sqrt(6.0)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(quadrupole_geometry_factor(z, z, z, 1), ModelError);
    CHECK(quadrupole_geometry_factor(z, z, x, 5) == 0.0);
}

TEST_CASE("beam helpers") {
    LaserBeam b;
    b.lambda = 729e-9;
    b.power = 0.25;
    b.waist = 50e-6;
    b.dir = Vec3(0, 0, 2);
    CHECK(b.k_vec().norm() == doctest::Approx(kc::two_pi / 729e-9).epsilon(1e-12));
    CHECK(b.intensity() == doctest::Approx(6.3662e7).epsilon(1e-4));
    b.rabi_override = 123.0;
    CHECK(b.rabi(1.0) == 123.0);
    CHECK_THROWS_AS(Polarization::linear(Vec3::Zero()), ModelError);
}
