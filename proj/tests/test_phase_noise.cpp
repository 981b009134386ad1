#include <doctest.h>

#include <cmath>

#include "vcmo/phase_noise.hpp"
#include "vcmo/resonator.hpp"

using namespace vcmo;
using doctest::Approx;

TEST_CASE("loaded_q") {
    const auto tone1 = branch_from_spec(305e6, 1650, 122);
    const auto tone6 = branch_from_spec(415e6, 1970, 130);
    CHECK(loaded_q(tone1, 0.0) == Approx(1650.0));
    CHECK(loaded_q(tone1, 122.0) == Approx(825.0));
    CHECK(loaded_q(tone6, 3.0 * 130.0) == Approx(492.5));
    CHECK_THROWS_AS(loaded_q(tone1, -1.0), std::domain_error);
}

TEST_CASE("leeson") {
    LeesonParams p{10.0, 1e-3, 825.0, 0.0};
    const double f_c = 300e6;
    SUBCASE("flat floor far beyond the Leeson corner and flicker corner") {
        const double floor_db =
            10.0 * std::log10(2.0 * std::pow(10.0, p.noise_factor_db / 10.0) *
                              kBoltzmannJPerK * kNoiseRefTempK / p.p_sig_w);
        CHECK(leeson(p, f_c, 1e12) == Approx(floor_db).epsilon(1e-6));
    }
    SUBCASE("-20 dB/dec region rises 6.02 dB per halving") {
        // Both offsets deep inside the 1/f^2 region.
        const double corner = f_c / (2.0 * p.q_loaded);
        const double off = corner / 100.0;
        const double rise = leeson(p, f_c, off / 2.0) - leeson(p, f_c, off);
        CHECK(rise == Approx(6.02).epsilon(0.017));
    }
    SUBCASE("-30 dB/dec region with a flicker corner") {
        LeesonParams pf{10.0, 1e-3, 825.0, 100.0};
        const double slope =
            (leeson(pf, f_c, 10.0) - leeson(pf, f_c, 1.0)) / 1.0;  // per decade
        CHECK(slope == Approx(-30.0).epsilon(0.034));
    }
    SUBCASE("offset must be positive") {
        CHECK_THROWS_AS(leeson(p, f_c, 0.0), std::domain_error);
        CHECK_THROWS_AS(leeson(p, f_c, -1e3), std::domain_error);
    }
}

TEST_CASE("fom_vcmo") {
    SUBCASE("published 1 kHz point: 200 dBc/Hz") {
        CHECK(fom_vcmo(-100.0, 300e6, 1e3, 9e-3) == Approx(200.0).epsilon(1e-9));
    }
    SUBCASE("published noise-floor point: 193 dBc/Hz") {
        CHECK(fom_vcmo(-153.0, 300e6, 1e6, 9e-3) == Approx(193.0).epsilon(1e-9));
    }
    SUBCASE("all terms vanish") {
        CHECK(fom_vcmo(0.0, 1e6, 1e6, 1e-3) == Approx(0.0));
    }
    SUBCASE("domain errors on non-positive inputs") {
        CHECK_THROWS_AS(fom_vcmo(-100.0, 0.0, 1e3, 9e-3), std::domain_error);
        CHECK_THROWS_AS(fom_vcmo(-100.0, 300e6, -1e3, 9e-3), std::domain_error);
        CHECK_THROWS_AS(fom_vcmo(-100.0, 300e6, 1e3, 0.0), std::domain_error);
    }
}

TEST_CASE("phase_noise_profile") {
    const LeesonParams p = calibrate_leeson(-100.0, 300e6, 1e3, 825.0, 100.0, 1e-3);
    SUBCASE("calibration anchors the curve") {
        CHECK(leeson(p, 300e6, 1e3) == Approx(-100.0).epsilon(1e-9));
    }
    SUBCASE("singleton grid equals leeson") {
        const auto prof = phase_noise_profile(p, 300e6, {1e3});
        REQUIRE(prof.size() == 1);
        CHECK(prof[0].value_dbchz == Approx(leeson(p, 300e6, 1e3)));
    }
    SUBCASE("1 MHz point sits within 3 dB of the model floor") {
        const double floor_db =
            10.0 * std::log10(2.0 * std::pow(10.0, p.noise_factor_db / 10.0) *
                              kBoltzmannJPerK * kNoiseRefTempK / p.p_sig_w);
        CHECK(std::abs(leeson(p, 300e6, 1e6) - floor_db) < 3.0);
    }
    SUBCASE("doubling p_sig drops every point by 3.01 dB") {
        LeesonParams p2 = p;
        p2.p_sig_w *= 2.0;
        for (double off : {10.0, 1e3, 1e5, 1e7}) {
            CHECK(leeson(p2, 300e6, off) - leeson(p, 300e6, off) ==
                  Approx(-10.0 * std::log10(2.0)).epsilon(1e-9));
        }
    }
    SUBCASE("monotone non-increasing for any valid params") {
        std::vector<double> grid;
        for (double off = 1.0; off < 1e8; off *= 1.25) grid.push_back(off);
        for (double flicker : {0.0, 50.0, 5e3}) {
            LeesonParams q{8.0, 5e-4, 1200.0, flicker};
            const auto prof = phase_noise_profile(q, 415e6, grid);
            for (std::size_t i = 1; i < prof.size(); ++i)
                CHECK(prof[i].value_dbchz <= prof[i - 1].value_dbchz + 1e-12);
        }
    }
}

TEST_CASE("fom_vcmo linearity invariants") {
    const double base = fom_vcmo(-100.0, 300e6, 1e3, 9e-3);
    CHECK(fom_vcmo(-110.0, 300e6, 1e3, 9e-3) == Approx(base + 10.0).epsilon(1e-12));
    CHECK(fom_vcmo(-100.0, 300e6, 1e3, 90e-3) == Approx(base - 10.0).epsilon(1e-12));
}

TEST_CASE("leeson asymptotic slope suite") {
    // f_flicker far below the Leeson corner so all three segments exist.
    const double q_loaded = 825.0;
    const double f_c = 300e6;
    const double corner = f_c / (2.0 * q_loaded);  // ~181.8 kHz
    const LeesonParams p = calibrate_leeson(-100.0, f_c, 1e3, q_loaded, 100.0, 1e-3);
    REQUIRE(p.f_flicker_hz < corner);

    auto slope_per_decade = [&](double lo) {
        return leeson(p, f_c, lo * 10.0) - leeson(p, f_c, lo);
    };
    CHECK(slope_per_decade(1.0) == Approx(-30.0).epsilon(1.0 / 30.0));
    CHECK(slope_per_decade(corner / 100.0) == Approx(-20.0).epsilon(1.0 / 20.0));
    CHECK(std::abs(slope_per_decade(corner * 100.0)) < 1.0);
}
