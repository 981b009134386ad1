#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "vcmo/loop.hpp"

using namespace vcmo;
using doctest::Approx;

namespace {

// Bias that puts the tank series resonance on a given frequency, from the
// closed forms (inverted junction model); independent of the loop solver.
double bias_for_fs(const TankConfig& t, double f_s_hz) {
    const double c_need =
        1.0 / (t.l_h * std::pow(2.0 * std::numbers::pi * f_s_hz, 2)) - 0.5 * t.c_s_f;
    const VaractorModel& v = t.varactor;
    return (std::pow(v.c_j0_f / c_need, 1.0 / v.m) - 1.0) * v.v_j_v;
}

}  // namespace

TEST_CASE("stage_response") {
    CHECK(stage_response(GainStage{-4.0, std::nullopt, 0, 1}, 1e9) == Complex(-4.0, 0.0));
    const Complex g = stage_response(GainStage{2.0, 1e9, 0, 1}, 1e9);
    CHECK(std::abs(g) == Approx(2.0 / std::numbers::sqrt2).epsilon(1e-12));
    CHECK(std::arg(g) == Approx(-std::numbers::pi / 4).epsilon(1e-12));
}

TEST_CASE("loop_transfer") {
    SUBCASE("degenerate config: tank and resonator as through-connections") {
        LoopConfig cfg{{GainStage{2.0, std::nullopt, 50.0, 50.0}}, std::nullopt, std::nullopt};
        for (double f : {1.0, 1e6, 305e6, 2e9}) {
            const auto g = loop_transfer(cfg, 0.0, f);
            REQUIRE(g.has_value());
            CHECK(*g == Complex(2.0, 0.0));
        }
    }
    SUBCASE("on-tone gain exceeds 5 MHz-detuned gain by at least 6 dB") {
        const LoopConfig cfg = default_loop_config();
        const double bias = 0.65;  // tank band holds tone 1
        const double on = std::abs(*loop_transfer(cfg, bias, 305e6));
        const double below = std::abs(*loop_transfer(cfg, bias, 300e6));
        const double above = std::abs(*loop_transfer(cfg, bias, 310e6));
        CHECK(20.0 * std::log10(on / below) >= 6.0);
        CHECK(20.0 * std::log10(on / above) >= 6.0);
    }
    SUBCASE("Region 4 tone: no phase crossing in a +-2 MHz window") {
        const LoopConfig cfg = default_loop_config();
        const double bias = 1.0;
        const auto res = tank_resonances(*cfg.tank, bias);
        REQUIRE(res.f_p_t_hz < 458e6);  // tone 8 sits in Region 4 here
        const auto scan = find_phase_zeros(cfg, bias, 458e6, 462e6, 10e3);
        CHECK(scan.zeros.empty());
        CHECK_FALSE(scan.phase_identically_zero);
    }
    SUBCASE("tank pole evaluations are flagged, not thrown") {
        LoopConfig cfg = default_loop_config();
        cfg.tank = TankConfig{18e-9, 8.4e-12, constant_varactor(4e-12), 0.0};
        const double f_pole = 1.0 / (2.0 * std::numbers::pi * std::sqrt(18e-9 * 4e-12));
        CHECK_FALSE(loop_transfer(cfg, 0.0, f_pole).has_value());
        CHECK(loop_transfer(cfg, 0.0, f_pole * 1.01).has_value());
    }
}

TEST_CASE("find_phase_zeros") {
    SUBCASE("flat positive loop reports the degenerate everywhere-zero condition") {
        LoopConfig cfg{{GainStage{2.0, std::nullopt, 50.0, 50.0}}, std::nullopt, std::nullopt};
        const auto scan = find_phase_zeros(cfg, 0.0, 1e6, 1e9, 1e6);
        CHECK(scan.phase_identically_zero);
        CHECK(scan.zeros.empty());
    }
    SUBCASE("grid-step precondition names the required step") {
        const LoopConfig cfg = default_loop_config();
        // Tone 1 needs <= f_m/Q/8 = 23.1 kHz.
        CHECK_THROWS_WITH_AS(find_phase_zeros(cfg, 0.65, 290e6, 320e6, 1e6),
                             doctest::Contains("require"), std::invalid_argument);
    }
    SUBCASE("at the lowest locking bias the only live crossing is tone 1") {
        const LoopConfig cfg = default_loop_config();
        const double bias = 0.60;
        const auto scan = find_phase_zeros(cfg, bias, 290e6, 320e6, 20e3);
        int live = 0;
        for (const auto& z : scan.zeros) {
            if (z.gain_mag >= 1.0) {
                ++live;
                CHECK(std::abs(z.f_hz / 305e6 - 1.0) < 0.005);
            }
        }
        CHECK(live == 1);
    }
    SUBCASE("with f_s_t on 415 MHz the crossing nearest f_s_t carries the largest gain") {
        const LoopConfig cfg = default_loop_config();
        const double bias = bias_for_fs(*cfg.tank, 415e6);
        const auto res = tank_resonances(*cfg.tank, bias);
        REQUIRE(res.f_s_t_hz == Approx(415e6).epsilon(1e-3));
        const auto scan = find_phase_zeros(cfg, bias, 300e6, 500e6, 10e3);
        REQUIRE(!scan.zeros.empty());
        const PhaseZero* best = &scan.zeros[0];
        const PhaseZero* nearest = &scan.zeros[0];
        for (const auto& z : scan.zeros) {
            if (z.gain_mag > best->gain_mag) best = &z;
            if (std::abs(z.f_hz - res.f_s_t_hz) < std::abs(nearest->f_hz - res.f_s_t_hz))
                nearest = &z;
        }
        CHECK(best == nearest);
        CHECK(std::abs(best->f_hz - res.f_s_t_hz) < 1e6);
    }
}

TEST_CASE("predict_oscillation") {
    const LoopConfig cfg = default_loop_config();

    SUBCASE("gain condition unsatisfiable when stages are scaled down") {
        LoopConfig weak = cfg;
        for (auto& s : weak.stages) s.a0 *= 0.01;
        CHECK_FALSE(predict_oscillation(weak, 2.5).has_value());
    }
    SUBCASE("lowest locking bias selects mode 1") {
        std::optional<OscillationSolution> first;
        for (double bias = 0.0; bias <= 1.0 && !first; bias += 0.05)
            first = predict_oscillation(cfg, bias);
        REQUIRE(first.has_value());
        CHECK(first->mode_index == 1);
        CHECK(std::abs(first->f_osc_hz / 305e6 - 1.0) < 0.005);
    }
    SUBCASE("top of the bias range selects tone 10 within 0.5%") {
        const auto sol = predict_oscillation(cfg, 8.0);
        REQUIRE(sol.has_value());
        CHECK(sol->mode_index == 10);
        CHECK(std::abs(sol->f_osc_hz / 505e6 - 1.0) < 0.005);
    }
    SUBCASE("Barkhausen soundness of reported solutions") {
        for (double bias : {0.65, 2.549, 5.0, 8.0}) {
            const auto sol = predict_oscillation(cfg, bias);
            REQUIRE(sol.has_value());
            const auto g = loop_transfer(cfg, bias, sol->f_osc_hz);
            REQUIRE(g.has_value());
            CHECK(std::abs(std::arg(*g)) < 1e-6);
            CHECK(std::abs(*g) >= 1.0);
            CHECK(sol->gain_margin_db >= 0.0);
            CHECK(sol->phase_slope_rad_per_hz < 0.0);
        }
    }
    SUBCASE("no frequency-selective element yields none") {
        LoopConfig bare{{GainStage{2.0, std::nullopt, 50.0, 50.0}}, std::nullopt,
                        std::nullopt};
        CHECK_FALSE(predict_oscillation(bare, 0.0).has_value());
    }
    SUBCASE("tank-only loop oscillates as a plain LC oscillator") {
        // Without the resonator nothing blocks the tank's own phase transit;
        // the predicted frequency rides the tank resonance and mode_index is
        // 0 (no tone to attribute it to).
        LoopConfig lc = cfg;
        lc.resonator.reset();
        const auto sol = predict_oscillation(lc, 2.0);
        REQUIRE(sol.has_value());
        CHECK(sol->mode_index == 0);
        const auto res = tank_resonances(*lc.tank, 2.0);
        CHECK(sol->f_osc_hz > res.f_s_t_hz * 0.9);
        CHECK(sol->f_osc_hz < res.f_p_t_hz);
    }
}

TEST_CASE("tuning_sweep") {
    SUBCASE("constant-capacitance varactor tunes nothing and never hops") {
        LoopConfig cfg = default_loop_config();
        cfg.tank->varactor = constant_varactor(10.93e-12);  // f_s_t parked on tone 1
        std::vector<double> grid;
        for (double b = 0.0; b <= 8.0; b += 0.5) grid.push_back(b);
        const auto points = tuning_sweep(cfg, grid);
        double f_ref = 0.0;
        for (const auto& p : points) {
            REQUIRE(p.solution.has_value());
            CHECK_FALSE(p.hop);
            if (f_ref == 0.0) f_ref = p.solution->f_osc_hz;
            CHECK(p.solution->f_osc_hz == Approx(f_ref).epsilon(1e-9));
        }
    }
    SUBCASE("coarse default sweep: ten plateaus, nine hops of 20 +- 5 MHz") {
        const LoopConfig cfg = default_loop_config();
        std::vector<double> grid;
        for (double b = 0.0; b <= 8.0 + 1e-9; b += 0.1) grid.push_back(b);
        const auto points = tuning_sweep(cfg, grid);

        int plateaus = 0, prev_mode = -1, hops = 0;
        double prev_f = 0.0;
        for (const auto& p : points) {
            if (!p.solution) continue;
            if (p.solution->mode_index != prev_mode) {
                ++plateaus;
                if (prev_mode > 0) {
                    CHECK(p.hop);
                    const double hop_mhz = (p.solution->f_osc_hz - prev_f) / 1e6;
                    CHECK(hop_mhz >= 15.0);
                    CHECK(hop_mhz <= 25.0);
                    ++hops;
                }
            } else {
                CHECK_FALSE(p.hop);
            }
            prev_mode = p.solution->mode_index;
            prev_f = p.solution->f_osc_hz;
        }
        CHECK(plateaus == 10);
        CHECK(hops == 9);
        CHECK(hops <= static_cast<int>(cfg.resonator->branches.size()) - 1);
    }
    SUBCASE("within one plateau f_osc rises monotonically with small total pulling") {
        const LoopConfig cfg = default_loop_config();
        std::vector<double> grid;
        for (double b = 2.4; b <= 2.8 + 1e-9; b += 0.05) grid.push_back(b);
        const auto points = tuning_sweep(cfg, grid);
        double prev = 0.0, lo = 1e18, hi = 0.0;
        for (const auto& p : points) {
            REQUIRE(p.solution.has_value());
            CHECK(p.solution->mode_index == 6);
            CHECK(p.solution->f_osc_hz > prev);
            prev = p.solution->f_osc_hz;
            lo = std::min(lo, p.solution->f_osc_hz);
            hi = std::max(hi, p.solution->f_osc_hz);
        }
        CHECK(hi - lo < 2e6);  // pulling well below the 20 MHz tone spacing
    }
    SUBCASE("grid validation") {
        const LoopConfig cfg = default_loop_config();
        CHECK_THROWS_AS(tuning_sweep(cfg, {1.0}), std::invalid_argument);
        CHECK_THROWS_AS(tuning_sweep(cfg, {2.0, 1.0}), std::invalid_argument);
    }
}

TEST_CASE("loop_response_export") {
    const LoopConfig cfg = default_loop_config();
    SUBCASE("singleton grid matches loop_transfer") {
        const auto rows = loop_response_export(cfg, 2.5, {415e6});
        REQUIRE(rows.size() == 1);
        const auto g = loop_transfer(cfg, 2.5, 415e6);
        CHECK(rows[0].gain_db == Approx(20.0 * std::log10(std::abs(*g))).epsilon(1e-12));
        CHECK(rows[0].phase_deg ==
              Approx(std::arg(*g) * 180.0 / std::numbers::pi).epsilon(1e-12));
    }
    SUBCASE("three biases place the gain maximum near three different overtones") {
        std::vector<double> grid;
        for (double f = 250e6; f <= 630e6; f += 250e3) grid.push_back(f);
        const double biases[3] = {0.65, 2.549, 8.0};
        const double expect_mhz[3] = {305.0, 415.0, 505.0};
        for (int i = 0; i < 3; ++i) {
            const auto rows = loop_response_export(cfg, biases[i], grid);
            const LoopResponsePoint* best = &rows[0];
            for (const auto& r : rows)
                if (r.gain_db > best->gain_db) best = &r;
            CHECK(std::abs(best->f_hz / 1e6 - expect_mhz[i]) < 2.0);
        }
    }
    SUBCASE("at the bias range endpoints the gain maximum stays in the inductive band") {
        std::vector<double> grid;
        for (double f = 200e6; f <= 650e6; f += 250e3) grid.push_back(f);
        for (double bias : {0.0, 8.0}) {
            const auto rows = loop_response_export(cfg, bias, grid);
            const LoopResponsePoint* best = &rows[0];
            for (const auto& r : rows)
                if (r.gain_db > best->gain_db) best = &r;
            const auto res = tank_resonances(*cfg.tank, bias);
            const Region reg = classify_region(best->f_hz, res);
            CHECK((reg == Region::R2 || reg == Region::R3));
        }
    }
    SUBCASE("phase comes out unwrapped") {
        std::vector<double> grid;
        for (double f = 250e6; f <= 630e6; f += 100e3) grid.push_back(f);
        const auto rows = loop_response_export(cfg, 2.549, grid);
        for (std::size_t i = 1; i < rows.size(); ++i)
            CHECK(std::abs(rows[i].phase_deg - rows[i - 1].phase_deg) < 180.0);
    }
}

TEST_CASE("loop invariants") {
    const LoopConfig cfg = default_loop_config();

    SUBCASE("gain scaling leaves phase zeros in place and shifts margins exactly") {
        // Scale the loop-gain product by g = 10 (split evenly across stages).
        LoopConfig scaled = cfg;
        const double per_stage = std::pow(10.0, 1.0 / double(scaled.stages.size()));
        for (auto& s : scaled.stages) s.a0 *= per_stage;
        for (double bias : {0.65, 2.549, 8.0}) {
            const auto a = predict_oscillation(cfg, bias);
            const auto b = predict_oscillation(scaled, bias);
            REQUIRE(a.has_value());
            REQUIRE(b.has_value());
            CHECK(std::abs(a->f_osc_hz - b->f_osc_hz) <= 1.0);
            CHECK(b->gain_margin_db - a->gain_margin_db == Approx(20.0).epsilon(5e-4));
        }
    }
    SUBCASE("every reported oscillation classifies Region 2 or 3") {
        for (double bias = 0.2; bias <= 8.0; bias += 0.4) {
            const auto sol = predict_oscillation(cfg, bias);
            if (!sol) continue;
            const auto res = tank_resonances(*cfg.tank, bias);
            const Region reg = classify_region(sol->f_osc_hz, res);
            CHECK((reg == Region::R2 || reg == Region::R3));
        }
    }
    SUBCASE("stage validation") {
        CHECK_THROWS_AS(validate(LoopConfig{{}, std::nullopt, std::nullopt}),
                        std::domain_error);
        CHECK_THROWS_AS(
            validate(LoopConfig{{GainStage{0.0, std::nullopt, 0, 1}}, std::nullopt,
                                std::nullopt}),
            std::domain_error);
        CHECK_THROWS_AS(
            validate(LoopConfig{{GainStage{1.0, std::nullopt, 0, 0}}, std::nullopt,
                                std::nullopt}),
            std::domain_error);
    }
}
