#pragma once

#include <optional>
#include <vector>

#include "vcmo/resonator.hpp"
#include "vcmo/tank.hpp"

namespace vcmo {

// Unilateral gain block: ideal EMF source a0/(1 + j f/f_pole) with resistive
// ports. r_out loads whatever element the stage drives; r_in terminates
// whatever element drives the stage. Stage-to-stage connections are ideal.
struct GainStage {
    double a0 = 0.0;                      // low-frequency voltage gain (sign = inversion)
    std::optional<double> f_pole_hz;      // single-pole corner; absent = flat
    double r_out_ohm = 0.0;
    double r_in_ohm = 0.0;
};

Complex stage_response(const GainStage& s, double f_hz);

// Loop order: stages (in order) -> tank -> resonator -> first stage input.
// An absent tank or resonator is a through-connection. With both present the
// chain EMF -- r_out(last) -- [tank] -- Z_res -- r_in(first) is solved
// exactly: the tank sees z_load = Z_res + r_in and the resonator insertion is
// the divider r_in/(Z_res + r_in).
struct LoopConfig {
    std::vector<GainStage> stages;
    std::optional<TankConfig> tank;
    std::optional<MbvdResonator> resonator;
};

void validate(const LoopConfig& cfg);

// Complex loop gain; nullopt flags an evaluation inside the tank pole guard.
std::optional<Complex> loop_transfer(const LoopConfig& cfg, double bias_v, double f_hz);

struct PhaseZero {
    double f_hz = 0.0;
    double gain_mag = 0.0;                 // |G| at the crossing
    double phase_slope_rad_per_hz = 0.0;   // d(arg G)/df
};

struct PhaseZeroScan {
    bool phase_identically_zero = false;   // degenerate all-pass loop
    std::vector<PhaseZero> zeros;
};

// Largest grid step that still places >= 8 samples across each in-band
// mode's 3 dB bandwidth; +inf when no resonator mode lies in the span.
double required_grid_step(const LoopConfig& cfg, double f_lo_hz, double f_hi_hz);

// All frequencies where the unwrapped arg(G) crosses a multiple of 2*pi,
// each refined by bisection well below 1 Hz. Throws std::invalid_argument
// when the grid is too coarse for the in-band modes.
PhaseZeroScan find_phase_zeros(const LoopConfig& cfg, double bias_v, double f_lo_hz,
                               double f_hi_hz, double grid_step_hz);

struct OscillationSolution {
    double f_osc_hz = 0.0;
    int mode_index = 0;                    // 1-based tone number of the nearest
                                           // branch; 0 with no resonator present
    double bias_v = 0.0;
    double gain_margin_db = 0.0;           // 20*log10|G| at f_osc
    double phase_slope_rad_per_hz = 0.0;
};

// Among phase zeros with |G| >= 1 and negative phase slope, the one with
// maximum |G|; none when no candidate qualifies.
std::optional<OscillationSolution> predict_oscillation(const LoopConfig& cfg, double bias_v);

struct TuningPoint {
    double bias_v = 0.0;
    std::optional<OscillationSolution> solution;
    bool hop = false;  // jump from the previous solved point by more than half
                       // the local overtone spacing
};

std::vector<TuningPoint> tuning_sweep(const LoopConfig& cfg,
                                      const std::vector<double>& bias_grid_v);

struct LoopResponsePoint {
    double f_hz = 0.0;
    double gain_db = 0.0;
    double phase_deg = 0.0;  // unwrapped along the grid
};

// Pointwise loop response for plotting; pole-flagged grid points are skipped.
std::vector<LoopResponsePoint> loop_response_export(const LoopConfig& cfg, double bias_v,
                                                    const std::vector<double>& f_grid_hz);

// Calibrated defaults: two stages (one inverting) sized so the ten-overtone
// preset locks on every tone across the 0-8 V sweep. Calibration values, not
// component data.
std::vector<GainStage> default_stages();
LoopConfig default_loop_config();

}  // namespace vcmo
