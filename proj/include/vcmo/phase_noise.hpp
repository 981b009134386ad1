#pragma once

#include <vector>

#include "vcmo/resonator.hpp"

namespace vcmo {

inline constexpr double kBoltzmannJPerK = 1.380649e-23;
inline constexpr double kNoiseRefTempK = 290.0;

struct LeesonParams {
    double noise_factor_db = 0.0;  // amplifier excess noise figure
    double p_sig_w = 0.0;          // carrier power at the resonator
    double q_loaded = 0.0;
    double f_flicker_hz = 0.0;     // 1/f^3 corner; 0 disables the flicker term
};

// q_loaded = q * r_m / (r_m + r_external).
double loaded_q(const MotionalBranch& branch, double r_external_ohm);

// L(offset) = 10*log10[(2*F*kB*T/p_sig) * (1 + (f_c/(2*Q_L*offset))^2)
//                                       * (1 + f_flicker/offset)], T = 290 K.
double leeson(const LeesonParams& p, double f_carrier_hz, double offset_hz);

// Oscillator figure of merit: -L(df) + 20*log10(f_o/df) - 10*log10(p_dc/1 mW).
double fom_vcmo(double l_dbchz, double f_o_hz, double offset_hz, double p_dc_w);

struct PhaseNoisePoint {
    double offset_hz = 0.0;
    double value_dbchz = 0.0;
};

std::vector<PhaseNoisePoint> phase_noise_profile(const LeesonParams& p, double f_carrier_hz,
                                                 const std::vector<double>& offset_grid_hz);

// Fix noise_factor_db (for a given p_sig) so the model passes through one
// measured anchor point. The absolute curve is a fit, not a prediction.
LeesonParams calibrate_leeson(double anchor_l_dbchz, double f_carrier_hz,
                              double anchor_offset_hz, double q_loaded,
                              double f_flicker_hz = 100.0, double p_sig_w = 1e-3);

}  // namespace vcmo
