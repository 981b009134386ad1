#include "vcmo/phase_noise.hpp"

#include <cmath>
#include <stdexcept>

namespace vcmo {

namespace {

void check_positive(double v, const char* what) {
    if (!std::isfinite(v) || v <= 0.0)
        throw std::domain_error(std::string("phase_noise: ") + what +
                                " must be positive (got " + std::to_string(v) + ")");
}

}  // namespace

double loaded_q(const MotionalBranch& branch, double r_external_ohm) {
    if (!std::isfinite(r_external_ohm) || r_external_ohm < 0.0)
        throw std::domain_error("loaded_q: r_external must be >= 0");
    return branch.q * branch.r_m_ohm / (branch.r_m_ohm + r_external_ohm);
}

double leeson(const LeesonParams& p, double f_carrier_hz, double offset_hz) {
    check_positive(p.p_sig_w, "p_sig");
    check_positive(p.q_loaded, "q_loaded");
    check_positive(f_carrier_hz, "f_carrier");
    check_positive(offset_hz, "offset");
    if (p.f_flicker_hz < 0.0) throw std::domain_error("leeson: f_flicker must be >= 0");

    const double f_lin = std::pow(10.0, p.noise_factor_db / 10.0);
    const double floor = 2.0 * f_lin * kBoltzmannJPerK * kNoiseRefTempK / p.p_sig_w;
    const double leeson_term = f_carrier_hz / (2.0 * p.q_loaded * offset_hz);
    const double flicker_term = 1.0 + p.f_flicker_hz / offset_hz;
    return 10.0 * std::log10(floor * (1.0 + leeson_term * leeson_term) * flicker_term);
}

double fom_vcmo(double l_dbchz, double f_o_hz, double offset_hz, double p_dc_w) {
    check_positive(f_o_hz, "f_o");
    check_positive(offset_hz, "offset");
    check_positive(p_dc_w, "p_dc");
    return -l_dbchz + 20.0 * std::log10(f_o_hz / offset_hz) -
           10.0 * std::log10(p_dc_w / 1e-3);
}

std::vector<PhaseNoisePoint> phase_noise_profile(const LeesonParams& p, double f_carrier_hz,
                                                 const std::vector<double>& offset_grid_hz) {
    if (offset_grid_hz.empty())
        throw std::invalid_argument("phase_noise_profile: empty offset grid");
    for (std::size_t i = 1; i < offset_grid_hz.size(); ++i)
        if (!(offset_grid_hz[i] > offset_grid_hz[i - 1]))
            throw std::invalid_argument("phase_noise_profile: grid must be ascending");
    std::vector<PhaseNoisePoint> out;
    out.reserve(offset_grid_hz.size());
    for (double off : offset_grid_hz) out.push_back({off, leeson(p, f_carrier_hz, off)});
    return out;
}

LeesonParams calibrate_leeson(double anchor_l_dbchz, double f_carrier_hz,
                              double anchor_offset_hz, double q_loaded,
                              double f_flicker_hz, double p_sig_w) {
    LeesonParams p{0.0, p_sig_w, q_loaded, f_flicker_hz};
    const double at_zero_f = leeson(p, f_carrier_hz, anchor_offset_hz);
    p.noise_factor_db = anchor_l_dbchz - at_zero_f;
    return p;
}

}  // namespace vcmo
