#pragma once

// Test-side oracles and dataset synthesis. Everything here is independent of
// the library code paths it is used to check.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "vcmo/fit.hpp"
#include "vcmo/resonator.hpp"
#include "vcmo/tank.hpp"

namespace testsupport {

using vcmo::Complex;

// Node admittance matrix of the pi tank (ground implicit as the third node).
inline std::array<Complex, 4> tank_y_matrix(const vcmo::TankConfig& t, double c_p_f,
                                            double f_hz) {
    const double w = 2.0 * std::numbers::pi * f_hz;
    const Complex y_arm = 1.0 / Complex(t.r_l_ohm, w * t.l_h) + Complex(0.0, w * c_p_f);
    const Complex y_cs(0.0, w * t.c_s_f);
    return {y_cs + y_arm, -y_arm, -y_arm, y_cs + y_arm};  // {Y11, Y12, Y21, Y22}
}

// ABCD derived from the nodal matrix, independent of the library's
// shunt*series*shunt construction.
inline std::array<Complex, 4> tank_abcd_oracle(const vcmo::TankConfig& t, double c_p_f,
                                               double f_hz) {
    const auto y = tank_y_matrix(t, c_p_f, f_hz);
    const Complex det = y[0] * y[3] - y[1] * y[2];
    return {-y[3] / y[2], -1.0 / y[2], -det / y[2], -y[0] / y[2]};
}

// Terminated gain by direct nodal solve of the two-node network with a
// Norton-equivalent source (requires Re(z_source) > 0).
inline Complex tank_transfer_oracle(const vcmo::TankConfig& t, double c_p_f, double f_hz,
                                    Complex z_source, Complex z_load) {
    const auto y = tank_y_matrix(t, c_p_f, f_hz);
    // KCL with a Norton source at node 1 and the load at node 2, unit EMF:
    //   (Y11 + 1/Zs) v1 + Y12 v2 = 1/Zs
    //    Y21 v1 + (Y22 + 1/Zl) v2 = 0
    const Complex a = y[0] + 1.0 / z_source;
    const Complex b = y[1];
    const Complex c = y[2];
    const Complex d = y[3] + 1.0 / z_load;
    return -c / (z_source * (a * d - b * c));
}

inline vcmo::AdmittanceDataset synthesize(const vcmo::MbvdResonator& r, double f_lo_hz,
                                          double f_hi_hz, double step_hz,
                                          double noise_sigma = 0.0,
                                          unsigned long long seed = 20240305ULL) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::pair<double, Complex>> pts;
    for (double f = f_lo_hz; f <= f_hi_hz + 1e-6; f += step_hz) {
        Complex y = vcmo::resonator_admittance(r, f);
        if (noise_sigma > 0.0)
            y *= 1.0 + noise_sigma * Complex(gauss(rng), gauss(rng));
        pts.emplace_back(f, y);
    }
    return vcmo::make_dataset(std::move(pts), "synthetic(" + r.label + ")");
}

}  // namespace testsupport
