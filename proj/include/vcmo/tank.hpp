#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include "vcmo/resonator.hpp"

namespace vcmo {

// Graded-junction varactor C(V) = c_j0 / (1 + V/v_j)^m on [v_min, v_max].
// m == 0 is the documented constant-capacitance degenerate used for fixed-C_P
// analysis grids; for m > 0 the capacitance is strictly decreasing in bias.
struct VaractorModel {
    double c_j0_f = 0.0;
    double v_j_v = 0.7;
    double m = 0.0;
    double v_min_v = 0.0;
    double v_max_v = 0.0;
};

// Thrown when a bias lies outside the varactor's valid interval.
class BiasRangeError : public std::out_of_range {
public:
    BiasRangeError(double bias_v, double v_min_v, double v_max_v);
    double bias_v, v_min_v, v_max_v;
};

double varactor_capacitance(const VaractorModel& v, double bias_v);

// Solve (c_j0, m) so the model passes through two measured endpoints.
VaractorModel varactor_from_endpoints(double c_at_v_min_f, double c_at_v_max_f,
                                      double v_j_v = 0.7, double v_min_v = 0.0,
                                      double v_max_v = 8.0);

VaractorModel constant_varactor(double c_f, double v_min_v = 0.0, double v_max_v = 8.0);

// SMV1248-style default: 22.62 pF at 0 V down to 1.3 pF at 8 V.
VaractorModel default_varactor();

// Pi network: parallel L||C_P in the series arm, one C_S shunted to ground at
// each port. r_l_ohm is an optional series resistance on the inductor
// (0 = lossless default).
struct TankConfig {
    double l_h = 0.0;
    double c_s_f = 0.0;
    VaractorModel varactor;
    double r_l_ohm = 0.0;
};

// Relative guard band around the arm pole; evaluations inside it are flagged.
inline constexpr double kPoleGuardRel = 1e-6;

class TankPoleError : public std::domain_error {
public:
    TankPoleError(double f_hz, double f_pole_hz);
    double f_hz, f_pole_hz;
};

using Abcd = std::array<Complex, 4>;  // {A, B, C, D}

// Transmission matrix shunt(C_S) * series(Z_arm) * shunt(C_S).
// Throws TankPoleError within kPoleGuardRel of the lossless arm pole.
Abcd tank_abcd(const TankConfig& t, double bias_v, double f_hz);

// Terminated two-port voltage gain V_load / V_source_emf.
Complex tank_transfer(const TankConfig& t, double bias_v, double f_hz,
                      Complex z_source_ohm, Complex z_load_ohm);

// Reactance of the port-to-port path seen by the loop:
// Im(Z_arm) - 2/(w*C_S). Negative below f_s_t, positive in (f_s_t, f_p_t).
double through_reactance(const TankConfig& t, double bias_v, double f_hz);

struct TankResonances {
    double f_s_t_hz = 0.0;  // series resonance (through-reactance sign change)
    double f_p_t_hz = 0.0;  // arm pole 1/(2*pi*sqrt(L*C_P))
    double bw_hz = 0.0;     // f_p_t - f_s_t
};

// f_p_t from the closed form, f_s_t found numerically.
TankResonances tank_resonances(const TankConfig& t, double bias_v);

// Closed-form cross-check 1/(2*pi*sqrt(L*(C_P + C_S/2))).
double tank_fs_closed_form(const TankConfig& t, double bias_v);

enum class Region { R1, R2, R3, R4 };
const char* region_name(Region r);

// Default width of the Region 2 alignment band. 4% reflects the coupling
// range over which a tone actually stays locked in the calibrated loop while
// still separating adjacent overtones (>= 4.6% apart).
inline constexpr double kDefaultRegionTol = 0.04;

// R1: f < f_s_t*(1-tol); R2: |f - f_s_t| <= tol*f_s_t;
// R3: f_s_t*(1+tol) < f < f_p_t; R4: f >= f_p_t.
Region classify_region(double f_hz, const TankResonances& res, double tol = kDefaultRegionTol);

// L per the CCI1008HQ part; C_S calibrated so the 0-8 V varactor
// span walks f_s_t across all ten overtones.
TankConfig default_tank();

}  // namespace vcmo
