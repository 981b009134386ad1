#include "vcmo/tank.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace vcmo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string range_message(double bias, double lo, double hi) {
    std::ostringstream os;
    os << "varactor bias " << bias << " V outside valid range [" << lo << ", " << hi << "] V";
    return os.str();
}

std::string pole_message(double f, double f_pole) {
    std::ostringstream os;
    os << "tank evaluation at " << f << " Hz hits the arm pole near " << f_pole << " Hz";
    return os.str();
}

void check_positive(double v, const char* what) {
    if (!std::isfinite(v) || v <= 0.0)
        throw std::domain_error(std::string("tank: ") + what + " must be positive");
}

// Series arm impedance (r_l + jwL) || 1/(jwC_p).
Complex arm_impedance(const TankConfig& t, double c_p_f, double f_hz) {
    const double w = kTwoPi * f_hz;
    const Complex zl(t.r_l_ohm, w * t.l_h);
    const Complex denom = 1.0 + zl * Complex(0.0, w * c_p_f);
    return zl / denom;
}

}  // namespace

BiasRangeError::BiasRangeError(double bias, double lo, double hi)
    : std::out_of_range(range_message(bias, lo, hi)), bias_v(bias), v_min_v(lo), v_max_v(hi) {}

TankPoleError::TankPoleError(double f, double f_pole)
    : std::domain_error(pole_message(f, f_pole)), f_hz(f), f_pole_hz(f_pole) {}

double varactor_capacitance(const VaractorModel& v, double bias_v) {
    if (!(bias_v >= v.v_min_v && bias_v <= v.v_max_v))
        throw BiasRangeError(bias_v, v.v_min_v, v.v_max_v);
    if (v.m == 0.0) return v.c_j0_f;
    return v.c_j0_f / std::pow(1.0 + bias_v / v.v_j_v, v.m);
}

VaractorModel varactor_from_endpoints(double c_lo, double c_hi, double v_j, double v_min,
                                      double v_max) {
    check_positive(c_lo, "varactor endpoint capacitance");
    check_positive(c_hi, "varactor endpoint capacitance");
    check_positive(v_j, "varactor junction potential");
    if (!(v_min < v_max)) throw std::domain_error("varactor: v_min must be below v_max");
    if (!(c_hi < c_lo))
        throw std::domain_error("varactor: capacitance must decrease from v_min to v_max");
    const double ratio = std::log(c_lo / c_hi);
    const double span = std::log((1.0 + v_max / v_j) / (1.0 + v_min / v_j));
    VaractorModel v;
    v.m = ratio / span;
    v.c_j0_f = c_lo * std::pow(1.0 + v_min / v_j, v.m);
    v.v_j_v = v_j;
    v.v_min_v = v_min;
    v.v_max_v = v_max;
    return v;
}

VaractorModel constant_varactor(double c_f, double v_min, double v_max) {
    check_positive(c_f, "constant varactor capacitance");
    return VaractorModel{c_f, 0.7, 0.0, v_min, v_max};
}

VaractorModel default_varactor() {
    return varactor_from_endpoints(22.62e-12, 1.3e-12, 0.7, 0.0, 8.0);
}

Abcd tank_abcd(const TankConfig& t, double bias_v, double f_hz) {
    check_positive(t.l_h, "inductance");
    check_positive(t.c_s_f, "shunt capacitance");
    if (!(f_hz > 0.0) || !std::isfinite(f_hz))
        throw std::domain_error("tank_abcd: f must be positive");
    const double c_p = varactor_capacitance(t.varactor, bias_v);
    const double f_pole = 1.0 / (kTwoPi * std::sqrt(t.l_h * c_p));
    if (t.r_l_ohm == 0.0 && std::abs(f_hz - f_pole) <= kPoleGuardRel * f_pole)
        throw TankPoleError(f_hz, f_pole);

    const Complex z = arm_impedance(t, c_p, f_hz);
    const Complex y(0.0, kTwoPi * f_hz * t.c_s_f);
    return Abcd{1.0 + z * y, z, y * (2.0 + y * z), 1.0 + z * y};
}

Complex tank_transfer(const TankConfig& t, double bias_v, double f_hz, Complex z_source,
                      Complex z_load) {
    if (z_source.real() < 0.0)
        throw std::domain_error("tank_transfer: Re(z_source) must be >= 0");
    if (!(z_load.real() > 0.0))
        throw std::domain_error("tank_transfer: Re(z_load) must be > 0");
    const Abcd m = tank_abcd(t, bias_v, f_hz);
    return z_load / (m[0] * z_load + m[1] + m[2] * z_source * z_load + m[3] * z_source);
}

double through_reactance(const TankConfig& t, double bias_v, double f_hz) {
    const double c_p = varactor_capacitance(t.varactor, bias_v);
    const double w = kTwoPi * f_hz;
    return arm_impedance(t, c_p, f_hz).imag() - 2.0 / (w * t.c_s_f);
}

TankResonances tank_resonances(const TankConfig& t, double bias_v) {
    check_positive(t.l_h, "inductance");
    check_positive(t.c_s_f, "shunt capacitance");
    const double c_p = varactor_capacitance(t.varactor, bias_v);
    TankResonances res;
    res.f_p_t_hz = 1.0 / (kTwoPi * std::sqrt(t.l_h * c_p));

    // Lower crossing of the through reactance: negative at DC, diverging
    // positive at the arm pole, so a single bisection bracket suffices.
    double lo = res.f_p_t_hz * 1e-6;
    double hi = res.f_p_t_hz * (1.0 - 1e-9);
    for (int i = 0; i < 300 && (hi - lo) > 1e-9 * res.f_p_t_hz * 1e-3; ++i) {
        const double mid = 0.5 * (lo + hi);
        (through_reactance(t, bias_v, mid) < 0.0 ? lo : hi) = mid;
    }
    res.f_s_t_hz = 0.5 * (lo + hi);
    res.bw_hz = res.f_p_t_hz - res.f_s_t_hz;
    return res;
}

double tank_fs_closed_form(const TankConfig& t, double bias_v) {
    const double c_p = varactor_capacitance(t.varactor, bias_v);
    return 1.0 / (kTwoPi * std::sqrt(t.l_h * (c_p + 0.5 * t.c_s_f)));
}

const char* region_name(Region r) {
    switch (r) {
        case Region::R1: return "R1";
        case Region::R2: return "R2";
        case Region::R3: return "R3";
        case Region::R4: return "R4";
    }
    return "?";
}

Region classify_region(double f_hz, const TankResonances& res, double tol) {
    if (!(f_hz > 0.0)) throw std::domain_error("classify_region: f must be positive");
    if (!(tol > 0.0 && tol < 0.1))
        throw std::invalid_argument("classify_region: tol must lie in (0, 0.1)");
    if (f_hz < res.f_s_t_hz * (1.0 - tol)) return Region::R1;
    if (std::abs(f_hz - res.f_s_t_hz) <= tol * res.f_s_t_hz) return Region::R2;
    if (f_hz < res.f_p_t_hz) return Region::R3;
    return Region::R4;
}

TankConfig default_tank() {
    return TankConfig{18e-9, 8.4e-12, default_varactor(), 0.0};
}

}  // namespace vcmo
