#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace vcmo {

using Complex = std::complex<double>;

// One acoustic mode expressed as a series-RLC motional branch.
// l_m and c_m are derived from (f_m, q, r_m) at construction and satisfy
// 1/(2*pi*sqrt(l_m*c_m)) == f_m to better than 1 part in 1e9.
struct MotionalBranch {
    double f_m_hz = 0.0;   // series resonance
    double q = 0.0;        // unloaded quality factor
    double r_m_ohm = 0.0;  // motional resistance
    double l_m_h = 0.0;    // q*r_m/(2*pi*f_m)
    double c_m_f = 0.0;    // 1/((2*pi*f_m)^2 * l_m)
};

// Throws std::domain_error naming the offending field on non-positive or
// non-finite input.
MotionalBranch branch_from_spec(double f_m_hz, double q, double r_m_ohm);

// Series-RLC branch admittance. Throws std::domain_error for f <= 0.
Complex branch_admittance(const MotionalBranch& b, double f_hz);

inline constexpr std::size_t kMaxBranches = 64;
inline constexpr double kBranchSeparationHz = 1e3;

// Static electrode capacitance in parallel with one motional branch per mode.
// Branches are kept sorted ascending by f_m; no two branches may sit within
// kBranchSeparationHz of each other.
struct MbvdResonator {
    double c0_f = 0.0;
    std::vector<MotionalBranch> branches;
    std::string label;
};

// Validating factory: sorts branches, enforces c0 > 0, branch count and
// separation. Throws std::domain_error / std::length_error on violation.
MbvdResonator make_resonator(double c0_f, std::vector<MotionalBranch> branches,
                             std::string label = "");

// Y(f) = j*w*c0 + sum of branch admittances.
Complex resonator_admittance(const MbvdResonator& r, double f_hz);

// Pointwise admittance over an ascending positive grid; output order matches
// input. Throws std::invalid_argument on an empty or unsorted grid.
std::vector<std::pair<double, Complex>> admittance_sweep(
    const MbvdResonator& r, const std::vector<double>& f_grid_hz);

struct ModeMetrics {
    double f_s_hz = 0.0;     // branch series resonance
    double f_p_hz = 0.0;     // single-branch antiresonance f_s*sqrt(1 + c_m/c0)
    double k_eff_sq = 0.0;   // (f_p^2 - f_s^2)/f_p^2
    double fom = 0.0;        // q * k_eff_sq
};

// Single-branch approximation (neighbour branches ignored).
// Throws std::out_of_range for a bad index.
ModeMetrics mode_metrics(const MbvdResonator& r, std::size_t branch_index);

// Optional numeric refinement of the antiresonance: the root of Im(Y) = 0
// above f_s using the full multi-branch network.
double antiresonance_numeric(const MbvdResonator& r, std::size_t branch_index);

// c0 is not reported for the measured device; this default is an assumed
// placeholder, overridable wherever a resonator is configured.
inline constexpr double kLobarDefaultC0F = 0.5e-12;

// Ten-overtone preset: (f_m, Q, R_m) rows for the 300-500 MHz family.
MbvdResonator lobar_table1(double c0_f = kLobarDefaultC0F);

}  // namespace vcmo
