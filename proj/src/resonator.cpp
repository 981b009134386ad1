#include "vcmo/resonator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace vcmo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_positive_finite(double v, const char* field, const char* op) {
    if (!std::isfinite(v) || v <= 0.0) {
        std::ostringstream os;
        os << op << ": " << field << " must be positive and finite (got " << v << ")";
        throw std::domain_error(os.str());
    }
}

}  // namespace

MotionalBranch branch_from_spec(double f_m_hz, double q, double r_m_ohm) {
    require_positive_finite(f_m_hz, "f_m", "branch_from_spec");
    require_positive_finite(q, "q", "branch_from_spec");
    require_positive_finite(r_m_ohm, "r_m", "branch_from_spec");

    const double w_m = kTwoPi * f_m_hz;
    MotionalBranch b;
    b.f_m_hz = f_m_hz;
    b.q = q;
    b.r_m_ohm = r_m_ohm;
    b.l_m_h = q * r_m_ohm / w_m;
    b.c_m_f = 1.0 / (w_m * w_m * b.l_m_h);

    const double f_check = 1.0 / (kTwoPi * std::sqrt(b.l_m_h * b.c_m_f));
    if (std::abs(f_check - f_m_hz) > 1e-9 * f_m_hz)
        throw std::logic_error("branch_from_spec: derived L/C inconsistent with f_m");
    return b;
}

Complex branch_admittance(const MotionalBranch& b, double f_hz) {
    if (!(f_hz > 0.0) || !std::isfinite(f_hz))
        throw std::domain_error("branch_admittance: f must be positive (got " +
                                std::to_string(f_hz) + ")");
    const double w = kTwoPi * f_hz;
    const double x = w * b.l_m_h - 1.0 / (w * b.c_m_f);
    return 1.0 / Complex(b.r_m_ohm, x);
}

MbvdResonator make_resonator(double c0_f, std::vector<MotionalBranch> branches,
                             std::string label) {
    require_positive_finite(c0_f, "c_0", "make_resonator");
    if (branches.size() > kMaxBranches)
        throw std::length_error("make_resonator: more than 64 branches");
    std::sort(branches.begin(), branches.end(),
              [](const MotionalBranch& a, const MotionalBranch& b) {
                  return a.f_m_hz < b.f_m_hz;
              });
    for (std::size_t i = 1; i < branches.size(); ++i) {
        if (branches[i].f_m_hz - branches[i - 1].f_m_hz < kBranchSeparationHz) {
            std::ostringstream os;
            os << "make_resonator: branches at " << branches[i - 1].f_m_hz << " Hz and "
               << branches[i].f_m_hz << " Hz are closer than " << kBranchSeparationHz
               << " Hz";
            throw std::domain_error(os.str());
        }
    }
    return MbvdResonator{c0_f, std::move(branches), std::move(label)};
}

Complex resonator_admittance(const MbvdResonator& r, double f_hz) {
    if (!(f_hz > 0.0) || !std::isfinite(f_hz))
        throw std::domain_error("resonator_admittance: f must be positive (got " +
                                std::to_string(f_hz) + ")");
    Complex y(0.0, kTwoPi * f_hz * r.c0_f);
    for (const auto& b : r.branches) y += branch_admittance(b, f_hz);
    return y;
}

std::vector<std::pair<double, Complex>> admittance_sweep(
    const MbvdResonator& r, const std::vector<double>& f_grid_hz) {
    if (f_grid_hz.empty())
        throw std::invalid_argument("admittance_sweep: empty frequency grid");
    for (std::size_t i = 0; i < f_grid_hz.size(); ++i) {
        if (!(f_grid_hz[i] > 0.0))
            throw std::invalid_argument("admittance_sweep: grid must be positive");
        if (i > 0 && f_grid_hz[i] <= f_grid_hz[i - 1])
            throw std::invalid_argument("admittance_sweep: grid must be strictly ascending");
    }
    std::vector<std::pair<double, Complex>> out;
    out.reserve(f_grid_hz.size());
    for (double f : f_grid_hz) out.emplace_back(f, resonator_admittance(r, f));
    return out;
}

ModeMetrics mode_metrics(const MbvdResonator& r, std::size_t branch_index) {
    if (branch_index >= r.branches.size())
        throw std::out_of_range("mode_metrics: branch index " +
                                std::to_string(branch_index) + " out of range");
    const MotionalBranch& b = r.branches[branch_index];
    ModeMetrics m;
    m.f_s_hz = b.f_m_hz;
    m.f_p_hz = b.f_m_hz * std::sqrt(1.0 + b.c_m_f / r.c0_f);
    m.k_eff_sq = (m.f_p_hz * m.f_p_hz - m.f_s_hz * m.f_s_hz) / (m.f_p_hz * m.f_p_hz);
    m.fom = b.q * m.k_eff_sq;
    return m;
}

double antiresonance_numeric(const MbvdResonator& r, std::size_t branch_index) {
    const ModeMetrics approx = mode_metrics(r, branch_index);
    // Bracket the upper Im(Y) = 0 crossing around the single-branch estimate.
    const double gap = approx.f_p_hz - approx.f_s_hz;
    double lo = approx.f_p_hz - 0.9 * gap;
    double hi = approx.f_p_hz + 2.0 * gap;
    auto im_y = [&](double f) { return resonator_admittance(r, f).imag(); };
    // Walk lo toward the antiresonance until Im(Y) < 0 (inside the inductive
    // dip, whose lower edge sits above f_s once the static susceptance is
    // accounted for).
    int guard = 0;
    while (im_y(lo) >= 0.0 && ++guard < 60) lo = approx.f_p_hz - (approx.f_p_hz - lo) * 0.5;
    if (im_y(lo) >= 0.0)
        throw std::runtime_error(
            "antiresonance_numeric: Im(Y) never crosses zero above this mode; the static "
            "susceptance exceeds the branch's inductive dip (under-coupled tone)");
    guard = 0;
    while (im_y(hi) <= 0.0 && ++guard < 60) hi += gap;
    for (int i = 0; i < 200 && (hi - lo) > 1e-6; ++i) {
        const double mid = 0.5 * (lo + hi);
        (im_y(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

MbvdResonator lobar_table1(double c0_f) {
    static constexpr double kFMhz[10] = {305, 325, 345, 370, 390, 415, 435, 460, 480, 505};
    static constexpr double kQ[10] = {1650, 1671, 1945, 1825, 1908, 1970, 2608, 2050, 2202, 3000};
    static constexpr double kRm[10] = {122, 225, 107, 115, 125, 130, 127, 147, 167, 175};
    std::vector<MotionalBranch> branches;
    branches.reserve(10);
    for (int i = 0; i < 10; ++i)
        branches.push_back(branch_from_spec(kFMhz[i] * 1e6, kQ[i], kRm[i]));
    return make_resonator(c0_f, std::move(branches), "lobar_table1");
}

}  // namespace vcmo
