#include "vcmo/loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace vcmo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_pm_pi(double a) {
    a = std::fmod(a + std::numbers::pi, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a - std::numbers::pi;
}

Complex resonator_series_impedance(const MbvdResonator& r, double f_hz) {
    return 1.0 / resonator_admittance(r, f_hz);
}

// arg(G) continued from a known unwrapped reference nearby.
double continued_phase(Complex g, double reference) {
    const double wrapped = std::arg(g);
    return wrapped + kTwoPi * std::round((reference - wrapped) / kTwoPi);
}

}  // namespace

Complex stage_response(const GainStage& s, double f_hz) {
    if (!s.f_pole_hz) return Complex(s.a0, 0.0);
    return s.a0 / Complex(1.0, f_hz / *s.f_pole_hz);
}

void validate(const LoopConfig& cfg) {
    if (cfg.stages.empty()) throw std::domain_error("loop: at least one stage required");
    for (const auto& s : cfg.stages) {
        if (s.a0 == 0.0 || !std::isfinite(s.a0))
            throw std::domain_error("loop: stage a0 must be nonzero and finite");
        if (s.f_pole_hz && !(*s.f_pole_hz > 0.0))
            throw std::domain_error("loop: stage f_pole must be positive when present");
        if (s.r_out_ohm < 0.0) throw std::domain_error("loop: stage r_out must be >= 0");
        if (!(s.r_in_ohm > 0.0)) throw std::domain_error("loop: stage r_in must be > 0");
    }
}

std::optional<Complex> loop_transfer(const LoopConfig& cfg, double bias_v, double f_hz) {
    validate(cfg);
    if (!(f_hz > 0.0) || !std::isfinite(f_hz))
        throw std::domain_error("loop_transfer: f must be positive");

    Complex g(1.0, 0.0);
    for (const auto& s : cfg.stages) g *= stage_response(s, f_hz);

    const double r_out = cfg.stages.back().r_out_ohm;
    const double r_in = cfg.stages.front().r_in_ohm;

    Complex z_res(0.0, 0.0);
    if (cfg.resonator) z_res = resonator_series_impedance(*cfg.resonator, f_hz);

    if (cfg.tank) {
        try {
            g *= tank_transfer(*cfg.tank, bias_v, f_hz, Complex(r_out, 0.0),
                               z_res + Complex(r_in, 0.0));
        } catch (const TankPoleError&) {
            return std::nullopt;
        }
        if (cfg.resonator) g *= r_in / (z_res + r_in);
    } else if (cfg.resonator) {
        g *= r_in / (r_out + z_res + r_in);
    }
    return g;
}

double required_grid_step(const LoopConfig& cfg, double f_lo_hz, double f_hi_hz) {
    double step = std::numeric_limits<double>::infinity();
    if (!cfg.resonator) return step;
    for (const auto& b : cfg.resonator->branches) {
        if (b.f_m_hz >= f_lo_hz && b.f_m_hz <= f_hi_hz)
            step = std::min(step, b.f_m_hz / b.q / 8.0);
    }
    return step;
}

PhaseZeroScan find_phase_zeros(const LoopConfig& cfg, double bias_v, double f_lo_hz,
                               double f_hi_hz, double grid_step_hz) {
    validate(cfg);
    if (!(f_lo_hz > 0.0) || !(f_lo_hz < f_hi_hz))
        throw std::invalid_argument("find_phase_zeros: need 0 < f_lo < f_hi");
    if (!(grid_step_hz > 0.0))
        throw std::invalid_argument("find_phase_zeros: grid step must be positive");
    const double required = required_grid_step(cfg, f_lo_hz, f_hi_hz);
    if (grid_step_hz > required) {
        std::ostringstream os;
        os << "find_phase_zeros: grid step " << grid_step_hz
           << " Hz too coarse; in-band modes require <= " << required << " Hz";
        throw std::invalid_argument(os.str());
    }

    struct Sample {
        double f;
        Complex g;
        double phase;  // unwrapped
    };

    PhaseZeroScan scan;
    const std::size_t n =
        static_cast<std::size_t>(std::ceil((f_hi_hz - f_lo_hz) / grid_step_hz)) + 1;

    std::vector<Sample> seg;
    seg.reserve(n);
    double max_abs_phase = 0.0;
    bool any_sample = false;

    auto record_zero = [&](double f_root, Complex g_root) {
        PhaseZero z;
        z.f_hz = f_root;
        z.gain_mag = std::abs(g_root);
        const double h = 1.0;
        const auto gl = loop_transfer(cfg, bias_v, f_root - h);
        const auto gr = loop_transfer(cfg, bias_v, f_root + h);
        if (gl && gr)
            z.phase_slope_rad_per_hz = wrap_pm_pi(std::arg(*gr) - std::arg(*gl)) / (2.0 * h);
        scan.zeros.push_back(z);
    };

    auto flush_segment = [&]() {
        for (std::size_t i = 1; i < seg.size(); ++i) {
            const double u0 = seg[i - 1].phase;
            const double u1 = seg[i].phase;
            const double lo = std::min(u0, u1);
            const double hi = std::max(u0, u1);
            for (long k = static_cast<long>(std::ceil(lo / kTwoPi - 1e-12));
                 k * kTwoPi <= hi + 1e-12; ++k) {
                const double target = k * kTwoPi;
                const double a = u0 - target;
                const double b = u1 - target;
                if (a == 0.0 && b != 0.0) {
                    record_zero(seg[i - 1].f, seg[i - 1].g);
                    continue;
                }
                if (a * b >= 0.0) continue;

                // Bisect on the phase continued from the left edge; the
                // unwrapped change across a grid cell is below pi, so the
                // nearest-multiple branch choice stays unambiguous.
                double fa = seg[i - 1].f, fb = seg[i].f;
                double ua = u0;
                double f_root = 0.5 * (fa + fb);
                for (int it = 0; it < 80 && (fb - fa) > 1e-4; ++it) {
                    const double fm = 0.5 * (fa + fb);
                    const auto gm = loop_transfer(cfg, bias_v, fm);
                    if (!gm) break;
                    const double um = continued_phase(*gm, ua);
                    if ((ua - target) * (um - target) <= 0.0) {
                        fb = fm;
                    } else {
                        fa = fm;
                        ua = um;
                    }
                    f_root = 0.5 * (fa + fb);
                }
                const auto g_final = loop_transfer(cfg, bias_v, f_root);
                record_zero(f_root, g_final ? *g_final : seg[i].g);
            }
        }
        seg.clear();
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::min(f_lo_hz + static_cast<double>(i) * grid_step_hz, f_hi_hz);
        const auto g = loop_transfer(cfg, bias_v, f);
        if (!g) {
            flush_segment();
            continue;
        }
        any_sample = true;
        Sample s;
        s.f = f;
        s.g = *g;
        s.phase = seg.empty() ? std::arg(*g) : continued_phase(*g, seg.back().phase);
        max_abs_phase = std::max(max_abs_phase, std::abs(wrap_pm_pi(s.phase)));
        seg.push_back(s);
    }
    flush_segment();

    if (any_sample && max_abs_phase < 1e-9) {
        scan.phase_identically_zero = true;
        scan.zeros.clear();
        return scan;
    }

    std::sort(scan.zeros.begin(), scan.zeros.end(),
              [](const PhaseZero& a, const PhaseZero& b) { return a.f_hz < b.f_hz; });
    // Collapse duplicates from crossings landing exactly on grid points.
    auto last = std::unique(scan.zeros.begin(), scan.zeros.end(),
                            [](const PhaseZero& a, const PhaseZero& b) {
                                return std::abs(a.f_hz - b.f_hz) < 0.5;
                            });
    scan.zeros.erase(last, scan.zeros.end());
    return scan;
}

std::optional<OscillationSolution> predict_oscillation(const LoopConfig& cfg, double bias_v) {
    validate(cfg);

    double f_lo = 0.0, f_hi = 0.0, step = 0.0;
    if (cfg.resonator && !cfg.resonator->branches.empty()) {
        f_lo = 0.8 * cfg.resonator->branches.front().f_m_hz;
        f_hi = 1.25 * cfg.resonator->branches.back().f_m_hz;
        step = 0.5 * required_grid_step(cfg, f_lo, f_hi);
    } else if (cfg.tank) {
        const TankResonances res = tank_resonances(*cfg.tank, bias_v);
        f_lo = std::max(1.0, 0.5 * res.f_s_t_hz);
        f_hi = 1.2 * res.f_p_t_hz;
        step = (f_hi - f_lo) / 8192.0;
    } else {
        return std::nullopt;  // no frequency-selective element in the loop
    }

    const PhaseZeroScan scan = find_phase_zeros(cfg, bias_v, f_lo, f_hi, step);
    if (scan.phase_identically_zero) return std::nullopt;

    const PhaseZero* best = nullptr;
    for (const auto& z : scan.zeros) {
        if (z.gain_mag < 1.0 || z.phase_slope_rad_per_hz >= 0.0) continue;
        if (!best || z.gain_mag > best->gain_mag) best = &z;
    }
    if (!best) return std::nullopt;

    OscillationSolution sol;
    sol.f_osc_hz = best->f_hz;
    sol.bias_v = bias_v;
    sol.gain_margin_db = 20.0 * std::log10(best->gain_mag);
    sol.phase_slope_rad_per_hz = best->phase_slope_rad_per_hz;
    sol.mode_index = 0;
    if (cfg.resonator) {
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cfg.resonator->branches.size(); ++i) {
            const double d = std::abs(cfg.resonator->branches[i].f_m_hz - sol.f_osc_hz);
            if (d < best_d) {
                best_d = d;
                sol.mode_index = static_cast<int>(i) + 1;
            }
        }
    }
    return sol;
}

std::vector<TuningPoint> tuning_sweep(const LoopConfig& cfg,
                                      const std::vector<double>& bias_grid_v) {
    validate(cfg);
    if (bias_grid_v.size() < 2)
        throw std::invalid_argument("tuning_sweep: need at least 2 bias points");
    for (std::size_t i = 1; i < bias_grid_v.size(); ++i)
        if (!(bias_grid_v[i] > bias_grid_v[i - 1]))
            throw std::invalid_argument("tuning_sweep: bias grid must be ascending");

    std::vector<TuningPoint> out;
    out.reserve(bias_grid_v.size());
    const OscillationSolution* prev = nullptr;
    for (double bias : bias_grid_v) {
        TuningPoint p;
        p.bias_v = bias;
        p.solution = predict_oscillation(cfg, bias);
        if (p.solution && prev && cfg.resonator) {
            if (p.solution->mode_index != prev->mode_index) {
                const double spacing =
                    std::abs(cfg.resonator->branches[p.solution->mode_index - 1].f_m_hz -
                             cfg.resonator->branches[prev->mode_index - 1].f_m_hz);
                p.hop = std::abs(p.solution->f_osc_hz - prev->f_osc_hz) > 0.5 * spacing;
            }
        }
        out.push_back(p);
        if (out.back().solution) prev = &*out.back().solution;
    }
    return out;
}

std::vector<LoopResponsePoint> loop_response_export(const LoopConfig& cfg, double bias_v,
                                                    const std::vector<double>& f_grid_hz) {
    validate(cfg);
    if (f_grid_hz.empty())
        throw std::invalid_argument("loop_response_export: empty frequency grid");
    for (std::size_t i = 1; i < f_grid_hz.size(); ++i)
        if (!(f_grid_hz[i] > f_grid_hz[i - 1]))
            throw std::invalid_argument("loop_response_export: grid must be ascending");

    std::vector<LoopResponsePoint> out;
    out.reserve(f_grid_hz.size());
    bool have_prev = false;
    double prev_phase = 0.0;
    for (double f : f_grid_hz) {
        const auto g = loop_transfer(cfg, bias_v, f);
        if (!g) continue;  // pole-flagged point
        const double phase = have_prev ? continued_phase(*g, prev_phase) : std::arg(*g);
        prev_phase = phase;
        have_prev = true;
        out.push_back({f, 20.0 * std::log10(std::abs(*g)), phase * 180.0 / std::numbers::pi});
    }
    return out;
}

std::vector<GainStage> default_stages() {
    // One inverting and one non-inverting block; the pi tank itself inverts at
    // its series resonance, so the loop needs a net stage inversion to close
    // the phase condition there. Values sized so every preset tone locks.
    return {GainStage{-3.0, 2e9, 300.0, 100.0}, GainStage{3.0, 2e9, 300.0, 100.0}};
}

LoopConfig default_loop_config() {
    return LoopConfig{default_stages(), default_tank(), lobar_table1()};
}

}  // namespace vcmo
