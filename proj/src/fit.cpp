#include "vcmo/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace vcmo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double db20(double mag) { return 20.0 * std::log10(mag); }

// Vertex of the parabola through three (x, y) samples.
double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d0 = (y1 - y0) / (x1 - x0);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double curv = (d1 - d0) / (x2 - x0);
    if (curv == 0.0) return x1;
    const double v = 0.5 * (x0 + x1 - d0 / curv);
    return std::clamp(v, x0, x2);
}

struct LogParams {
    std::vector<double> theta;  // ln c0, then (ln f, ln q, ln r) per branch

    static LogParams from_model(const MbvdResonator& m) {
        LogParams p;
        p.theta.push_back(std::log(m.c0_f));
        for (const auto& b : m.branches) {
            p.theta.push_back(std::log(b.f_m_hz));
            p.theta.push_back(std::log(b.q));
            p.theta.push_back(std::log(b.r_m_ohm));
        }
        return p;
    }

    std::size_t n_branches() const { return (theta.size() - 1) / 3; }

    // Model admittance straight from the parameters; far cheaper than
    // building a full resonator per evaluation.
    Complex admittance(double f_hz) const {
        const double w = kTwoPi * f_hz;
        Complex y(0.0, w * std::exp(theta[0]));
        for (std::size_t k = 0; k < n_branches(); ++k) {
            const double fm = std::exp(theta[1 + 3 * k]);
            const double q = std::exp(theta[2 + 3 * k]);
            const double r = std::exp(theta[3 + 3 * k]);
            const double wm = kTwoPi * fm;
            const double l = q * r / wm;
            const double c = 1.0 / (wm * wm * l);
            y += 1.0 / Complex(r, w * l - 1.0 / (w * c));
        }
        return y;
    }

    bool branch_spacing_ok() const {
        std::vector<double> fs;
        for (std::size_t k = 0; k < n_branches(); ++k)
            fs.push_back(std::exp(theta[1 + 3 * k]));
        std::sort(fs.begin(), fs.end());
        for (std::size_t i = 1; i < fs.size(); ++i)
            if (fs[i] - fs[i - 1] < kBranchSeparationHz) return false;
        return true;
    }

    MbvdResonator to_model(const std::string& label) const {
        std::vector<MotionalBranch> branches;
        for (std::size_t k = 0; k < n_branches(); ++k)
            branches.push_back(branch_from_spec(std::exp(theta[1 + 3 * k]),
                                                std::exp(theta[2 + 3 * k]),
                                                std::exp(theta[3 + 3 * k])));
        return make_resonator(std::exp(theta[0]), std::move(branches), label);
    }
};

// Plain Cholesky solve of (A + lambda*diag(A)) x = b; false when not SPD.
bool solve_damped(std::vector<double> a, std::vector<double> b, double lambda,
                  std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] *= (1.0 + lambda);
    // Cholesky factorization in place.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
        x[ii] = s / a[ii * n + ii];
    }
    return true;
}

}  // namespace

AdmittanceDataset make_dataset(std::vector<std::pair<double, Complex>> points,
                               std::string source) {
    if (points.size() < kMinDatasetPoints) {
        std::ostringstream os;
        os << "admittance dataset needs at least " << kMinDatasetPoints << " points, got "
           << points.size();
        throw std::invalid_argument(os.str());
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0))
            throw std::invalid_argument("admittance dataset: frequencies must be positive");
        if (i > 0 && points[i].first <= points[i - 1].first)
            throw std::invalid_argument(
                "admittance dataset: frequencies must be strictly ascending");
    }
    return AdmittanceDataset{std::move(points), std::move(source)};
}

PeakDetection detect_peaks(const AdmittanceDataset& d, double prominence_db) {
    if (!(prominence_db > 0.0))
        throw std::domain_error("detect_peaks: prominence must be positive");

    const std::size_t n = d.points.size();
    std::vector<double> mag_db(n);
    for (std::size_t i = 0; i < n; ++i) mag_db[i] = db20(std::abs(d.points[i].second));

    PeakDetection out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(mag_db[i] > mag_db[i - 1] && mag_db[i] >= mag_db[i + 1])) continue;

        // Topographic prominence: lowest saddle toward higher terrain.
        double left_min = mag_db[i], right_min = mag_db[i];
        for (std::size_t j = i; j-- > 0;) {
            if (mag_db[j] > mag_db[i]) break;
            left_min = std::min(left_min, mag_db[j]);
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (mag_db[j] > mag_db[i]) break;
            right_min = std::min(right_min, mag_db[j]);
        }
        const double prominence = mag_db[i] - std::max(left_min, right_min);
        if (prominence < prominence_db) continue;

        const double f_refined =
            parabola_vertex(d.points[i - 1].first, mag_db[i - 1], d.points[i].first,
                            mag_db[i], d.points[i + 1].first, mag_db[i + 1]);
        out.frequencies_hz.push_back(f_refined);

        // Samples inside the 3 dB drop around the peak.
        std::size_t count = 1;
        for (std::size_t j = i; j-- > 0 && mag_db[j] > mag_db[i] - 3.01;) ++count;
        for (std::size_t j = i + 1; j < n && mag_db[j] > mag_db[i] - 3.01; ++j) ++count;
        if (count < 5) {
            std::ostringstream os;
            os << "peak near " << f_refined
               << " Hz sampled by only " << count << " points across its bandwidth";
            out.warnings.push_back(os.str());
        }
    }
    return out;
}

MbvdResonator initial_guess(const AdmittanceDataset& d, const std::vector<double>& peaks_hz) {
    if (peaks_hz.empty()) throw std::invalid_argument("initial_guess: no peaks given");
    const double f_min = d.points.front().first;
    const double f_max = d.points.back().first;
    std::vector<double> peaks;
    for (double p : peaks_hz) {
        if (!(p >= f_min && p <= f_max))
            throw std::invalid_argument("initial_guess: peak outside dataset span");
        if (peaks.empty() || p - peaks.back() >= kBranchSeparationHz) peaks.push_back(p);
    }
    std::sort(peaks.begin(), peaks.end());

    const std::size_t n = d.points.size();
    auto nearest_index = [&](double f) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double dd = std::abs(d.points[i].first - f);
            if (dd < bd) {
                bd = dd;
                best = i;
            }
        }
        return best;
    };

    // Rough half-magnitude width per peak, used only for the exclusion radius.
    std::vector<double> rough_bw(peaks.size());
    for (std::size_t k = 0; k < peaks.size(); ++k) {
        const std::size_t ip = nearest_index(peaks[k]);
        const double level = std::abs(d.points[ip].second) / std::numbers::sqrt2;
        double f_lo = f_min, f_hi = f_max;
        for (std::size_t j = ip; j-- > 0;) {
            if (std::abs(d.points[j].second) < level) {
                f_lo = d.points[j].first;
                break;
            }
        }
        for (std::size_t j = ip + 1; j < n; ++j) {
            if (std::abs(d.points[j].second) < level) {
                f_hi = d.points[j].first;
                break;
            }
        }
        rough_bw[k] = std::max(f_hi - f_lo, peaks[k] * 1e-6);
    }

    // Static capacitance from the off-resonance Im(Y) slope (through origin).
    double num = 0.0, den = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = d.points[i].first;
        bool off = true;
        for (std::size_t k = 0; k < peaks.size(); ++k) {
            if (std::abs(f - peaks[k]) < 5.0 * rough_bw[k]) {
                off = false;
                break;
            }
        }
        if (!off) continue;
        const double w = kTwoPi * f;
        num += d.points[i].second.imag() * w;
        den += w * w;
        ++used;
    }
    if (used == 0 || den == 0.0)
        throw std::runtime_error(
            "initial_guess: no off-resonance points available; widen the measured span");
    const double c0 = num / den;
    if (!(c0 > 0.0))
        throw std::runtime_error("initial_guess: off-resonance slope gave non-positive c_0");

    // Per peak: subtract the static branch, then read r_m and the half-power
    // bandwidth from the motional response alone.
    std::vector<MotionalBranch> branches;
    for (std::size_t k = 0; k < peaks.size(); ++k) {
        auto branch_mag = [&](std::size_t i) {
            const double w = kTwoPi * d.points[i].first;
            return std::abs(d.points[i].second - Complex(0.0, w * c0));
        };
        std::size_t ip = nearest_index(peaks[k]);
        for (std::size_t j = ip > 3 ? ip - 3 : 0; j < std::min(ip + 4, n); ++j)
            if (branch_mag(j) > branch_mag(ip)) ip = j;

        const double peak_mag = branch_mag(ip);
        const double f_pk = d.points[ip].first;
        const double level = peak_mag / std::numbers::sqrt2;

        double f_lo = f_min, f_hi = f_max;
        for (std::size_t j = ip; j-- > 0;) {
            const double m = branch_mag(j);
            if (m < level) {
                const double m_in = branch_mag(j + 1);
                f_lo = d.points[j].first +
                       (d.points[j + 1].first - d.points[j].first) * (level - m) / (m_in - m);
                break;
            }
        }
        for (std::size_t j = ip + 1; j < n; ++j) {
            const double m = branch_mag(j);
            if (m < level) {
                const double m_in = branch_mag(j - 1);
                f_hi = d.points[j].first -
                       (d.points[j].first - d.points[j - 1].first) * (level - m) / (m_in - m);
                break;
            }
        }
        const double bw = f_hi - f_lo;
        if (!(bw > 0.0))
            throw std::runtime_error("initial_guess: failed to bracket half-power points");
        branches.push_back(branch_from_spec(f_pk, f_pk / bw, 1.0 / peak_mag));
    }
    return make_resonator(c0, std::move(branches), d.source);
}

FitResult refine_fit(const AdmittanceDataset& d, const MbvdResonator& init, int max_iter,
                     double tol) {
    if (max_iter < 1) throw std::invalid_argument("refine_fit: max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("refine_fit: tol must be positive");

    const std::size_t m = d.points.size();
    std::vector<double> w(m);  // 1/|Y_i|
    for (std::size_t i = 0; i < m; ++i) w[i] = 1.0 / std::abs(d.points[i].second);

    auto residual = [&](const LogParams& p, std::vector<double>& r) -> bool {
        r.resize(2 * m);
        for (std::size_t i = 0; i < m; ++i) {
            const Complex dy = p.admittance(d.points[i].first) - d.points[i].second;
            r[2 * i] = dy.real() * w[i];
            r[2 * i + 1] = dy.imag() * w[i];
            if (!std::isfinite(r[2 * i]) || !std::isfinite(r[2 * i + 1])) return false;
        }
        return true;
    };
    auto ssr_of = [](const std::vector<double>& r) {
        double s = 0.0;
        for (double v : r) s += v * v;
        return s;
    };

    LogParams p = LogParams::from_model(init);
    const std::size_t np = p.theta.size();

    std::vector<double> r0;
    if (!residual(p, r0))
        throw std::runtime_error("refine_fit: non-finite residual at the initial model");
    double ssr = ssr_of(r0);

    FitResult best;
    best.model = init;
    best.residual_rms = std::sqrt(ssr / static_cast<double>(m));
    best.iterations = 0;
    best.converged = false;
    if (best.residual_rms < 1e-12) {  // already optimal, zero-step convergence
        best.converged = true;
        return best;
    }

    double lambda = 1e-3;
    std::vector<double> jac(2 * m * np), jtj(np * np), g(np), delta, r_trial;

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        // Forward-difference Jacobian on the log parameters.
        const double h = 1e-6;
        for (std::size_t j = 0; j < np; ++j) {
            LogParams pj = p;
            pj.theta[j] += h;
            std::vector<double> rj;
            if (!residual(pj, rj))
                throw std::runtime_error("refine_fit: non-finite residual in Jacobian");
            for (std::size_t i = 0; i < 2 * m; ++i)
                jac[i * np + j] = (rj[i] - r0[i]) / h;
        }
        for (std::size_t a = 0; a < np; ++a) {
            g[a] = 0.0;
            for (std::size_t b = a; b < np; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < 2 * m; ++i)
                    s += jac[i * np + a] * jac[i * np + b];
                jtj[a * np + b] = jtj[b * np + a] = s;
            }
            for (std::size_t i = 0; i < 2 * m; ++i) g[a] += jac[i * np + a] * r0[i];
        }

        bool accepted = false;
        for (int reject = 0; reject < 40; ++reject) {
            std::vector<double> rhs(np);
            for (std::size_t a = 0; a < np; ++a) rhs[a] = -g[a];
            if (!solve_damped(jtj, rhs, lambda, np, delta)) {
                lambda *= 10.0;
                continue;
            }
            LogParams trial = p;
            for (std::size_t a = 0; a < np; ++a) trial.theta[a] += delta[a];
            if (!trial.branch_spacing_ok() || !residual(trial, r_trial)) {
                lambda *= 10.0;
                continue;
            }
            const double ssr_trial = ssr_of(r_trial);
            if (ssr_trial < ssr) {
                const double rel_change = (ssr - ssr_trial) / ssr;
                p = trial;
                r0 = r_trial;
                ssr = ssr_trial;
                lambda *= 0.5;
                accepted = true;
                best.model = p.to_model(init.label);
                best.residual_rms = std::sqrt(ssr / static_cast<double>(m));
                best.iterations = iter + 1;
                if (rel_change < tol || best.residual_rms < 1e-12) {
                    best.converged = true;
                    return best;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // Damping exhausted: even microscopic steps no longer reduce the
            // residual, so the reachable relative change is below tol. A
            // stationary point, i.e. convergence.
            best.converged = true;
            best.iterations = iter;
            return best;
        }
    }
    best.iterations = iter;
    return best;
}

}  // namespace vcmo
