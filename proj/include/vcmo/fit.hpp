#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vcmo/resonator.hpp"

namespace vcmo {

inline constexpr std::size_t kMinDatasetPoints = 16;

// Measured frequency / complex admittance pairs, strictly ascending in f.
struct AdmittanceDataset {
    std::vector<std::pair<double, Complex>> points;
    std::string source;
};

// Validating factory; throws std::invalid_argument on short, unsorted or
// non-positive-frequency data.
AdmittanceDataset make_dataset(std::vector<std::pair<double, Complex>> points,
                               std::string source = "");

struct PeakDetection {
    std::vector<double> frequencies_hz;  // ascending, parabola-refined
    std::vector<std::string> warnings;   // e.g. sparse sampling notes
};

// Local maxima of |Y| whose topographic prominence exceeds prominence_db.
PeakDetection detect_peaks(const AdmittanceDataset& d, double prominence_db);

// c_0 from the off-resonance Im(Y) slope, then per-peak (r_m, q) estimates
// from the static-branch-subtracted response. Throws std::runtime_error when
// no off-resonance points remain.
MbvdResonator initial_guess(const AdmittanceDataset& d, const std::vector<double>& peaks_hz);

struct FitResult {
    MbvdResonator model;
    double residual_rms = 0.0;  // sqrt(mean |dY|^2 / |Y|^2)
    int iterations = 0;
    bool converged = false;
};

// Damped least squares over {c_0} + {f_m, q, r_m} per branch with relative
// weighting 1/|Y|^2; parameters are log-parameterized to stay positive and
// the damping factor moves x10 on rejection, x0.5 on acceptance.
FitResult refine_fit(const AdmittanceDataset& d, const MbvdResonator& init, int max_iter,
                     double tol);

}  // namespace vcmo
