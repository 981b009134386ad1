#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcmo/loop.hpp"
#include "vcmo/phase_noise.hpp"

namespace vcmo {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PnConfig {
    double carrier_hz = 300e6;
    std::optional<double> q_loaded;        // direct, else from mode + r_external
    int mode_index = 1;                    // 1-based preset tone
    double r_external_ohm = 122.0;
    double f_flicker_hz = 100.0;
    double p_sig_w = 1e-3;
    std::optional<double> noise_factor_db; // direct params; else calibrated
    double anchor_l_dbchz = -100.0;
    double anchor_offset_hz = 1e3;
    double offset_lo_hz = 1.0;
    double offset_hi_hz = 10e6;
    int points_per_decade = 20;
};

// Flat dotted key-value configuration; see docs/config_schema.txt for the
// full key list. Every default applied while loading is echoed in
// defaults_applied for the run summary.
struct ProjectConfig {
    std::string resonator_preset;                 // exactly one source set
    std::string resonator_file;
    std::optional<MbvdResonator> resonator_inline;
    std::optional<double> c0_override_f;

    TankConfig tank;
    std::vector<GainStage> stages;

    double bias_start_v = 0.0;
    double bias_stop_v = 8.0;
    double bias_step_v = 0.01;
    double bias_v = 0.0;  // single-bias commands (sweep/regions)

    double f_lo_hz = 250e6;
    double f_hi_hz = 650e6;
    double f_step_hz = 20e3;

    double region_tol = kDefaultRegionTol;

    PnConfig pn;

    double fit_prominence_db = 6.0;
    int fit_max_iter = 200;
    double fit_tol = 1e-10;

    std::vector<std::string> defaults_applied;
};

// Throws ConfigError listing unknown keys or naming the violated constraint.
ProjectConfig load_config(const std::string& path);

// Resolve the configured resonator source (preset name, model file, or
// inline branches), applying any c0 override.
MbvdResonator resolve_resonator(const ProjectConfig& cfg);

LoopConfig loop_from_config(const ProjectConfig& cfg);

// Writes a resonator as a loadable model file (config fragment); the same
// format is used by export-preset and by fit output.
void write_resonator_file(const std::string& path, const MbvdResonator& r);

}  // namespace vcmo
