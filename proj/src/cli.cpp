#include "vcmo/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "vcmo/config.hpp"
#include "vcmo/fit.hpp"
#include "vcmo/io.hpp"
#include "vcmo/touchstone.hpp"

namespace vcmo {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void write_summary(const std::string& out_path, json summary) {
    summary["versions"] = {{"tool", "lobar-vcmo"}, {"version", kVersion}};
    atomic_write_file(out_path + ".run.json",
                      [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
}

std::vector<double> linear_grid(double lo, double hi, double step) {
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    g.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
    return g;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    std::vector<double> g;
    const double ratio = std::pow(10.0, 1.0 / per_decade);
    for (double f = lo; f < hi * (1.0 + 1e-12); f *= ratio) g.push_back(f);
    return g;
}

int cmd_export_preset(const std::string& name, const std::string& out) {
    const auto t0 = Clock::now();
    if (name != "lobar_table1") {
        std::cerr << "unknown preset '" << name << "' (available: lobar_table1)\n";
        return 2;
    }
    write_resonator_file(out, lobar_table1());
    write_summary(out, json{{"command", "export-preset"},
                            {"inputs", {{"preset", name}}},
                            {"outputs", {out}},
                            {"notes",
                             {"c0_f is an assumed default; the measured device's static "
                              "capacitance is not reported"}},
                            {"timings_ms", {{"total", elapsed_ms(t0)}}}});
    return 0;
}

int cmd_tune(const std::string& config_path, const std::string& out) {
    const auto t0 = Clock::now();
    const ProjectConfig cfg = load_config(config_path);
    const LoopConfig loop = loop_from_config(cfg);
    const auto grid = linear_grid(cfg.bias_start_v, cfg.bias_stop_v, cfg.bias_step_v);
    const auto points = tuning_sweep(loop, grid);

    std::size_t locked = 0, hops = 0;
    atomic_write_file(out, [&](std::ostream& os) {
        os << "bias_v,f_osc_hz,mode_index,gain_margin_db,hop\n";
        for (const auto& p : points) {
            if (!p.solution) continue;
            ++locked;
            if (p.hop) ++hops;
            os << format_double(p.bias_v) << ',' << format_double(p.solution->f_osc_hz)
               << ',' << p.solution->mode_index << ','
               << format_double(p.solution->gain_margin_db) << ',' << (p.hop ? 1 : 0)
               << '\n';
        }
    });
    write_summary(out, json{{"command", "tune"},
                            {"inputs",
                             {{"config", config_path},
                              {"bias_start_v", cfg.bias_start_v},
                              {"bias_stop_v", cfg.bias_stop_v},
                              {"bias_step_v", cfg.bias_step_v}}},
                            {"defaults_applied", cfg.defaults_applied},
                            {"outputs", {out}},
                            {"stats",
                             {{"bias_points", points.size()},
                              {"locked_points", locked},
                              {"hop_events", hops}}},
                            {"timings_ms", {{"total", elapsed_ms(t0)}}}});
    return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<double> bias,
              const std::string& out) {
    const auto t0 = Clock::now();
    const ProjectConfig cfg = load_config(config_path);
    const LoopConfig loop = loop_from_config(cfg);
    const double bias_v = bias.value_or(cfg.bias_v);
    const auto grid = linear_grid(cfg.f_lo_hz, cfg.f_hi_hz, cfg.f_step_hz);
    const auto rows = loop_response_export(loop, bias_v, grid);
    atomic_write_file(out, [&](std::ostream& os) {
        os << "f_hz,gain_db,phase_deg\n";
        for (const auto& r : rows)
            os << format_double(r.f_hz) << ',' << format_double(r.gain_db) << ','
               << format_double(r.phase_deg) << '\n';
    });
    write_summary(out, json{{"command", "sweep"},
                            {"inputs",
                             {{"config", config_path},
                              {"bias_v", bias_v},
                              {"f_lo_hz", cfg.f_lo_hz},
                              {"f_hi_hz", cfg.f_hi_hz},
                              {"f_step_hz", cfg.f_step_hz}}},
                            {"defaults_applied", cfg.defaults_applied},
                            {"outputs", {out}},
                            {"stats",
                             {{"grid_points", grid.size()},
                              {"rows", rows.size()},
                              {"pole_flagged", grid.size() - rows.size()}}},
                            {"timings_ms", {{"total", elapsed_ms(t0)}}}});
    return 0;
}

int cmd_regions(const std::string& config_path, std::optional<double> bias,
                const std::string& out) {
    const auto t0 = Clock::now();
    const ProjectConfig cfg = load_config(config_path);
    const double bias_v = bias.value_or(cfg.bias_v);
    const TankResonances res = tank_resonances(cfg.tank, bias_v);
    const auto grid = linear_grid(cfg.f_lo_hz, cfg.f_hi_hz, cfg.f_step_hz);
    atomic_write_file(out, [&](std::ostream& os) {
        os << "f_hz,region\n";
        for (double f : grid)
            os << format_double(f) << ',' << region_name(classify_region(f, res, cfg.region_tol))
               << '\n';
    });
    write_summary(out, json{{"command", "regions"},
                            {"inputs", {{"config", config_path}, {"bias_v", bias_v}}},
                            {"defaults_applied", cfg.defaults_applied},
                            {"outputs", {out}},
                            {"stats",
                             {{"f_s_t_hz", res.f_s_t_hz},
                              {"f_p_t_hz", res.f_p_t_hz},
                              {"tol", cfg.region_tol}}},
                            {"timings_ms", {{"total", elapsed_ms(t0)}}}});
    return 0;
}

int cmd_pn(const std::string& config_path, const std::string& out) {
    const auto t0 = Clock::now();
    const ProjectConfig cfg = load_config(config_path);
    const PnConfig& pn = cfg.pn;

    double q_loaded;
    std::string q_source;
    if (pn.q_loaded) {
        q_loaded = *pn.q_loaded;
        q_source = "pn.q_loaded";
    } else {
        const MbvdResonator res = resolve_resonator(cfg);
        if (pn.mode_index < 1 || pn.mode_index > static_cast<int>(res.branches.size()))
            throw ConfigError("pn.mode_index out of range for the configured resonator");
        q_loaded = loaded_q(res.branches[pn.mode_index - 1], pn.r_external_ohm);
        q_source = "loaded_q(mode " + std::to_string(pn.mode_index) + ", r_external " +
                   format_double(pn.r_external_ohm) + " ohm)";
    }

    LeesonParams params;
    std::string provenance;
    if (pn.noise_factor_db) {
        params = LeesonParams{*pn.noise_factor_db, pn.p_sig_w, q_loaded, pn.f_flicker_hz};
        provenance = "direct parameters (no calibration)";
    } else {
        params = calibrate_leeson(pn.anchor_l_dbchz, pn.carrier_hz, pn.anchor_offset_hz,
                                  q_loaded, pn.f_flicker_hz, pn.p_sig_w);
        provenance = "calibrated to anchor L(" + format_double(pn.anchor_offset_hz) +
                     " Hz) = " + format_double(pn.anchor_l_dbchz) + " dBc/Hz at " +
                     format_double(pn.carrier_hz) + " Hz carrier; model fit, not a prediction";
    }

    const auto grid = log_grid(pn.offset_lo_hz, pn.offset_hi_hz, pn.points_per_decade);
    const auto profile = phase_noise_profile(params, pn.carrier_hz, grid);
    atomic_write_file(out, [&](std::ostream& os) {
        os << "# calibration: " << provenance << "\n";
        os << "# q_loaded = " << format_double(q_loaded) << " (" << q_source << ")"
           << ", noise_factor_db = " << format_double(params.noise_factor_db)
           << ", p_sig_w = " << format_double(params.p_sig_w)
           << ", f_flicker_hz = " << format_double(params.f_flicker_hz) << "\n";
        os << "offset_hz,l_dbc_hz\n";
        for (const auto& p : profile)
            os << format_double(p.offset_hz) << ',' << format_double(p.value_dbchz) << '\n';
    });
    write_summary(out, json{{"command", "pn"},
                            {"inputs", {{"config", config_path}}},
                            {"defaults_applied", cfg.defaults_applied},
                            {"calibration",
                             {{"provenance", provenance},
                              {"q_loaded", q_loaded},
                              {"q_source", q_source},
                              {"noise_factor_db", params.noise_factor_db},
                              {"p_sig_w", params.p_sig_w},
                              {"f_flicker_hz", params.f_flicker_hz}}},
                            {"outputs", {out}},
                            {"timings_ms", {{"total", elapsed_ms(t0)}}}});
    return 0;
}

int cmd_fit(const std::string& input, const std::string& format, double prominence_db,
            int max_iter, double tol, const std::string& model_out,
            const std::string& report_out) {
    const auto t0 = Clock::now();
    const AdmittanceDataset data = load_admittance(input, format);
    const PeakDetection peaks = detect_peaks(data, prominence_db);
    for (const auto& w : peaks.warnings) std::cerr << "warning: " << w << '\n';
    if (peaks.frequencies_hz.empty()) {
        std::cerr << "no peaks above " << prominence_db << " dB prominence in " << input
                  << '\n';
        return 2;
    }
    const MbvdResonator init = initial_guess(data, peaks.frequencies_hz);
    const FitResult fit = refine_fit(data, init, max_iter, tol);

    write_resonator_file(model_out, fit.model);
    atomic_write_file(report_out, [&](std::ostream& os) {
        os << "# residual_rms = " << format_double(fit.residual_rms)
           << ", iterations = " << fit.iterations
           << ", converged = " << (fit.converged ? "yes" : "no") << "\n";
        os << "tone,f_m_hz,q,r_m_ohm,l_m_h,c_m_f\n";
        for (std::size_t i = 0; i < fit.model.branches.size(); ++i) {
            const auto& b = fit.model.branches[i];
            os << (i + 1) << ',' << format_double(b.f_m_hz) << ',' << format_double(b.q)
               << ',' << format_double(b.r_m_ohm) << ',' << format_double(b.l_m_h) << ','
               << format_double(b.c_m_f) << '\n';
        }
    });
    write_summary(model_out,
                  json{{"command", "fit"},
                       {"inputs",
                        {{"data", input},
                         {"format", format},
                         {"prominence_db", prominence_db},
                         {"max_iter", max_iter},
                         {"tol", tol}}},
                       {"outputs", {model_out, report_out}},
                       {"stats",
                        {{"points", data.points.size()},
                         {"peaks", peaks.frequencies_hz.size()},
                         {"warnings", peaks.warnings},
                         {"residual_rms", fit.residual_rms},
                         {"iterations", fit.iterations},
                         {"converged", fit.converged},
                         {"c0_f", fit.model.c0_f}}},
                       {"timings_ms", {{"total", elapsed_ms(t0)}}}});
    if (!fit.converged) {
        std::cerr << "fit did not converge within " << max_iter
                  << " iterations (residual_rms = " << fit.residual_rms << ")\n";
        return 2;
    }
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& argv) {
    CLI::App app{"Frequency-domain simulator for a varactor-tuned multi-overtone "
                 "MEMS oscillator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string preset_name = "lobar_table1", preset_out;
    auto* exp = app.add_subcommand("export-preset", "write a resonator preset model file");
    exp->add_option("name", preset_name, "preset name")->required();
    exp->add_option("-o,--output", preset_out, "output path (default <name>.preset)");

    std::string cfg_path, out_path;
    auto* tune = app.add_subcommand("tune", "bias sweep: predicted oscillation per bias");
    tune->add_option("-c,--config", cfg_path, "project config file")->required();
    tune->add_option("-o,--output", out_path, "output CSV (default tune.csv)");

    std::string sweep_cfg, sweep_out;
    double sweep_bias = 0.0;
    bool sweep_bias_set = false;
    auto* sweep = app.add_subcommand("sweep", "loop gain/phase response at one bias");
    sweep->add_option("-c,--config", sweep_cfg, "project config file")->required();
    sweep->add_option("--bias", sweep_bias, "varactor bias (V)")
        ->each([&](const std::string&) { sweep_bias_set = true; });
    sweep->add_option("-o,--output", sweep_out, "output CSV (default sweep.csv)");

    std::string reg_cfg, reg_out;
    double reg_bias = 0.0;
    bool reg_bias_set = false;
    auto* regions = app.add_subcommand("regions", "tank region classification at one bias");
    regions->add_option("-c,--config", reg_cfg, "project config file")->required();
    regions->add_option("--bias", reg_bias, "varactor bias (V)")
        ->each([&](const std::string&) { reg_bias_set = true; });
    regions->add_option("-o,--output", reg_out, "output CSV (default regions.csv)");

    std::string pn_cfg, pn_out;
    auto* pn = app.add_subcommand("pn", "Leeson phase-noise profile");
    pn->add_option("-c,--config", pn_cfg, "project config file")->required();
    pn->add_option("-o,--output", pn_out, "output CSV (default pn.csv)");

    std::string fit_in, fit_format = "auto", fit_model_out = "fit_model.preset",
                fit_report_out = "fit_report.csv";
    double fit_prom = 6.0, fit_tol = 1e-10;
    int fit_max_iter = 200;
    auto* fit = app.add_subcommand("fit", "extract an MBVD model from measured admittance");
    fit->add_option("input", fit_in, "CSV or Touchstone one-port file")->required();
    fit->add_option("--format", fit_format, "auto|csv|touchstone");
    fit->add_option("--prominence-db", fit_prom, "peak prominence threshold (dB)");
    fit->add_option("--max-iter", fit_max_iter, "refinement iteration cap");
    fit->add_option("--tol", fit_tol, "relative residual-change convergence threshold");
    fit->add_option("-o,--output", fit_model_out, "model file output");
    fit->add_option("--report", fit_report_out, "per-branch report CSV");

    try {
        std::vector<std::string> args(argv.rbegin(), argv.rend());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (exp->parsed())
            return cmd_export_preset(preset_name,
                                     preset_out.empty() ? preset_name + ".preset" : preset_out);
        if (tune->parsed())
            return cmd_tune(cfg_path, out_path.empty() ? "tune.csv" : out_path);
        if (sweep->parsed())
            return cmd_sweep(sweep_cfg,
                             sweep_bias_set ? std::optional<double>(sweep_bias) : std::nullopt,
                             sweep_out.empty() ? "sweep.csv" : sweep_out);
        if (regions->parsed())
            return cmd_regions(reg_cfg,
                               reg_bias_set ? std::optional<double>(reg_bias) : std::nullopt,
                               reg_out.empty() ? "regions.csv" : reg_out);
        if (pn->parsed()) return cmd_pn(pn_cfg, pn_out.empty() ? "pn.csv" : pn_out);
        if (fit->parsed())
            return cmd_fit(fit_in, fit_format, fit_prom, fit_max_iter, fit_tol, fit_model_out,
                           fit_report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace vcmo
