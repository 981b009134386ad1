#include "vcmo/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "vcmo/io.hpp"

namespace vcmo {

namespace {

struct KvFile {
    std::map<std::string, std::string> values;
    std::vector<std::string> order;
};

KvFile parse_kv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    KvFile kv;
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const auto hash = raw.find('#');
        std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream probe(line);
            std::string tok;
            if (probe >> tok)
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": empty key or value");
        if (kv.values.count(key))
            throw ConfigError(path + ": duplicate key " + key);
        kv.values[key] = value;
        kv.order.push_back(key);
    }
    return kv;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t idx = 0;
        const double d = std::stod(v, &idx);
        if (idx != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw ConfigError("config key " + key + ": '" + v + "' is not a number");
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d)) throw ConfigError("config key " + key + " must be an integer");
    return static_cast<int>(d);
}

void require_positive(const std::string& key, double v) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError("config key " + key + " must be positive (got " +
                          std::to_string(v) + ")");
}

class Reader {
public:
    explicit Reader(KvFile kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.values.count(key) != 0; }

    std::string take_string(const std::string& key) {
        consumed_.insert(consumed_.end(), key);
        return kv_.values.at(key);
    }

    double take_double(const std::string& key) {
        return to_double(key, take_string(key));
    }

    double double_or(const std::string& key, double fallback,
                     std::vector<std::string>& provenance) {
        if (has(key)) return take_double(key);
        provenance.push_back(key + " = " + format_double(fallback) + " (default)");
        return fallback;
    }

    int int_or(const std::string& key, int fallback, std::vector<std::string>& provenance) {
        if (has(key)) return to_int(key, take_string(key));
        provenance.push_back(key + " = " + std::to_string(fallback) + " (default)");
        return fallback;
    }

    std::vector<std::string> unknown_keys() const {
        std::vector<std::string> unknown;
        for (const auto& key : kv_.order)
            if (std::find(consumed_.begin(), consumed_.end(), key) == consumed_.end())
                unknown.push_back(key);
        return unknown;
    }

    std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : kv_.values)
            if (k.rfind(prefix, 0) == 0) out.push_back(k);
        return out;
    }

private:
    KvFile kv_;
    std::vector<std::string> consumed_;
};

std::vector<MotionalBranch> parse_branches(Reader& r, const std::string& prefix) {
    std::vector<MotionalBranch> branches;
    for (int i = 1; i <= static_cast<int>(kMaxBranches); ++i) {
        const std::string key = prefix + std::to_string(i);
        if (!r.has(key)) break;
        std::istringstream ls(r.take_string(key));
        double f, q, rm;
        if (!(ls >> f >> q >> rm))
            throw ConfigError("config key " + key + ": expected 'f_hz q r_ohm'");
        std::string extra;
        if (ls >> extra) throw ConfigError("config key " + key + ": too many fields");
        branches.push_back(branch_from_spec(f, q, rm));
    }
    return branches;
}

}  // namespace

ProjectConfig load_config(const std::string& path) {
    Reader r(parse_kv(path));
    ProjectConfig cfg;
    auto& prov = cfg.defaults_applied;

    // Resonator source: exactly one of preset / file / inline branches.
    int sources = 0;
    if (r.has("resonator.preset")) {
        cfg.resonator_preset = r.take_string("resonator.preset");
        ++sources;
    }
    if (r.has("resonator.file")) {
        cfg.resonator_file = r.take_string("resonator.file");
        ++sources;
    }
    std::vector<MotionalBranch> inline_branches = parse_branches(r, "resonator.branch.");
    std::string label;
    if (r.has("resonator.label")) label = r.take_string("resonator.label");
    if (!inline_branches.empty()) ++sources;
    if (sources == 0)
        throw ConfigError("config: resonator source missing (set resonator.preset, "
                          "resonator.file, or resonator.branch.N)");
    if (sources > 1)
        throw ConfigError("config: exactly one resonator source may be specified");
    if (!cfg.resonator_file.empty() && !std::filesystem::exists(cfg.resonator_file))
        throw ConfigError("config: resonator.file '" + cfg.resonator_file +
                          "' does not exist");
    if (r.has("resonator.c0_f")) {
        const double c0 = r.take_double("resonator.c0_f");
        require_positive("resonator.c0_f", c0);
        cfg.c0_override_f = c0;
    }
    if (!inline_branches.empty()) {
        if (!cfg.c0_override_f)
            throw ConfigError("config: inline resonator requires resonator.c0_f");
        cfg.resonator_inline =
            make_resonator(*cfg.c0_override_f, std::move(inline_branches),
                           label.empty() ? "inline" : label);
    }

    // Tank.
    const TankConfig dflt_tank = default_tank();
    cfg.tank.l_h = r.double_or("tank.l_h", dflt_tank.l_h, prov);
    require_positive("tank.l_h", cfg.tank.l_h);
    cfg.tank.c_s_f = r.double_or("tank.c_s_f", dflt_tank.c_s_f, prov);
    require_positive("tank.c_s_f", cfg.tank.c_s_f);
    cfg.tank.r_l_ohm = r.double_or("tank.r_l_ohm", 0.0, prov);
    if (cfg.tank.r_l_ohm < 0.0) throw ConfigError("config key tank.r_l_ohm must be >= 0");

    if (r.has("tank.varactor.m") && r.has("tank.varactor.c_at_v_max_f"))
        throw ConfigError("config: set tank.varactor.m or tank.varactor.c_at_v_max_f, not both");
    VaractorModel var = dflt_tank.varactor;
    const bool any_var = r.has("tank.varactor.c_j0_f") || r.has("tank.varactor.v_j_v") ||
                         r.has("tank.varactor.m") || r.has("tank.varactor.v_min_v") ||
                         r.has("tank.varactor.v_max_v") || r.has("tank.varactor.c_at_v_max_f");
    if (any_var) {
        const double c_j0 = r.double_or("tank.varactor.c_j0_f", var.c_j0_f, prov);
        require_positive("tank.varactor.c_j0_f", c_j0);
        const double v_j = r.double_or("tank.varactor.v_j_v", var.v_j_v, prov);
        require_positive("tank.varactor.v_j_v", v_j);
        const double v_min = r.double_or("tank.varactor.v_min_v", var.v_min_v, prov);
        const double v_max = r.double_or("tank.varactor.v_max_v", var.v_max_v, prov);
        if (!(v_min < v_max))
            throw ConfigError("config: tank.varactor.v_min_v must be below v_max_v");
        if (r.has("tank.varactor.c_at_v_max_f")) {
            const double c_hi = r.take_double("tank.varactor.c_at_v_max_f");
            require_positive("tank.varactor.c_at_v_max_f", c_hi);
            var = varactor_from_endpoints(c_j0, c_hi, v_j, v_min, v_max);
        } else {
            const double m = r.double_or("tank.varactor.m", var.m, prov);
            if (m < 0.0) throw ConfigError("config key tank.varactor.m must be >= 0");
            var = VaractorModel{c_j0, v_j, m, v_min, v_max};
        }
    } else {
        prov.push_back("tank.varactor = SMV1248 endpoints 22.62 pF @ 0 V to 1.3 pF @ 8 V (default)");
    }
    cfg.tank.varactor = var;

    // Stages.
    const std::vector<GainStage> dflt_stages = default_stages();
    bool any_stage = !r.keys_with_prefix("stage.").empty();
    if (any_stage) {
        for (int i = 1; i <= 16; ++i) {
            const std::string p = "stage." + std::to_string(i) + ".";
            if (!r.has(p + "a0")) break;
            GainStage s;
            s.a0 = r.take_double(p + "a0");
            if (r.has(p + "f_pole_hz")) {
                const std::string v = r.take_string(p + "f_pole_hz");
                if (v != "none") {
                    s.f_pole_hz = to_double(p + "f_pole_hz", v);
                    require_positive(p + "f_pole_hz", *s.f_pole_hz);
                }
            } else {
                s.f_pole_hz = dflt_stages[0].f_pole_hz;
                prov.push_back(p + "f_pole_hz = " + format_double(*s.f_pole_hz) + " (default)");
            }
            s.r_out_ohm = r.double_or(p + "r_out_ohm", dflt_stages[0].r_out_ohm, prov);
            s.r_in_ohm = r.double_or(p + "r_in_ohm", dflt_stages[0].r_in_ohm, prov);
            cfg.stages.push_back(s);
        }
        if (cfg.stages.empty())
            throw ConfigError("config: stage keys present but stage.1.a0 missing");
    } else {
        cfg.stages = dflt_stages;
        prov.push_back("stages = calibrated two-stage default (default)");
    }

    // Sweep grids.
    cfg.bias_start_v = r.double_or("sweep.bias_start_v", cfg.bias_start_v, prov);
    cfg.bias_stop_v = r.double_or("sweep.bias_stop_v", cfg.bias_stop_v, prov);
    cfg.bias_step_v = r.double_or("sweep.bias_step_v", cfg.bias_step_v, prov);
    require_positive("sweep.bias_step_v", cfg.bias_step_v);
    if (!(cfg.bias_start_v < cfg.bias_stop_v))
        throw ConfigError("config: sweep.bias_start_v must be below sweep.bias_stop_v");
    cfg.bias_v = r.double_or("sweep.bias_v", cfg.bias_v, prov);
    cfg.f_lo_hz = r.double_or("sweep.f_lo_hz", cfg.f_lo_hz, prov);
    cfg.f_hi_hz = r.double_or("sweep.f_hi_hz", cfg.f_hi_hz, prov);
    cfg.f_step_hz = r.double_or("sweep.f_step_hz", cfg.f_step_hz, prov);
    require_positive("sweep.f_lo_hz", cfg.f_lo_hz);
    require_positive("sweep.f_step_hz", cfg.f_step_hz);
    if (!(cfg.f_lo_hz < cfg.f_hi_hz))
        throw ConfigError("config: sweep.f_lo_hz must be below sweep.f_hi_hz");

    cfg.region_tol = r.double_or("regions.tol", cfg.region_tol, prov);
    if (!(cfg.region_tol > 0.0 && cfg.region_tol < 0.1))
        throw ConfigError("config key regions.tol must lie in (0, 0.1)");

    // Phase noise.
    cfg.pn.carrier_hz = r.double_or("pn.carrier_hz", cfg.pn.carrier_hz, prov);
    require_positive("pn.carrier_hz", cfg.pn.carrier_hz);
    if (r.has("pn.q_loaded")) {
        cfg.pn.q_loaded = r.take_double("pn.q_loaded");
        require_positive("pn.q_loaded", *cfg.pn.q_loaded);
    } else {
        cfg.pn.mode_index = r.int_or("pn.mode_index", cfg.pn.mode_index, prov);
        cfg.pn.r_external_ohm = r.double_or("pn.r_external_ohm", cfg.pn.r_external_ohm, prov);
        if (cfg.pn.r_external_ohm < 0.0)
            throw ConfigError("config key pn.r_external_ohm must be >= 0");
    }
    cfg.pn.f_flicker_hz = r.double_or("pn.f_flicker_hz", cfg.pn.f_flicker_hz, prov);
    if (cfg.pn.f_flicker_hz < 0.0)
        throw ConfigError("config key pn.f_flicker_hz must be >= 0");
    cfg.pn.p_sig_w = r.double_or("pn.p_sig_w", cfg.pn.p_sig_w, prov);
    require_positive("pn.p_sig_w", cfg.pn.p_sig_w);
    if (r.has("pn.noise_factor_db"))
        cfg.pn.noise_factor_db = r.take_double("pn.noise_factor_db");
    cfg.pn.anchor_l_dbchz = r.double_or("pn.anchor_l_dbchz", cfg.pn.anchor_l_dbchz, prov);
    cfg.pn.anchor_offset_hz = r.double_or("pn.anchor_offset_hz", cfg.pn.anchor_offset_hz, prov);
    require_positive("pn.anchor_offset_hz", cfg.pn.anchor_offset_hz);
    cfg.pn.offset_lo_hz = r.double_or("pn.offset_lo_hz", cfg.pn.offset_lo_hz, prov);
    cfg.pn.offset_hi_hz = r.double_or("pn.offset_hi_hz", cfg.pn.offset_hi_hz, prov);
    require_positive("pn.offset_lo_hz", cfg.pn.offset_lo_hz);
    if (!(cfg.pn.offset_lo_hz < cfg.pn.offset_hi_hz))
        throw ConfigError("config: pn.offset_lo_hz must be below pn.offset_hi_hz");
    cfg.pn.points_per_decade = r.int_or("pn.points_per_decade", cfg.pn.points_per_decade, prov);
    if (cfg.pn.points_per_decade < 1)
        throw ConfigError("config key pn.points_per_decade must be >= 1");

    // Fit.
    cfg.fit_prominence_db = r.double_or("fit.prominence_db", cfg.fit_prominence_db, prov);
    require_positive("fit.prominence_db", cfg.fit_prominence_db);
    cfg.fit_max_iter = r.int_or("fit.max_iter", cfg.fit_max_iter, prov);
    if (cfg.fit_max_iter < 1) throw ConfigError("config key fit.max_iter must be >= 1");
    cfg.fit_tol = r.double_or("fit.tol", cfg.fit_tol, prov);
    require_positive("fit.tol", cfg.fit_tol);

    const auto unknown = r.unknown_keys();
    if (!unknown.empty()) {
        std::string msg = "config: unknown keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    return cfg;
}

MbvdResonator resolve_resonator(const ProjectConfig& cfg) {
    if (cfg.resonator_inline) return *cfg.resonator_inline;
    if (!cfg.resonator_preset.empty()) {
        if (cfg.resonator_preset != "lobar_table1")
            throw ConfigError("unknown resonator preset '" + cfg.resonator_preset + "'");
        return lobar_table1(cfg.c0_override_f.value_or(kLobarDefaultC0F));
    }
    // Model file: a config fragment holding only resonator.* keys.
    Reader r(parse_kv(cfg.resonator_file));
    std::vector<MotionalBranch> branches = parse_branches(r, "resonator.branch.");
    if (branches.empty())
        throw ConfigError("resonator file " + cfg.resonator_file + " has no branches");
    double c0 = kLobarDefaultC0F;
    if (r.has("resonator.c0_f")) c0 = r.take_double("resonator.c0_f");
    if (cfg.c0_override_f) c0 = *cfg.c0_override_f;
    std::string label = cfg.resonator_file;
    if (r.has("resonator.label")) label = r.take_string("resonator.label");
    return make_resonator(c0, std::move(branches), label);
}

LoopConfig loop_from_config(const ProjectConfig& cfg) {
    return LoopConfig{cfg.stages, cfg.tank, resolve_resonator(cfg)};
}

void write_resonator_file(const std::string& path, const MbvdResonator& r) {
    atomic_write_file(path, [&](std::ostream& os) {
        os << "resonator.label = " << (r.label.empty() ? "unnamed" : r.label) << "\n";
        os << "resonator.c0_f = " << format_double(r.c0_f) << "\n";
        for (std::size_t i = 0; i < r.branches.size(); ++i) {
            const auto& b = r.branches[i];
            os << "resonator.branch." << (i + 1) << " = " << format_double(b.f_m_hz) << ' '
               << format_double(b.q) << ' ' << format_double(b.r_m_ohm) << "\n";
        }
    });
}

}  // namespace vcmo
