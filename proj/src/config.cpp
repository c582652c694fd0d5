#include "irstrack/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace irstrack {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_double_list(const std::string& v) {
    std::istringstream is(v);
    std::vector<double> out;
    double x;
    while (is >> x) out.push_back(x);
    if (out.empty()) throw std::invalid_argument("expected at least one number");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& v) {
    std::istringstream is(v);
    std::vector<std::string> out;
    std::string s;
    while (is >> s) out.push_back(s);
    return out;
}

Position parse_position(const std::string& v) {
    const auto xs = parse_double_list(v);
    if (xs.size() != 3) throw std::invalid_argument("expected three coordinates");
    return {xs[0], xs[1], xs[2]};
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

#define NUM_FIELD(name) {#name, [](RunConfig& c, const std::string& v) { c.name = std::stod(v); }}
#define INT_FIELD(name) {#name, [](RunConfig& c, const std::string& v) { c.name = std::stoi(v); }}
#define POS_FIELD(name) {#name, [](RunConfig& c, const std::string& v) { c.name = parse_position(v); }}
#define LIST_FIELD(name) \
    {#name, [](RunConfig& c, const std::string& v) { c.name = parse_double_list(v); }}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        POS_FIELD(p_bs),
        POS_FIELD(p_irs),
        POS_FIELD(r_c),
        NUM_FIELD(r1),
        NUM_FIELD(r2),
        INT_FIELD(q_irs),
        INT_FIELD(q_bs_rows),
        INT_FIELD(q_bs_cols),
        INT_FIELD(q_ue_rows),
        INT_FIELD(q_ue_cols),
        NUM_FIELD(spacing_over_wavelength),
        NUM_FIELD(f_c_ghz),
        INT_FIELD(l_t),
        INT_FIELD(l_r),
        NUM_FIELD(k_t),
        NUM_FIELD(k_r),
        NUM_FIELD(sigma2_dbm),
        NUM_FIELD(upsilon_min),
        NUM_FIELD(upsilon_max),
        NUM_FIELD(scatterer_box_half),
        NUM_FIELD(t_block_s),
        NUM_FIELD(t_ce_dt_ms),
        NUM_FIELD(t_s_us),
        INT_FIELD(n_ide),
        INT_FIELD(n_uc),
        INT_FIELD(n_ce),
        INT_FIELD(m_dt),
        INT_FIELD(m_ide),
        INT_FIELD(quad_member),
        INT_FIELD(h_grid),
        INT_FIELD(gamma),
        {"ide_shape_file", [](RunConfig& c, const std::string& v) { c.ide_shape_file = v; }},
        INT_FIELD(design_grid_g),
        NUM_FIELD(design_snr),
        NUM_FIELD(design_step),
        NUM_FIELD(design_decay),
        NUM_FIELD(design_stop_tol),
        INT_FIELD(design_max_iter),
        INT_FIELD(s_max),
        INT_FIELD(poly_degree),
        LIST_FIELD(kalman_q_vars),
        LIST_FIELD(kalman_r_vars),
        NUM_FIELD(speed_kmh),
        {"trajectory_kind", [](RunConfig& c, const std::string& v) { c.trajectory_kind = trim(v); }},
        INT_FIELD(num_trajectories),
        INT_FIELD(num_noise_reps),
        {"seed", [](RunConfig& c, const std::string& v) { c.seed = std::stoull(v); }},
        LIST_FIELD(ptx_dbm_sweep),
        {"schemes", [](RunConfig& c, const std::string& v) { c.schemes = parse_string_list(v); }},
        INT_FIELD(metrics_stride),
        INT_FIELD(loss_consecutive),
        LIST_FIELD(msnr_db_sweep),
        INT_FIELD(estimate_trials),
        INT_FIELD(n_hs),
        INT_FIELD(l_c),
    };
    return table;
}

#undef NUM_FIELD
#undef INT_FIELD
#undef POS_FIELD
#undef LIST_FIELD

std::string join_doubles(const std::vector<double>& xs) {
    std::ostringstream os;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) os << ' ';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", xs[i]);
        os << buf;
    }
    return os.str();
}

}  // namespace

double RunConfig::wavelength() const { return kSpeedOfLight / (f_c_ghz * 1e9); }

double RunConfig::sigma2_watts() const { return std::pow(10.0, sigma2_dbm / 10.0) * 1e-3; }

void RunConfig::validate() const {
    const auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw ConfigError(std::string("config validation: ") + what + " must be positive");
    };
    positive(spacing_over_wavelength, "spacing_over_wavelength");
    positive(f_c_ghz, "f_c_ghz");
    positive(r1, "r1");
    positive(r2, "r2");
    if (r2 >= r1) throw ConfigError("config validation: r2 must be smaller than r1");
    if (q_irs < 1 || q_bs_rows < 1 || q_bs_cols < 1 || q_ue_rows < 1 || q_ue_cols < 1)
        throw ConfigError("config validation: array sizes must be at least 1");
    if (l_t < 0 || l_r < 0) throw ConfigError("config validation: scatterer counts must be non-negative");
    positive(k_t, "k_t");
    positive(k_r, "k_r");
    if (upsilon_min <= 0.0 || upsilon_max > 1.0 || upsilon_min > upsilon_max)
        throw ConfigError("config validation: upsilon range must satisfy 0 < min <= max <= 1");
    positive(t_block_s, "t_block_s");
    positive(t_ce_dt_ms, "t_ce_dt_ms");
    positive(t_s_us, "t_s_us");
    if (n_ide < 1 || n_uc < 1 || n_ce < 1)
        throw ConfigError("config validation: pilot counts must be at least 1");
    if (m_dt < 1 || m_ide < 1) throw ConfigError("config validation: codebook sizes must be at least 1");
    if (quad_member >= 0 && quad_member >= std::max(m_dt, m_ide))
        throw ConfigError("config validation: quad_member out of codebook range");
    if (h_grid < 2) throw ConfigError("config validation: h_grid must be at least 2");
    if (gamma < 0) throw ConfigError("config validation: gamma must be non-negative");
    if (design_grid_g < 8) throw ConfigError("config validation: design_grid_g must be at least 8");
    if (design_decay <= 0.0 || design_decay > 1.0)
        throw ConfigError("config validation: design_decay must be in (0, 1]");
    if (s_max < 1) throw ConfigError("config validation: s_max must be at least 1");
    if (poly_degree < 0) throw ConfigError("config validation: poly_degree must be non-negative");
    positive(speed_kmh, "speed_kmh");
    if (trajectory_kind != "linear" && trajectory_kind != "circle")
        throw ConfigError("config validation: trajectory_kind must be linear or circle");
    if (num_trajectories < 1 || num_noise_reps < 1)
        throw ConfigError("config validation: campaign sizes must be at least 1");
    if (metrics_stride < 1) throw ConfigError("config validation: metrics_stride must be at least 1");
    if (loss_consecutive < 1) throw ConfigError("config validation: loss_consecutive must be at least 1");
    if (estimate_trials < 1) throw ConfigError("config validation: estimate_trials must be at least 1");
    if (n_hs < 2) throw ConfigError("config validation: n_hs must be at least 2");
    if (l_c < 2) throw ConfigError("config validation: l_c must be at least 2");
    for (const std::string& s : schemes) {
        if (s != "proposed" && s != "focusing" && s != "perfect" && s != "hierarchical")
            throw ConfigError("config validation: unknown scheme " + s);
    }
    const Position d = r_c - p_irs;
    if (d.x <= r1) throw ConfigError("config validation: user region must lie in front of the IRS plane");
}

std::string RunConfig::canonical_string() const {
    std::ostringstream os;
    char buf[64];
    const auto num = [&](const char* k, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %.17g\n", k, v);
        os << buf;
    };
    const auto integer = [&](const char* k, long long v) { os << k << " = " << v << "\n"; };
    const auto pos = [&](const char* k, const Position& p) {
        std::snprintf(buf, sizeof(buf), "%s = %.17g %.17g %.17g\n", k, p.x, p.y, p.z);
        os << buf;
    };
    pos("p_bs", p_bs);
    pos("p_irs", p_irs);
    pos("r_c", r_c);
    num("r1", r1);
    num("r2", r2);
    integer("q_irs", q_irs);
    integer("q_bs_rows", q_bs_rows);
    integer("q_bs_cols", q_bs_cols);
    integer("q_ue_rows", q_ue_rows);
    integer("q_ue_cols", q_ue_cols);
    num("spacing_over_wavelength", spacing_over_wavelength);
    num("f_c_ghz", f_c_ghz);
    integer("l_t", l_t);
    integer("l_r", l_r);
    num("k_t", k_t);
    num("k_r", k_r);
    num("sigma2_dbm", sigma2_dbm);
    num("upsilon_min", upsilon_min);
    num("upsilon_max", upsilon_max);
    num("scatterer_box_half", scatterer_box_half);
    num("t_block_s", t_block_s);
    num("t_ce_dt_ms", t_ce_dt_ms);
    num("t_s_us", t_s_us);
    integer("n_ide", n_ide);
    integer("n_uc", n_uc);
    integer("n_ce", n_ce);
    integer("m_dt", m_dt);
    integer("m_ide", m_ide);
    integer("quad_member", quad_member);
    integer("h_grid", h_grid);
    integer("gamma", gamma);
    os << "ide_shape_file = " << ide_shape_file << "\n";
    integer("design_grid_g", design_grid_g);
    num("design_snr", design_snr);
    num("design_step", design_step);
    num("design_decay", design_decay);
    num("design_stop_tol", design_stop_tol);
    integer("design_max_iter", design_max_iter);
    integer("s_max", s_max);
    integer("poly_degree", poly_degree);
    os << "kalman_q_vars = " << join_doubles(kalman_q_vars) << "\n";
    os << "kalman_r_vars = " << join_doubles(kalman_r_vars) << "\n";
    num("speed_kmh", speed_kmh);
    os << "trajectory_kind = " << trajectory_kind << "\n";
    integer("num_trajectories", num_trajectories);
    integer("num_noise_reps", num_noise_reps);
    integer("seed", static_cast<long long>(seed));
    os << "ptx_dbm_sweep = " << join_doubles(ptx_dbm_sweep) << "\n";
    os << "schemes =";
    for (const auto& s : schemes) os << ' ' << s;
    os << "\n";
    integer("metrics_stride", metrics_stride);
    integer("loss_consecutive", loss_consecutive);
    os << "msnr_db_sweep = " << join_doubles(msnr_db_sweep) << "\n";
    integer("estimate_trials", estimate_trials);
    integer("n_hs", n_hs);
    integer("l_c", l_c);
    return os.str();
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string RunConfig::hash_hex() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_string())));
    return buf;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') continue;  // section header, organizational only
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad value for '" + key +
                              "': " + e.what());
        }
    }
    apply_env_overrides(cfg);
    cfg.validate();
    return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
    for (const auto& [key, setter] : setters()) {
        std::string env_key = "IRSTRACK_";
        for (char c : key) env_key += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(env_key.c_str())) {
            try {
                setter(cfg, v);
            } catch (const std::exception& e) {
                throw ConfigError("environment override " + env_key + ": " + e.what());
            }
        }
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str(), path);
}

}  // namespace irstrack
