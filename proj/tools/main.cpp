#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "irstrack/sim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace irstrack;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kValidation = 2, kConvergenceFlag = 3, kIo = 4 };

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
    int threads = 0;
    std::string scheme_filter;
    std::string ptx_sweep;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "config file (key = value)");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed_override, "seed override");
    cmd->add_option("--threads", o.threads, "worker threads (0 = machine cores)");
    cmd->add_option("--scheme", o.scheme_filter, "restrict to one scheme");
    cmd->add_option("--ptx-sweep", o.ptx_sweep, "space-separated transmit powers, dBm");
}

RunConfig resolve_config(const CommonOpts& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) {
        cfg = load_config(o.config_path);
    } else {
        apply_env_overrides(cfg);
        cfg.validate();
    }
    if (o.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed_override);
    if (!o.scheme_filter.empty()) cfg.schemes = {o.scheme_filter};
    if (!o.ptx_sweep.empty()) {
        std::istringstream is(o.ptx_sweep);
        std::vector<double> sweep;
        double v;
        while (is >> v) sweep.push_back(v);
        if (sweep.empty()) throw ConfigError("--ptx-sweep: expected at least one value");
        cfg.ptx_dbm_sweep = sweep;
    }
    cfg.validate();
    return cfg;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file: " + path.string());
    return os;
}

void write_manifest(std::ostream& os, const RunConfig& cfg) {
    os << "# config_hash=" << cfg.hash_hex() << " seed=" << cfg.seed << " version=" << kVersion
       << "\n";
}

json config_echo(const RunConfig& cfg) {
    json j;
    std::istringstream is(cfg.canonical_string());
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return j;
}

void write_summary_json(const fs::path& path, const RunConfig& cfg, json extra) {
    json j;
    j["version"] = kVersion;
    j["seed"] = cfg.seed;
    j["config_hash"] = cfg.hash_hex();
    j["config"] = config_echo(cfg);
    j.update(extra);
    auto os = open_output(path);
    os << j.dump(2) << "\n";
}

void export_beam_pattern(const fs::path& path, const RunConfig& cfg, const Codebook& cb,
                         const char* name) {
    auto os = open_output(path);
    write_manifest(os, cfg);
    os << "theta_deg,amplitude\n";
    const Codeword center{cb.m_count() / 2, cb.m_count() / 2};
    const AzEl incident{0.0, 0.0};
    const Direction lobe = cb.main_lobe_direction(center, incident);
    const double span = 3.0 * angular_spacing(cb.m_count());
    char buf[64];
    for (int i = 0; i <= 1000; ++i) {
        const double theta = lobe.theta - span + 2.0 * span * i / 1000.0;
        const cplx g = cb.reflection_gain(center, Direction{theta, lobe.phi}, incident);
        std::snprintf(buf, sizeof(buf), "%.8g,%.8g\n", theta * 180.0 / kPi, std::abs(g));
        os << buf;
    }
    (void)name;
}

int cmd_design_codebook(const CommonOpts& o) {
    const RunConfig cfg = resolve_config(o);
    fs::create_directories(o.out_dir);

    DesignResult res;
    const DesignConfig dc = make_design_config(cfg);
    res = optimize_beam_shape(ide_design_initializer(cfg), dc);

    const fs::path shape_path = fs::path(o.out_dir) / "ide_shape.txt";
    {
        auto os = open_output(shape_path);
        write_manifest(os, cfg);
        save_beam_shape(os, res.shape, BeamShapeKind::optimized, cfg.m_ide, cfg.spacing(),
                        cfg.wavelength());
    }
    json extra;
    extra["design"] = {{"iterations", res.iterations},
                       {"converged", res.converged},
                       {"initial_objective", res.initial_objective},
                       {"final_objective", res.final_objective},
                       {"final_step_norm", res.final_step_norm},
                       {"stop_reason", res.stop_reason},
                       {"stop_tolerance", dc.stop_tol},
                       {"design_snr", dc.design_snr},
                       {"step", dc.step},
                       {"decay", dc.decay},
                       {"grid_g", dc.grid_g},
                       {"shape_file", shape_path.string()}};
    write_summary_json(fs::path(o.out_dir) / "design_report.json", cfg, extra);
    std::cout << "design: " << res.stop_reason << " after " << res.iterations
              << " iterations, objective " << res.initial_objective << " -> "
              << res.final_objective << "\n";
    return res.converged ? kOk : kConvergenceFlag;
}

int cmd_estimate(const CommonOpts& o) {
    const RunConfig cfg = resolve_config(o);
    fs::create_directories(o.out_dir);
    const BeamShape shape = obtain_ide_shape(cfg);
    const auto rows = run_estimation_campaign(cfg, shape);

    const fs::path csv_path = fs::path(o.out_dir) / "estimation.csv";
    auto os = open_output(csv_path);
    write_manifest(os, cfg);
    os << "scheme,msnr_db,mse,lower_bound,random_guess,trials\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%d\n", r.scheme.c_str(),
                      r.msnr_db, r.mse, r.lower_bound_mse, r.random_guess_mse, r.trials);
        os << buf;
    }
    write_summary_json(fs::path(o.out_dir) / "estimation_summary.json", cfg,
                       json{{"rows", rows.size()}, {"csv", csv_path.string()}});
    std::cout << "estimation campaign: " << rows.size() << " rows -> " << csv_path << "\n";
    return kOk;
}

int cmd_track(const CommonOpts& o) {
    const RunConfig cfg = resolve_config(o);
    fs::create_directories(o.out_dir);
    const BeamShape shape = obtain_ide_shape(cfg);

    auto scene_rng = std::mt19937_64(cfg.seed);
    SimSetup setup(cfg, shape, scene_rng);
    auto traj_rng = std::mt19937_64(cfg.seed + 1);
    const Trajectory traj = generate_trajectory(cfg.trajectory_kind, cfg, traj_rng);
    const double tx_power = std::pow(10.0, cfg.ptx_dbm_sweep.front() / 10.0) * 1e-3;

    // Proposed scheme at the configured S_max plus S_max = 2 for comparison.
    std::vector<std::pair<std::string, int>> variants = {
        {"proposed_s" + std::to_string(cfg.s_max), cfg.s_max}};
    if (cfg.s_max != 2) variants.push_back({"proposed_s2", 2});

    const fs::path err_path = fs::path(o.out_dir) / "prediction_error.csv";
    auto err_os = open_output(err_path);
    write_manifest(err_os, cfg);
    err_os << "time_s,pred_err,scheme\n";
    char buf[160];

    SchemeRunResult main_run;
    for (const auto& [tag, s_max] : variants) {
        auto rng = std::mt19937_64(cfg.seed + 2);
        SchemeRunResult run = run_ut_scheme(setup, traj, tx_power, s_max, rng);
        for (const auto& m : run.metrics) {
            std::snprintf(buf, sizeof(buf), "%.6f,%.10g,%s\n", m.time_s, m.prediction_error,
                          tag.c_str());
            err_os << buf;
        }
        if (s_max == cfg.s_max) main_run = std::move(run);
    }

    // Kalman baseline: sweep the noise parameters, keep the best pair.
    double best_mse = std::numeric_limits<double>::infinity();
    double best_q = 0.0, best_r = 0.0;
    std::vector<MetricsRecord> best_series;
    for (double qv : cfg.kalman_q_vars) {
        for (double rv : cfg.kalman_r_vars) {
            auto series = kalman_prediction_series(setup, traj, main_run, qv, rv);
            double mse = 0.0;
            for (const auto& m : series) mse += m.prediction_error;
            if (!series.empty()) mse /= series.size();
            if (mse < best_mse) {
                best_mse = mse;
                best_q = qv;
                best_r = rv;
                best_series = std::move(series);
            }
        }
    }
    for (const auto& m : best_series) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.10g,%s\n", m.time_s, m.prediction_error, "kalman");
        err_os << buf;
    }

    // Estimated/predicted angles per block for the main run.
    const fs::path ang_path = fs::path(o.out_dir) / "angles.csv";
    auto ang_os = open_output(ang_path);
    write_manifest(ang_os, cfg);
    ang_os << "time_s,theta_true,phi_true,theta_est,phi_est\n";
    for (const auto& b : main_run.blocks) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.10g,%.10g,%.10g,%.10g\n", b.t_estimate,
                      b.truth.theta, b.truth.phi, b.estimate.theta, b.estimate.phi);
        ang_os << buf;
    }

    write_summary_json(fs::path(o.out_dir) / "track_summary.json", cfg,
                       json{{"lost", main_run.lost},
                            {"lost_block", main_run.lost_block},
                            {"blocks", main_run.blocks.size()},
                            {"kalman_q_var", best_q},
                            {"kalman_r_var", best_r},
                            {"kalman_mse", best_mse},
                            {"trajectory_duration_s", traj.duration()}});
    std::cout << "track: " << main_run.blocks.size() << " blocks, lost=" << main_run.lost << "\n";
    return kOk;
}

int cmd_campaign(const CommonOpts& o, bool beam_patterns) {
    const RunConfig cfg = resolve_config(o);
    fs::create_directories(o.out_dir);
    const BeamShape shape = obtain_ide_shape(cfg);
    const int threads = resolve_threads(o.threads);

    const CampaignResult result = mc_campaign(cfg, shape, threads);
    const fs::path csv_path = fs::path(o.out_dir) / "campaign.csv";
    auto os = open_output(csv_path);
    write_manifest(os, cfg);
    os << "scheme,ptx_dbm,mean_snr_db,mean_rate,loss_prob,trials\n";
    char buf[200];
    for (const auto& r : result.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%d\n", r.scheme.c_str(),
                      r.ptx_dbm, r.mean_snr_db, r.mean_rate, r.loss_prob, r.trials);
        os << buf;
    }

    if (beam_patterns) {
        std::mt19937_64 rng(cfg.seed);
        const SimSetup setup(cfg, shape, rng);
        export_beam_pattern(fs::path(o.out_dir) / "beam_dt.csv", cfg, setup.cb_dt, "dt");
        export_beam_pattern(fs::path(o.out_dir) / "beam_ide.csv", cfg, setup.cb_ide, "ide");
    }

    write_summary_json(fs::path(o.out_dir) / "campaign_summary.json", cfg,
                       json{{"rows", result.rows.size()},
                            {"threads", threads},
                            {"csv", csv_path.string()}});
    std::cout << "campaign: " << result.rows.size() << " rows -> " << csv_path << "\n";
    return kOk;
}

int cmd_beam_pattern(const CommonOpts& o) {
    const RunConfig cfg = resolve_config(o);
    fs::create_directories(o.out_dir);
    const double d = cfg.spacing(), lambda = cfg.wavelength();
    const int member = cfg.quad_member >= 0 ? cfg.quad_member : cfg.m_ide - 1;

    const Codebook lin(linear_profile(cfg.q_irs), cfg.m_ide, cfg.q_irs, d, lambda,
                       BeamShapeKind::linear);
    const Codebook quad(quadratic_profile(cfg.q_irs, cfg.m_ide, d, lambda, member), cfg.m_ide,
                        cfg.q_irs, d, lambda, BeamShapeKind::quadratic);
    const BeamShape opt_shape = obtain_ide_shape(cfg);
    const Codebook opt(opt_shape, cfg.m_ide, cfg.q_irs, d, lambda, BeamShapeKind::optimized);

    export_beam_pattern(fs::path(o.out_dir) / "beam_linear.csv", cfg, lin, "linear");
    export_beam_pattern(fs::path(o.out_dir) / "beam_quadratic.csv", cfg, quad, "quadratic");
    export_beam_pattern(fs::path(o.out_dir) / "beam_optimized.csv", cfg, opt, "optimized");
    std::cout << "beam patterns written to " << o.out_dir << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IRS-assisted mmWave user tracking simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    bool beam_patterns = false;
    auto* design = app.add_subcommand("design-codebook", "optimize the estimation beam shape");
    add_common(design, opts);
    auto* estimate = app.add_subcommand("estimate", "direction-estimation error sweep");
    add_common(estimate, opts);
    auto* track = app.add_subcommand("track", "single-trajectory tracking run");
    add_common(track, opts);
    auto* campaign = app.add_subcommand("campaign", "Monte-Carlo tracking campaign");
    add_common(campaign, opts);
    campaign->add_flag("--beam-patterns", beam_patterns, "also export codebook beam patterns");
    auto* pattern = app.add_subcommand("beam-pattern", "export codebook beam pattern CSVs");
    add_common(pattern, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (design->parsed()) return cmd_design_codebook(opts);
        if (estimate->parsed()) return cmd_estimate(opts);
        if (track->parsed()) return cmd_track(opts);
        if (campaign->parsed()) return cmd_campaign(opts, beam_patterns);
        if (pattern->parsed()) return cmd_beam_pattern(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        std::cerr << "error: " << what << "\n";
        return what.find("cannot open") != std::string::npos ? kIo : kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kOk;
}
