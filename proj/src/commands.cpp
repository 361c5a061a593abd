#include "hydroldp/commands.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "hydroldp/energy.hpp"
#include "hydroldp/errors.hpp"
#include "hydroldp/io.hpp"
#include "hydroldp/verify.hpp"

namespace hydroldp {

namespace fs = std::filesystem;

namespace {

fs::path prepare_out(const RunConfig& c) {
    const fs::path dir(c.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", c.out_dir, ec.message()));
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

void close_out(std::ofstream& out, const fs::path& p) {
    out.close();
    if (!out) throw IoError("write failed for " + p.string());
}

template <class Fn>
void write_text(const fs::path& p, Fn&& fn) {
    auto out = open_out(p);
    fn(out);
    close_out(out, p);
}

void warn_eps(double eps, std::ostream& log) {
    if (eps > 1.0) log << fmt::format("warning: eps = {} > 1 is outside the small-noise regime\n", eps);
}

// Trajectory NDJSON and energy CSV, with the final fields as snapshots when enabled.
std::vector<EnergySample> write_run(const RunConfig& c, const fs::path& dir, const Trajectory& tr) {
    const std::string hash = c.hash();
    const auto samples = trajectory_energies(tr);
    std::vector<std::string> snaps;
    if (c.snapshots) {
        write_snapshot((dir / "final_v.hldp").string(), tr.final_state().v);
        write_snapshot((dir / "final_theta.hldp").string(), tr.final_state().theta);
        snaps.assign(samples.size(), "");
        snaps.back() = "final_v.hldp,final_theta.hldp";
    }
    write_text(dir / "trajectory.ndjson", [&](std::ostream& o) { write_trajectory_ndjson(o, tr, samples, hash, snaps); });
    write_text(dir / "energy.csv", [&](std::ostream& o) { write_energy_csv(o, samples, hash); });
    return samples;
}

void write_rate_trace(std::ostream& out, const RateResult& r, const std::string& hash) {
    out << "# config_hash=" << hash << " converged=" << (r.converged ? "true" : "false") << '\n';
    out << "outer,iterations,mu,J,cost,distance,residual,grad_norm\n";
    for (const auto& t : r.trace)
        out << fmt::format("{},{},{},{},{},{},{},{}\n", t.outer, t.iterations, fmt_double(t.mu), fmt_double(t.J),
                           fmt_double(t.cost), fmt_double(t.distance), fmt_double(t.residual), fmt_double(t.grad_norm));
}

RateOptions rate_options(const RunConfig& c) {
    RateOptions o = c.rate;
    o.seed = c.seed;
    return o;
}

// minimize_rate plus the divergence and budget checks shared by rate and mc-ldp.
RateResult solve_rate(const RunConfig& c, const RateProblem& p, const fs::path& dir, std::ostream& log) {
    const RateResult r = minimize_rate(p, rate_options(c));
    const std::string hash = c.hash();
    write_text(dir / "rate_trace.csv", [&](std::ostream& o) { write_rate_trace(o, r, hash); });
    for (const auto& t : r.trace)
        log << fmt::format("  outer {:2d} mu={:.3g} cost={:.6g} distance={:.6g} residual={:.3g} iters={}\n", t.outer,
                           t.mu, t.cost, t.distance, t.residual, t.iterations);
    if (!r.converged) throw Diverged("rate minimization: " + r.message, static_cast<int>(r.trace.size()));
    if (r.phi.norm_l2() > c.control_budget) throw ControlBudgetExceeded(r.phi.norm_l2(), c.control_budget);
    write_text(dir / "control.json", [&](std::ostream& o) { write_control_json(o, r.phi, hash, r.I); });
    return r;
}

ControlPath load_control(const std::string& path, int steps, int modes, double dt, const std::string& key) {
    ControlPath phi = read_control_json(path);
    if (phi.steps != steps || phi.modes != modes)
        throw ConfigError(key, fmt::format("control has {}x{} entries, the run needs {}x{}", phi.steps, phi.modes,
                                           steps, modes));
    if (std::abs(phi.dt - dt) > 1e-12 * dt) throw ConfigError(key, "control dt differs from time.dt");
    phi.dt = dt;
    return phi;
}

VerifyItem item(std::string id, std::string description, double value, double threshold, bool pass) {
    return {std::move(id), std::move(description), value, threshold, pass};
}

}  // namespace

int cmd_simulate(const RunConfig& c, std::ostream& log) {
    warn_eps(c.eps, log);
    const Model m = build_model(c);
    const Dynamics d(m, c.mode);
    const State x0 = build_initial(c, m);
    const fs::path dir = prepare_out(c);
    const NoiseStream ns(c.seed, 0);
    const Trajectory tr = integrate(d, Problem::Spde, x0, c.T, integrator_config(c), nullptr, &ns);
    const auto samples = write_run(c, dir, tr);
    log << fmt::format("simulate: steps={} MR={} final ||X||_H={} hash={}\n", tr.steps,
                       fmt_double(samples.back().mr_running), fmt_double(std::sqrt(h_norm2(tr.final_state()))),
                       c.hash());
    return kExitOk;
}

int cmd_skeleton(const RunConfig& c, std::ostream& log) {
    const Model m = build_model(c);
    const Dynamics d(m, c.mode);
    const State x0 = build_initial(c, m);
    const int steps = step_count(c.T, c.dt);
    const ControlPath phi = c.skeleton_control.empty()
                                ? ControlPath::zeros(steps, m.noise.size(), c.dt)
                                : load_control(c.skeleton_control, steps, m.noise.size(), c.dt, "skeleton.control");
    const fs::path dir = prepare_out(c);
    const Trajectory tr = integrate(d, Problem::Skeleton, x0, c.T, integrator_config(c), &phi);
    const auto samples = write_run(c, dir, tr);
    const std::string hash = c.hash();
    for (EnergyLevel level : {EnergyLevel::L2, EnergyLevel::Intermediate, EnergyLevel::H1}) {
        const auto b = gronwall_fit(gronwall_series(samples, level, &phi));
        write_text(dir / fmt::format("budget_{}.csv", to_string(level)),
                   [&](std::ostream& o) { write_budget_csv(o, b, hash); });
        log << fmt::format("  budget {}: C={} first_violation={}\n", to_string(level), fmt_double(b.C),
                           b.first_violation);
    }
    log << fmt::format("skeleton: steps={} cost={} MR={} hash={}\n", tr.steps, fmt_double(phi.cost()),
                       fmt_double(samples.back().mr_running), hash);
    return kExitOk;
}

int cmd_rate(const RunConfig& c, std::ostream& log) {
    const Model m = build_model(c);
    const Dynamics d(m, c.mode);
    const RateProblem p(d, build_initial(c, m), c.T, c.dt, build_event(c, m));
    const fs::path dir = prepare_out(c);
    const RateResult r = solve_rate(c, p, dir, log);
    const Trajectory tr = p.forward(r.phi);
    write_run(c, dir, tr);
    log << fmt::format("rate: I*={} distance={} residual={} ({}) hash={}\n", fmt_double(r.I), fmt_double(r.distance),
                       fmt_double(r.residual), r.message, c.hash());
    return kExitOk;
}

int cmd_mc_ldp(const RunConfig& c, std::ostream& log) {
    for (double e : c.mc_eps) warn_eps(e, log);
    const Model m = build_model(c);
    const Dynamics d(m, c.mode);
    const RateProblem p(d, build_initial(c, m), c.T, c.dt, build_event(c, m));
    const fs::path dir = prepare_out(c);

    McOptions opt;
    opt.eps = c.mc_eps;
    opt.samples = c.mc_samples;
    opt.seed = c.seed;
    opt.control_budget = c.control_budget;
    double rate_value = std::numeric_limits<double>::quiet_NaN();
    ControlPath tilt;
    if (c.mc_tilt == "optimize") {
        const RateResult r = solve_rate(c, p, dir, log);
        tilt = r.phi;
        rate_value = r.I;
        opt.tilt = &tilt;
    } else if (c.mc_tilt == "file") {
        tilt = load_control(c.mc_tilt_file, p.steps(), p.modes(), c.dt, "mc.tilt_file");
        opt.tilt = &tilt;
    }
    const LdpReport rep = mc_small_noise(p, opt, rate_value);
    write_text(dir / "ldp_report.ndjson", [&](std::ostream& o) { write_ldp_report(o, rep, c.hash()); });
    for (const auto& row : rep.rows)
        log << fmt::format("  eps={} hits={}/{} p={:.6g} ci=[{:.4g}, {:.4g}] eps*log p={:.6g}{}\n", row.eps, row.hits,
                           row.samples, row.p_hat, row.ci_lo, row.ci_hi, row.eps_log_p,
                           row.use_tilt ? " (no hits: use tilt)" : "");
    log << fmt::format("mc-ldp: monotone={} consistent={} hash={}\n", rep.monotone, rep.is_consistent, c.hash());
    return kExitOk;
}

int cmd_verify(const RunConfig& c, std::ostream& log) {
    const Model m = build_model(c, false);
    VerifyReport rep = assumption_items(m.noise);
    rep.append(projection_suite(c.grid, c.verify_projection_samples, c.seed));
    rep.append(structural_suite(c.grid, c.verify_projection_samples, c.seed + 1));

    const CoercivityFit fit = coercivity_fit(m, c.verify_coercivity_samples, c.seed + 2);
    rep.items.push_back(item("coercivity_nu_hat",
                             fmt::format("fitted nu_hat at C0={} with M_hat={}", fmt_double(fit.C0),
                                         fmt_double(fit.M_hat)),
                             fit.nu_hat, 0.0, fit.pass));
    if (m.noise.has_gamma()) rep.append(turbulent_pressure_check(m.noise, c.seed + 3));

    // Strong-error slope of the correction-term integrator against the midpoint reference.
    RunConfig sc = c;
    sc.mode = NoiseMode::Stratonovich;
    const std::string strong_id = "ito_stratonovich_strong_order";
    const std::string strong_desc = "log-log slope of the common-noise strong error over four dt halvings";
    try {
        const Model sm = build_model(sc, false);
        const Dynamics sd(sm, NoiseMode::Stratonovich);
        const auto st = ito_stratonovich_study(sd, build_initial(sc, sm), c.verify_strong_T, {64, 128, 256, 512, 1024},
                                               1.0, c.verify_strong_paths, c.seed + 4);
        rep.items.push_back(item(strong_id, strong_desc, st.slope, 0.8, st.slope >= 0.8));
    } catch (const BlowupDetected& e) {
        rep.items.push_back(item(strong_id, strong_desc + " (" + e.what() + ")",
                                 std::numeric_limits<double>::quiet_NaN(), 0.8, false));
    }

    const fs::path dir = prepare_out(c);
    write_text(dir / "verify.csv", [&](std::ostream& o) { write_verify_table(o, rep, c.hash()); });
    for (const auto& i : rep.items)
        log << fmt::format("{:<4} {:<34} value={:<12.6g} threshold={:.6g}\n", i.pass ? "PASS" : "FAIL", i.id, i.value,
                           i.threshold);
    const bool ok = rep.all_pass();
    log << fmt::format("verify: {} hash={}\n", ok ? "all checks pass" : "some checks fail", c.hash());
    return ok ? kExitOk : kExitVerifyFailed;
}

int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err) {
    try {
        RunConfig c = load_config(opt.config_path);
        if (opt.seed) c.seed = *opt.seed;
        if (opt.out) c.out_dir = *opt.out;
        if (opt.control) c.skeleton_control = *opt.control;
        if (name == "simulate") return cmd_simulate(c, log);
        if (name == "skeleton") return cmd_skeleton(c, log);
        if (name == "rate") return cmd_rate(c, log);
        if (name == "mc-ldp") return cmd_mc_ldp(c, log);
        if (name == "verify") return cmd_verify(c, log);
        err << "error: unknown command " << name << '\n';
        return kExitConfig;
    } catch (const BlowupDetected& e) {
        err << "error: " << e.what() << fmt::format(" (t = {})\n", e.time());
        return kExitBlowup;
    } catch (const Diverged& e) {
        err << "error: optimizer diverged: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const ControlBudgetExceeded& e) {
        err << "error: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace hydroldp
