// fhnbif: stability and bifurcation analysis of two delay-coupled
// FitzHugh-Nagumo neurons from the command line.
//
// Subcommands: simulate, stability, atlas, orbit, basin, reproduce-figure.
// All outputs (CSV/JSON plus a resolved config.json) land in --out; re-running
// with the emitted config reproduces them byte-identically under this build.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "fhn/io.hpp"

using namespace fhn;
namespace fs = std::filesystem;
using io::json;
using io::RunConfig;

namespace {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

State parse_ic(const std::string& s) {
    State out;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf,%lf", &out.v1, &out.w1, &out.v2, &out.w2) != 4)
        throw ConfigError("bad initial condition '" + s + "' (want v1,w1,v2,w2)");
    return out;
}

void write_config(const RunConfig& rc) {
    io::write_json(fs::path(rc.output_dir) / "config.json", rc.to_json());
}

// ---------------------------------------------------------------------------

int run_simulate(const RunConfig& rc) {
    const auto& e = rc.extra;
    SimConfig cfg;
    cfg.t_end = e.value("t_end", 800.0);
    cfg.t_transient = e.value("transient", 500.0);
    cfg.h = e.value("h", 0.0);
    const int stride = e.value("stride", 1);
    const State ic = parse_ic(e.value("ic", "0.1,0.1,0.1,0.1"));

    const auto traj = integrate(rc.params, ic, cfg);
    const auto det = detect_orbit(traj, DetectConfig{cfg.t_transient});

    const fs::path out(rc.output_dir);
    io::write_trajectory_csv(out / "trajectory.csv", traj, stride);
    io::write_json(out / "summary.json", io::detection_json(det));
    write_config(rc);
    std::cout << "simulate: outcome=" << io::outcome_name(det.outcome);
    if (det.orbit) std::cout << " T=" << det.orbit->T << " sync=" << io::sync_name(det.orbit->sync);
    std::cout << "\n";
    return 0;
}

int run_stability(const RunConfig& rc) {
    const auto& e = rc.extra;
    const double tau_max = e.value("tau_max", 14.0);
    const int tau_steps = e.value("tau_steps", 280);
    const int j_max = e.value("j_max", 4);
    const int order = e.value("order", 32);

    const auto ts = trivial_stability(rc.params);
    auto crossings = hopf_delays(rc.params, j_max);
    std::erase_if(crossings, [&](const HopfPoint& hp) { return hp.tau > tau_max; });

    json j = io::stability_json(rc.params, ts, crossings);
    const auto pc = pitchfork_coupling(rc.params);
    if (pc.c) j["pitchfork_c"] = *pc.c;
    j["ode_hopf_c"] = ode_hopf_coupling(rc.params);
    if (pc.c && !pc.degenerate) {
        const auto hp = hopf_pitchfork_point(rc.params);
        j["hopf_pitchfork"] = {{"tau", hp.tau}, {"c", hp.c}};
    }

    // spectra of every rest point at the configured (c, tau)
    json spectra = json::array();
    for (const auto& r : find_rest_points(rc.params).points) {
        const auto sp = rightmost_spectrum(rc.params, r.state, order);
        json ev = json::array();
        for (const auto& x : sp.eigenvalues)
            ev.push_back({{"re", x.lambda.real()},
                          {"im", x.lambda.imag()},
                          {"multiplicity", x.multiplicity},
                          {"converged", x.converged},
                          {"residual", x.residual}});
        spectra.push_back({{"rest_v1", r.state.v1},
                           {"unstable_count", sp.unstable_count()},
                           {"order", sp.discretization_order},
                           {"eigenvalues", ev}});
    }
    j["spectra"] = spectra;

    // tau sweep of the rightmost real parts (trivial point)
    std::vector<double> taus(tau_steps + 1);
    std::vector<std::vector<double>> reals(tau_steps + 1);
    detail::parallel_for(tau_steps + 1, [&](int i) {
        const double tau = tau_max * i / tau_steps;
        taus[i] = tau;
        const auto sp = rightmost_spectrum(rc.params.with_tau(tau), State{}, order);
        for (const auto& x : sp.eigenvalues)
            if (x.converged && x.lambda.imag() >= 0.0) reals[i].push_back(x.lambda.real());
        std::sort(reals[i].rbegin(), reals[i].rend());
    });

    const fs::path out(rc.output_dir);
    io::write_eigen_sweep_csv(out / "eigen_sweep.csv", taus, reals);
    io::write_json(out / "stability.json", j);
    write_config(rc);
    std::cout << "stability: " << j["classification"].get<std::string>();
    if (j.contains("tau0")) std::cout << " tau0=" << j["tau0"].get<double>();
    std::cout << "\n";
    return 0;
}

void write_gnuplot_atlas(const fs::path& out, const std::vector<std::string>& files) {
    std::string gp = "set xlabel 'tau'\nset ylabel 'c'\nset key off\nplot \\\n";
    for (std::size_t i = 0; i < files.size(); ++i) {
        gp += "  '" + files[i] + "' using 1:2 with lines";
        gp += i + 1 < files.size() ? ", \\\n" : "\n";
    }
    io::write_text(out / "atlas.gp", gp);
}

int run_atlas(const RunConfig& rc) {
    const auto& e = rc.extra;
    ParamBox box;
    box.tau_max = e.value("tau_max", 9.0);
    box.c_max = e.value("c_max", 1.4);
    const int k_max = e.value("k_max", 4), j_max = e.value("j_max", 4);
    const int c_steps = e.value("c_steps", 800);
    const int grid_tau = e.value("grid_tau", 0), grid_c = e.value("grid_c", 0);

    const fs::path out(rc.output_dir);
    std::vector<std::string> files;
    std::vector<Branch> branches = trivial_hopf_curves(rc.params, box, k_max, j_max, c_steps);
    int idx = 0;
    for (const auto& br : branches) {
        const std::string name = "trivial_hopf_k" + std::to_string(br.k) + "_j" +
                                 std::to_string(br.j) + "_" + std::to_string(idx++) + ".csv";
        io::write_branch_csv(out / name, br);
        files.push_back(name);
    }

    const Branch pf = pitchfork_line(rc.params, box);
    if (!pf.points.empty()) {
        io::write_branch_csv(out / "pitchfork.csv", pf);
        files.push_back("pitchfork.csv");
        branches.push_back(pf);
    }

    std::vector<double> seed_cs;
    if (e.contains("seed_cs")) seed_cs = e["seed_cs"].get<std::vector<double>>();
    const auto nontrivial = nontrivial_hopf_curves(rc.params, box, seed_cs);
    idx = 0;
    for (const auto& br : nontrivial) {
        const std::string name = "nontrivial_hopf_" + std::to_string(idx++) + ".csv";
        io::write_branch_csv(out / name, br);
        files.push_back(name);
    }

    const auto c2 = codim2_points(rc.params, branches);
    io::write_json(out / "codim2.json", io::codim2_json(c2));

    if (grid_tau > 0 && grid_c > 0) {
        ICProtocol proto;
        proto.seed = rc.seed;
        proto.n_random = e.value("grid_ics", 32);
        BasinConfig bc;
        bc.sim.t_end = e.value("grid_t_end", 1500.0);
        bc.sim.t_transient = bc.sim.t_end - 500.0;
        bc.detect.transient = bc.sim.t_transient;
        const auto grid = regime_grid(rc.params, box, grid_tau, grid_c, proto, bc);
        io::write_grid_csv(out / "regime_grid.csv", grid);
    }

    write_gnuplot_atlas(out, files);
    write_config(rc);
    std::cout << "atlas: " << branches.size() + nontrivial.size() << " branches, " << c2.size()
              << " codim-2 points\n";
    return 0;
}

int run_orbit(const RunConfig& rc) {
    const auto& e = rc.extra;
    const int M = e.value("mesh", 40), degree = e.value("degree", 4);
    const int floquet_n = e.value("floquet_n", 32);
    const fs::path out(rc.output_dir);

    CycleBVP seed;
    if (e.value("from_hopf", false)) {
        const int k = e.value("k", 2), jj = e.value("j", 0);
        double omega = 0.0, tau_h = 0.0;
        for (const auto& hp : hopf_delays(rc.params, jj))
            if (hp.k == k && hp.j == jj) {
                omega = hp.omega;
                tau_h = hp.tau;
            }
        if (omega == 0.0) throw NumericalError("orbit: no Hopf point for the requested k, j");
        const auto res = cycle_from_hopf(rc.params.with_tau(tau_h), ContParam::Tau, State{},
                                         omega, rc.params.tau, 0.04, M, degree);
        if (res.status != CycleSolveStatus::Converged)
            throw NumericalError("orbit: Hopf-seeded solve did not converge");
        seed = res.cycle;
    } else {
        SimConfig cfg;
        cfg.t_end = e.value("t_end", 1200.0);
        cfg.t_transient = e.value("transient", 800.0);
        const State ic = parse_ic(e.value("ic", "1.3,1.5,1.4,1.0"));
        const auto traj = integrate(rc.params, ic, cfg);
        const auto det = detect_orbit(traj, DetectConfig{cfg.t_transient});
        if (det.outcome != DetectionOutcome::Periodic)
            throw NumericalError("orbit: simulation did not settle on a periodic orbit");
        const auto res = refine_cycle(
            rc.params, cycle_seed_from_trajectory(rc.params, traj, det.orbit->T,
                                                  traj.t1() - 20.0, M, degree));
        if (res.status != CycleSolveStatus::Converged)
            throw NumericalError("orbit: collocation solve did not converge");
        seed = res.cycle;
    }

    io::write_profile_csv(out / "profile.csv", seed);
    const auto fl = floquet_multipliers(rc.params, seed, floquet_n);
    io::write_json(out / "floquet.json", io::floquet_json(rc.params, seed, fl));

    const std::string cont = e.value("continue_in", "none");
    if (cont == "c" || cont == "tau") {
        const ContParam which = cont == "c" ? ContParam::C : ContParam::Tau;
        std::pair<double, double> range{e.value("range_lo", 0.0), e.value("range_hi", 1.0)};
        CycleContOptions opt;
        opt.T_max = e.value("t_max", 500.0);
        opt.floquet_N = floquet_n;
        const auto res = continue_cycle_branch(rc.params, seed, which, range, opt);
        io::write_branch_csv(out / "branch.csv", res.branch);
        io::write_json(out / "events.json", io::events_json(res.events));
        if (!res.archive.empty())
            io::write_profile_csv(out / "profile_last.csv", res.archive.back().cycle);
        std::cout << "orbit: branch with " << res.archive.size() << " points, "
                  << res.events.size() << " events\n";
    } else {
        std::cout << "orbit: T=" << seed.T << " amplitude=" << seed.max_amplitude()
                  << " unstable=" << fl.unstable << "\n";
    }
    write_config(rc);
    return 0;
}

int run_basin(const RunConfig& rc) {
    const auto& e = rc.extra;
    ICProtocol proto;
    proto.seed = rc.seed;
    proto.n_random = e.value("n_random", 32);
    proto.range = e.value("range", 2.0);
    if (e.contains("ics")) {
        proto.explicit_ics.clear();
        for (const auto& s : e["ics"]) proto.explicit_ics.push_back(parse_ic(s));
    }
    BasinConfig bc;
    bc.sim.t_end = e.value("t_end", 2500.0);
    bc.sim.t_transient = e.value("transient", bc.sim.t_end - 700.0);
    bc.detect.transient = bc.sim.t_transient;

    const auto inv = basin_probe(rc.params, proto.materialize(), bc);
    io::write_json(fs::path(rc.output_dir) / "inventory.json", io::inventory_json(inv));
    write_config(rc);
    std::cout << "basin: " << inv.count(AttractorKind::Periodic) << " periodic, "
              << inv.count(AttractorKind::Rest) << " rest, "
              << inv.count(AttractorKind::NonPeriodic) << " non-periodic\n";
    return 0;
}

// ---------------------------------------------------------------------------
// reproduce-figure

CycleBVP stable_cycle_seed(const Params& p, const State& ic, int M = 40) {
    SimConfig cfg{0.0, 1200.0, 800.0, 1};
    const auto traj = integrate(p, ic, cfg);
    const auto det = detect_orbit(traj, DetectConfig{800.0});
    if (det.outcome != DetectionOutcome::Periodic)
        throw NumericalError("no stable cycle reachable from the given IC");
    const auto res = solve_cycle_bvp(
        p, cycle_seed_from_trajectory(p, traj, det.orbit->T, traj.t1() - 20.0, M));
    if (res.status != CycleSolveStatus::Converged)
        throw NumericalError("collocation solve failed for the simulated cycle");
    return res.cycle;
}

int run_figure(RunConfig rc, const std::string& id) {
    rc.command = "reproduce-figure";
    rc.extra = json{{"id", id}};
    const fs::path out = fs::path(rc.output_dir) / id;
    rc.output_dir = out.string();
    Params p = rc.params;

    if (id == "fig1" || id == "fig2") {
        // instantaneous-coupling cascade: rest branches, cycle branch, events
        p.tau = 0.0;
        std::string rest_csv =
            "# schema=fhnbif.rest_branch.v1\nc,v1_plus,stable_origin,stable_pair\n";
        for (int i = 0; i <= 240; ++i) {
            const double cc = 0.3 + (1.15 - 0.3) * i / 240.0;
            const auto rp = find_rest_points(p.with_c(cc));
            const double vp = rp.points.size() == 3 ? rp.points.front().state.v1 : 0.0;
            const int s0 =
                rightmost_spectrum(p.with_c(cc), State{}).unstable_count() == 0 ? 1 : 0;
            int spair = 0;
            if (rp.points.size() == 3)
                spair = rightmost_spectrum(p.with_c(cc), rp.points.front().state)
                                    .unstable_count() == 0
                            ? 1
                            : 0;
            rest_csv += io::fmt(cc) + "," + io::fmt(vp) + "," + std::to_string(s0) + "," +
                        std::to_string(spair) + "\n";
        }
        io::write_text(out / "rest_branches.csv", rest_csv);

        if (id == "fig1") {
            const auto seed = stable_cycle_seed(p.with_c(0.9), State{1.3, 1.5, 1.4, 1.0}, 60);
            CycleContOptions opt;
            opt.T_max = 200.0;
            const auto res =
                continue_cycle_branch(p.with_c(0.9), seed, ContParam::C, {0.38, 1.2}, opt);
            std::string amp_csv =
                "# schema=fhnbif.cycle_amplitude.v1\nc,amplitude_v1,T,unstable\n";
            for (const auto& cp : res.archive)
                amp_csv += io::fmt(cp.param) + "," + io::fmt(cp.cycle.amplitude()[0]) + "," +
                           io::fmt(cp.cycle.T) + "," + std::to_string(cp.floquet.unstable) +
                           "\n";
            io::write_text(out / "cycle_branch.csv", amp_csv);
            io::write_json(out / "events.json", io::events_json(res.events));
            io::write_text(out / "fig1.gp",
                           "set xlabel 'c'\nset ylabel 'amplitude / rest v1'\n"
                           "plot 'rest_branches.csv' using 1:2 with lines, \\\n"
                           "     'cycle_branch.csv' using 1:2 with lines\n");
        } else {
            // period blow-up of the small sub-Hopf cycles
            const auto rp = find_rest_points(p.with_c(0.98));
            const auto sp = rightmost_spectrum(p.with_c(0.98), rp.points.front().state);
            double omega = 0.0;
            for (const auto& x : sp.eigenvalues)
                if (x.lambda.imag() > 0.05) omega = std::max(omega, x.lambda.imag());
            const auto small = cycle_from_hopf(p.with_c(0.98), ContParam::C,
                                               rp.points.front().state, omega, 0.99);
            if (small.status != CycleSolveStatus::Converged)
                throw NumericalError("fig2: small-cycle seed failed");
            CycleContOptions opt;
            opt.T_max = 500.0;
            const auto res = continue_cycle_branch(p.with_c(0.99), small.cycle, ContParam::C,
                                                   {0.97, 1.06}, opt);
            std::string csv = "# schema=fhnbif.cycle_period.v1\nc,T\n";
            for (const auto& cp : res.archive)
                csv += io::fmt(cp.param) + "," + io::fmt(cp.cycle.T) + "\n";
            io::write_text(out / "period_branch.csv", csv);
            io::write_json(out / "events.json", io::events_json(res.events));
            io::write_text(out / "fig2.gp",
                           "set xlabel 'c'\nset ylabel 'T'\n"
                           "plot 'period_branch.csv' using 1:2 with lines\n");
        }
    } else if (id == "fig8" || id == "fig18") {
        RunConfig sub = rc;
        sub.command = "atlas";
        sub.extra = json{{"tau_max", 9.0},
                         {"c_max", id == "fig8" ? 0.7 : 1.4},
                         {"k_max", 4},
                         {"j_max", 4}};
        return run_atlas(sub);
    } else if (id == "fig9") {
        RunConfig sub = rc;
        sub.command = "stability";
        sub.params.c = 0.2;
        sub.extra = json{{"tau_max", 14.0}, {"tau_steps", 280}};
        return run_stability(sub);
    } else if (id == "fig10" || id == "fig11") {
        for (double tau : {1.5, 1.8, 2.5, 3.5, 4.0, 5.3, 6.0, 7.0, 8.2}) {
            SimConfig cfg{0.0, 900.0, 600.0, 1};
            const auto traj =
                integrate(p.with_c(0.2).with_tau(tau), State{0.1, 0.1, 0.1, 0.1}, cfg);
            const auto det = detect_orbit(traj, DetectConfig{600.0});
            char name[64];
            std::snprintf(name, sizeof name, "tau_%.1f", tau);
            io::write_trajectory_csv(out / (std::string(name) + ".csv"), traj, 5);
            io::write_json(out / (std::string(name) + ".json"), io::detection_json(det));
        }
        io::write_text(out / (id + ".gp"),
                       "set xlabel 't'\nset ylabel 'v1, v2'\n"
                       "plot 'tau_1.8.csv' using 1:2 with lines, '' using 1:4 with lines\n");
    } else if (id == "fig13") {
        RunConfig sub = rc;
        sub.command = "basin";
        sub.params.c = 0.325;
        sub.params.tau = 4.7756;
        sub.extra = json{{"ics", json::array({"0.1,0.3,0.4,0.2", "1.0,0.9,0.8,0.7"})},
                         {"n_random", 0},
                         {"t_end", 2500.0}};
        run_basin(sub);
        for (const std::string ic : {"0.1,0.3,0.4,0.2", "1.0,0.9,0.8,0.7"}) {
            SimConfig cfg{0.0, 2500.0, 1800.0, 1};
            const auto traj = integrate(sub.params, parse_ic(ic), cfg);
            const std::string name = ic.substr(0, 3) == "0.1" ? "anti" : "sync";
            io::write_trajectory_csv(out / ("traj_" + name + ".csv"), traj, 10);
        }
    } else if (id == "fig20") {
        if (p.c == 0.0) p.c = 1.3;
        ICProtocol proto;
        proto.seed = rc.seed;
        proto.n_random = 340;
        BasinConfig bc;
        bc.sim.t_end = 4000.0;
        bc.sim.t_transient = 3200.0;
        bc.detect.transient = 3200.0;
        const double lo = p.tau > 0.0 ? p.tau : 5.0;
        const double hi = p.tau > 0.0 ? p.tau : 9.0;
        const auto res = scan_tri_stability(p, lo, hi, 0.1, proto, bc);
        if (!res.found) throw NumericalError("fig20: no tri-stable tau found in the scan");
        io::write_json(out / "inventory.json", io::inventory_json(res.inventory));
        json log = json::array();
        for (const auto& [tau, n] : res.scan_log) log.push_back({{"tau", tau}, {"n", n}});
        io::write_json(out / "scan.json",
                       json{{"schema", "fhnbif.tri_scan.v1"}, {"tau", res.tau}, {"log", log}});
    } else {
        throw ConfigError("unknown figure id '" + id +
                          "' (known: fig1 fig2 fig8 fig9 fig10 fig11 fig13 fig18 fig20)");
    }
    write_config(rc);
    std::cout << "reproduce-figure " << id << ": done\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability and bifurcation analysis of two delay-coupled FHN neurons"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path, out_dir, ic_str, cont_in, fig_id;
    double a = 0, b1 = 0, b2 = 0, c = 0, tau = 0;
    unsigned seed = 0;

    auto* o_config = app.add_option("--config", config_path, "JSON config file");
    auto* o_out = app.add_option("--out", out_dir, "output directory");
    auto* o_seed = app.add_option("--seed", seed, "RNG seed for IC sweeps");
    auto* o_a = app.add_option("--a", a, "excitability constant");
    auto* o_b1 = app.add_option("--b1", b1, "recovery rate of neuron 1");
    auto* o_b2 = app.add_option("--b2", b2, "recovery rate of neuron 2");
    auto* o_c = app.add_option("--c", c, "coupling strength");
    auto* o_tau = app.add_option("--tau", tau, "transmission delay");

    double t_end = 0, transient = 0, h = 0, range = 0, range_lo = 0, range_hi = 0, t_max = 0;
    int stride = 0, j_max = 0, k_arg = 0, jj_arg = 0, n_random = 0, grid_tau = 0, grid_c = 0;
    bool from_hopf = false;
    std::vector<std::string> ics;

    auto* sim = app.add_subcommand("simulate", "integrate and classify one trajectory");
    sim->fallthrough();
    auto* s_ic = sim->add_option("--ic", ic_str, "initial state v1,w1,v2,w2");
    auto* s_tend = sim->add_option("--t-end", t_end, "integration horizon");
    auto* s_trans = sim->add_option("--transient", transient, "discard window");
    auto* s_h = sim->add_option("--step", h, "step size (0 = auto)");
    auto* s_stride = sim->add_option("--stride", stride, "CSV thinning stride");

    auto* stab = app.add_subcommand("stability", "characteristic-equation stability report");
    stab->fallthrough();
    auto* st_tmax = stab->add_option("--tau-max", t_max, "sweep range");
    auto* st_jmax = stab->add_option("--j-max", j_max, "delay sequence depth");

    auto* atl = app.add_subcommand("atlas", "two-parameter bifurcation diagram");
    atl->fallthrough();
    auto* a_tmax = atl->add_option("--tau-max", t_max, "box tau limit");
    auto* a_cmax = atl->add_option("--c-max", range, "box c limit");
    auto* a_gt = atl->add_option("--grid-tau", grid_tau, "regime grid resolution in tau");
    auto* a_gc = atl->add_option("--grid-c", grid_c, "regime grid resolution in c");

    auto* orb = app.add_subcommand("orbit", "periodic-orbit solve / continuation");
    orb->fallthrough();
    auto* o_fh = orb->add_flag("--from-hopf", from_hopf, "seed from a trivial-point Hopf");
    auto* o_k = orb->add_option("--k", k_arg, "Hopf root branch index");
    auto* o_j = orb->add_option("--j", jj_arg, "Hopf delay sequence index");
    auto* o_cont = orb->add_option("--continue-in", cont_in, "continuation parameter: c | tau");
    auto* o_rlo = orb->add_option("--range-lo", range_lo, "continuation range low");
    auto* o_rhi = orb->add_option("--range-hi", range_hi, "continuation range high");
    auto* o_tmax2 = orb->add_option("--t-max", t_max, "homoclinic period threshold");
    auto* o_ic2 = orb->add_option("--ic", ic_str, "simulation IC for the seed");

    auto* bas = app.add_subcommand("basin", "multi-IC attractor inventory");
    bas->fallthrough();
    auto* b_ics = bas->add_option("--ics", ics, "explicit ICs v1,w1,v2,w2 (repeatable)");
    auto* b_nr = bas->add_option("--n-random", n_random, "random constant-history ICs");
    auto* b_rg = bas->add_option("--range", range, "random IC box half-width");
    auto* b_tend = bas->add_option("--t-end", t_end, "integration horizon");

    auto* fig = app.add_subcommand("reproduce-figure", "regenerate a figure's data");
    fig->fallthrough();
    fig->add_option("id", fig_id,
                    "figure id (fig1 fig2 fig8 fig9 fig10 fig11 fig13 fig18 fig20)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig rc;
        if (o_config->count()) rc = RunConfig::load(config_path);
        if (const char* env = std::getenv("FHNBIF_OUTPUT_DIR");
            env && rc.output_dir == "fhnbif_out")
            rc.output_dir = env;
        if (o_out->count()) rc.output_dir = out_dir;
        if (o_seed->count()) rc.seed = seed;
        if (o_a->count()) rc.params.a = a;
        if (o_b1->count()) rc.params.b1 = b1;
        if (o_b2->count()) rc.params.b2 = b2;
        if (o_c->count()) rc.params.c = c;
        if (o_tau->count()) rc.params.tau = tau;
        rc.params.validate();
        if (rc.extra.is_null()) rc.extra = json::object();

        const auto set = [&](const char* key, auto value, const CLI::Option* opt) {
            if (opt->count()) rc.extra[key] = value;
        };

        if (sim->parsed() || (!app.get_subcommands().size() && rc.command == "simulate")) {
            rc.command = "simulate";
            set("ic", ic_str, s_ic);
            set("t_end", t_end, s_tend);
            set("transient", transient, s_trans);
            set("h", h, s_h);
            set("stride", stride, s_stride);
            return run_simulate(rc);
        }
        if (stab->parsed() || (!app.get_subcommands().size() && rc.command == "stability")) {
            rc.command = "stability";
            set("tau_max", t_max, st_tmax);
            set("j_max", j_max, st_jmax);
            return run_stability(rc);
        }
        if (atl->parsed() || (!app.get_subcommands().size() && rc.command == "atlas")) {
            rc.command = "atlas";
            set("tau_max", t_max, a_tmax);
            set("c_max", range, a_cmax);
            set("grid_tau", grid_tau, a_gt);
            set("grid_c", grid_c, a_gc);
            return run_atlas(rc);
        }
        if (orb->parsed() || (!app.get_subcommands().size() && rc.command == "orbit")) {
            rc.command = "orbit";
            if (o_fh->count()) rc.extra["from_hopf"] = true;
            set("k", k_arg, o_k);
            set("j", jj_arg, o_j);
            set("continue_in", cont_in, o_cont);
            set("range_lo", range_lo, o_rlo);
            set("range_hi", range_hi, o_rhi);
            set("t_max", t_max, o_tmax2);
            set("ic", ic_str, o_ic2);
            return run_orbit(rc);
        }
        if (bas->parsed() || (!app.get_subcommands().size() && rc.command == "basin")) {
            rc.command = "basin";
            if (b_ics->count()) rc.extra["ics"] = ics;
            set("n_random", n_random, b_nr);
            set("range", range, b_rg);
            set("t_end", t_end, b_tend);
            return run_basin(rc);
        }
        if (fig->parsed()) return run_figure(rc, fig_id);
        if (rc.command == "reproduce-figure")
            return run_figure(rc, rc.extra.value("id", std::string{}));

        std::cerr << "no subcommand given (and no command in the config); see --help\n";
        return 2;
    } catch (const ConfigError& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return 2;
    } catch (const NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 3;
    } catch (const DivergenceError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 3;
    } catch (const ConvergenceError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
