#pragma once

// CSV/JSON emission and run-configuration round-tripping. Schemas are
// versioned in the first header line of every file; numbers are written with
// 17 significant digits so a re-run under the same build is byte-identical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fhn/atlas.hpp"
#include "fhn/cycle.hpp"
#include "fhn/orbit.hpp"
#include "fhn/sim.hpp"
#include "fhn/spectrum.hpp"

namespace fhn::io {

using json = nlohmann::ordered_json;

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << content;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const HistoryTrajectory& traj, int stride = 1) {
    std::string s = "# schema=fhnbif.trajectory.v1\nt,v1,w1,v2,w2\n";
    for (std::size_t i = 0; i < traj.size(); i += stride) {
        s += fmt(traj.t[i]);
        for (int q = 0; q < 4; ++q) s += "," + fmt(traj.y[i][q]);
        s += "\n";
    }
    write_text(path, s);
}

inline void write_profile_csv(const std::filesystem::path& path, const CycleBVP& cycle,
                              int samples = 400) {
    std::string s = "# schema=fhnbif.orbit_profile.v1\n# T=" + fmt(cycle.T) + "\ns,v1,w1,v2,w2\n";
    for (int k = 0; k <= samples; ++k) {
        const double ss = static_cast<double>(k) / samples;
        const State y = cycle.eval(ss);
        s += fmt(ss);
        for (int q = 0; q < 4; ++q) s += "," + fmt(y[q]);
        s += "\n";
    }
    write_text(path, s);
}

inline void write_branch_csv(const std::filesystem::path& path, const Branch& br) {
    std::string s = "# schema=fhnbif.branch.v1\n# kind=" + std::string(branch_kind_name(br.kind));
    if (br.kind == BranchKind::HopfTrivial)
        s += " k=" + std::to_string(br.k) + " j=" + std::to_string(br.j);
    s += "\ntau,c,value\n";
    for (const auto& q : br.points)
        s += fmt(q.tau) + "," + fmt(q.c) + "," + fmt(q.value) + "\n";
    write_text(path, s);
}

inline void write_grid_csv(const std::filesystem::path& path, const RegimeGrid& grid) {
    std::string s =
        "# schema=fhnbif.regime_grid.v1\ntau,c,stable_rest,periodic,nonperiodic,label\n";
    for (const auto& cell : grid.cells) {
        s += fmt(cell.tau) + "," + fmt(cell.c) + "," + std::to_string(cell.stable_rest) + "," +
             std::to_string(cell.periodic) + "," + std::to_string(cell.nonperiodic) + "," +
             cell.label + "\n";
    }
    write_text(path, s);
}

inline void write_eigen_sweep_csv(const std::filesystem::path& path,
                                  const std::vector<double>& taus,
                                  const std::vector<std::vector<double>>& real_parts,
                                  int n_cols = 6) {
    std::string s = "# schema=fhnbif.eigen_sweep.v1\ntau";
    for (int k = 0; k < n_cols; ++k) s += ",re" + std::to_string(k + 1);
    s += "\n";
    for (std::size_t i = 0; i < taus.size(); ++i) {
        s += fmt(taus[i]);
        for (int k = 0; k < n_cols; ++k)
            s += "," + (k < static_cast<int>(real_parts[i].size()) ? fmt(real_parts[i][k])
                                                                   : std::string("nan"));
        s += "\n";
    }
    write_text(path, s);
}

// ---------------------------------------------------------------------------
// JSON pieces

inline const char* sync_name(SyncClass sc) {
    switch (sc) {
        case SyncClass::AlmostSynchronized: return "almost_synchronized";
        case SyncClass::AlmostAntiPhase: return "almost_anti_phase";
        case SyncClass::Other: return "other";
    }
    return "?";
}

inline const char* outcome_name(DetectionOutcome oc) {
    switch (oc) {
        case DetectionOutcome::Periodic: return "periodic";
        case DetectionOutcome::Quiescent: return "quiescent";
        case DetectionOutcome::NonPeriodic: return "non_periodic";
        case DetectionOutcome::TooShort: return "too_short";
    }
    return "?";
}

inline json state_json(const State& s) {
    return json{{"v1", s.v1}, {"w1", s.w1}, {"v2", s.v2}, {"w2", s.w2}};
}

inline json orbit_summary_json(const OrbitSummary& o) {
    json j;
    j["period"] = o.T;
    j["amplitude"] = {{"v1", o.amplitude[0]},
                      {"w1", o.amplitude[1]},
                      {"v2", o.amplitude[2]},
                      {"w2", o.amplitude[3]}};
    j["phase_shift"] = o.phase_shift;
    j["sync"] = sync_name(o.sync);
    j["stable"] = o.stability.stable;
    j["index"] = o.stability.index;
    if (!o.floquet.empty()) {
        json m = json::array();
        for (const auto& mu : o.floquet)
            m.push_back({{"re", mu.real()}, {"im", mu.imag()}, {"modulus", std::abs(mu)}});
        j["floquet"] = m;
    }
    return j;
}

inline json detection_json(const DetectionResult& det) {
    json j;
    j["schema"] = "fhnbif.orbit_summary.v1";
    j["outcome"] = outcome_name(det.outcome);
    j["periodic"] = det.outcome == DetectionOutcome::Periodic;
    if (det.orbit) j.update(orbit_summary_json(*det.orbit));
    j["final_state"] = state_json(det.final_state);
    return j;
}

inline json floquet_json(const Params& p, const CycleBVP& cycle, const FloquetResult& fl,
                         std::size_t max_entries = 40) {
    json j;
    j["schema"] = "fhnbif.floquet.v1";
    j["tau"] = p.tau;
    j["c"] = p.c;
    j["period"] = cycle.T;
    j["trivial_error"] = fl.trivial_error;
    j["valid"] = fl.valid;
    j["unstable"] = fl.unstable;
    json m = json::array();
    for (std::size_t i = 0; i < fl.multipliers.size() && i < max_entries; ++i) {
        const cplx mu = fl.multipliers[i];
        m.push_back({{"re", mu.real()}, {"im", mu.imag()}, {"modulus", std::abs(mu)}});
    }
    j["multipliers"] = m;
    return j;
}

inline json inventory_json(const AttractorInventory& inv) {
    json j;
    j["schema"] = "fhnbif.inventory.v1";
    json rests = json::array();
    for (const auto& r : inv.rests.points) {
        rests.push_back({{"kind", r.kind == RestPointKind::Trivial ? "trivial"
                                  : r.kind == RestPointKind::NontrivialPlus ? "plus" : "minus"},
                         {"state", state_json(r.state)},
                         {"residual", r.residual}});
    }
    j["rest_points"] = rests;
    json ats = json::array();
    for (const auto& at : inv.attractors) {
        json a;
        a["kind"] = at.kind == AttractorKind::Rest ? "rest"
                    : at.kind == AttractorKind::Periodic ? "periodic" : "non_periodic";
        a["hits"] = at.hits;
        a["example_ic"] = state_json(at.example_ic);
        a["mean_state"] = state_json(at.mean_state);
        if (at.kind == AttractorKind::Rest) a["rest_index"] = at.rest_index;
        if (at.orbit) a.update(orbit_summary_json(*at.orbit));
        ats.push_back(a);
    }
    j["attractors"] = ats;
    j["n_periodic"] = inv.count(AttractorKind::Periodic);
    j["n_rest"] = inv.count(AttractorKind::Rest);
    j["n_non_periodic"] = inv.count(AttractorKind::NonPeriodic);
    return j;
}

inline json codim2_json(const std::vector<Codim2Point>& pts) {
    json arr = json::array();
    for (const auto& pt : pts) {
        arr.push_back({{"kind", pt.kind == Codim2Kind::DoubleHopf ? "double_hopf"
                                                                  : "hopf_pitchfork"},
                       {"tau", pt.tau},
                       {"c", pt.c},
                       {"omega1", pt.omega1},
                       {"omega2", pt.omega2},
                       {"residual", pt.residual}});
    }
    return json{{"schema", "fhnbif.codim2.v1"}, {"points", arr}};
}

inline const char* event_name(CycleEventKind k) {
    switch (k) {
        case CycleEventKind::Fold: return "fold";
        case CycleEventKind::PitchforkCycle: return "pitchfork_cycle";
        case CycleEventKind::Torus: return "torus";
        case CycleEventKind::HopfEndpoint: return "hopf_endpoint";
        case CycleEventKind::HomoclinicProxy: return "homoclinic_proxy";
    }
    return "?";
}

inline json events_json(const std::vector<CycleEvent>& events) {
    json arr = json::array();
    for (const auto& ev : events) {
        json cands = json::array();
        for (auto c : ev.candidates) cands.push_back(event_name(c));
        arr.push_back({{"kind", event_name(ev.kind)},
                       {"candidates", cands},
                       {"param", ev.param},
                       {"tau", ev.tau},
                       {"c", ev.c},
                       {"period", ev.T},
                       {"multiplier_angle", ev.multiplier_angle}});
    }
    return json{{"schema", "fhnbif.events.v1"}, {"events", arr}};
}

inline json stability_json(const Params& p, const TrivialStability& ts,
                           const std::vector<HopfPoint>& crossings) {
    json j;
    j["schema"] = "fhnbif.stability.v1";
    j["c"] = p.c;
    j["classification"] = ts.kind == TrivialStabilityKind::StableAllTau ? "stable_all_tau"
                          : ts.kind == TrivialStabilityKind::StableUpTo ? "stable_up_to"
                                                                        : "unstable_at_tau_zero";
    j["stable_all_tau"] = ts.kind == TrivialStabilityKind::StableAllTau;
    if (ts.kind == TrivialStabilityKind::StableUpTo) j["tau0"] = ts.tau0;
    j["routh_hurwitz"] = {{"ok", ts.rh.ok},
                          {"flags", ts.rh.flags},
                          {"margins", ts.rh.margins}};
    json q;
    q["P"] = ts.quartic.P;
    q["Q"] = ts.quartic.Q;
    q["R"] = ts.quartic.R;
    q["S"] = ts.quartic.S;
    q["Delta"] = ts.quartic.Delta;
    q["positive_roots"] = ts.quartic.positive_roots;
    j["quartic"] = q;
    json cr = json::array();
    for (const auto& hp : crossings)
        cr.push_back({{"k", hp.k},
                      {"j", hp.j},
                      {"tau", hp.tau},
                      {"omega", hp.omega},
                      {"crossing_sign", hp.crossing_sign}});
    j["crossings"] = cr;
    return j;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    Params params;
    unsigned seed = 42;
    std::string output_dir = "fhnbif_out";
    std::string command;
    json extra;  // command-specific block

    json to_json() const {
        json j;
        j["schema"] = "fhnbif.config.v1";
        j["params"] = {{"a", params.a},
                       {"b1", params.b1},
                       {"b2", params.b2},
                       {"c", params.c},
                       {"tau", params.tau}};
        j["seed"] = seed;
        j["output_dir"] = output_dir;
        j["command"] = command;
        if (!extra.is_null()) j[command] = extra;
        return j;
    }

    static RunConfig from_json(const json& j) {
        RunConfig rc;
        if (j.contains("params")) {
            const auto& p = j["params"];
            rc.params.a = p.value("a", rc.params.a);
            rc.params.b1 = p.value("b1", rc.params.b1);
            rc.params.b2 = p.value("b2", rc.params.b2);
            rc.params.c = p.value("c", rc.params.c);
            rc.params.tau = p.value("tau", rc.params.tau);
        }
        rc.seed = j.value("seed", rc.seed);
        rc.output_dir = j.value("output_dir", rc.output_dir);
        rc.command = j.value("command", "");
        if (!rc.command.empty() && j.contains(rc.command)) rc.extra = j[rc.command];
        return rc;
    }

    static RunConfig load(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot read config file " + path.string());
        json j;
        try {
            f >> j;
        } catch (const std::exception& e) {
            throw ConfigError("config parse error in " + path.string() + ": " + e.what());
        }
        return from_json(j);
    }
};

}  // namespace fhn::io
