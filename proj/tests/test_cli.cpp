#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = FHN_CLI_PATH;
const fs::path tmp_root = FHN_TEST_TMP;

int run_cli(const std::string& args) {
    const int rc = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json slurp_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path fresh_dir(const std::string& name) {
    const fs::path d = tmp_root / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("cli: simulate reports a periodic orbit past the first crossing", "[cli]") {
    const auto out = fresh_dir("sim_periodic");
    REQUIRE(run_cli("simulate --c 0.2 --tau 1.8 --out " + out.string()) == 0);
    const json s = slurp_json(out / "summary.json");
    REQUIRE(s["periodic"] == true);
    REQUIRE(s["outcome"] == "periodic");
    REQUIRE(std::abs(s["period"].get<double>() - 7.15) < 0.36);
}

TEST_CASE("cli: simulate reports quiescence in the restabilized window", "[cli]") {
    const auto out = fresh_dir("sim_quiet");
    REQUIRE(run_cli("simulate --c 0.2 --tau 4.0 --out " + out.string()) == 0);
    const json s = slurp_json(out / "summary.json");
    REQUIRE(s["periodic"] == false);
    REQUIRE(s["outcome"] == "quiescent");
}

TEST_CASE("cli: trivial initial data stays identically zero", "[cli]") {
    const auto out = fresh_dir("sim_zero");
    REQUIRE(run_cli("simulate --c 0 --tau 0 --ic 0,0,0,0 --t-end 50 --transient 10 --out " +
                    out.string()) == 0);
    const std::string csv = slurp(out / "trajectory.csv");
    std::istringstream ss(csv);
    std::string line;
    std::getline(ss, line);  // schema
    std::getline(ss, line);  // header
    while (std::getline(ss, line)) {
        const auto comma = line.find(',');
        REQUIRE(line.substr(comma) == ",0,0,0,0");
    }
}

TEST_CASE("cli: schema headers are pinned", "[cli]") {
    const auto out = fresh_dir("schemas");
    REQUIRE(run_cli("simulate --c 0.2 --tau 1.8 --t-end 120 --transient 60 --out " +
                    out.string()) == 0);
    const std::string csv = slurp(out / "trajectory.csv");
    REQUIRE(csv.rfind("# schema=fhnbif.trajectory.v1\nt,v1,w1,v2,w2\n", 0) == 0);
    const json s = slurp_json(out / "summary.json");
    REQUIRE(s["schema"] == "fhnbif.orbit_summary.v1");
    const json c = slurp_json(out / "config.json");
    REQUIRE(c["schema"] == "fhnbif.config.v1");
    REQUIRE(c["seed"] == 42);
}

TEST_CASE("cli: emitted config reproduces byte-identical outputs", "[cli]") {
    const auto a = fresh_dir("round_a");
    const auto b = fresh_dir("round_b");
    REQUIRE(run_cli("simulate --c 0.2 --tau 1.8 --t-end 150 --transient 60 --ic 0.3,0.1,0.2,0.4 "
                    "--out " + a.string()) == 0);
    REQUIRE(run_cli("--config " + (a / "config.json").string() + " --out " + b.string()) == 0);
    REQUIRE(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    REQUIRE(slurp(a / "summary.json") == slurp(b / "summary.json"));
}

TEST_CASE("cli: stability report for c = 0.2", "[cli][slow]") {
    const auto out = fresh_dir("stab02");
    REQUIRE(run_cli("stability --c 0.2 --out " + out.string()) == 0);
    const json s = slurp_json(out / "stability.json");
    REQUIRE(s["classification"] == "stable_up_to");
    REQUIRE(std::abs(s["tau0"].get<double>() - 1.63) <= 0.01);
    REQUIRE(std::abs(s["pitchfork_c"].get<double>() - 0.6285) < 5e-4);
    REQUIRE(std::abs(s["ode_hopf_c"].get<double>() - 0.3974) < 1e-3);

    // crossing signs alternate +,-,+,- ... until tau_2^(3) = 12.36
    const auto& cr = s["crossings"];
    REQUIRE(cr.size() >= 6);
    double last_tau = -1.0;
    int expect = +1;
    for (const auto& hp : cr) {
        const double tau = hp["tau"].get<double>();
        if (tau > 12.36) break;
        REQUIRE(tau > last_tau);
        REQUIRE(hp["crossing_sign"].get<int>() == expect);
        expect = -expect;
        last_tau = tau;
    }
    REQUIRE(last_tau > 12.0);

    const std::string sweep = slurp(out / "eigen_sweep.csv");
    REQUIRE(sweep.rfind("# schema=fhnbif.eigen_sweep.v1\n", 0) == 0);
}

TEST_CASE("cli: stability classifies weak coupling as stable for all delays", "[cli][slow]") {
    const auto out = fresh_dir("stab005");
    REQUIRE(run_cli("stability --c 0.05 --tau-max 6 --out " + out.string()) == 0);
    const json s = slurp_json(out / "stability.json");
    REQUIRE(s["stable_all_tau"] == true);
}

TEST_CASE("cli: atlas emits branch files with the paper anchor points", "[cli][slow]") {
    const auto out = fresh_dir("atlas");
    REQUIRE(run_cli("atlas --tau-max 6 --c-max 0.7 --out " + out.string()) == 0);
    const json c2 = slurp_json(out / "codim2.json");
    bool hp = false;
    for (const auto& pt : c2["points"])
        if (pt["kind"] == "hopf_pitchfork" &&
            std::abs(pt["tau"].get<double>() - 0.5219) < 2e-3 &&
            std::abs(pt["c"].get<double>() - 0.6285) < 2e-3)
            hp = true;
    REQUIRE(hp);

    // pitchfork line is constant in c
    const std::string pf = slurp(out / "pitchfork.csv");
    std::istringstream ss(pf);
    std::string line;
    std::getline(ss, line);
    std::getline(ss, line);
    std::getline(ss, line);
    while (std::getline(ss, line)) {
        const auto c1 = line.find(',');
        const auto c2p = line.find(',', c1 + 1);
        const double c = std::stod(line.substr(c1 + 1, c2p - c1 - 1));
        REQUIRE(std::abs(c - 0.6285) < 5e-4);
    }

    // a trivial-Hopf branch contains a point within 1e-3 of (0, 0.3974)
    bool anchor = false;
    for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trivial_hopf_", 0) != 0) continue;
        std::istringstream bs(slurp(entry.path()));
        std::string bl;
        std::getline(bs, bl);
        std::getline(bs, bl);
        std::getline(bs, bl);
        while (std::getline(bs, bl)) {
            const auto p1 = bl.find(',');
            const auto p2 = bl.find(',', p1 + 1);
            const double tau = std::stod(bl.substr(0, p1));
            const double c = std::stod(bl.substr(p1 + 1, p2 - p1 - 1));
            if (std::hypot(tau - 0.0, c - 0.3974) < 1e-3) anchor = true;
        }
    }
    REQUIRE(anchor);
    REQUIRE(fs::exists(out / "atlas.gp"));
}

TEST_CASE("cli: orbit from a trivial-point Hopf", "[cli][slow]") {
    const auto out = fresh_dir("orbit_hopf");
    REQUIRE(run_cli("orbit --from-hopf --k 2 --j 0 --c 0.2 --tau 1.8 --out " + out.string()) ==
            0);
    const json fl = slurp_json(out / "floquet.json");
    REQUIRE(std::abs(fl["period"].get<double>() - 7.15) < 0.36);  // T near 2 pi / omega_2
    REQUIRE(fl["valid"] == true);
    REQUIRE(fl["trivial_error"].get<double>() < 1e-2);
    const std::string prof = slurp(out / "profile.csv");
    REQUIRE(prof.rfind("# schema=fhnbif.orbit_profile.v1\n# T=", 0) == 0);
}

TEST_CASE("cli: basin inventory near the double-Hopf point", "[cli][slow]") {
    const auto out = fresh_dir("basin_dh");
    REQUIRE(run_cli("basin --c 0.325 --tau 4.7756 --ics 0.1,0.3,0.4,0.2 --ics 1.0,0.9,0.8,0.7 "
                    "--n-random 0 --out " + out.string()) == 0);
    const json inv = slurp_json(out / "inventory.json");
    REQUIRE(inv["n_periodic"].get<int>() >= 2);
}

TEST_CASE("cli: validation failures exit 2", "[cli]") {
    REQUIRE(run_cli("simulate --c 0.2 --tau 1.0 --step 0.5") == 2);   // h > tau/4
    REQUIRE(run_cli("simulate --ic bogus") == 2);
    REQUIRE(run_cli("--a -1 simulate") == 2);
    REQUIRE(run_cli("reproduce-figure nosuchfig") == 2);
    REQUIRE(run_cli("definitely-not-a-command") == 2);
}

TEST_CASE("cli: numerical non-convergence exits 3", "[cli]") {
    // no periodic orbit is reachable at weak coupling, so the seed fails
    REQUIRE(run_cli("orbit --c 0.05 --tau 0.5 --ic 0.1,0.1,0.1,0.1 --out " +
                    fresh_dir("orbit_fail").string()) == 3);
}

TEST_CASE("cli: reproduce-figure fig10 emits the panel set", "[cli][slow]") {
    const auto out = fresh_dir("fig10");
    REQUIRE(run_cli("reproduce-figure fig10 --out " + out.string()) == 0);
    REQUIRE(fs::exists(out / "fig10" / "tau_1.5.csv"));
    REQUIRE(fs::exists(out / "fig10" / "tau_8.2.csv"));
    const json q = slurp_json(out / "fig10" / "tau_4.0.json");
    REQUIRE(q["outcome"] == "quiescent");
    const json o = slurp_json(out / "fig10" / "tau_1.8.json");
    REQUIRE(o["outcome"] == "periodic");
}
