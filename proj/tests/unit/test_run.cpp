#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bosegreen/run.hpp"

using namespace bosegreen;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(system.n_particles = 2
system.n_beads = 4
system.dim = 2
system.beta = 1.0
schedule.n_equil = 100
schedule.n_steps = 100000
schedule.sample_stride = 2
schedule.checkpoint_every = 200
estimators.block_size = 20
)";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bosegreen_test_run_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "run.cfg";
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

RunOptions options_for(const fs::path& config, const fs::path& out) {
    RunOptions o;
    o.config = config;
    o.out = out;
    o.steps = 1000;
    o.deterministic = true;
    return o;
}

ExitStatus quiet_run(const RunOptions& o) {
    std::ostringstream log;
    return run(o, log);
}

}  // namespace

TEST_CASE("hash and seeds") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::set<std::uint64_t> seen;
    for (std::uint64_t base = 0; base < 4; ++base) {
        for (int i = 0; i < 500; ++i) seen.insert(trajectory_seed(base, i));
    }
    CHECK(seen.size() == 2000);
    CHECK(trajectory_seed(1, 0) == trajectory_seed(1, 0));
}

TEST_CASE("checkpoint state round-trips exactly") {
    const RunConfig cfg = parse_config_text(kSmall);
    Schedule sched = cfg.schedule;
    sched.n_steps = 300;
    const auto state = run_trajectory_state(cfg.system, cfg.thermostat, sched, cfg.estimators, 3);
    const auto back = trajectory_state_from_json(trajectory_state_to_json(state), cfg.system);
    CHECK(back == state);
    CHECK_THROWS_AS(trajectory_state_from_json("{}", cfg.system), ConfigError);
}

TEST_CASE("smoke run writes every output with the manifest hash") {
    const fs::path dir = scratch("smoke");
    const auto o = options_for(write_config(dir, kSmall), dir / "out");
    REQUIRE(quiet_run(o) == ExitStatus::Ok);
    const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
    const std::string hash = manifest.at("manifest_hash");
    CHECK(hash.size() == 64);
    CHECK(manifest.at("status") == "complete");
    CHECK(manifest.at("steps").at("n_steps") == 1000);
    CHECK(manifest.at("resolved").at("initial_jitter") == kInitialJitter);
    const std::map<std::string, std::string> headers = {
        {"energy.csv", "estimate,stderr,n_samples"},
        {"density.csv", "x,y,value,stderr"},
        {"pair_corr.csv", "r,value,stderr"},
    };
    CHECK(manifest.at("outputs").size() == headers.size());
    for (const auto& [name, header] : headers) {
        const auto l = lines(slurp(dir / "out" / name));
        REQUIRE(l.size() >= 3);
        CHECK(l[0] == "# manifest_hash=" + hash);
        CHECK(l[1] == header);
        const auto columns = std::count(header.begin(), header.end(), ',');
        for (std::size_t i = 2; i < l.size(); ++i) CHECK(std::count(l[i].begin(), l[i].end(), ',') == columns);
    }
    const auto energy = lines(slurp(dir / "out" / "energy.csv"));
    CHECK(energy.size() == 3);
    CHECK(energy[2].substr(energy[2].rfind(',') + 1) == "500");
    CHECK(fs::exists(dir / "out" / "checkpoints" / "traj_0.json"));
}

TEST_CASE("resume after an interruption reproduces the uninterrupted run") {
    const fs::path dir = scratch("resume");
    const auto cfg = write_config(dir, kSmall);
    REQUIRE(quiet_run(options_for(cfg, dir / "full")) == ExitStatus::Ok);

    auto interrupted = options_for(cfg, dir / "cut");
    interrupted.trajectories = 2;
    interrupted.halt_after = 750;
    REQUIRE(quiet_run(interrupted) == ExitStatus::Partial);
    CHECK(!fs::exists(dir / "cut" / "energy.csv"));
    CHECK(nlohmann::json::parse(slurp(dir / "cut" / "manifest.json")).at("status") == "incomplete");

    auto resumed = options_for(cfg, dir / "cut");
    resumed.trajectories = 2;
    resumed.resume = true;
    REQUIRE(quiet_run(resumed) == ExitStatus::Ok);

    auto reference = options_for(cfg, dir / "full2");
    reference.trajectories = 2;
    REQUIRE(quiet_run(reference) == ExitStatus::Ok);
    for (const char* name : {"energy.csv", "density.csv", "pair_corr.csv"}) {
        CHECK(slurp(dir / "cut" / name) == slurp(dir / "full2" / name));
    }

    // A checkpoint from another run is refused.
    auto foreign = options_for(cfg, dir / "cut");
    foreign.seed = 99;
    foreign.trajectories = 2;
    foreign.resume = true;
    CHECK(quiet_run(foreign) == ExitStatus::ConfigFailure);
}

TEST_CASE("re-running a manifest reproduces outputs bitwise") {
    const fs::path dir = scratch("manifest");
    auto o = options_for(write_config(dir, kSmall), dir / "a");
    o.trajectories = 2;
    o.seed = 17;
    REQUIRE(quiet_run(o) == ExitStatus::Ok);
    RunOptions again;
    again.config = dir / "a" / "manifest.json";
    again.out = dir / "b";
    again.deterministic = true;
    REQUIRE(quiet_run(again) == ExitStatus::Ok);
    for (const char* name : {"energy.csv", "density.csv", "pair_corr.csv", "manifest.json"}) {
        CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    }
}

TEST_CASE("five trajectories: stderr from the spread of trajectory means") {
    const fs::path dir = scratch("five");
    const auto cfg_path = write_config(dir, kSmall);
    auto o = options_for(cfg_path, dir / "out");
    o.trajectories = 5;
    REQUIRE(quiet_run(o) == ExitStatus::Ok);

    RunConfig cfg = parse_config_text(kSmall);
    cfg.schedule.n_steps = 1000;
    std::vector<double> means;
    for (int i = 0; i < 5; ++i) {
        const auto acc = run_trajectory(cfg.system, cfg.thermostat, cfg.schedule, cfg.estimators, trajectory_seed(1, i));
        means.push_back(acc.energy.mean());
    }
    double m = 0.0;
    for (double x : means) m += x / 5;
    double var = 0.0;
    for (double x : means) var += (x - m) * (x - m) / 4;
    const auto row = lines(slurp(dir / "out" / "energy.csv"))[2];
    std::istringstream in(row);
    std::string est;
    std::string err;
    std::getline(in, est, ',');
    std::getline(in, err, ',');
    CHECK(std::stod(est) == doctest::Approx(m).epsilon(1e-12));
    CHECK(std::stod(err) == doctest::Approx(std::sqrt(var / 5)).epsilon(1e-10));
    for (const auto& line : lines(slurp(dir / "out" / "density.csv"))) CHECK(line.find("nan") == std::string::npos);
}

TEST_CASE("worm runs write the Green's function and momentum distribution") {
    const fs::path dir = scratch("worm");
    const std::string text = R"(system.n_particles = 2
system.n_beads = 6
system.dim = 2
system.mass = 0.5
geometry.kind = box
geometry.side = 3.0
worm.j_gap = 1
schedule.n_equil = 100
schedule.sample_stride = 2
estimators.block_size = 20
)";
    REQUIRE(quiet_run(options_for(write_config(dir, text), dir / "out")) == ExitStatus::Ok);
    CHECK(lines(slurp(dir / "out" / "greens.csv"))[1] == "r,G,stderr");
    CHECK(lines(slurp(dir / "out" / "momentum.csv"))[1] == "p,rho,stderr");
    CHECK(!fs::exists(dir / "out" / "energy.csv"));
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("codes");
    CHECK(quiet_run(options_for(dir / "missing.cfg", dir / "out")) == ExitStatus::ConfigFailure);
    CHECK(quiet_run(options_for(write_config(dir, "system.n_beads = 4\nworm.j_gap = 4\n"), dir / "out")) ==
          ExitStatus::ConfigFailure);
    auto zero = options_for(write_config(dir, kSmall), dir / "out");
    zero.trajectories = 0;
    CHECK(quiet_run(zero) == ExitStatus::ConfigFailure);

    const std::string diverging = std::string(kSmall) + "schedule.dt = 50\nthermostat.enabled = false\n";
    auto o = options_for(write_config(dir, diverging), dir / "div");
    o.trajectories = 2;
    std::ostringstream log;
    CHECK(run(o, log) == ExitStatus::Diverged);
    CHECK(log.str().find("diverged") != std::string::npos);
    const auto manifest = nlohmann::json::parse(slurp(dir / "div" / "manifest.json"));
    CHECK(manifest.at("status") == "diverged");
    CHECK(manifest.at("failures").size() == 2);
}
