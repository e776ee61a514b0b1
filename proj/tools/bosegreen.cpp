#include <iostream>

#include <CLI11.hpp>

#include "bosegreen/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Bosonic path-integral MD with an open worm for Green's functions"};
    bosegreen::RunOptions options;
    int trajectories = 0;
    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    std::int64_t halt_after = 0;

    app.add_option("--config", options.config, "config file, or manifest.json of an earlier run")->required();
    app.add_option("--out", options.out, "output directory")->required();
    auto* traj_opt = app.add_option("--trajectories", trajectories, "independent trajectories (default 1)");
    auto* seed_opt = app.add_option("--seed", seed, "base seed (default 1)");
    auto* steps_opt = app.add_option("--steps", steps, "override schedule.n_steps");
    app.add_flag("--resume", options.resume, "continue from checkpoints in --out");
    app.add_flag("--deterministic", options.deterministic, "merge trajectories in index order");
    auto* halt_opt = app.add_option("--halt-after", halt_after)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(bosegreen::ExitStatus::ConfigFailure);
    }
    if (*traj_opt) options.trajectories = trajectories;
    if (*seed_opt) options.seed = seed;
    if (*steps_opt) options.steps = steps;
    if (*halt_opt) options.halt_after = halt_after;

    return static_cast<int>(bosegreen::run(options, std::cerr));
}
