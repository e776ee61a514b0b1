#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bosegreen/config.hpp"
#include "bosegreen/dynamics.hpp"

namespace bosegreen {

enum class ExitStatus : int {
    Ok = 0,
    ConfigFailure = 1,
    Diverged = 2,
    Partial = 3,
};

struct RunOptions {
    /// Config text, or a manifest.json written by an earlier run.
    std::filesystem::path config;
    std::filesystem::path out;
    /// Unset: taken from the manifest when re-running one, else 1.
    std::optional<int> trajectories;
    std::optional<std::uint64_t> seed;
    /// Replaces schedule.n_steps.
    std::optional<std::int64_t> steps;
    bool resume = false;
    /// Merge trajectories in index order instead of completion order.
    bool deterministic = false;
    /// Testing aid: stop every trajectory after this many total steps without
    /// writing outputs, as if the process had been killed.
    std::optional<std::int64_t> halt_after;
};

/// Seed of trajectory `index`: the (index+1)-th output of a SplitMix64
/// stream started at `base_seed`.
std::uint64_t trajectory_seed(std::uint64_t base_seed, int index);

std::string sha256_hex(std::string_view data);

/// SHA-256 over the canonical config text, trajectory count and base seed.
std::string manifest_hash(const RunConfig& config, int trajectories, std::uint64_t base_seed);

/// Checkpoint (de)serialization; doubles round-trip exactly.
std::string trajectory_state_to_json(const TrajectoryState& state);
TrajectoryState trajectory_state_from_json(std::string_view text, const SystemSpec& spec);

/// Per-trajectory summaries reduced to output tables.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Output tables keyed by file name (energy.csv, density.csv, ...). With two
/// or more trajectories the stderr column is the standard error of the
/// per-trajectory estimates; with one it is the batch-means error.
std::vector<std::pair<std::string, Table>> output_tables(const RunConfig& config,
                                                         const std::vector<EstimatorAccumulators>& per_trajectory,
                                                         const EstimatorAccumulators& merged);

/// Everything the `bosegreen` command does after argument parsing. Progress
/// and errors go to `log`.
ExitStatus run(const RunOptions& options, std::ostream& log);

}  // namespace bosegreen
