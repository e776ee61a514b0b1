#include "bosegreen/run.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace bosegreen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kManifestVersion = 1;

// NaN and infinities have no JSON spelling; they travel as null.
json real_to_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double real_from_json(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json reals_to_json(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(real_to_json(x));
    return out;
}

std::vector<double> reals_from_json(const json& j) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) out.push_back(real_from_json(x));
    return out;
}

json scalar_to_json(const BlockedScalar& s) {
    return {{"block_size", s.block_size},     {"count", s.count},
            {"sum", real_to_json(s.sum)},     {"sum_sq", real_to_json(s.sum_sq)},
            {"pending_sum", real_to_json(s.pending_sum)}, {"pending_count", s.pending_count},
            {"n_blocks", s.n_blocks},         {"block_sum", real_to_json(s.block_sum)},
            {"block_sum_sq", real_to_json(s.block_sum_sq)}};
}

BlockedScalar scalar_from_json(const json& j) {
    BlockedScalar s;
    s.block_size = j.at("block_size").get<int>();
    s.count = j.at("count").get<std::int64_t>();
    s.sum = real_from_json(j.at("sum"));
    s.sum_sq = real_from_json(j.at("sum_sq"));
    s.pending_sum = real_from_json(j.at("pending_sum"));
    s.pending_count = j.at("pending_count").get<std::int64_t>();
    s.n_blocks = j.at("n_blocks").get<std::int64_t>();
    s.block_sum = real_from_json(j.at("block_sum"));
    s.block_sum_sq = real_from_json(j.at("block_sum_sq"));
    return s;
}

json histogram_to_json(const Histogram& h) {
    return {{"shape", h.shape},
            {"lower", reals_to_json(h.lower)},
            {"upper", reals_to_json(h.upper)},
            {"measure", reals_to_json(h.measure)},
            {"normalization", h.normalization == Normalization::PerSample ? "per_sample" : "unit_mass"},
            {"block_size", h.block_size},
            {"counts", reals_to_json(h.counts)},
            {"overflow", real_to_json(h.overflow)},
            {"mass", real_to_json(h.mass)},
            {"samples", h.samples},
            {"pending", reals_to_json(h.pending)},
            {"pending_mass", real_to_json(h.pending_mass)},
            {"pending_samples", h.pending_samples},
            {"block_sum", reals_to_json(h.block_sum)},
            {"block_sum_sq", reals_to_json(h.block_sum_sq)},
            {"n_blocks", h.n_blocks}};
}

Histogram histogram_from_json(const json& j) {
    Histogram h;
    h.shape = j.at("shape").get<std::vector<int>>();
    h.lower = reals_from_json(j.at("lower"));
    h.upper = reals_from_json(j.at("upper"));
    h.measure = reals_from_json(j.at("measure"));
    h.normalization = j.at("normalization").get<std::string>() == "per_sample" ? Normalization::PerSample
                                                                                 : Normalization::UnitMass;
    h.block_size = j.at("block_size").get<int>();
    h.counts = reals_from_json(j.at("counts"));
    h.overflow = real_from_json(j.at("overflow"));
    h.mass = real_from_json(j.at("mass"));
    h.samples = j.at("samples").get<std::int64_t>();
    h.pending = reals_from_json(j.at("pending"));
    h.pending_mass = real_from_json(j.at("pending_mass"));
    h.pending_samples = j.at("pending_samples").get<std::int64_t>();
    h.block_sum = reals_from_json(j.at("block_sum"));
    h.block_sum_sq = reals_from_json(j.at("block_sum_sq"));
    h.n_blocks = j.at("n_blocks").get<std::int64_t>();
    return h;
}

std::string csv_cell(double x) { return std::isfinite(x) ? format_double(x) : "nan"; }

// Standard error of the mean over trajectories, or NaN below two.
double spread_stderr(const std::vector<double>& xs) {
    const auto k = static_cast<double>(xs.size());
    if (xs.size() < 2) return kNaN;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= k;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (k - 1.0);
    return std::sqrt(var / k);
}

std::vector<double> spread_stderr_columns(const std::vector<std::vector<double>>& per_trajectory, std::size_t n) {
    std::vector<double> out(n, kNaN);
    std::vector<double> column(per_trajectory.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < per_trajectory.size(); ++t) column[t] = per_trajectory[t][i];
        out[i] = spread_stderr(column);
    }
    return out;
}

Table histogram_table(const Histogram& merged, const std::vector<const Histogram*>& parts,
                      std::vector<std::string> columns) {
    Table t;
    t.columns = std::move(columns);
    const auto values = merged.values();
    std::vector<double> errors;
    if (parts.size() >= 2) {
        std::vector<std::vector<double>> per;
        for (const auto* h : parts) per.push_back(h->values());
        errors = spread_stderr_columns(per, values.size());
    } else {
        errors = merged.block_stderr();
    }
    const std::size_t d = merged.shape.size();
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
        std::vector<double> row(d);
        std::size_t rest = flat;
        for (std::size_t a = d; a-- > 0;) {
            const auto n = static_cast<std::size_t>(merged.shape[a]);
            row[a] = merged.bin_center(a, static_cast<int>(rest % n));
            rest /= n;
        }
        row.push_back(values[flat]);
        row.push_back(errors[flat]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_text_atomically(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string table_csv(const Table& table, const std::string& hash) {
    std::string out = "# manifest_hash=" + hash + "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_cell(row[c]);
        out += "\n";
    }
    return out;
}

struct LoadedRun {
    RunConfig config;
    int trajectories = 1;
    std::uint64_t seed = 1;
};

LoadedRun load(const RunOptions& options) {
    std::ifstream in(options.config);
    if (!in) throw ConfigError("cannot open config file " + options.config.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    LoadedRun run;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json manifest;
        try {
            manifest = json::parse(text);
            run.config = parse_config_text(manifest.at("config").get<std::string>());
            run.trajectories = manifest.at("trajectories").get<int>();
            run.seed = manifest.at("base_seed").get<std::uint64_t>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("manifest: ") + e.what());
        }
    } else {
        run.config = parse_config_text(text);
    }
    if (options.trajectories) run.trajectories = *options.trajectories;
    if (options.seed) run.seed = *options.seed;
    if (options.steps) {
        if (*options.steps < 0) throw ConfigError("--steps: must be >= 0");
        run.config.schedule.n_steps = *options.steps;
    }
    if (run.trajectories < 1) throw ConfigError("--trajectories: must be >= 1");
    return run;
}

// Serializes checkpoint writes from all trajectory threads.
class CheckpointWriter {
public:
    CheckpointWriter(fs::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {}

    fs::path path(int index) const { return dir_ / ("traj_" + std::to_string(index) + ".json"); }

    void write(int index, std::uint64_t seed, const TrajectoryState& state) {
        json doc = {{"manifest_hash", hash_}, {"trajectory", index}, {"seed", seed}, {"step", state.step}};
        std::string text = doc.dump();
        // Splice the state in without reparsing it.
        text.pop_back();
        text += ",\"state\":" + trajectory_state_to_json(state) + "}";
        const std::lock_guard lock(mutex_);
        write_text_atomically(path(index), text);
    }

    std::optional<TrajectoryState> read(int index, const SystemSpec& spec) const {
        const fs::path p = path(index);
        if (!fs::exists(p)) return std::nullopt;
        std::ifstream in(p);
        std::ostringstream buf;
        buf << in.rdbuf();
        json doc;
        try {
            doc = json::parse(buf.str());
        } catch (const json::exception& e) {
            throw ConfigError("checkpoint " + p.string() + ": " + e.what());
        }
        if (doc.value("manifest_hash", std::string()) != hash_) {
            throw ConfigError("checkpoint " + p.string() + " belongs to a different run (manifest hash mismatch)");
        }
        return trajectory_state_from_json(doc.at("state").dump(), spec);
    }

private:
    fs::path dir_;
    std::string hash_;
    std::mutex mutex_;
};

struct Outcome {
    std::optional<TrajectoryState> state;
    bool halted = false;
    std::string error;
    std::int64_t failed_step = -1;
    std::int64_t last_checkpoint = -1;
};

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t trajectory_seed(std::uint64_t base_seed, int index) {
    std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string manifest_hash(const RunConfig& config, int trajectories, std::uint64_t base_seed) {
    return sha256_hex(to_config_text(config) + "run.trajectories = " + std::to_string(trajectories) +
                      "\nrun.base_seed = " + std::to_string(base_seed) + "\n");
}

std::string trajectory_state_to_json(const TrajectoryState& s) {
    const auto& a = s.accumulators;
    json doc = {
        {"step", s.step},
        {"positions", reals_to_json(s.config.positions)},
        {"velocities", reals_to_json(s.config.velocities)},
        {"thermostat",
         {{"chain_length", s.config.thermostat.chain_length},
          {"positions", reals_to_json(s.config.thermostat.positions)},
          {"velocities", reals_to_json(s.config.thermostat.velocities)}}},
        {"accumulators",
         {{"samples", a.samples},
          {"energy", scalar_to_json(a.energy)},
          {"kinetic_temperature", scalar_to_json(a.kinetic_temperature)},
          {"density", histogram_to_json(a.density)},
          {"pair_corr", histogram_to_json(a.pair_corr)},
          {"greens", histogram_to_json(a.greens)},
          {"greens_grid", histogram_to_json(a.greens_grid)}}},
    };
    return doc.dump();
}

TrajectoryState trajectory_state_from_json(std::string_view text, const SystemSpec& spec) {
    TrajectoryState s;
    try {
        const json doc = json::parse(text);
        s.step = doc.at("step").get<std::int64_t>();
        s.config.layout = BeadLayout(spec);
        s.config.positions = reals_from_json(doc.at("positions"));
        s.config.velocities = reals_from_json(doc.at("velocities"));
        const auto& th = doc.at("thermostat");
        s.config.thermostat.chain_length = th.at("chain_length").get<int>();
        s.config.thermostat.positions = reals_from_json(th.at("positions"));
        s.config.thermostat.velocities = reals_from_json(th.at("velocities"));
        const auto& acc = doc.at("accumulators");
        s.accumulators.samples = acc.at("samples").get<std::int64_t>();
        s.accumulators.energy = scalar_from_json(acc.at("energy"));
        s.accumulators.kinetic_temperature = scalar_from_json(acc.at("kinetic_temperature"));
        s.accumulators.density = histogram_from_json(acc.at("density"));
        s.accumulators.pair_corr = histogram_from_json(acc.at("pair_corr"));
        s.accumulators.greens = histogram_from_json(acc.at("greens"));
        s.accumulators.greens_grid = histogram_from_json(acc.at("greens_grid"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint state: ") + e.what());
    }
    const auto dof = static_cast<std::size_t>(s.config.layout.degrees_of_freedom());
    if (s.config.positions.size() != dof || s.config.velocities.size() != dof) {
        throw ConfigError("checkpoint state: bead count does not match the system");
    }
    return s;
}

std::vector<std::pair<std::string, Table>> output_tables(const RunConfig& config,
                                                         const std::vector<EstimatorAccumulators>& per_trajectory,
                                                         const EstimatorAccumulators& merged) {
    const SystemSpec& spec = config.system;
    const bool spread = per_trajectory.size() >= 2;
    auto parts = [&](Histogram EstimatorAccumulators::*member) {
        std::vector<const Histogram*> out;
        for (const auto& acc : per_trajectory) out.push_back(&(acc.*member));
        return out;
    };

    std::vector<std::pair<std::string, Table>> tables;
    if (!spec.worm_active()) {
        Table energy;
        energy.columns = {"estimate", "stderr", "n_samples"};
        double err = merged.energy.stderr_of_mean();
        if (spread) {
            std::vector<double> means;
            for (const auto& acc : per_trajectory) means.push_back(acc.energy.mean());
            err = spread_stderr(means);
        }
        energy.rows.push_back({merged.energy.mean(), err, static_cast<double>(merged.energy.count)});
        tables.emplace_back("energy.csv", std::move(energy));

        std::vector<std::string> cols;
        static const char* axes[] = {"x", "y", "z"};
        for (int a = 0; a < spec.dim; ++a) cols.emplace_back(axes[a]);
        cols.emplace_back("value");
        cols.emplace_back("stderr");
        tables.emplace_back("density.csv", histogram_table(merged.density, parts(&EstimatorAccumulators::density), cols));
        if (!merged.pair_corr.empty()) {
            tables.emplace_back("pair_corr.csv", histogram_table(merged.pair_corr,
                                                                 parts(&EstimatorAccumulators::pair_corr),
                                                                 {"r", "value", "stderr"}));
        }
    } else {
        tables.emplace_back("greens.csv",
                            histogram_table(merged.greens, parts(&EstimatorAccumulators::greens), {"r", "G", "stderr"}));
        if (spec.periodic() && spec.worm->j_gap == 1 && !merged.greens_grid.empty()) {
            const int n_max = config.estimators.momentum_n_max;
            const auto dist = momentum_distribution(merged.greens_grid, spec, n_max);
            std::vector<double> err(dist.points.size());
            for (std::size_t i = 0; i < err.size(); ++i) err[i] = dist.points[i].stderr_;
            if (spread) {
                std::vector<std::vector<double>> per;
                for (const auto& acc : per_trajectory) {
                    const auto d = momentum_distribution(acc.greens_grid, spec, n_max);
                    std::vector<double> rho;
                    for (const auto& pt : d.points) rho.push_back(pt.rho);
                    per.push_back(std::move(rho));
                }
                err = spread_stderr_columns(per, dist.points.size());
            }
            Table momentum;
            momentum.columns = {"p", "rho", "stderr"};
            for (std::size_t i = 0; i < dist.points.size(); ++i) {
                momentum.rows.push_back({dist.points[i].p, dist.points[i].rho, err[i]});
            }
            tables.emplace_back("momentum.csv", std::move(momentum));
        }
    }
    return tables;
}

// ---------------------------------------------------------------------------

ExitStatus run(const RunOptions& options, std::ostream& log) {
    LoadedRun loaded;
    try {
        loaded = load(options);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return ExitStatus::ConfigFailure;
    }
    const RunConfig& cfg = loaded.config;
    const int k = loaded.trajectories;
    const std::string hash = manifest_hash(cfg, k, loaded.seed);
    const fs::path checkpoint_dir = options.out / "checkpoints";
    try {
        fs::create_directories(checkpoint_dir);
    } catch (const fs::filesystem_error& e) {
        log << "config error: cannot create output directory: " << e.what() << "\n";
        return ExitStatus::ConfigFailure;
    }

    CheckpointWriter writer(checkpoint_dir, hash);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(k));
    std::vector<std::optional<TrajectoryState>> resume(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        seeds[static_cast<std::size_t>(i)] = trajectory_seed(loaded.seed, i);
        if (!options.resume) continue;
        try {
            resume[static_cast<std::size_t>(i)] = writer.read(i, cfg.system);
        } catch (const ConfigError& e) {
            log << "config error: " << e.what() << "\n";
            return ExitStatus::ConfigFailure;
        }
        if (resume[static_cast<std::size_t>(i)]) {
            log << "trajectory " << i << ": resuming at step " << resume[static_cast<std::size_t>(i)]->step << "\n";
        }
    }

    const std::int64_t total_steps = cfg.schedule.n_equil + cfg.schedule.n_steps;
    std::vector<Outcome> outcomes(static_cast<std::size_t>(k));
    std::vector<int> completion_order;
    std::mutex order_mutex;

    auto work = [&](int i) {
        const auto idx = static_cast<std::size_t>(i);
        Outcome& outcome = outcomes[idx];
        TrajectoryHooks hooks;
        hooks.resume = resume[idx];
        hooks.halt_after = options.halt_after;
        hooks.on_checkpoint = [&](const TrajectoryState& state) {
            writer.write(i, seeds[idx], state);
            outcome.last_checkpoint = state.step;
        };
        try {
            TrajectoryState state =
                run_trajectory_state(cfg.system, cfg.thermostat, cfg.schedule, cfg.estimators, seeds[idx], hooks);
            if (state.step < total_steps) {
                outcome.halted = true;
            } else {
                writer.write(i, seeds[idx], state);
            }
            outcome.state = std::move(state);
        } catch (const DivergenceError& e) {
            outcome.error = e.what();
            outcome.failed_step = e.step();
        } catch (const std::exception& e) {
            outcome.error = e.what();
        }
        const std::lock_guard lock(order_mutex);
        completion_order.push_back(i);
    };

    {
        std::vector<std::jthread> threads;
        for (int i = 0; i < k; ++i) threads.emplace_back(work, i);
    }

    std::vector<int> merge_order;
    if (options.deterministic) {
        for (int i = 0; i < k; ++i) merge_order.push_back(i);
    } else {
        merge_order = completion_order;
    }

    int failed = 0;
    int halted = 0;
    json failures = json::array();
    std::vector<EstimatorAccumulators> per;
    EstimatorAccumulators merged;
    bool first = true;
    for (int i : merge_order) {
        const Outcome& o = outcomes[static_cast<std::size_t>(i)];
        if (!o.error.empty()) {
            ++failed;
            log << "trajectory " << i << " failed: " << o.error << " (last checkpoint at step " << o.last_checkpoint
                << ")\n";
            failures.push_back({{"trajectory", i},
                                {"step", o.failed_step},
                                {"last_checkpoint", o.last_checkpoint},
                                {"message", o.error}});
            continue;
        }
        if (o.halted) {
            ++halted;
            continue;
        }
        per.push_back(o.state->accumulators);
        if (first) {
            merged = o.state->accumulators;
            first = false;
        } else {
            merged.merge(o.state->accumulators);
        }
    }

    std::string status = "complete";
    ExitStatus exit = ExitStatus::Ok;
    if (halted > 0) {
        status = "incomplete";
        exit = ExitStatus::Partial;
    } else if (failed == k) {
        status = "diverged";
        exit = ExitStatus::Diverged;
    } else if (failed > 0) {
        status = "partial";
        exit = ExitStatus::Partial;
    }

    json outputs = json::array();
    if (exit == ExitStatus::Ok || status == "partial") {
        try {
            for (const auto& [name, table] : output_tables(cfg, per, merged)) {
                write_text_atomically(options.out / name, table_csv(table, hash));
                outputs.push_back(name);
            }
        } catch (const std::exception& e) {
            log << "error writing outputs: " << e.what() << "\n";
            status = "partial";
            exit = ExitStatus::Partial;
        }
    }

    json checkpoint_files = json::array();
    for (int i = 0; i < k; ++i) {
        if (fs::exists(writer.path(i))) checkpoint_files.push_back(fs::relative(writer.path(i), options.out).string());
    }
    json samples = json::array();
    for (const auto& o : outcomes) samples.push_back(o.state ? o.state->accumulators.samples : 0);

    const double dt = resolved_dt(cfg.system, cfg.schedule);
    const double wc = cfg.thermostat.coupling_frequency > 0.0 ? cfg.thermostat.coupling_frequency : cfg.system.omega_p();
    json manifest = {
        {"version", kManifestVersion},
        {"manifest_hash", hash},
        {"config", to_config_text(cfg)},
        {"trajectories", k},
        {"base_seed", loaded.seed},
        {"trajectory_seeds", seeds},
        {"seed_derivation", "splitmix64(base_seed, index + 1)"},
        {"deterministic", options.deterministic},
        {"resolved", {{"dt", dt}, {"thermostat_frequency", wc}, {"temperature", 1.0 / cfg.system.beta},
                      {"initial_jitter", kInitialJitter}}},
        {"steps", {{"n_equil", cfg.schedule.n_equil}, {"n_steps", cfg.schedule.n_steps}, {"total", total_steps}}},
        {"samples", samples},
        {"outputs", outputs},
        {"checkpoints", {{"directory", "checkpoints"}, {"every", cfg.schedule.checkpoint_every}, {"files", checkpoint_files}}},
        {"status", status},
        {"failures", failures},
    };
    if (per.size() > 0) {
        manifest["kinetic_temperature"] = {{"mean", real_to_json(merged.kinetic_temperature.mean())},
                                           {"stderr", real_to_json(merged.kinetic_temperature.stderr_of_mean())}};
    }
    try {
        write_text_atomically(options.out / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        log << "error writing manifest: " << e.what() << "\n";
        return ExitStatus::Partial;
    }
    log << "status: " << status << " (" << k - failed - halted << "/" << k << " trajectories)\n";
    return exit;
}

}  // namespace bosegreen
