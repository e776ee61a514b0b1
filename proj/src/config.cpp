#include "bosegreen/config.hpp"

#include <charconv>
#include <limits>
#include <optional>
#include <fstream>
#include <map>
#include <sstream>

namespace bosegreen {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

class KeyValues {
public:
    explicit KeyValues(std::string_view text) {
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto end = text.find('\n', pos);
            std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
            pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": expected `section.key = value`");
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.find('.') == std::string::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": key `" + key + "` has no section");
            }
            if (value.empty()) throw ConfigError(key + ": empty value");
            if (!entries_.emplace(key, value).second) throw ConfigError(key + ": duplicate key");
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    bool has_section(const std::string& section) const {
        const std::string prefix = section + ".";
        for (const auto& [k, v] : entries_) {
            if (k.compare(0, prefix.size(), prefix) == 0) return true;
        }
        return false;
    }

    std::optional<std::string> take(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        std::string v = it->second;
        entries_.erase(it);
        return v;
    }

    double real(const std::string& key, double fallback) {
        const auto v = take(key);
        return v ? parse_real(key, *v) : fallback;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        const auto v = take(key);
        if (!v) return fallback;
        std::int64_t out = 0;
        const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
        if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
            // Accept integral reals such as 1e6.
            const double d = parse_real(key, *v);
            if (d != static_cast<double>(static_cast<std::int64_t>(d))) {
                throw ConfigError(key + ": expected an integer, got `" + *v + "`");
            }
            return static_cast<std::int64_t>(d);
        }
        return out;
    }

    int small_integer(const std::string& key, int fallback) {
        const auto v = integer(key, fallback);
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            throw ConfigError(key + ": out of range");
        }
        return static_cast<int>(v);
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto v = take(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ConfigError(key + ": expected true or false, got `" + *v + "`");
    }

    void reject_leftovers() const {
        if (entries_.empty()) return;
        std::string names;
        for (const auto& [k, v] : entries_) names += (names.empty() ? "" : ", ") + k;
        throw ConfigError("unknown key(s): " + names);
    }

    static double parse_real(const std::string& key, const std::string& text) {
        auto one = [&](std::string_view s) {
            s = trim(s);
            double out = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                throw ConfigError(key + ": expected a number, got `" + text + "`");
            }
            return out;
        };
        const auto slash = text.find('/');
        if (slash == std::string::npos) return one(text);
        const double den = one(std::string_view(text).substr(slash + 1));
        if (den == 0.0) throw ConfigError(key + ": division by zero");
        return one(std::string_view(text).substr(0, slash)) / den;
    }

private:
    std::map<std::string, std::string> entries_;
};

SystemSpec read_system(KeyValues& kv) {
    SystemSpec spec;
    spec.n_particles = kv.small_integer("system.n_particles", 1);
    spec.n_beads = kv.small_integer("system.n_beads", 1);
    spec.dim = kv.small_integer("system.dim", 1);
    const bool has_beta = kv.has("system.beta");
    const bool has_temperature = kv.has("system.temperature");
    if (has_beta && has_temperature) throw ConfigError("system.temperature: give either beta or temperature, not both");
    if (has_temperature) {
        const double t = kv.real("system.temperature", 1.0);
        if (!(t > 0.0)) throw ConfigError("system.temperature: must be positive");
        spec.beta = 1.0 / t;
    } else {
        spec.beta = kv.real("system.beta", 1.0);
    }
    spec.mass = kv.real("system.mass", 1.0);
    spec.hbar = kv.real("system.hbar", 1.0);
    const auto stats = kv.take("system.statistics").value_or("bose");
    if (stats == "bose") spec.statistics = Statistics::Bose;
    else if (stats == "boltzmann") spec.statistics = Statistics::Boltzmann;
    else throw ConfigError("system.statistics: expected bose or boltzmann, got `" + stats + "`");

    const auto geometry = kv.take("geometry.kind").value_or("trap");
    if (geometry == "trap") {
        if (kv.has("geometry.side")) throw ConfigError("geometry.side: only valid for geometry.kind = box");
        spec.geometry = HarmonicTrap{kv.real("geometry.omega", 1.0)};
    } else if (geometry == "box") {
        if (kv.has("geometry.omega")) throw ConfigError("geometry.omega: only valid for geometry.kind = trap");
        if (!kv.has("geometry.side")) throw ConfigError("geometry.side: required for geometry.kind = box");
        spec.geometry = PeriodicBox{kv.real("geometry.side", 1.0)};
    } else {
        throw ConfigError("geometry.kind: expected trap or box, got `" + geometry + "`");
    }

    const auto interaction = kv.take("interaction.kind").value_or("none");
    if (interaction == "none") {
        if (kv.has("interaction.g") || kv.has("interaction.s")) {
            throw ConfigError("interaction.g: only valid for interaction.kind = gaussian");
        }
        spec.interaction = NoInteraction{};
    } else if (interaction == "gaussian") {
        spec.interaction = GaussianInteraction{kv.real("interaction.g", 0.0), kv.real("interaction.s", 1.0)};
    } else {
        throw ConfigError("interaction.kind: expected none or gaussian, got `" + interaction + "`");
    }

    if (kv.has_section("worm")) {
        if (!kv.has("worm.j_gap")) throw ConfigError("worm.j_gap: required when a worm section is present");
        const int j = kv.small_integer("worm.j_gap", 1);
        WormSpec worm = default_worm(spec.n_beads, j);
        worm.tau2_slice = kv.small_integer("worm.tau2_slice", worm.tau2_slice);
        spec.worm = worm;
    }

    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
    return spec;
}

void write_system(std::ostringstream& out, const SystemSpec& spec) {
    out << "system.n_particles = " << spec.n_particles << "\n";
    out << "system.n_beads = " << spec.n_beads << "\n";
    out << "system.dim = " << spec.dim << "\n";
    out << "system.beta = " << format_double(spec.beta) << "\n";
    out << "system.mass = " << format_double(spec.mass) << "\n";
    out << "system.hbar = " << format_double(spec.hbar) << "\n";
    out << "system.statistics = " << (spec.statistics == Statistics::Bose ? "bose" : "boltzmann") << "\n";
    if (const auto* trap = std::get_if<HarmonicTrap>(&spec.geometry)) {
        out << "geometry.kind = trap\n";
        out << "geometry.omega = " << format_double(trap->omega) << "\n";
    } else {
        out << "geometry.kind = box\n";
        out << "geometry.side = " << format_double(std::get<PeriodicBox>(spec.geometry).side) << "\n";
    }
    if (const auto* gauss = std::get_if<GaussianInteraction>(&spec.interaction)) {
        out << "interaction.kind = gaussian\n";
        out << "interaction.g = " << format_double(gauss->g) << "\n";
        out << "interaction.s = " << format_double(gauss->s) << "\n";
    } else {
        out << "interaction.kind = none\n";
    }
    if (spec.worm) {
        out << "worm.j_gap = " << spec.worm->j_gap << "\n";
        out << "worm.tau2_slice = " << spec.worm->tau2_slice << "\n";
    }
}

template <typename F>
auto rethrow_as_config(const char* section, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(section) + "." + e.what());
    }
}

}  // namespace

RunConfig parse_config_text(std::string_view text) {
    KeyValues kv(text);
    RunConfig cfg;
    cfg.system = read_system(kv);

    ThermostatSpec& th = cfg.thermostat;
    th.enabled = kv.boolean("thermostat.enabled", th.enabled);
    th.chain_length = kv.small_integer("thermostat.chain_length", th.chain_length);
    th.coupling_frequency = kv.real("thermostat.coupling_frequency", th.coupling_frequency);
    th.n_respa = kv.small_integer("thermostat.n_respa", th.n_respa);
    th.sy_order = kv.small_integer("thermostat.sy_order", th.sy_order);
    rethrow_as_config("thermostat", [&] { validate(th); return 0; });

    Schedule& sc = cfg.schedule;
    sc.checkpoint_every = 100000;
    sc.dt = kv.real("schedule.dt", sc.dt);
    sc.n_equil = kv.integer("schedule.n_equil", sc.n_equil);
    sc.n_steps = kv.integer("schedule.n_steps", sc.n_steps);
    sc.sample_stride = kv.integer("schedule.sample_stride", sc.sample_stride);
    sc.checkpoint_every = kv.integer("schedule.checkpoint_every", sc.checkpoint_every);
    rethrow_as_config("schedule", [&] { validate(sc); return 0; });

    EstimatorSettings& es = cfg.estimators;
    es.block_size = kv.small_integer("estimators.block_size", es.block_size);
    es.density_bins = kv.small_integer("estimators.density_bins", es.density_bins);
    es.density_extent = kv.real("estimators.density_extent", es.density_extent);
    es.pair_correlation = kv.boolean("estimators.pair_correlation", es.pair_correlation);
    es.pair_every = kv.small_integer("estimators.pair_every", es.pair_every);
    es.radial_bin_width = kv.real("estimators.radial_bin_width", es.radial_bin_width);
    es.greens_center_radius = kv.real("estimators.greens_center_radius", es.greens_center_radius);
    es.momentum_grid = kv.small_integer("estimators.momentum_grid", es.momentum_grid);
    es.momentum_n_max = kv.small_integer("estimators.momentum_n_max", es.momentum_n_max);
    if (es.block_size < 1) throw ConfigError("estimators.block_size: must be >= 1");
    if (es.density_bins < 1) throw ConfigError("estimators.density_bins: must be >= 1");
    if (!(es.density_extent > 0.0)) throw ConfigError("estimators.density_extent: must be positive");
    if (es.pair_every < 1) throw ConfigError("estimators.pair_every: must be >= 1");
    if (es.radial_bin_width < 0.0) throw ConfigError("estimators.radial_bin_width: must be >= 0");
    if (es.momentum_grid < 1 || es.momentum_grid % 2 == 0) throw ConfigError("estimators.momentum_grid: must be odd");
    if (es.momentum_n_max < 0) throw ConfigError("estimators.momentum_n_max: must be >= 0");

    kv.reject_leftovers();
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string to_config_text(const RunConfig& c) {
    std::ostringstream out;
    write_system(out, c.system);
    out << "thermostat.enabled = " << (c.thermostat.enabled ? "true" : "false") << "\n";
    out << "thermostat.chain_length = " << c.thermostat.chain_length << "\n";
    out << "thermostat.coupling_frequency = " << format_double(c.thermostat.coupling_frequency) << "\n";
    out << "thermostat.n_respa = " << c.thermostat.n_respa << "\n";
    out << "thermostat.sy_order = " << c.thermostat.sy_order << "\n";
    out << "schedule.dt = " << format_double(c.schedule.dt) << "\n";
    out << "schedule.n_equil = " << c.schedule.n_equil << "\n";
    out << "schedule.n_steps = " << c.schedule.n_steps << "\n";
    out << "schedule.sample_stride = " << c.schedule.sample_stride << "\n";
    out << "schedule.checkpoint_every = " << c.schedule.checkpoint_every << "\n";
    const auto& e = c.estimators;
    out << "estimators.block_size = " << e.block_size << "\n";
    out << "estimators.density_bins = " << e.density_bins << "\n";
    out << "estimators.density_extent = " << format_double(e.density_extent) << "\n";
    out << "estimators.pair_correlation = " << (e.pair_correlation ? "true" : "false") << "\n";
    out << "estimators.pair_every = " << e.pair_every << "\n";
    out << "estimators.radial_bin_width = " << format_double(e.radial_bin_width) << "\n";
    out << "estimators.greens_center_radius = " << format_double(e.greens_center_radius) << "\n";
    out << "estimators.momentum_grid = " << e.momentum_grid << "\n";
    out << "estimators.momentum_n_max = " << e.momentum_n_max << "\n";
    return out.str();
}

std::string system_spec_to_text(const SystemSpec& spec) {
    std::ostringstream out;
    write_system(out, spec);
    return out.str();
}

SystemSpec system_spec_from_text(std::string_view text) {
    KeyValues kv(text);
    SystemSpec spec = read_system(kv);
    kv.reject_leftovers();
    return spec;
}

}  // namespace bosegreen
