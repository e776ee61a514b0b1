#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "bosegreen/dynamics.hpp"
#include "bosegreen/estimators.hpp"
#include "bosegreen/model.hpp"

namespace bosegreen {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything a run needs apart from seeds and trajectory count.
struct RunConfig {
    SystemSpec system;
    ThermostatSpec thermostat;
    Schedule schedule;
    EstimatorSettings estimators;
};

/// Flat `section.key = value` text, one key per line; `#` starts a comment.
/// Unknown keys, duplicates and malformed values are rejected with the key
/// name in the message. Reals accept a simple quotient such as `1/1.625`.
/// See docs/config.md for the schema.
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical form with every key written out; parse_config_text inverts it
/// exactly.
std::string to_config_text(const RunConfig& config);

/// The `system.`, `geometry.`, `interaction.` and `worm.` sections alone.
std::string system_spec_to_text(const SystemSpec& spec);
SystemSpec system_spec_from_text(std::string_view text);

/// Shortest decimal that round-trips.
std::string format_double(double x);

}  // namespace bosegreen
