#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swarmguide/sim.hpp"

namespace swarmguide {

// A scenario plus the batch settings needed to execute it.
struct ScenarioSpec {
    std::string name = "custom";
    Scenario scenario;
    std::int64_t n_steps = 5000;
    int n_runs = 1;
    std::uint64_t seed = 1;
    std::string output_dir = "out";

    // Throws std::invalid_argument naming the offending key.
    void validate() const;

    bool operator==(const ScenarioSpec&) const = default;
};

// Every key accepted in a scenario file, in the order write_scenario emits them.
const std::vector<std::string>& scenario_keys();

std::vector<std::string> preset_names();
std::optional<ScenarioSpec> preset(std::string_view name);

// Flat key: value document. A `base: <preset>` key starts from that preset;
// otherwise `policy` is required. Unknown keys are rejected.
ScenarioSpec parse_scenario(std::string_view text);
// A preset name or a path to a scenario file.
ScenarioSpec load_scenario(const std::string& preset_or_path);
std::string write_scenario(const ScenarioSpec& spec);

// Library version plus compiler, for provenance records.
std::string build_identifier();

// Sets one key from its textual value, as it would appear in a file.
void apply_override(ScenarioSpec& spec, const std::string& key, const std::string& value);

}  // namespace swarmguide
