#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "radmat/sim.hpp"

namespace radmat {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Contents of the scenario/config file: sections `radar`, `materials`
// (exactly 5 entries), `scenario`. Missing sections fall back to defaults;
// unknown keys are an error.
struct AppConfig {
    RadarConfig radar;
    std::vector<MaterialSpec> materials;
    Scenario scenario;
    int sequences_per_class = 200;
};

// Synthetic default material table (config-overridable). Encodes the
// qualitative ordering: near-identical specular metals, weaker diffuse
// dielectrics.
std::vector<MaterialSpec> default_materials();

AppConfig default_config();
AppConfig load_config(const std::filesystem::path& path);

// Scenario spellings accepted on the command line: "nominal",
// "height:0.35", "tilt:10", "tilt:-10", "session:4", "augmented",
// "augmented:0.35,0.55,-10,10".
Scenario parse_scenario(const std::string& text);

// Stable hex digest over the radar config, material table, and seed; every
// artifact of a run carries it so reports from different setups cannot be
// merged silently.
std::string config_fingerprint(const RadarConfig& radar,
                               std::span<const MaterialSpec> materials,
                               std::uint64_t master_seed, const std::string& extra = "");

}  // namespace radmat
