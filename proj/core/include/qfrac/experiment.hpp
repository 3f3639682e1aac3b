#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qfrac/analysis.hpp"
#include "qfrac/lattice.hpp"

namespace qfrac::experiment {

// Dense decompositions above this refuse to run; G(9) and carpet-6 sized
// inputs are almost certainly accidents.
inline constexpr std::size_t kMaxSites = 10000;

struct LatticeSpec {
    lattice::LatticeKind kind = lattice::LatticeKind::Gasket;
    int generation = 1;   // gasket / carpet / interpolating
    int side = 2;         // triangular / square (vertices per edge)
    double gamma = 1.0;   // interpolating only
};

// Site count from the closed-form formulas, without building anything.
std::size_t predicted_site_count(const LatticeSpec& spec);

// Throws ResourceGuardError when predicted_site_count exceeds kMaxSites.
void check_resource_guard(const LatticeSpec& spec);

lattice::LatticeGraph build(const LatticeSpec& spec);

std::string describe(const LatticeSpec& spec);

struct TimeGridSpec {
    double t_min = 1e-2;
    double t_max = 1e4;
    int points = 400;
};

// One experiment: a lattice, an initial state, a time grid, and a list of
// observables. Serialized as dotted key=value text; every key can be
// overridden individually.
struct ExperimentConfig {
    std::string name = "run";
    LatticeSpec lattice;
    std::string initial_kind = "single";  // single | plus | minus
    std::string initial_site = "corner";  // corner | corner:<k> | <site index>
    TimeGridSpec time;
    // msd | return | region:<i> | classical_msd | classical_return |
    // spectrum | staircase
    std::vector<std::string> observables = {"msd"};
    std::optional<analysis::TimeWindow> fit_window;  // fit report over the msd series
    std::string output_dir = "out";
    std::uint64_t seed = 0;
};

ExperimentConfig default_config();

// `key = value` lines, `#` comments and blank lines ignored. Unknown keys
// or unparsable values raise ConfigError naming the field.
ExperimentConfig parse_config(std::istream& in);
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

// The full resolved config as ordered key/value pairs; embedded in every
// output file header and hashed into the manifest.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

struct RunResult {
    std::vector<std::string> files;  // paths as written, manifest last
};

// Builds, decomposes, evolves and writes one file per observable plus an
// optional fit report and a manifest. Deterministic: identical configs
// yield byte-identical data files (timestamps live only in the manifest).
RunResult run_experiment(const ExperimentConfig& config);

struct PresetInfo {
    std::string name;
    std::string description;
};

// One preset per reproduced figure.
const std::vector<PresetInfo>& list_presets();

RunResult run_preset(const std::string& name, const std::string& output_dir);

// FNV-1a, used for config and output-file hashes in the manifest.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace qfrac::experiment
