#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "qfrac/errors.hpp"
#include "qfrac/experiment.hpp"
#include "qfrac/lattice.hpp"

using namespace qfrac::experiment;
using qfrac::ConfigError;
using qfrac::ResourceGuardError;
using qfrac::lattice::LatticeKind;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / leaf;
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig small_config(const std::string& dir) {
    ExperimentConfig config = default_config();
    config.name = "unit";
    config.lattice = {LatticeKind::Gasket, 2, 2, 1.0};
    config.time = {0.1, 10.0, 30};
    config.observables = {"msd", "return"};
    config.output_dir = dir;
    return config;
}

}  // namespace

TEST_CASE("predicted site counts match the built lattices") {
    for (int g = 1; g <= 5; ++g) {
        const LatticeSpec spec{LatticeKind::Gasket, g, 2, 1.0};
        CHECK(predicted_site_count(spec) == build(spec).site_count());
    }
    for (int g = 1; g <= 4; ++g) {
        const LatticeSpec spec{LatticeKind::Carpet, g, 2, 1.0};
        CHECK(predicted_site_count(spec) == build(spec).site_count());
    }
    for (int g = 1; g <= 4; ++g) {
        const LatticeSpec spec{LatticeKind::Interpolating, g, 2, 0.5};
        CHECK(predicted_site_count(spec) == build(spec).site_count());
    }
    for (int side : {2, 5, 16}) {
        const LatticeSpec spec{LatticeKind::Triangular, 1, side, 1.0};
        CHECK(predicted_site_count(spec) == build(spec).site_count());
    }
    for (int side : {2, 9}) {
        const LatticeSpec spec{LatticeKind::Square, 1, side, 1.0};
        CHECK(predicted_site_count(spec) == build(spec).site_count());
    }
}

TEST_CASE("resource guard admits the budget and refuses beyond it") {
    CHECK_NOTHROW(check_resource_guard({LatticeKind::Gasket, 8, 2, 1.0}));      // 9843
    CHECK_NOTHROW(check_resource_guard({LatticeKind::Square, 1, 100, 1.0}));    // 10000
    CHECK_THROWS_AS(check_resource_guard({LatticeKind::Gasket, 9, 2, 1.0}),     // 29526
                    ResourceGuardError);
    CHECK_THROWS_AS(check_resource_guard({LatticeKind::Square, 1, 101, 1.0}),
                    ResourceGuardError);
    CHECK_THROWS_AS(check_resource_guard({LatticeKind::Carpet, 6, 2, 1.0}), ResourceGuardError);

    try {
        check_resource_guard({LatticeKind::Gasket, 9, 2, 1.0});
        FAIL("guard did not trigger");
    } catch (const ResourceGuardError& e) {
        CHECK(e.sites() == 29526);
        CHECK(std::string(e.what()).find("reduce the generation") != std::string::npos);
    }
}

TEST_CASE("describe names the lattice and its size parameters") {
    CHECK(describe({LatticeKind::Gasket, 7, 2, 1.0}) == "gasket generation=7");
    CHECK(describe({LatticeKind::Carpet, 5, 2, 1.0}) == "carpet generation=5");
    CHECK(describe({LatticeKind::Interpolating, 6, 2, 0.5}) ==
          "interpolating generation=6 gamma=0.5");
    CHECK(describe({LatticeKind::Triangular, 1, 129, 1.0}) == "triangular side=129");
    CHECK(describe({LatticeKind::Square, 1, 82, 1.0}) == "square side=82");
}

TEST_CASE("config entries round-trip through the text format") {
    ExperimentConfig config = default_config();
    apply_override(config, "name", "roundtrip");
    apply_override(config, "lattice.kind", "interpolating");
    apply_override(config, "lattice.generation", "3");
    apply_override(config, "lattice.gamma", "0.25");
    apply_override(config, "initial.kind", "plus");
    apply_override(config, "initial.site", "corner:1");
    apply_override(config, "time.points", "55");
    apply_override(config, "observables", "msd,region:1");
    apply_override(config, "fit.lo", "1");
    apply_override(config, "fit.hi", "8");
    apply_override(config, "seed", "7");

    const auto entries = config_entries(config);
    std::ostringstream text;
    text << "# a comment line\n\n";
    for (const auto& [k, v] : entries) text << k << " = " << v << "\n";

    std::istringstream in(text.str());
    const ExperimentConfig parsed = parse_config(in);
    CHECK(config_entries(parsed) == entries);
    CHECK(parsed.lattice.gamma == 0.25);
    CHECK(parsed.fit_window.has_value());
    CHECK(parsed.fit_window->t_hi == 8.0);
    CHECK(parsed.observables.size() == 2);
}

TEST_CASE("entries expose only the keys relevant to the lattice kind") {
    ExperimentConfig gasket = default_config();
    bool saw_side = false, saw_gamma = false, saw_generation = false;
    for (const auto& [k, v] : config_entries(gasket)) {
        if (k == "lattice.side") saw_side = true;
        if (k == "lattice.gamma") saw_gamma = true;
        if (k == "lattice.generation") saw_generation = true;
    }
    CHECK(saw_generation);
    CHECK_FALSE(saw_side);
    CHECK_FALSE(saw_gamma);

    ExperimentConfig tri = default_config();
    apply_override(tri, "lattice.kind", "triangular");
    apply_override(tri, "lattice.side", "9");
    bool tri_side = false, tri_generation = false;
    for (const auto& [k, v] : config_entries(tri)) {
        if (k == "lattice.side") tri_side = true;
        if (k == "lattice.generation") tri_generation = true;
    }
    CHECK(tri_side);
    CHECK_FALSE(tri_generation);
}

TEST_CASE("overrides and parsing reject malformed input") {
    ExperimentConfig config = default_config();
    try {
        apply_override(config, "bogus", "1");
        FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "bogus");
    }
    CHECK_THROWS_AS(apply_override(config, "lattice.kind", "torus"), ConfigError);
    CHECK_THROWS_AS(apply_override(config, "time.points", "many"), ConfigError);
    CHECK_THROWS_AS(apply_override(config, "name", "bad name"), ConfigError);

    std::istringstream no_equals("lattice.kind gasket\n");
    CHECK_THROWS_AS(parse_config(no_equals), ConfigError);
}

TEST_CASE("validation failures name the offending field") {
    // An empty observable list skips the run itself, so these configs are
    // cheap to reject: validation happens first.
    auto expect_field = [](ExperimentConfig config, const std::string& field) {
        config.observables.clear();
        config.output_dir = (fs::temp_directory_path() / "qfrac_unit_reject").string();
        try {
            run_experiment(config);
            FAIL_CHECK("config accepted; expected rejection of " << field);
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
        }
    };

    ExperimentConfig bad_gamma = default_config();
    bad_gamma.lattice.kind = LatticeKind::Interpolating;
    bad_gamma.lattice.gamma = 1.5;
    expect_field(bad_gamma, "lattice.gamma");

    ExperimentConfig bad_time = default_config();
    bad_time.time = {10.0, 1.0, 30};
    expect_field(bad_time, "time.min");

    ExperimentConfig bad_site = default_config();
    bad_site.initial_site = "x7";
    expect_field(bad_site, "initial.site");

    ExperimentConfig bad_generation = default_config();
    bad_generation.lattice.generation = 10;
    expect_field(bad_generation, "lattice.generation");

    // These involve the observable list itself, so set it directly.
    auto expect_observable_error = [](ExperimentConfig config, const std::string& field) {
        config.output_dir = (fs::temp_directory_path() / "qfrac_unit_reject").string();
        try {
            run_experiment(config);
            FAIL_CHECK("config accepted; expected rejection of " << field);
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
        }
    };

    ExperimentConfig dup = default_config();
    dup.observables = {"msd", "msd"};
    expect_observable_error(dup, "observables");

    ExperimentConfig region_on_square = default_config();
    region_on_square.lattice.kind = LatticeKind::Square;
    region_on_square.lattice.side = 4;
    region_on_square.observables = {"region:1"};
    expect_observable_error(region_on_square, "observables");

    ExperimentConfig classical_plus = default_config();
    classical_plus.initial_kind = "plus";
    classical_plus.observables = {"classical_msd"};
    expect_observable_error(classical_plus, "observables");

    ExperimentConfig fit_without_msd = default_config();
    fit_without_msd.observables = {"return"};
    fit_without_msd.fit_window = {{1.0, 5.0}};
    expect_observable_error(fit_without_msd, "fit.lo");
}

TEST_CASE("a run writes every file, hashes it, and stays deterministic") {
    const fs::path dir = fresh_dir("qfrac_unit_run");
    const ExperimentConfig config = small_config(dir.string());

    const RunResult first = run_experiment(config);
    REQUIRE(first.files.size() == 3);  // msd, return, manifest
    for (const auto& f : first.files) CHECK(fs::exists(f));
    CHECK(fs::path(first.files.back()).filename() == "manifest.txt");

    // Manifest rows are `file 0x<fnv1a64> <bytes>`; recompute both from
    // the files on disk.
    std::map<std::string, std::pair<std::uint64_t, std::uintmax_t>> rows;
    std::istringstream manifest(slurp(first.files.back()));
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string name, hash;
        std::uintmax_t bytes = 0;
        fields >> name >> hash >> bytes;
        rows[name] = {std::stoull(hash, nullptr, 16), bytes};
    }
    REQUIRE(rows.size() == 2);
    for (const auto& [name, expect] : rows) {
        const std::string blob = slurp(dir / name);
        CHECK(fnv1a64(blob) == expect.first);
        CHECK(blob.size() == expect.second);
    }

    // Re-running the identical config overwrites with identical bytes.
    std::map<std::string, std::string> before;
    for (std::size_t k = 0; k + 1 < first.files.size(); ++k)
        before[first.files[k]] = slurp(first.files[k]);
    const RunResult second = run_experiment(config);
    REQUIRE(second.files == first.files);
    for (const auto& [path, blob] : before) CHECK(slurp(path) == blob);
}

TEST_CASE("an empty observable list produces only the manifest") {
    const fs::path dir = fresh_dir("qfrac_unit_empty");
    ExperimentConfig config = small_config(dir.string());
    config.observables.clear();
    const RunResult result = run_experiment(config);
    REQUIRE(result.files.size() == 1);
    CHECK(fs::path(result.files[0]).filename() == "manifest.txt");
}

TEST_CASE("corner selection is validated against the lattice") {
    const fs::path dir = fresh_dir("qfrac_unit_corner");
    ExperimentConfig config = small_config(dir.string());
    config.initial_site = "corner:3";  // a gasket has corners 0..2
    CHECK_THROWS_AS(run_experiment(config), ConfigError);

    config.initial_site = "9999";
    CHECK_THROWS_AS(run_experiment(config), ConfigError);
}

TEST_CASE("presets are listed and unknown names are rejected") {
    const auto& presets = list_presets();
    REQUIRE(presets.size() == 8);
    CHECK(presets.front().name == "fig2a");
    for (const auto& p : presets) CHECK_FALSE(p.description.empty());

    CHECK_THROWS_AS(run_preset("nope", "/tmp/qfrac_unit_preset"), ConfigError);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
