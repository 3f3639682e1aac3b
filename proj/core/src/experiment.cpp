#include "qfrac/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "qfrac/ctrw.hpp"
#include "qfrac/dynamics.hpp"
#include "qfrac/errors.hpp"
#include "qfrac/hamiltonian.hpp"

namespace qfrac::experiment {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string trimmed(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
    if (pos != value.size()) throw ConfigError(key, "expected a number, got '" + value + "'");
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
    if (pos != value.size()) throw ConfigError(key, "expected an integer, got '" + value + "'");
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    }
    if (pos != value.size() || value[0] == '-')
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        const std::string item = trimmed(value.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
        if (comma == value.size()) break;
    }
    return out;
}

bool parse_region_token(const std::string& token, int& sub_generation) {
    if (token.rfind("region:", 0) != 0) return false;
    const std::string num = token.substr(7);
    if (!all_digits(num) || num.size() > 2) return false;
    sub_generation = std::stoi(num);
    return true;
}

}  // namespace

std::size_t predicted_site_count(const LatticeSpec& spec) {
    switch (spec.kind) {
        case lattice::LatticeKind::Gasket: {
            std::size_t p = 1;
            for (int k = 0; k < spec.generation; ++k) p *= 3;
            return 3 * (p + 1) / 2;
        }
        case lattice::LatticeKind::Interpolating: {
            const std::size_t n = (std::size_t{1} << spec.generation) + 1;
            return n * (n + 1) / 2;
        }
        case lattice::LatticeKind::Triangular: {
            const std::size_t n = static_cast<std::size_t>(spec.side);
            return n * (n + 1) / 2;
        }
        case lattice::LatticeKind::Square: {
            const std::size_t n = static_cast<std::size_t>(spec.side);
            return n * n;
        }
        case lattice::LatticeKind::Carpet: {
            // No closed form: count retained-cell vertices on the bare grid.
            std::int64_t cells = 1;
            for (int k = 1; k < spec.generation; ++k) cells *= 3;
            const int levels = spec.generation - 1;
            const auto retained = [&](std::int64_t cx, std::int64_t cy) {
                for (int k = 0; k < levels; ++k) {
                    if (cx % 3 == 1 && cy % 3 == 1) return false;
                    cx /= 3;
                    cy /= 3;
                }
                return true;
            };
            std::size_t count = 0;
            for (std::int64_t r = 0; r <= cells; ++r) {
                for (std::int64_t c = 0; c <= cells; ++c) {
                    const bool touched = (r > 0 && c > 0 && retained(c - 1, r - 1)) ||
                                         (r > 0 && c < cells && retained(c, r - 1)) ||
                                         (r < cells && c > 0 && retained(c - 1, r)) ||
                                         (r < cells && c < cells && retained(c, r));
                    if (touched) ++count;
                }
            }
            return count;
        }
    }
    return 0;
}

void check_resource_guard(const LatticeSpec& spec) {
    const std::size_t n = predicted_site_count(spec);
    if (n > kMaxSites) throw ResourceGuardError(n, kMaxSites);
}

lattice::LatticeGraph build(const LatticeSpec& spec) {
    switch (spec.kind) {
        case lattice::LatticeKind::Gasket: return lattice::build_gasket(spec.generation);
        case lattice::LatticeKind::Carpet: return lattice::build_carpet(spec.generation);
        case lattice::LatticeKind::Triangular: return lattice::build_triangular(spec.side);
        case lattice::LatticeKind::Square: return lattice::build_square(spec.side);
        case lattice::LatticeKind::Interpolating:
            return lattice::build_interpolating(spec.generation);
    }
    throw std::invalid_argument("build: unknown lattice kind");
}

std::string describe(const LatticeSpec& spec) {
    std::string out = lattice::to_string(spec.kind);
    switch (spec.kind) {
        case lattice::LatticeKind::Gasket:
        case lattice::LatticeKind::Carpet:
            out += " generation=" + std::to_string(spec.generation);
            break;
        case lattice::LatticeKind::Interpolating:
            out += " generation=" + std::to_string(spec.generation) +
                   " gamma=" + fmt_g(spec.gamma);
            break;
        case lattice::LatticeKind::Triangular:
        case lattice::LatticeKind::Square:
            out += " side=" + std::to_string(spec.side);
            break;
    }
    return out;
}

ExperimentConfig default_config() { return {}; }

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
    if (key == "name") {
        if (value.empty()) throw ConfigError(key, "must not be empty");
        for (char c : value) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                            (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
            if (!ok) throw ConfigError(key, "only letters, digits, '.', '_', '-' are allowed");
        }
        config.name = value;
    } else if (key == "lattice.kind") {
        if (value == "gasket")
            config.lattice.kind = lattice::LatticeKind::Gasket;
        else if (value == "carpet")
            config.lattice.kind = lattice::LatticeKind::Carpet;
        else if (value == "triangular")
            config.lattice.kind = lattice::LatticeKind::Triangular;
        else if (value == "square")
            config.lattice.kind = lattice::LatticeKind::Square;
        else if (value == "interpolating")
            config.lattice.kind = lattice::LatticeKind::Interpolating;
        else
            throw ConfigError(key, "unknown lattice kind '" + value + "'");
    } else if (key == "lattice.generation") {
        config.lattice.generation = parse_int(key, value);
    } else if (key == "lattice.side") {
        config.lattice.side = parse_int(key, value);
    } else if (key == "lattice.gamma") {
        config.lattice.gamma = parse_double(key, value);
    } else if (key == "initial.kind") {
        if (value != "single" && value != "plus" && value != "minus")
            throw ConfigError(key, "expected single, plus or minus");
        config.initial_kind = value;
    } else if (key == "initial.site") {
        config.initial_site = value;
    } else if (key == "time.min") {
        config.time.t_min = parse_double(key, value);
    } else if (key == "time.max") {
        config.time.t_max = parse_double(key, value);
    } else if (key == "time.points") {
        config.time.points = parse_int(key, value);
    } else if (key == "observables") {
        config.observables = split_list(value);
    } else if (key == "fit.lo") {
        if (!config.fit_window)
            config.fit_window = analysis::TimeWindow{std::nan(""), std::nan("")};
        config.fit_window->t_lo = parse_double(key, value);
    } else if (key == "fit.hi") {
        if (!config.fit_window)
            config.fit_window = analysis::TimeWindow{std::nan(""), std::nan("")};
        config.fit_window->t_hi = parse_double(key, value);
    } else if (key == "output.dir") {
        if (value.empty()) throw ConfigError(key, "must not be empty");
        config.output_dir = value;
    } else if (key == "seed") {
        config.seed = parse_u64(key, value);
    } else {
        throw ConfigError(key, "unknown config key");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig config = default_config();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trimmed(line);
        if (s.empty() || s[0] == '#') continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config",
                              "line " + std::to_string(lineno) + ": expected 'key = value'");
        apply_override(config, trimmed(s.substr(0, eq)), trimmed(s.substr(eq + 1)));
    }
    return config;
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config) {
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("name", config.name);
    e.emplace_back("lattice.kind", lattice::to_string(config.lattice.kind));
    switch (config.lattice.kind) {
        case lattice::LatticeKind::Gasket:
        case lattice::LatticeKind::Carpet:
            e.emplace_back("lattice.generation", std::to_string(config.lattice.generation));
            break;
        case lattice::LatticeKind::Interpolating:
            e.emplace_back("lattice.generation", std::to_string(config.lattice.generation));
            e.emplace_back("lattice.gamma", fmt_g(config.lattice.gamma));
            break;
        case lattice::LatticeKind::Triangular:
        case lattice::LatticeKind::Square:
            e.emplace_back("lattice.side", std::to_string(config.lattice.side));
            break;
    }
    e.emplace_back("initial.kind", config.initial_kind);
    e.emplace_back("initial.site", config.initial_site);
    e.emplace_back("time.min", fmt_g(config.time.t_min));
    e.emplace_back("time.max", fmt_g(config.time.t_max));
    e.emplace_back("time.points", std::to_string(config.time.points));
    std::string obs;
    for (std::size_t k = 0; k < config.observables.size(); ++k) {
        if (k) obs += ",";
        obs += config.observables[k];
    }
    e.emplace_back("observables", obs);
    if (config.fit_window) {
        e.emplace_back("fit.lo", fmt_g(config.fit_window->t_lo));
        e.emplace_back("fit.hi", fmt_g(config.fit_window->t_hi));
    }
    e.emplace_back("output.dir", config.output_dir);
    e.emplace_back("seed", std::to_string(config.seed));
    return e;
}

namespace {

using Header = std::vector<std::pair<std::string, std::string>>;

std::string serialize_entries(const Header& entries) {
    std::string blob;
    for (const auto& [k, v] : entries) {
        blob += k;
        blob += " = ";
        blob += v;
        blob += "\n";
    }
    return blob;
}

void write_kv_header(std::ostream& out, const Header& entries) {
    for (const auto& [k, v] : entries) out << "# " << k << " = " << v << "\n";
}

struct ManifestEntry {
    std::string name;
    std::uint64_t hash;
    std::size_t bytes;
};

// Collects written files for the manifest. Contents are assembled in memory
// first so the recorded hash is exactly the hash of the bytes on disk.
struct FileSink {
    fs::path dir;
    std::vector<std::string> files;
    std::vector<ManifestEntry> entries;
    std::string input_blob;

    explicit FileSink(const std::string& out_dir) : dir(out_dir) {
        if (out_dir.empty()) throw ConfigError("output.dir", "must not be empty");
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw ConfigError("output.dir", "cannot create '" + out_dir + "': " + ec.message());
    }

    void note_input(const std::string& blob) { input_blob += blob; }

    void write_raw(const fs::path& path, const std::string& content) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("output.dir", "cannot write '" + path.string() + "'");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.close();
        if (!f) throw ConfigError("output.dir", "short write to '" + path.string() + "'");
    }

    std::string emit(const std::string& name, const std::string& content) {
        const fs::path path = dir / name;
        write_raw(path, content);
        entries.push_back({name, fnv1a64(content), content.size()});
        files.push_back(path.string());
        return path.string();
    }

    std::string write_manifest(const std::string& label) {
        char stamp[40] = "unknown";
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        if (gmtime_r(&now, &tm_utc) != nullptr)
            std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        std::ostringstream out;
        out << "# qfrac manifest\n";
        out << "# run = " << label << "\n";
        out << "# created = " << stamp << "\n";
        out << "# inputs = " << fmt_hex(fnv1a64(input_blob)) << "\n";
        out << "# columns = file fnv1a64 bytes\n";
        for (const ManifestEntry& e : entries)
            out << e.name << " " << fmt_hex(e.hash) << " " << e.bytes << "\n";
        const fs::path path = dir / "manifest.txt";
        write_raw(path, out.str());
        files.push_back(path.string());
        return path.string();
    }
};

// Single-slot cache of the most recent decomposition. Presets evolve
// several initial states on the same lattice back to back; one slot removes
// the repeated cubic solves while keeping the memory bound at one matrix.
std::shared_ptr<const spectral::SpectralDecomposition> cached_eigendecompose(
    const std::string& key, const hamiltonian::SymmetricOperator& op) {
    static std::string cache_key;
    static std::shared_ptr<const spectral::SpectralDecomposition> cache_value;
    if (cache_key == key && cache_value) return cache_value;
    cache_value.reset();  // release the old slot before the next solve
    cache_key.clear();
    cache_value =
        std::make_shared<const spectral::SpectralDecomposition>(spectral::eigendecompose(op));
    cache_key = key;
    return cache_value;
}

struct ObservablePlan {
    bool msd = false;
    bool return_prob = false;
    bool classical_msd = false;
    bool classical_return = false;
    bool spectrum = false;
    bool staircase = false;
    std::vector<int> regions;  // sub-generations, in config order

    bool needs_evolution() const { return msd || return_prob || !regions.empty(); }
    bool needs_classical() const { return classical_msd || classical_return; }
    bool needs_spectrum_values() const { return spectrum || staircase; }
    bool empty() const {
        return !needs_evolution() && !needs_classical() && !needs_spectrum_values();
    }
};

ObservablePlan plan_observables(const ExperimentConfig& config) {
    ObservablePlan plan;
    std::vector<std::string> seen;
    for (const std::string& token : config.observables) {
        if (std::find(seen.begin(), seen.end(), token) != seen.end())
            throw ConfigError("observables", "duplicate observable '" + token + "'");
        seen.push_back(token);
        int sub = 0;
        if (token == "msd")
            plan.msd = true;
        else if (token == "return")
            plan.return_prob = true;
        else if (token == "classical_msd")
            plan.classical_msd = true;
        else if (token == "classical_return")
            plan.classical_return = true;
        else if (token == "spectrum")
            plan.spectrum = true;
        else if (token == "staircase")
            plan.staircase = true;
        else if (parse_region_token(token, sub))
            plan.regions.push_back(sub);
        else
            throw ConfigError("observables", "unknown observable '" + token + "'");
    }
    return plan;
}

void validate(const ExperimentConfig& config) {
    if (config.name.empty()) throw ConfigError("name", "must not be empty");
    if (config.output_dir.empty()) throw ConfigError("output.dir", "must not be empty");

    const LatticeSpec& lat = config.lattice;
    switch (lat.kind) {
        case lattice::LatticeKind::Gasket:
            if (lat.generation < 1 || lat.generation > 9)
                throw ConfigError("lattice.generation", "gasket generation must be in [1, 9]");
            break;
        case lattice::LatticeKind::Carpet:
            if (lat.generation < 1 || lat.generation > 6)
                throw ConfigError("lattice.generation", "carpet generation must be in [1, 6]");
            break;
        case lattice::LatticeKind::Interpolating:
            if (lat.generation < 1 || lat.generation > 9)
                throw ConfigError("lattice.generation",
                                  "interpolating generation must be in [1, 9]");
            if (!(lat.gamma >= 0.0 && lat.gamma <= 1.0))
                throw ConfigError("lattice.gamma", "gamma must be in [0, 1]");
            break;
        case lattice::LatticeKind::Triangular:
        case lattice::LatticeKind::Square:
            if (lat.side < 2) throw ConfigError("lattice.side", "side must be >= 2");
            break;
    }

    if (config.initial_kind != "single" && config.initial_kind != "plus" &&
        config.initial_kind != "minus")
        throw ConfigError("initial.kind", "expected single, plus or minus");

    const std::string& site = config.initial_site;
    const bool corner_form =
        site == "corner" || (site.rfind("corner:", 0) == 0 && all_digits(site.substr(7)));
    if (!corner_form && !all_digits(site))
        throw ConfigError("initial.site", "expected corner, corner:<k> or a site index");

    if (!(config.time.t_min > 0.0) || !(config.time.t_max > config.time.t_min))
        throw ConfigError("time.min", "need 0 < time.min < time.max");
    if (config.time.points < 2) throw ConfigError("time.points", "need at least 2 points");

    const ObservablePlan plan = plan_observables(config);
    if (plan.needs_classical() && config.initial_kind != "single")
        throw ConfigError("observables", "classical observables require initial.kind = single");
    if (!plan.regions.empty() && lat.kind != lattice::LatticeKind::Gasket &&
        lat.kind != lattice::LatticeKind::Interpolating &&
        lat.kind != lattice::LatticeKind::Triangular)
        throw ConfigError("observables", "region weights need a triangular-family lattice");
    if (config.fit_window) {
        const analysis::TimeWindow& w = *config.fit_window;
        if (!std::isfinite(w.t_lo) || !std::isfinite(w.t_hi))
            throw ConfigError("fit.lo", "fit.lo and fit.hi must both be set");
        if (!(w.t_lo > 0.0) || !(w.t_hi > w.t_lo))
            throw ConfigError("fit.lo", "need 0 < fit.lo < fit.hi");
        if (!plan.msd && !plan.classical_msd)
            throw ConfigError("fit.lo", "a fit window requires msd or classical_msd");
    }
}

int resolve_site_token(const std::string& token, const lattice::LatticeGraph& lat) {
    const std::vector<int> corners = lattice::corner_sites(lat);
    if (token == "corner") return corners.front();
    if (token.rfind("corner:", 0) == 0) {
        const std::size_t k = std::stoul(token.substr(7));
        if (k >= corners.size())
            throw ConfigError("initial.site", "corner index " + std::to_string(k) +
                                                  " out of range (lattice has " +
                                                  std::to_string(corners.size()) + " corners)");
        return corners[k];
    }
    const unsigned long idx = std::stoul(token);
    if (idx >= lat.site_count())
        throw ConfigError("initial.site", "site index " + std::to_string(idx) +
                                              " out of range (lattice has " +
                                              std::to_string(lat.site_count()) + " sites)");
    return static_cast<int>(idx);
}

// Partner site for superposition states: the lowest-index neighbor, which
// for a corner start is the adjacent site along the bottom edge.
int lowest_neighbor(const lattice::LatticeGraph& lat, int site) {
    int best = -1;
    for (const lattice::Edge& e : lat.edges) {
        int other = -1;
        if (e.i == site)
            other = e.j;
        else if (e.j == site)
            other = e.i;
        else
            continue;
        if (best < 0 || other < best) best = other;
    }
    if (best < 0) throw std::invalid_argument("superposition start site has no neighbors");
    return best;
}

std::string file_tag(const std::string& token) {
    int sub = 0;
    if (parse_region_token(token, sub)) return "region" + std::to_string(sub);
    return token;
}

// In-memory results of one config, for presets that post-process (fits,
// cross-lattice summaries) without re-reading files.
struct RunOutput {
    std::map<std::string, dynamics::ObservableSeries> series;  // keyed by observable token
    std::optional<spectral::LevelSpacingResult> levelspacing;
};

RunOutput run_one(const ExperimentConfig& config, FileSink& sink) {
    validate(config);
    sink.note_input(serialize_entries(config_entries(config)));

    const ObservablePlan plan = plan_observables(config);
    RunOutput out;
    if (plan.empty()) return out;  // manifest-only run

    check_resource_guard(config.lattice);
    const lattice::LatticeGraph lat = build(config.lattice);

    Header base = config_entries(config);
    base.emplace_back("lattice.sites", std::to_string(lat.site_count()));
    base.emplace_back("lattice.edges", std::to_string(lat.edge_count()));
    base.emplace_back("lattice.extent", fmt_g(lat.side_length));

    // Initial state (evolution and classical observables only).
    dynamics::InitialStateSpec init;
    lattice::Point2D r_ref{};
    if (plan.needs_evolution() || plan.needs_classical()) {
        const int site_a = resolve_site_token(config.initial_site, lat);
        if (config.initial_kind == "single") {
            init = dynamics::InitialStateSpec::single(site_a);
        } else {
            const auto sign = config.initial_kind == "plus" ? dynamics::SuperpositionSign::Plus
                                                            : dynamics::SuperpositionSign::Minus;
            init = dynamics::InitialStateSpec::superposition(site_a, lowest_neighbor(lat, site_a),
                                                             sign);
        }
        r_ref = dynamics::reference_point(init, lat);
        base.emplace_back("initial.site_index", std::to_string(init.site_a));
        if (init.is_superposition())
            base.emplace_back("initial.partner_index", std::to_string(init.site_b));
        base.emplace_back("initial.r_ref", fmt_g(r_ref.x) + " " + fmt_g(r_ref.y));
    }

    std::vector<double> times;
    if (plan.needs_evolution() || plan.needs_classical())
        times = dynamics::log_time_grid(config.time.t_min, config.time.t_max, config.time.points);

    // Extra header lines per observable token (regions report their size).
    std::map<std::string, Header> extras;

    std::vector<double> eigenvalues;
    if (plan.needs_evolution() || plan.needs_spectrum_values()) {
        const auto H = hamiltonian::assemble_quantum(lat, {1.0, config.lattice.gamma});
        std::shared_ptr<const spectral::SpectralDecomposition> decomp;
        if (plan.needs_evolution())
            decomp = cached_eigendecompose(describe(config.lattice) + "|quantum", H);
        if (plan.needs_spectrum_values())
            eigenvalues = decomp ? decomp->eigenvalues : spectral::eigenvalues_only(H);

        if (plan.needs_evolution()) {
            std::vector<std::vector<int>> regions;
            for (std::size_t k = 0; k < plan.regions.size(); ++k) {
                const lattice::RegionSpec spec{lattice::CornerAnchor::LowerLeft, plan.regions[k]};
                regions.push_back(lattice::region_sites(lat, spec));
                const std::string token = "region:" + std::to_string(plan.regions[k]);
                Header& ex = extras[token];
                ex.emplace_back("region.anchor", "lower_left");
                ex.emplace_back("region.sub_generation", std::to_string(plan.regions[k]));
                ex.emplace_back("region.sites", std::to_string(regions.back().size()));
                ex.emplace_back("region.site_ratio",
                                fmt_g(static_cast<double>(regions.back().size()) /
                                      static_cast<double>(lat.site_count())));
            }
            const dynamics::QuantumState psi0 = dynamics::prepare(init, lat);
            dynamics::EvolutionSeries ev =
                dynamics::evolve_series(*decomp, psi0, times, lat, r_ref, init.site_a, regions);
            if (plan.msd) out.series["msd"] = std::move(ev.msd);
            if (plan.return_prob) out.series["return"] = std::move(ev.return_prob);
            for (std::size_t k = 0; k < plan.regions.size(); ++k)
                out.series["region:" + std::to_string(plan.regions[k])] =
                    std::move(ev.region_weights[k]);
        }
    }

    if (plan.needs_classical()) {
        const auto gen = hamiltonian::assemble_ctrw_generator(lat);
        const auto decomp = cached_eigendecompose(describe(config.lattice) + "|ctrw", gen);
        ctrw::CtrwSeries cs = ctrw::ctrw_series(*decomp, init.site_a, times, lat);
        if (plan.classical_msd) out.series["classical_msd"] = std::move(cs.msd);
        if (plan.classical_return) out.series["classical_return"] = std::move(cs.return_prob);
    }

    if (plan.staircase) out.levelspacing = spectral::level_spacing_analysis(eigenvalues);

    // One file per observable, in config order.
    for (const std::string& token : config.observables) {
        std::ostringstream body;
        Header header = base;
        header.emplace_back("observable", token);
        if (auto it = extras.find(token); it != extras.end())
            header.insert(header.end(), it->second.begin(), it->second.end());

        if (token == "spectrum") {
            write_kv_header(body, header);
            spectral::write_spectrum(body, eigenvalues);
        } else if (token == "staircase") {
            write_kv_header(body, header);
            spectral::write_staircase(body, out.levelspacing->staircase);
        } else {
            dynamics::write_series(body, out.series.at(token), header);
        }
        sink.emit(config.name + "_" + file_tag(token) + ".txt", body.str());

        if (token == "staircase") {
            const spectral::LevelSpacingResult& ls = *out.levelspacing;
            std::ostringstream rep;
            Header rh = base;
            rh.emplace_back("observable", "levelspacing");
            write_kv_header(rep, rh);
            rep << "window_found = " << (ls.window_found ? 1 : 0) << "\n";
            rep << "power_law = " << (ls.power_law ? 1 : 0) << "\n";
            rep << "positive_gaps = " << ls.staircase.positive_gaps << "\n";
            rep << "zero_gaps = " << ls.staircase.zero_gaps << "\n";
            if (ls.window_found) {
                rep << "window.s_lo = " << fmt_g(ls.fit.window.s_lo) << "\n";
                rep << "window.s_hi = " << fmt_g(ls.fit.window.s_hi) << "\n";
                rep << "beta = " << fmt_g(ls.fit.beta) << "\n";
                rep << "slope = " << fmt_g(ls.fit.slope) << "\n";
                rep << "residual = " << fmt_g(ls.fit.residual) << "\n";
                rep << "slope_stderr = " << fmt_g(ls.fit.slope_stderr) << "\n";
                rep << "points = " << ls.fit.points << "\n";
            }
            sink.emit(config.name + "_levelspacing.txt", rep.str());
        }
    }

    if (config.fit_window) {
        const dynamics::ObservableSeries& series =
            plan.msd ? out.series.at("msd") : out.series.at("classical_msd");
        const analysis::ExponentFit fit = analysis::fit_alpha(series, *config.fit_window);
        std::ostringstream rep;
        Header rh = base;
        rh.emplace_back("observable", "fit");
        write_kv_header(rep, rh);
        analysis::write_fit_report(rep, series.observable, fit);
        sink.emit(config.name + "_fit.txt", rep.str());
    }

    return out;
}

// ---------------------------------------------------------------------------
// Presets: one per reproduced figure.

ExperimentConfig preset_config(std::string name, LatticeSpec lat,
                               std::vector<std::string> observables, TimeGridSpec grid,
                               const std::string& output_dir) {
    ExperimentConfig cfg;
    cfg.name = std::move(name);
    cfg.lattice = lat;
    cfg.observables = std::move(observables);
    cfg.time = grid;
    cfg.output_dir = output_dir;
    return cfg;
}

constexpr TimeGridSpec kGridStd{1e-2, 1e4, 400};
constexpr TimeGridSpec kGridLong{1e-2, 1e6, 400};

LatticeSpec gasket_spec(int generation) {
    LatticeSpec s;
    s.kind = lattice::LatticeKind::Gasket;
    s.generation = generation;
    return s;
}

LatticeSpec carpet_spec(int generation) {
    LatticeSpec s;
    s.kind = lattice::LatticeKind::Carpet;
    s.generation = generation;
    return s;
}

LatticeSpec triangular_spec(int side) {
    LatticeSpec s;
    s.kind = lattice::LatticeKind::Triangular;
    s.side = side;
    return s;
}

LatticeSpec square_spec(int side) {
    LatticeSpec s;
    s.kind = lattice::LatticeKind::Square;
    s.side = side;
    return s;
}

// Corner-start MSD across gasket generations 4-7 plus the classical walk on
// the largest one.
void preset_fig2a(FileSink& sink, const std::string& output_dir) {
    for (int gen = 4; gen <= 7; ++gen) {
        run_one(preset_config("fig2a_gasket" + std::to_string(gen), gasket_spec(gen), {"msd"},
                              kGridStd, output_dir),
                sink);
    }
    run_one(preset_config("fig2a_gasket7_classical", gasket_spec(7), {"classical_msd"}, kGridStd,
                          output_dir),
            sink);
}

// Three-regime exponent fits on the generation-7 gasket out to tJ = 1e6.
void preset_fig2b(FileSink& sink, const std::string& output_dir) {
    const RunOutput out = run_one(
        preset_config("fig2b_gasket7", gasket_spec(7), {"msd"}, kGridLong, output_dir), sink);

    const lattice::LatticeGraph lat = build(gasket_spec(7));
    const analysis::RegimeWindows windows = analysis::default_windows(lat);
    const dynamics::ObservableSeries& msd = out.series.at("msd");

    std::ostringstream rep;
    rep << "# qfrac regime fits\n";
    rep << "# name = fig2b_gasket7\n";
    rep << "# lattice = " << describe(gasket_spec(7)) << "\n";
    rep << "# crossover_time = " << fmt_g(windows.crossover_time) << "\n";
    analysis::write_fit_report(rep, "short", analysis::fit_alpha(msd, windows.short_time));
    rep << "\n";
    analysis::write_fit_report(rep, "intermediate",
                               analysis::fit_alpha(msd, windows.intermediate));
    rep << "\n";
    analysis::write_fit_report(rep, "long", analysis::fit_alpha(msd, windows.long_time));
    sink.note_input(rep.str());
    sink.emit("fig2b_fits.txt", rep.str());
}

// Ensemble-averaged MSD on the generation-6 gasket: every site of the
// lower-left generation-3 sub-gasket serves once as the initial site.
void preset_fig2c(FileSink& sink, const std::string&) {
    const LatticeSpec spec = gasket_spec(6);
    check_resource_guard(spec);
    const lattice::LatticeGraph lat = build(spec);
    const std::vector<int> members =
        lattice::region_sites(lat, {lattice::CornerAnchor::LowerLeft, 3});

    const auto H = hamiltonian::assemble_quantum(lat, {});
    const auto decomp = cached_eigendecompose(describe(spec) + "|quantum", H);
    const std::vector<double> times =
        dynamics::log_time_grid(kGridStd.t_min, kGridStd.t_max, kGridStd.points);
    const auto [mean, stddev] = analysis::ensemble_msd(lat, *decomp, members, times);

    Header header;
    header.emplace_back("name", "fig2c_gasket6_ensemble");
    header.emplace_back("lattice.kind", "gasket");
    header.emplace_back("lattice.generation", "6");
    header.emplace_back("lattice.sites", std::to_string(lat.site_count()));
    header.emplace_back("ensemble.region", "lower_left");
    header.emplace_back("ensemble.sub_generation", "3");
    header.emplace_back("ensemble.members", std::to_string(members.size()));
    header.emplace_back("time.min", fmt_g(kGridStd.t_min));
    header.emplace_back("time.max", fmt_g(kGridStd.t_max));
    header.emplace_back("time.points", std::to_string(kGridStd.points));
    header.emplace_back("observable", "ensemble_msd");
    sink.note_input(serialize_entries(header));

    std::ostringstream body;
    dynamics::write_series(body, mean, stddev, header);
    sink.emit("fig2c_ensemble.txt", body.str());

    const analysis::RegimeWindows windows = analysis::default_windows(lat);
    std::ostringstream rep;
    write_kv_header(rep, header);
    rep << "# crossover_time = " << fmt_g(windows.crossover_time) << "\n";
    analysis::write_fit_report(rep, "intermediate",
                               analysis::fit_alpha(mean, windows.intermediate));
    sink.emit("fig2c_fit.txt", rep.str());
}

// Carpet corner-start MSD with its ballistic-window exponent fit.
void preset_fig3(FileSink& sink, const std::string& output_dir) {
    const LatticeSpec spec = carpet_spec(5);
    ExperimentConfig cfg = preset_config("fig3_carpet5", spec, {"msd"}, kGridStd, output_dir);
    cfg.fit_window = analysis::regular_fit_window(build(spec));
    run_one(cfg, sink);
}

// Integrated level-spacing staircases for all four lattice families, plus a
// one-row-per-lattice summary of the fitted beta and power-law verdict.
void preset_fig4(FileSink& sink, const std::string& output_dir) {
    struct Row {
        std::string tag;
        LatticeSpec spec;
    };
    const std::vector<Row> rows = {
        {"gasket7", gasket_spec(7)},
        {"carpet5", carpet_spec(5)},
        {"triangular129", triangular_spec(129)},
        {"square82", square_spec(82)},
    };
    std::ostringstream summary;
    summary << "# qfrac level-spacing summary\n";
    summary << "# columns = lattice window_found s_lo s_hi beta residual power_law\n";
    for (const Row& row : rows) {
        const RunOutput out = run_one(
            preset_config("fig4_" + row.tag, row.spec, {"staircase"}, kGridStd, output_dir),
            sink);
        const spectral::LevelSpacingResult& ls = *out.levelspacing;
        summary << row.tag << " " << (ls.window_found ? 1 : 0);
        if (ls.window_found)
            summary << " " << fmt_g(ls.fit.window.s_lo) << " " << fmt_g(ls.fit.window.s_hi) << " "
                    << fmt_g(ls.fit.beta) << " " << fmt_g(ls.fit.residual);
        else
            summary << " nan nan nan nan";
        summary << " " << (ls.power_law ? 1 : 0) << "\n";
    }
    sink.emit("fig4_summary.txt", summary.str());
}

// Transport exponent versus gamma on the generation-6 interpolating lattice.
void preset_fig5(FileSink& sink, const std::string&) {
    const int generation = 6;
    const std::vector<double> gammas = {0.0, 0.25, 0.5, 0.75, 1.0};
    LatticeSpec spec;
    spec.kind = lattice::LatticeKind::Interpolating;
    spec.generation = generation;
    check_resource_guard(spec);
    const analysis::TimeWindow window = analysis::regular_fit_window(build(spec));
    const std::vector<double> times =
        dynamics::log_time_grid(kGridStd.t_min, kGridStd.t_max, kGridStd.points);
    const analysis::GammaSweepResult sweep =
        analysis::gamma_sweep(generation, gammas, window, times);

    Header header;
    header.emplace_back("name", "fig5_interpolating6_sweep");
    header.emplace_back("lattice.kind", "interpolating");
    header.emplace_back("lattice.generation", std::to_string(generation));
    header.emplace_back("initial.site", "corner");
    header.emplace_back("fit.lo", fmt_g(window.t_lo));
    header.emplace_back("fit.hi", fmt_g(window.t_hi));
    header.emplace_back("time.min", fmt_g(kGridStd.t_min));
    header.emplace_back("time.max", fmt_g(kGridStd.t_max));
    header.emplace_back("time.points", std::to_string(kGridStd.points));
    sink.note_input(serialize_entries(header));

    std::ostringstream table;
    write_kv_header(table, header);
    analysis::write_sweep(table, sweep);
    sink.emit("fig5_sweep.txt", table.str());

    for (std::size_t k = 0; k < gammas.size(); ++k) {
        Header h = header;
        h.emplace_back("lattice.gamma", fmt_g(gammas[k]));
        h.emplace_back("observable", "msd");
        std::ostringstream body;
        dynamics::write_series(body, sweep.series[k], h);
        sink.emit("fig5_gamma" + fmt_g(gammas[k]) + "_msd.txt", body.str());
    }
}

// Probability retained in nested corner sub-triangles: gasket versus the
// regular triangular lattice of the same extent.
void preset_fig6(FileSink& sink, const std::string& output_dir) {
    run_one(preset_config("fig6_gasket7", gasket_spec(7), {"region:4", "region:5", "region:6"},
                          kGridLong, output_dir),
            sink);
    run_one(preset_config("fig6_triangular129", triangular_spec(129), {"region:6"}, kGridStd,
                          output_dir),
            sink);
}

// Symmetric versus antisymmetric two-site superpositions, gasket and
// regular triangle.
void preset_fig7(FileSink& sink, const std::string& output_dir) {
    const auto with_kind = [&](std::string name, LatticeSpec spec, const char* kind) {
        ExperimentConfig cfg =
            preset_config(std::move(name), spec, {"msd"}, kGridStd, output_dir);
        cfg.initial_kind = kind;
        return cfg;
    };
    run_one(with_kind("fig7_gasket7_plus", gasket_spec(7), "plus"), sink);
    run_one(with_kind("fig7_gasket7_minus", gasket_spec(7), "minus"), sink);
    run_one(with_kind("fig7_triangular129_plus", triangular_spec(129), "plus"), sink);
    run_one(with_kind("fig7_triangular129_minus", triangular_spec(129), "minus"), sink);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    validate(config);
    FileSink sink(config.output_dir);
    run_one(config, sink);
    sink.write_manifest(config.name);
    return {sink.files};
}

const std::vector<PresetInfo>& list_presets() {
    static const std::vector<PresetInfo> presets = {
        {"fig2a", "corner-start MSD, gasket generations 4-7, with the classical walk on 7"},
        {"fig2b", "generation-7 gasket MSD to tJ = 1e6 with three-regime exponent fits"},
        {"fig2c", "generation-6 gasket MSD averaged over a 42-site initial ensemble"},
        {"fig3", "carpet generation-5 corner-start MSD with ballistic-window fit"},
        {"fig4", "level-spacing staircases and power-law verdicts for all four lattices"},
        {"fig5", "exponent versus gamma on the generation-6 interpolating lattice"},
        {"fig6", "corner sub-triangle weights, gasket versus regular triangle"},
        {"fig7", "symmetric/antisymmetric superposition MSD, gasket versus triangle"},
    };
    return presets;
}

RunResult run_preset(const std::string& name, const std::string& output_dir) {
    FileSink sink(output_dir);
    if (name == "fig2a")
        preset_fig2a(sink, output_dir);
    else if (name == "fig2b")
        preset_fig2b(sink, output_dir);
    else if (name == "fig2c")
        preset_fig2c(sink, output_dir);
    else if (name == "fig3")
        preset_fig3(sink, output_dir);
    else if (name == "fig4")
        preset_fig4(sink, output_dir);
    else if (name == "fig5")
        preset_fig5(sink, output_dir);
    else if (name == "fig6")
        preset_fig6(sink, output_dir);
    else if (name == "fig7")
        preset_fig7(sink, output_dir);
    else
        throw ConfigError("preset", "unknown preset '" + name + "' (see list-presets)");
    sink.write_manifest(name);
    return {sink.files};
}

}  // namespace qfrac::experiment
