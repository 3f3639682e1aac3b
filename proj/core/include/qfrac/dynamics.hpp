#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qfrac/lattice.hpp"
#include "qfrac/spectral.hpp"

namespace qfrac::dynamics {

struct QuantumState {
    std::vector<std::complex<double>> amp;

    std::size_t size() const { return amp.size(); }
    double norm() const;
};

enum class SuperpositionSign : std::uint8_t { Plus, Minus };

// Either a single occupied site or (|A> +/- |B>)/sqrt(2). site_b < 0 means
// single-site.
struct InitialStateSpec {
    std::int32_t site_a = 0;
    std::int32_t site_b = -1;
    SuperpositionSign sign = SuperpositionSign::Plus;

    static InitialStateSpec single(std::int32_t site) { return {site, -1, SuperpositionSign::Plus}; }
    static InitialStateSpec superposition(std::int32_t a, std::int32_t b, SuperpositionSign s) {
        return {a, b, s};
    }
    bool is_superposition() const { return site_b >= 0; }
};

// Reference point for MSD: the site itself, or the A/B midpoint for
// superpositions.
lattice::Point2D reference_point(const InitialStateSpec& spec, const lattice::LatticeGraph& lat);

QuantumState prepare(const InitialStateSpec& spec, const lattice::LatticeGraph& lat);

// Spectral-sum evolution |Psi(t)> = sum_alpha <alpha|Psi(0)> e^{-i w t} |alpha>,
// evaluated for every requested time (times need not be sorted; negative
// times evolve backwards). Norm is preserved to 1e-8 at any t.
std::vector<QuantumState> evolve(const spectral::SpectralDecomposition& decomp,
                                 const QuantumState& psi0, const std::vector<double>& times);

std::vector<double> site_probabilities(const QuantumState& state);

// MSD = sum_j |r_j - r_ref|^2 p_j in units of a^2.
double msd(const QuantumState& state, const lattice::LatticeGraph& lat, lattice::Point2D r_ref);

// Total probability inside a site set.
double region_weight(const QuantumState& state, const std::vector<int>& region);

// Time grid paired with one observable, plus the metadata needed to label
// exported files.
struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::string observable;
    lattice::Point2D r_ref;
};

// n log-spaced points from t_min to t_max inclusive.
std::vector<double> log_time_grid(double t_min, double t_max, int n);

inline constexpr int kDefaultGridPoints = 400;

// One evolution pass producing several observables without materializing
// all states at once: MSD about r_ref, return probability at return_site
// (skipped when < 0), and the weight of each listed region.
struct EvolutionSeries {
    ObservableSeries msd;
    ObservableSeries return_prob;
    std::vector<ObservableSeries> region_weights;
};

EvolutionSeries evolve_series(const spectral::SpectralDecomposition& decomp,
                              const QuantumState& psi0, const std::vector<double>& times,
                              const lattice::LatticeGraph& lat, lattice::Point2D r_ref,
                              std::int32_t return_site,
                              const std::vector<std::vector<int>>& regions = {});

// Running time-average (1/(t-t0)) * integral of the series by trapezoid;
// first sample passes through unchanged.
ObservableSeries cesaro_average(const ObservableSeries& series);

// Text table `t value` (or `t mean std` when paired with a second series)
// under `#`-prefixed header lines supplied by the caller.
void write_series(std::ostream& out, const ObservableSeries& series,
                  const std::vector<std::pair<std::string, std::string>>& header);
void write_series(std::ostream& out, const ObservableSeries& mean, const ObservableSeries& std_dev,
                  const std::vector<std::pair<std::string, std::string>>& header);

}  // namespace qfrac::dynamics
