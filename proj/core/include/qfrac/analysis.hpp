#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qfrac/dynamics.hpp"
#include "qfrac/lattice.hpp"
#include "qfrac/spectral.hpp"

namespace qfrac::analysis {

struct TimeWindow {
    double t_lo = 0.0;
    double t_hi = 0.0;
};

// Power-law fit MSD ~ t^alpha over one time window: least-squares slope in
// log-log space with uniform weights over the (log-spaced) samples.
struct ExponentFit {
    double alpha = 0.0;
    TimeWindow window;
    double residual = 0.0;      // RMS misfit of log MSD
    double slope_stderr = 0.0;  // OLS standard error of the slope
    int points = 0;
};

// The three transport regimes: ballistic spreading until tJ ~ 1, the
// anomalous intermediate regime until the traversal scale T = L^{d_f}/4,
// and the saturated long-time regime.
struct RegimeWindows {
    TimeWindow short_time;
    TimeWindow intermediate;
    TimeWindow long_time;
    double crossover_time = 0.0;  // T
};

// Published dimensions per lattice kind; regular lattices get d_f = d_s = 2.
struct ReferenceDimensions {
    double fractal = 2.0;   // d_f
    double spectral = 2.0;  // d_s
};

ReferenceDimensions reference_dimensions(lattice::LatticeKind kind);

// Requires >= 10 samples in the window, all with positive values.
ExponentFit fit_alpha(const dynamics::ObservableSeries& series, const TimeWindow& window);

// short = (0.1, 1), intermediate = (1, T), long = (T, 1e6), T = L^{d_f}/4.
RegimeWindows default_windows(const lattice::LatticeGraph& lat);

// Fit region for lattices that spread ballistically until they feel the
// boundary: (1, L/2), the traversal half-time.
TimeWindow regular_fit_window(const lattice::LatticeGraph& lat);

// Thermalized MSD: squared distance from r_ref to the lattice's centre of
// mass, i.e. where a fully spread (uniform) state would sit. From the corner
// of a triangle-shaped lattice of side L this is L^2/3. Note this is the
// displacement of the mean, not the mean squared displacement of the uniform
// distribution itself, which is larger (4L^2/9 on a gasket).
double thermal_msd(const lattice::LatticeGraph& lat, lattice::Point2D r_ref);

// Per-time mean and population standard deviation of single-site MSD over
// an ensemble of initial sites (each evolved from its own site, measured
// from its own position).
std::pair<dynamics::ObservableSeries, dynamics::ObservableSeries> ensemble_msd(
    const lattice::LatticeGraph& lat, const spectral::SpectralDecomposition& decomp,
    const std::vector<int>& initial_sites, const std::vector<double>& times);

struct GammaSweepResult {
    std::vector<double> gammas;
    std::vector<ExponentFit> fits;
    std::vector<dynamics::ObservableSeries> series;  // one MSD series per gamma
};

// For each gamma: interpolating lattice of the given generation, corner
// start, MSD on the time grid, exponent fit on the window.
GammaSweepResult gamma_sweep(int generation, const std::vector<double>& gammas,
                             const TimeWindow& window, const std::vector<double>& times);

// alpha = 2(beta - 1)/d_f consistency check. The tolerance combines both
// fits' slope standard errors (two-sigma).
struct AlphaBetaReport {
    double alpha_measured = 0.0;
    double beta = 0.0;
    double alpha_predicted = 0.0;
    double deviation = 0.0;
    double tolerance = 0.0;
};

AlphaBetaReport alpha_beta_check(const ExponentFit& alpha_fit, const spectral::BetaFit& beta_fit,
                                 double d_f);

// Structured text records: `key = value` lines for a fit, and a
// `gamma alpha residual` table for a sweep.
void write_fit_report(std::ostream& out, const std::string& label, const ExponentFit& fit);
void write_sweep(std::ostream& out, const GammaSweepResult& sweep);

}  // namespace qfrac::analysis
