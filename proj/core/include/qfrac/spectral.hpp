#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qfrac/hamiltonian.hpp"

namespace qfrac::spectral {

// Full symmetric eigendecomposition. Eigenvalues ascend; eigenvectors are
// stored column-major (column alpha is contiguous) with the sign convention
// that the first component of magnitude > 1e-12 * max|v| is positive, which
// makes the decomposition deterministic up to degenerate-subspace rotations.
struct SpectralDecomposition {
    std::int32_t n = 0;
    std::vector<double> eigenvalues;
    std::vector<double> eigenvectors;  // n*n, column-major
    double worst_residual = 0.0;       // max_alpha ||H v - w v|| / ||H||

    const double* vec(std::int32_t alpha) const {
        return eigenvectors.data() + static_cast<std::size_t>(alpha) * n;
    }
};

// Dense eigendecomposition of the full spectrum (divide-and-conquer).
// Verifies the eigenpair residuals against the operator (1e-8 relative)
// and probes orthonormality with random vectors; violations raise
// NumericalError carrying the worst residual.
SpectralDecomposition eigendecompose(const hamiltonian::SymmetricOperator& op);

// Eigenvalues only; roughly 3x cheaper when no dynamics is needed.
std::vector<double> eigenvalues_only(const hamiltonian::SymmetricOperator& op);

// Degeneracy cut: gaps below 1e-12 * (spectral width) count as exact zeros.
double degeneracy_tolerance(const std::vector<double>& eigenvalues);

// Consecutive differences of an ascending spectrum. Differences below
// degeneracy_tol are recorded as exact 0 (degenerate pair); they stay in
// the returned list but are excluded from power-law fit samples.
std::vector<double> level_spacings(const std::vector<double>& eigenvalues,
                                   double degeneracy_tol);

// p_int(s) = (# gaps > s) / (# positive gaps) sampled on a log grid
// spanning [min positive gap, max gap]. Monotone non-increasing staircase
// with p_int -> 1 as s -> 0+.
struct Staircase {
    std::vector<double> s;
    std::vector<double> p_int;
    std::int64_t positive_gaps = 0;
    std::int64_t zero_gaps = 0;
};

inline constexpr int kStaircaseGridPoints = 400;

Staircase integrated_distribution(const std::vector<double>& gaps,
                                  int grid_points = kStaircaseGridPoints);

// Direct evaluation of p_int at a single s, by counting.
double integrated_at(const std::vector<double>& gaps, double s);

struct SpacingWindow {
    double s_lo = 0.0;
    double s_hi = 0.0;
};

struct BetaFit {
    double beta = 0.0;       // 1 - slope of log10 p_int vs log10 s
    double slope = 0.0;
    double residual = 0.0;   // RMS misfit in log10 p_int
    double slope_stderr = 0.0;
    int points = 0;
    SpacingWindow window;
};

// Least-squares fit of log10 p_int against log10 s over the window.
// Requires >= 10 staircase samples with p_int > 0 inside it.
BetaFit fit_beta(const Staircase& st, const SpacingWindow& window);

// Windows narrower than this (in decades of s) are not considered.
inline constexpr double kMinFitDecades = 2.0;
// A qualifying window must also cover at least this much decay of p_int
// (in decades); this excludes the flat small-s head of the staircase,
// where any spectrum looks like a perfect (zero-slope) power law.
inline constexpr double kMinDecayDecades = 1.0;
inline constexpr int kMinFitPoints = 10;
// Fits with RMS log10 residual above this are rejected as "no extended
// power-law regime" (devil's-staircase verdict for the regular lattices).
inline constexpr double kPowerLawResidualMax = 0.10;

// Scans all staircase windows spanning >= kMinFitDecades with >=
// kMinDecayDecades of decay and >= kMinFitPoints samples; returns the one
// with minimal fit residual, preferring the widest window among residuals
// within 20% of the best. Returns false if no window qualifies.
bool auto_fit_window(const Staircase& st, SpacingWindow& out);

struct LevelSpacingResult {
    std::vector<double> gaps;
    Staircase staircase;
    BetaFit fit;
    bool window_found = false;
    bool power_law = false;  // window found and residual <= kPowerLawResidualMax
};

// Convenience pipeline: tolerance -> gaps -> staircase -> auto window -> fit.
LevelSpacingResult level_spacing_analysis(const std::vector<double>& eigenvalues);

// Text exports: `alpha omega` per line, and `s p_int` per line.
void write_spectrum(std::ostream& out, const std::vector<double>& eigenvalues);
void write_staircase(std::ostream& out, const Staircase& st);

}  // namespace qfrac::spectral
