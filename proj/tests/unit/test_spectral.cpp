#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qfrac/hamiltonian.hpp"
#include "qfrac/lattice.hpp"
#include "qfrac/spectral.hpp"

using namespace qfrac::spectral;
using qfrac::hamiltonian::SymmetricOperator;
using qfrac::hamiltonian::assemble_quantum;
using qfrac::lattice::build_gasket;
using qfrac::lattice::build_interpolating;
using qfrac::lattice::build_triangular;

namespace {

// Independent eigenvalue solver used as an oracle: Householder reduction
// to tridiagonal form followed by Sturm-sequence bisection.  Shares no
// code with the LAPACK path under test.

// Classic tred2 recurrence without eigenvector accumulation; `a` is the
// dense symmetric matrix (n x n, layout irrelevant by symmetry) and is
// destroyed.  On return d holds the diagonal and e[1..n-1] the
// subdiagonal of the tridiagonal form.
void householder_tridiagonalize(std::vector<double>& a, int n, std::vector<double>& d,
                                std::vector<double>& e) {
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    for (int i = n - 1; i >= 1; --i) {
        const int l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (int k = 0; k <= l; ++k) scale += std::fabs(a[i * n + k]);
            if (scale == 0.0) {
                e[i] = a[i * n + l];
            } else {
                for (int k = 0; k <= l; ++k) {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                double f = a[i * n + l];
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    g = 0.0;
                    for (int k = 0; k <= j; ++k) g += a[j * n + k] * a[i * n + k];
                    for (int k = j + 1; k <= l; ++k) g += a[k * n + j] * a[i * n + k];
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = a[i * n + j];
                    g = e[j] - hh * f;
                    e[j] = g;
                    for (int k = 0; k <= j; ++k)
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    for (int i = 0; i < n; ++i) d[i] = a[i * n + i];
    e[0] = 0.0;
}

// Number of eigenvalues of the tridiagonal matrix strictly below x,
// from the signs of the LDL^T pivots.
int eigen_count_below(const std::vector<double>& d, const std::vector<double>& e, double x) {
    int count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double off2 = i == 0 ? 0.0 : e[i] * e[i];
        const double denom = std::fabs(q) < 1e-300 ? (q < 0.0 ? -1e-300 : 1e-300) : q;
        q = (d[i] - x) - off2 / denom;
        if (q < 0.0) ++count;
    }
    return count;
}

std::vector<double> sturm_eigenvalues(const SymmetricOperator& op) {
    const int n = op.n;
    std::vector<double> a = op.to_dense();
    std::vector<double> d, e;
    householder_tridiagonalize(a, n, d, e);

    // Gershgorin bounds for the tridiagonal form.
    double lo = d[0], hi = d[0];
    for (int i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::fabs(e[i]) : 0.0) + (i + 1 < n ? std::fabs(e[i + 1]) : 0.0);
        lo = std::min(lo, d[i] - r);
        hi = std::max(hi, d[i] + r);
    }
    const double span = hi - lo;

    std::vector<double> w(n);
    for (int k = 0; k < n; ++k) {
        double a_lo = lo, a_hi = hi;
        while (a_hi - a_lo > 1e-14 * span) {
            const double mid = 0.5 * (a_lo + a_hi);
            if (eigen_count_below(d, e, mid) > k)
                a_hi = mid;
            else
                a_lo = mid;
        }
        w[k] = 0.5 * (a_lo + a_hi);
    }
    return w;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace

TEST_CASE("complete graph on three sites has spectrum {-2J, J, J}") {
    const auto H = assemble_quantum(build_triangular(2), {1.5, 1.0});
    const auto decomp = eigendecompose(H);
    REQUIRE(decomp.n == 3);
    CHECK(decomp.eigenvalues[0] == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(decomp.eigenvalues[1] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(decomp.eigenvalues[2] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(decomp.worst_residual <= 1e-8);
}

TEST_CASE("gasket eigenvalues match an independent Sturm bisection solver") {
    const auto H = assemble_quantum(build_gasket(3), {1.0, 1.0});
    const auto decomp = eigendecompose(H);
    const std::vector<double> oracle = sturm_eigenvalues(H);
    REQUIRE(oracle.size() == decomp.eigenvalues.size());
    const double tol = 1e-8 * max_abs(oracle);
    for (std::size_t k = 0; k < oracle.size(); ++k)
        CHECK(std::fabs(decomp.eigenvalues[k] - oracle[k]) <= tol);
    CHECK(std::is_sorted(decomp.eigenvalues.begin(), decomp.eigenvalues.end()));
}

TEST_CASE("mixed-coupling eigenvalues match the Sturm oracle") {
    const auto H = assemble_quantum(build_interpolating(2), {1.0, 0.25});
    const auto decomp = eigendecompose(H);
    const std::vector<double> oracle = sturm_eigenvalues(H);
    const double tol = 1e-8 * max_abs(oracle);
    for (std::size_t k = 0; k < oracle.size(); ++k)
        CHECK(std::fabs(decomp.eigenvalues[k] - oracle[k]) <= tol);
}

TEST_CASE("eigenvalues_only agrees with the full decomposition") {
    const auto H = assemble_quantum(build_gasket(2), {1.0, 1.0});
    const auto full = eigendecompose(H);
    const auto vals = eigenvalues_only(H);
    REQUIRE(vals.size() == full.eigenvalues.size());
    for (std::size_t k = 0; k < vals.size(); ++k)
        CHECK(std::fabs(vals[k] - full.eigenvalues[k]) <= 1e-12 * (1.0 + std::fabs(vals[k])));
}

TEST_CASE("eigenvector columns use the first-positive sign convention") {
    const auto H = assemble_quantum(build_gasket(2), {1.0, 1.0});
    const auto decomp = eigendecompose(H);
    for (std::int32_t alpha = 0; alpha < decomp.n; ++alpha) {
        const double* v = decomp.vec(alpha);
        double lead = 0.0;
        for (std::int32_t i = 0; i < decomp.n; ++i) {
            if (std::fabs(v[i]) > 1e-12) {
                lead = v[i];
                break;
            }
        }
        CHECK(lead > 0.0);
    }
}

TEST_CASE("level spacings classify degenerate and distinct gaps") {
    const std::vector<double> evals = {0.0, 0.0, 0.0, 1.0, 1.0, 2.0};
    const double tol = degeneracy_tolerance(evals);
    CHECK(tol == doctest::Approx(2e-12).epsilon(1e-9));
    const auto gaps = level_spacings(evals, tol);
    REQUIRE(gaps.size() == 5);
    CHECK(gaps[0] == 0.0);
    CHECK(gaps[1] == 0.0);
    CHECK(gaps[2] == 1.0);
    CHECK(gaps[3] == 0.0);
    CHECK(gaps[4] == 1.0);
}

TEST_CASE("near-degenerate gaps below the tolerance snap to exact zero") {
    // Spectral width 2 gives tol = 2e-12; the 1e-13 gap sits below it.
    const std::vector<double> evals = {0.0, 1e-13, 2.0};
    const auto gaps = level_spacings(evals, degeneracy_tolerance(evals));
    CHECK(gaps[0] == 0.0);
    CHECK(gaps[1] > 1.0);
}

TEST_CASE("spacing helpers reject malformed inputs") {
    CHECK_THROWS_AS(degeneracy_tolerance({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(level_spacings({2.0, 1.0}, 1e-12), std::invalid_argument);
    CHECK_THROWS_AS(integrated_at({0.0, 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(integrated_distribution({0.0}), std::invalid_argument);
    CHECK_THROWS_AS(integrated_distribution({1.0, 2.0}, 1), std::invalid_argument);
}

TEST_CASE("integrated distribution is the survival fraction of spacings") {
    const std::vector<double> gaps = {1.0, 2.0, 4.0, 8.0};
    CHECK(integrated_at(gaps, 0.5) == doctest::Approx(1.0));
    CHECK(integrated_at(gaps, 1.0) == doctest::Approx(0.75));
    CHECK(integrated_at(gaps, 3.0) == doctest::Approx(0.5));
    CHECK(integrated_at(gaps, 4.0) == doctest::Approx(0.25));
    CHECK(integrated_at(gaps, 8.0) == doctest::Approx(0.0));

    // Zero gaps widen the staircase normalisation but not the counts.
    const std::vector<double> with_zeros = {0.0, 0.0, 1.0, 2.0, 4.0, 8.0};
    CHECK(integrated_at(with_zeros, 3.0) == doctest::Approx(0.5));

    const Staircase st = integrated_distribution(gaps, 50);
    REQUIRE(st.s.size() == 50);
    CHECK(st.positive_gaps == 4);
    CHECK(st.zero_gaps == 0);
    CHECK(st.s.front() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(st.s.back() == doctest::Approx(8.0).epsilon(1e-9));
    for (std::size_t k = 0; k < st.s.size(); ++k)
        CHECK(st.p_int[k] == doctest::Approx(integrated_at(gaps, st.s[k])));
}

TEST_CASE("fit_beta recovers an exact power law") {
    // p_int = (s / 10)^-0.6 sampled on a log grid: slope -0.6, beta 1.6.
    Staircase st;
    const int n = 200;
    for (int k = 0; k < n; ++k) {
        const double s = std::pow(10.0, -3.0 + 4.0 * k / (n - 1));
        st.s.push_back(s);
        st.p_int.push_back(std::pow(s / 10.0, -0.6));
    }
    st.positive_gaps = n;
    const auto fit = fit_beta(st, {0.9e-3, 11.0});
    CHECK(fit.points == n);
    CHECK(fit.slope == doctest::Approx(-0.6).epsilon(1e-9));
    CHECK(fit.beta == doctest::Approx(1.6).epsilon(1e-9));
    CHECK(fit.residual <= 1e-9);
    CHECK(fit.slope_stderr <= 1e-9);

    // A window holding fewer than the minimum sample count is rejected.
    CHECK_THROWS_AS(fit_beta(st, {1e-3, 1.2e-3}), std::invalid_argument);
}

TEST_CASE("automatic window skips a flat head and fits the decaying tail") {
    // Half the spacings cluster around 1e-6, the rest follow a Pareto
    // tail with exponent 0.7 starting at 1e-2.  The integrated
    // distribution is then flat at 0.5 for four decades before decaying;
    // the window search must reject the flat stretch (no decay) and fit
    // the tail, where p_int ~ 0.5 (s / 1e-2)^-0.7.
    std::vector<double> gaps;
    const int half = 500;
    for (int k = 0; k < half; ++k) gaps.push_back(1e-6 * (1.0 + static_cast<double>(k) / half));
    for (int k = 1; k <= half; ++k)
        gaps.push_back(1e-2 * std::pow(static_cast<double>(k) / half, -1.0 / 0.7));

    const Staircase st = integrated_distribution(gaps);
    SpacingWindow window;
    REQUIRE(auto_fit_window(st, window));
    CHECK(window.s_lo >= 2e-3);

    const auto fit = fit_beta(st, window);
    CHECK(fit.beta == doctest::Approx(1.7).epsilon(0.05));
    CHECK(fit.residual <= kPowerLawResidualMax);
}

TEST_CASE("window search reports failure when no stretch decays") {
    // All spacings equal: p_int drops from 1 to 0 in a single step, so
    // no window can satisfy the span and decay requirements.
    Staircase st;
    for (int k = 0; k < 100; ++k) {
        st.s.push_back(std::pow(10.0, -2.0 + 4.0 * k / 99.0));
        st.p_int.push_back(1.0);
    }
    st.positive_gaps = 100;
    SpacingWindow window;
    CHECK_FALSE(auto_fit_window(st, window));
}

TEST_CASE("level spacing analysis is invariant under spectral shift and scale") {
    const auto H = assemble_quantum(build_gasket(4), {1.0, 1.0});
    const auto evals = eigenvalues_only(H);

    const auto base = level_spacing_analysis(evals);
    REQUIRE(base.window_found);
    CHECK(base.staircase.positive_gaps + base.staircase.zero_gaps ==
          static_cast<std::int64_t>(evals.size()) - 1);

    // Gaps survive a shift up to rounding of the shifted eigenvalues and
    // a rescale exactly, so the fit must reproduce; the tolerances leave
    // room for staircase grid points landing a few ulp to either side of
    // a spacing.
    std::vector<double> shifted = evals;
    for (double& w : shifted) w += 7.25;
    const auto sh = level_spacing_analysis(shifted);
    CHECK(sh.fit.beta == doctest::Approx(base.fit.beta).epsilon(1e-6));
    CHECK(sh.staircase.zero_gaps == base.staircase.zero_gaps);
    CHECK(sh.staircase.positive_gaps == base.staircase.positive_gaps);

    std::vector<double> scaled = evals;
    for (double& w : scaled) w *= 3.0;
    const auto sc = level_spacing_analysis(scaled);
    CHECK(sc.fit.beta == doctest::Approx(base.fit.beta).epsilon(1e-3));
    CHECK(sc.fit.window.s_lo == doctest::Approx(3.0 * base.fit.window.s_lo).epsilon(1e-3));
}

TEST_CASE("level spacing analysis on a mid-size gasket finds a window") {
    const auto H = assemble_quantum(build_gasket(4), {1.0, 1.0});
    const auto result = level_spacing_analysis(eigenvalues_only(H));
    REQUIRE(result.window_found);
    CHECK(result.fit.points >= kMinFitPoints);
    CHECK(result.fit.beta > 1.0);
    CHECK(result.staircase.zero_gaps > 0);  // fractal spectra are highly degenerate
}
