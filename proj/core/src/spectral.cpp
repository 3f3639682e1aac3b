#include "qfrac/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "qfrac/errors.hpp"
#include "lapack.hpp"

namespace qfrac::spectral {

namespace {

// Runs dsyevd on a dense column-major copy of the operator. jobz is "V" or
// "N"; on success `a` holds the eigenvectors (for "V") and `w` the
// ascending eigenvalues.
void dense_eigh(std::vector<double>& a, std::vector<double>& w, std::int32_t n,
                const char* jobz) {
    w.assign(n, 0.0);
    int in = n, lda = n, info = 0;
    double work_query = 0.0;
    int iwork_query = 0;
    int lwork = -1, liwork = -1;
    dsyevd_(jobz, "L", &in, a.data(), &lda, w.data(), &work_query, &lwork, &iwork_query,
            &liwork, &info);
    if (info != 0)
        throw NumericalError("eigendecompose: workspace query failed (info=" +
                                 std::to_string(info) + ")",
                             std::numeric_limits<double>::infinity());
    lwork = static_cast<int>(work_query);
    liwork = iwork_query;
    std::vector<double> work(static_cast<std::size_t>(lwork));
    std::vector<int> iwork(static_cast<std::size_t>(liwork));
    dsyevd_(jobz, "L", &in, a.data(), &lda, w.data(), work.data(), &lwork, iwork.data(),
            &liwork, &info);
    if (info != 0)
        throw NumericalError("eigendecompose: dsyevd failed to converge (info=" +
                                 std::to_string(info) + ")",
                             std::numeric_limits<double>::infinity());
}

// Deterministic sign: first component of magnitude > 1e-12 * max|v| made
// positive.
void fix_signs(std::vector<double>& vecs, std::int32_t n) {
    for (std::int32_t alpha = 0; alpha < n; ++alpha) {
        double* v = vecs.data() + static_cast<std::size_t>(alpha) * n;
        double amax = 0.0;
        for (std::int32_t i = 0; i < n; ++i) amax = std::max(amax, std::abs(v[i]));
        const double cut = 1e-12 * amax;
        for (std::int32_t i = 0; i < n; ++i) {
            if (std::abs(v[i]) > cut) {
                if (v[i] < 0.0)
                    for (std::int32_t j = 0; j < n; ++j) v[j] = -v[j];
                break;
            }
        }
    }
}

// Residual and orthonormality verification. Per-pair residuals use the
// sparse operator; orthonormality is probed with a few random vectors
// through V V^T (full Gram matrices are cubic and pointless at this
// accuracy level).
double verify(const hamiltonian::SymmetricOperator& op, const SpectralDecomposition& d) {
    const std::int32_t n = d.n;
    double hnorm = 0.0;
    for (double w : d.eigenvalues) hnorm = std::max(hnorm, std::abs(w));
    if (hnorm == 0.0) hnorm = 1.0;

    double worst = 0.0;
    std::vector<double> hv(n);
    for (std::int32_t alpha = 0; alpha < n; ++alpha) {
        const double* v = d.vec(alpha);
        op.apply(v, hv.data());
        const double w = d.eigenvalues[alpha];
        double r2 = 0.0;
        for (std::int32_t i = 0; i < n; ++i) {
            const double r = hv[i] - w * v[i];
            r2 += r * r;
        }
        worst = std::max(worst, std::sqrt(r2) / hnorm);
    }
    if (worst > 1e-8)
        throw NumericalError("eigendecompose: eigenpair residual " + std::to_string(worst) +
                                 " exceeds 1e-8",
                             worst);

    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(n), c(n), y(n);
    const double one = 1.0, zero = 0.0;
    const int in = n, inc = 1;
    double worst_ortho = 0.0;
    for (int probe = 0; probe < 8; ++probe) {
        double norm2 = 0.0;
        for (std::int32_t i = 0; i < n; ++i) {
            x[i] = gauss(rng);
            norm2 += x[i] * x[i];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::int32_t i = 0; i < n; ++i) x[i] *= inv;
        dgemv_("T", &in, &in, &one, d.eigenvectors.data(), &in, x.data(), &inc, &zero,
               c.data(), &inc);
        dgemv_("N", &in, &in, &one, d.eigenvectors.data(), &in, c.data(), &inc, &zero,
               y.data(), &inc);
        double e2 = 0.0;
        for (std::int32_t i = 0; i < n; ++i) {
            const double e = y[i] - x[i];
            e2 += e * e;
        }
        worst_ortho = std::max(worst_ortho, std::sqrt(e2));
    }
    if (worst_ortho > 1e-8)
        throw NumericalError("eigendecompose: orthonormality defect " +
                                 std::to_string(worst_ortho) + " exceeds 1e-8",
                             worst_ortho);
    return std::max(worst, worst_ortho);
}

}  // namespace

SpectralDecomposition eigendecompose(const hamiltonian::SymmetricOperator& op) {
    if (op.n < 1) throw std::invalid_argument("eigendecompose: empty operator");
    SpectralDecomposition d;
    d.n = op.n;
    d.eigenvectors = op.to_dense();
    dense_eigh(d.eigenvectors, d.eigenvalues, op.n, "V");
    fix_signs(d.eigenvectors, op.n);
    d.worst_residual = verify(op, d);
    return d;
}

std::vector<double> eigenvalues_only(const hamiltonian::SymmetricOperator& op) {
    if (op.n < 1) throw std::invalid_argument("eigenvalues_only: empty operator");
    std::vector<double> a = op.to_dense();
    std::vector<double> w;
    dense_eigh(a, w, op.n, "N");
    return w;
}

double degeneracy_tolerance(const std::vector<double>& eigenvalues) {
    if (eigenvalues.size() < 2)
        throw std::invalid_argument("degeneracy_tolerance: need at least 2 eigenvalues");
    return 1e-12 * (eigenvalues.back() - eigenvalues.front());
}

std::vector<double> level_spacings(const std::vector<double>& eigenvalues,
                                   double degeneracy_tol) {
    if (eigenvalues.size() < 2)
        throw std::invalid_argument("level_spacings: need at least 2 eigenvalues");
    std::vector<double> gaps;
    gaps.reserve(eigenvalues.size() - 1);
    for (std::size_t k = 0; k + 1 < eigenvalues.size(); ++k) {
        const double g = eigenvalues[k + 1] - eigenvalues[k];
        if (g < 0.0)
            throw std::invalid_argument("level_spacings: eigenvalues not ascending");
        gaps.push_back(g < degeneracy_tol ? 0.0 : g);
    }
    return gaps;
}

double integrated_at(const std::vector<double>& gaps, double s) {
    std::int64_t above = 0, positive = 0;
    for (double g : gaps) {
        if (g > 0.0) ++positive;
        if (g > s) ++above;
    }
    if (positive == 0) throw std::invalid_argument("integrated_at: all gaps zero");
    return static_cast<double>(above) / static_cast<double>(positive);
}

Staircase integrated_distribution(const std::vector<double>& gaps, int grid_points) {
    if (grid_points < 2)
        throw std::invalid_argument("integrated_distribution: need at least 2 grid points");
    std::vector<double> pos;
    std::int64_t zeros = 0;
    for (double g : gaps) {
        if (g > 0.0)
            pos.push_back(g);
        else
            ++zeros;
    }
    if (pos.empty()) throw std::invalid_argument("integrated_distribution: all gaps zero");
    std::sort(pos.begin(), pos.end());

    Staircase st;
    st.positive_gaps = static_cast<std::int64_t>(pos.size());
    st.zero_gaps = zeros;
    st.s.resize(grid_points);
    st.p_int.resize(grid_points);
    const double l0 = std::log10(pos.front());
    const double l1 = std::log10(pos.back());
    const double n_pos = static_cast<double>(pos.size());
    for (int k = 0; k < grid_points; ++k) {
        const double s = std::pow(10.0, l0 + (l1 - l0) * k / (grid_points - 1));
        const auto it = std::upper_bound(pos.begin(), pos.end(), s);
        st.s[k] = s;
        st.p_int[k] = static_cast<double>(pos.end() - it) / n_pos;
    }
    return st;
}

namespace {

// OLS of y against x over [i, j] (inclusive) via prefix sums; returns
// {slope, intercept, rms, stderr}.
struct OlsSums {
    std::vector<double> x1, y1, xx, xy, yy;  // prefix sums, index k = first k points

    explicit OlsSums(const std::vector<double>& x, const std::vector<double>& y) {
        const std::size_t n = x.size();
        x1.assign(n + 1, 0.0);
        y1.assign(n + 1, 0.0);
        xx.assign(n + 1, 0.0);
        xy.assign(n + 1, 0.0);
        yy.assign(n + 1, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            x1[k + 1] = x1[k] + x[k];
            y1[k + 1] = y1[k] + y[k];
            xx[k + 1] = xx[k] + x[k] * x[k];
            xy[k + 1] = xy[k] + x[k] * y[k];
            yy[k + 1] = yy[k] + y[k] * y[k];
        }
    }

    // slope/rms over points [i, j] inclusive
    void fit(std::size_t i, std::size_t j, double& slope, double& rms) const {
        const double n = static_cast<double>(j - i + 1);
        const double sx = x1[j + 1] - x1[i];
        const double sy = y1[j + 1] - y1[i];
        const double sxx = xx[j + 1] - xx[i];
        const double sxy = xy[j + 1] - xy[i];
        const double syy = yy[j + 1] - yy[i];
        const double det = n * sxx - sx * sx;
        slope = (n * sxy - sx * sy) / det;
        const double intercept = (sy - slope * sx) / n;
        double ssr = syy - 2.0 * slope * sxy - 2.0 * intercept * sy + slope * slope * sxx +
                     2.0 * slope * intercept * sx + n * intercept * intercept;
        rms = std::sqrt(std::max(ssr, 0.0) / n);
    }
};

}  // namespace

BetaFit fit_beta(const Staircase& st, const SpacingWindow& window) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < st.s.size(); ++k) {
        if (st.s[k] < window.s_lo || st.s[k] > window.s_hi || st.p_int[k] <= 0.0) continue;
        x.push_back(std::log10(st.s[k]));
        y.push_back(std::log10(st.p_int[k]));
    }
    if (x.size() < static_cast<std::size_t>(kMinFitPoints))
        throw std::invalid_argument("fit_beta: fewer than " + std::to_string(kMinFitPoints) +
                                    " staircase samples in window");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    BetaFit fit;
    fit.slope = sxy / sxx;
    fit.beta = 1.0 - fit.slope;
    fit.points = static_cast<int>(n);
    fit.window = window;
    double ssr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = y[k] - my - fit.slope * (x[k] - mx);
        ssr += r * r;
    }
    fit.residual = std::sqrt(ssr / static_cast<double>(n));
    fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    return fit;
}

bool auto_fit_window(const Staircase& st, SpacingWindow& out) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < st.s.size(); ++k) {
        if (st.p_int[k] <= 0.0) continue;
        lx.push_back(std::log10(st.s[k]));
        ly.push_back(std::log10(st.p_int[k]));
    }
    const std::size_t n = lx.size();
    if (n < static_cast<std::size_t>(kMinFitPoints)) return false;
    const OlsSums sums(lx, ly);

    // Pass 1: the smallest residual over qualifying windows.
    double best_rms = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + kMinFitPoints - 1 < n; ++i) {
        for (std::size_t j = i + kMinFitPoints - 1; j < n; ++j) {
            if (lx[j] - lx[i] < kMinFitDecades) continue;
            if (ly[i] - ly[j] < kMinDecayDecades) continue;
            double slope, rms;
            sums.fit(i, j, slope, rms);
            best_rms = std::min(best_rms, rms);
        }
    }
    if (!std::isfinite(best_rms)) return false;

    // Pass 2: the widest window among near-ties, then the smallest residual,
    // then the leftmost start. Fully deterministic.
    const double cut = best_rms * 1.2 + 1e-12;
    double sel_span = -1.0, sel_rms = 0.0;
    std::size_t sel_i = 0, sel_j = 0;
    for (std::size_t i = 0; i + kMinFitPoints - 1 < n; ++i) {
        for (std::size_t j = i + kMinFitPoints - 1; j < n; ++j) {
            const double span = lx[j] - lx[i];
            if (span < kMinFitDecades) continue;
            if (ly[i] - ly[j] < kMinDecayDecades) continue;
            double slope, rms;
            sums.fit(i, j, slope, rms);
            if (rms > cut) continue;
            const bool better = span > sel_span || (span == sel_span && rms < sel_rms);
            if (better) {
                sel_span = span;
                sel_rms = rms;
                sel_i = i;
                sel_j = j;
            }
        }
    }
    out.s_lo = std::pow(10.0, lx[sel_i]);
    out.s_hi = std::pow(10.0, lx[sel_j]);
    // Nudge the bounds so the grid points at the ends stay inside the
    // window under round-tripping through log10.
    out.s_lo *= 1.0 - 1e-12;
    out.s_hi *= 1.0 + 1e-12;
    return true;
}

LevelSpacingResult level_spacing_analysis(const std::vector<double>& eigenvalues) {
    LevelSpacingResult result;
    result.gaps = level_spacings(eigenvalues, degeneracy_tolerance(eigenvalues));
    result.staircase = integrated_distribution(result.gaps);
    SpacingWindow window;
    result.window_found = auto_fit_window(result.staircase, window);
    if (result.window_found) {
        result.fit = fit_beta(result.staircase, window);
        result.power_law = result.fit.residual <= kPowerLawResidualMax;
    }
    return result;
}

void write_spectrum(std::ostream& out, const std::vector<double>& eigenvalues) {
    char buf[64];
    out << "# columns = alpha omega\n";
    for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu %.12g\n", k, eigenvalues[k]);
        out << buf;
    }
}

void write_staircase(std::ostream& out, const Staircase& st) {
    char buf[80];
    out << "# positive_gaps = " << st.positive_gaps << "\n";
    out << "# zero_gaps = " << st.zero_gaps << "\n";
    out << "# columns = s p_int\n";
    for (std::size_t k = 0; k < st.s.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g %.12g\n", st.s[k], st.p_int[k]);
        out << buf;
    }
}

}  // namespace qfrac::spectral
