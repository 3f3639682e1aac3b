#include "qfrac/ctrw.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "qfrac/errors.hpp"
#include "lapack.hpp"

namespace qfrac::ctrw {

double ClassicalDistribution::sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

namespace {

constexpr int kTimeChunk = 48;

// Heat-kernel driver: p(t) = V diag(e^{-w t}) V^T e_start, chunked over
// times. Validates the generator spectrum, clips roundoff negatives and
// checks probability conservation per the distribution contract.
void propagate_chunks(const spectral::SpectralDecomposition& decomp, std::int32_t start,
                      const std::vector<double>& times,
                      const std::function<void(std::size_t, const double*)>& visit) {
    const std::int32_t n = decomp.n;
    if (start < 0 || start >= n)
        throw std::invalid_argument("ctrw_propagate: start site out of range");
    if (!decomp.eigenvalues.empty() && decomp.eigenvalues.front() < -1e-8)
        throw std::invalid_argument(
            "ctrw_propagate: operator has negative eigenvalues; not a CTRW generator");

    // c_alpha = <alpha|e_start> is the start-th row of V.
    std::vector<double> c(n);
    for (std::int32_t a = 0; a < n; ++a)
        c[a] = decomp.eigenvectors[static_cast<std::size_t>(a) * n + start];

    // The ones vector is an exact kernel of the generator, but the solver
    // resolves its eigenvalue only to roundoff; e^{-w t} amplifies that
    // noise without bound (a -1e-14 kernel mode inflates probability by
    // 1e-8 at t = 1e6 and breaks return-probability monotonicity). Snap
    // eigenvalues within solver precision of zero back onto the kernel;
    // the slowest genuine mode sits orders of magnitude above this.
    std::vector<double> w = decomp.eigenvalues;
    if (!w.empty()) {
        const double tol = 1e-12 * std::max(std::abs(w.front()), std::abs(w.back()));
        for (double& v : w)
            if (std::abs(v) <= tol) v = 0.0;
    }

    std::vector<double> b(static_cast<std::size_t>(n) * kTimeChunk);
    std::vector<double> p(static_cast<std::size_t>(n) * kTimeChunk);
    const double one = 1.0, zero = 0.0;
    const int in = n;

    for (std::size_t base = 0; base < times.size(); base += kTimeChunk) {
        const int k = static_cast<int>(std::min<std::size_t>(kTimeChunk, times.size() - base));
        for (int t = 0; t < k; ++t) {
            const double tt = times[base + t];
            double* bt = b.data() + static_cast<std::size_t>(t) * n;
            for (std::int32_t a = 0; a < n; ++a) bt[a] = c[a] * std::exp(-w[a] * tt);
        }
        dgemm_("N", "N", &in, &k, &in, &one, decomp.eigenvectors.data(), &in, b.data(), &in,
               &zero, p.data(), &in);
        for (int t = 0; t < k; ++t) {
            double* pt = p.data() + static_cast<std::size_t>(t) * n;
            double sum = 0.0;
            for (std::int32_t j = 0; j < n; ++j) {
                if (pt[j] < 0.0) {
                    if (pt[j] < -1e-10)
                        throw NumericalError(
                            "ctrw_propagate: negative probability beyond clip threshold",
                            -pt[j]);
                    pt[j] = 0.0;
                }
                sum += pt[j];
            }
            if (std::abs(sum - 1.0) > 1e-8)
                throw NumericalError("ctrw_propagate: probability sum drifted from 1",
                                     std::abs(sum - 1.0));
            visit(base + t, pt);
        }
    }
}

}  // namespace

std::vector<ClassicalDistribution> ctrw_propagate(const spectral::SpectralDecomposition& decomp,
                                                  std::int32_t start,
                                                  const std::vector<double>& times) {
    std::vector<ClassicalDistribution> dists(times.size());
    const std::int32_t n = decomp.n;
    propagate_chunks(decomp, start, times, [&](std::size_t k, const double* p) {
        dists[k].p.assign(p, p + n);
    });
    return dists;
}

double classical_msd(const ClassicalDistribution& dist, const lattice::LatticeGraph& lat,
                     lattice::Point2D r_ref) {
    if (dist.size() != lat.site_count())
        throw std::invalid_argument("classical_msd: distribution does not match lattice");
    double acc = 0.0;
    for (std::size_t j = 0; j < lat.site_count(); ++j) {
        const double dx = lat.sites[j].x - r_ref.x;
        const double dy = lat.sites[j].y - r_ref.y;
        acc += (dx * dx + dy * dy) * dist.p[j];
    }
    return acc;
}

CtrwSeries ctrw_series(const spectral::SpectralDecomposition& decomp, std::int32_t start,
                       const std::vector<double>& times, const lattice::LatticeGraph& lat) {
    const std::int32_t n = decomp.n;
    if (lat.site_count() != static_cast<std::size_t>(n))
        throw std::invalid_argument("ctrw_series: lattice does not match decomposition");
    if (start < 0 || start >= n)
        throw std::invalid_argument("ctrw_series: start site out of range");

    const lattice::Point2D r_ref = lat.sites[start];
    std::vector<double> d2(n);
    for (std::int32_t j = 0; j < n; ++j) {
        const double dx = lat.sites[j].x - r_ref.x;
        const double dy = lat.sites[j].y - r_ref.y;
        d2[j] = dx * dx + dy * dy;
    }

    CtrwSeries out;
    out.msd.times = times;
    out.msd.values.resize(times.size());
    out.msd.observable = "classical_msd";
    out.msd.r_ref = r_ref;
    out.return_prob.times = times;
    out.return_prob.values.resize(times.size());
    out.return_prob.observable = "classical_return";
    out.return_prob.r_ref = r_ref;

    propagate_chunks(decomp, start, times, [&](std::size_t k, const double* p) {
        double acc = 0.0;
        for (std::int32_t j = 0; j < n; ++j) acc += d2[j] * p[j];
        out.msd.values[k] = acc;
        out.return_prob.values[k] = p[start];
    });
    return out;
}

}  // namespace qfrac::ctrw
