#include "qfrac/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>

#include "lapack.hpp"

namespace qfrac::dynamics {

double QuantumState::norm() const {
    double s = 0.0;
    for (const std::complex<double>& a : amp) s += std::norm(a);
    return std::sqrt(s);
}

lattice::Point2D reference_point(const InitialStateSpec& spec, const lattice::LatticeGraph& lat) {
    const auto n = static_cast<std::int32_t>(lat.site_count());
    if (spec.site_a < 0 || spec.site_a >= n)
        throw std::invalid_argument("initial state: site index out of range");
    if (!spec.is_superposition()) return lat.sites[spec.site_a];
    if (spec.site_b >= n) throw std::invalid_argument("initial state: site index out of range");
    const lattice::Point2D a = lat.sites[spec.site_a];
    const lattice::Point2D b = lat.sites[spec.site_b];
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

QuantumState prepare(const InitialStateSpec& spec, const lattice::LatticeGraph& lat) {
    const auto n = static_cast<std::int32_t>(lat.site_count());
    if (spec.site_a < 0 || spec.site_a >= n)
        throw std::invalid_argument("prepare: site index out of range");
    QuantumState psi;
    psi.amp.assign(lat.site_count(), {0.0, 0.0});
    if (!spec.is_superposition()) {
        psi.amp[spec.site_a] = 1.0;
        return psi;
    }
    if (spec.site_b >= n) throw std::invalid_argument("prepare: site index out of range");
    if (spec.site_b == spec.site_a)
        throw std::invalid_argument("prepare: superposition sites coincide");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    psi.amp[spec.site_a] = inv_sqrt2;
    psi.amp[spec.site_b] = spec.sign == SuperpositionSign::Plus ? inv_sqrt2 : -inv_sqrt2;
    return psi;
}

namespace {

constexpr int kTimeChunk = 48;

// Spectral-sum evolution driver. Feeds the visitor the real and imaginary
// parts of |Psi(t_k)> for every requested time, computed chunk-wise as two
// dense multiplies: Psi = V * (coeff * phase(t)).
void evolve_chunks(const spectral::SpectralDecomposition& decomp, const QuantumState& psi0,
                   const std::vector<double>& times,
                   const std::function<void(std::size_t, const double*, const double*)>& visit) {
    const std::int32_t n = decomp.n;
    if (static_cast<std::int32_t>(psi0.size()) != n)
        throw std::invalid_argument("evolve: state dimension does not match decomposition");

    // c = V^T psi0, done separately on the real and imaginary parts.
    std::vector<double> x_re(n), x_im(n), c_re(n), c_im(n);
    for (std::int32_t i = 0; i < n; ++i) {
        x_re[i] = psi0.amp[i].real();
        x_im[i] = psi0.amp[i].imag();
    }
    const double one = 1.0, zero = 0.0;
    const int in = n, inc = 1;
    dgemv_("T", &in, &in, &one, decomp.eigenvectors.data(), &in, x_re.data(), &inc, &zero,
           c_re.data(), &inc);
    dgemv_("T", &in, &in, &one, decomp.eigenvectors.data(), &in, x_im.data(), &inc, &zero,
           c_im.data(), &inc);

    std::vector<double> b_re(static_cast<std::size_t>(n) * kTimeChunk);
    std::vector<double> b_im(static_cast<std::size_t>(n) * kTimeChunk);
    std::vector<double> psi_re(static_cast<std::size_t>(n) * kTimeChunk);
    std::vector<double> psi_im(static_cast<std::size_t>(n) * kTimeChunk);

    for (std::size_t base = 0; base < times.size(); base += kTimeChunk) {
        const int k = static_cast<int>(std::min<std::size_t>(kTimeChunk, times.size() - base));
        for (int t = 0; t < k; ++t) {
            const double tt = times[base + t];
            double* br = b_re.data() + static_cast<std::size_t>(t) * n;
            double* bi = b_im.data() + static_cast<std::size_t>(t) * n;
            for (std::int32_t a = 0; a < n; ++a) {
                // (c_re + i c_im) e^{-i w t}
                const double ph = decomp.eigenvalues[a] * tt;
                const double cs = std::cos(ph), sn = std::sin(ph);
                br[a] = c_re[a] * cs + c_im[a] * sn;
                bi[a] = c_im[a] * cs - c_re[a] * sn;
            }
        }
        dgemm_("N", "N", &in, &k, &in, &one, decomp.eigenvectors.data(), &in, b_re.data(), &in,
               &zero, psi_re.data(), &in);
        dgemm_("N", "N", &in, &k, &in, &one, decomp.eigenvectors.data(), &in, b_im.data(), &in,
               &zero, psi_im.data(), &in);
        for (int t = 0; t < k; ++t)
            visit(base + t, psi_re.data() + static_cast<std::size_t>(t) * n,
                  psi_im.data() + static_cast<std::size_t>(t) * n);
    }
}

}  // namespace

std::vector<QuantumState> evolve(const spectral::SpectralDecomposition& decomp,
                                 const QuantumState& psi0, const std::vector<double>& times) {
    std::vector<QuantumState> states(times.size());
    const std::int32_t n = decomp.n;
    evolve_chunks(decomp, psi0, times, [&](std::size_t k, const double* re, const double* im) {
        states[k].amp.resize(n);
        for (std::int32_t i = 0; i < n; ++i) states[k].amp[i] = {re[i], im[i]};
    });
    return states;
}

std::vector<double> site_probabilities(const QuantumState& state) {
    std::vector<double> p(state.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(state.amp[i]);
    return p;
}

double msd(const QuantumState& state, const lattice::LatticeGraph& lat, lattice::Point2D r_ref) {
    if (state.size() != lat.site_count())
        throw std::invalid_argument("msd: state dimension does not match lattice");
    double acc = 0.0;
    for (std::size_t j = 0; j < lat.site_count(); ++j) {
        const double dx = lat.sites[j].x - r_ref.x;
        const double dy = lat.sites[j].y - r_ref.y;
        acc += (dx * dx + dy * dy) * std::norm(state.amp[j]);
    }
    return acc;
}

double region_weight(const QuantumState& state, const std::vector<int>& region) {
    double acc = 0.0;
    for (int j : region) {
        if (j < 0 || static_cast<std::size_t>(j) >= state.size())
            throw std::invalid_argument("region_weight: site index out of range");
        acc += std::norm(state.amp[j]);
    }
    return acc;
}

std::vector<double> log_time_grid(double t_min, double t_max, int n) {
    if (!(t_min > 0.0) || !(t_max > t_min))
        throw std::invalid_argument("log_time_grid: need 0 < t_min < t_max");
    if (n < 2) throw std::invalid_argument("log_time_grid: need at least 2 points");
    std::vector<double> t(n);
    const double l0 = std::log10(t_min), l1 = std::log10(t_max);
    for (int k = 0; k < n; ++k) t[k] = std::pow(10.0, l0 + (l1 - l0) * k / (n - 1));
    return t;
}

EvolutionSeries evolve_series(const spectral::SpectralDecomposition& decomp,
                              const QuantumState& psi0, const std::vector<double>& times,
                              const lattice::LatticeGraph& lat, lattice::Point2D r_ref,
                              std::int32_t return_site,
                              const std::vector<std::vector<int>>& regions) {
    const std::int32_t n = decomp.n;
    if (lat.site_count() != static_cast<std::size_t>(n))
        throw std::invalid_argument("evolve_series: lattice does not match decomposition");
    if (return_site >= n)
        throw std::invalid_argument("evolve_series: return site out of range");
    for (const auto& region : regions)
        for (int j : region)
            if (j < 0 || j >= n)
                throw std::invalid_argument("evolve_series: region site out of range");

    std::vector<double> d2(n);
    for (std::int32_t j = 0; j < n; ++j) {
        const double dx = lat.sites[j].x - r_ref.x;
        const double dy = lat.sites[j].y - r_ref.y;
        d2[j] = dx * dx + dy * dy;
    }

    EvolutionSeries out;
    out.msd.times = times;
    out.msd.values.resize(times.size());
    out.msd.observable = "msd";
    out.msd.r_ref = r_ref;
    if (return_site >= 0) {
        out.return_prob.times = times;
        out.return_prob.values.resize(times.size());
        out.return_prob.observable = "return_probability";
        out.return_prob.r_ref = r_ref;
    }
    out.region_weights.resize(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
        out.region_weights[r].times = times;
        out.region_weights[r].values.resize(times.size());
        out.region_weights[r].observable = "region_weight";
        out.region_weights[r].r_ref = r_ref;
    }

    evolve_chunks(decomp, psi0, times, [&](std::size_t k, const double* re, const double* im) {
        double acc = 0.0;
        for (std::int32_t j = 0; j < n; ++j)
            acc += d2[j] * (re[j] * re[j] + im[j] * im[j]);
        out.msd.values[k] = acc;
        if (return_site >= 0)
            out.return_prob.values[k] =
                re[return_site] * re[return_site] + im[return_site] * im[return_site];
        for (std::size_t r = 0; r < regions.size(); ++r) {
            double w = 0.0;
            for (int j : regions[r]) w += re[j] * re[j] + im[j] * im[j];
            out.region_weights[r].values[k] = w;
        }
    });
    return out;
}

ObservableSeries cesaro_average(const ObservableSeries& series) {
    ObservableSeries out;
    out.times = series.times;
    out.values.resize(series.values.size());
    out.observable = series.observable + "_cesaro";
    out.r_ref = series.r_ref;
    if (series.values.empty()) return out;
    out.values[0] = series.values[0];
    double acc = 0.0;
    for (std::size_t k = 1; k < series.values.size(); ++k) {
        acc += 0.5 * (series.values[k] + series.values[k - 1]) *
               (series.times[k] - series.times[k - 1]);
        out.values[k] = acc / (series.times[k] - series.times[0]);
    }
    return out;
}

namespace {

void write_header(std::ostream& out,
                  const std::vector<std::pair<std::string, std::string>>& header) {
    for (const auto& [key, value] : header) out << "# " << key << " = " << value << "\n";
}

}  // namespace

void write_series(std::ostream& out, const ObservableSeries& series,
                  const std::vector<std::pair<std::string, std::string>>& header) {
    char buf[80];
    write_header(out, header);
    out << "# columns = t value\n";
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g %.12g\n", series.times[k], series.values[k]);
        out << buf;
    }
}

void write_series(std::ostream& out, const ObservableSeries& mean, const ObservableSeries& std_dev,
                  const std::vector<std::pair<std::string, std::string>>& header) {
    char buf[112];
    write_header(out, header);
    out << "# columns = t mean std\n";
    for (std::size_t k = 0; k < mean.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g %.12g %.12g\n", mean.times[k], mean.values[k],
                      std_dev.values[k]);
        out << buf;
    }
}

}  // namespace qfrac::dynamics
