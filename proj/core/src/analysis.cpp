#include "qfrac/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "qfrac/ctrw.hpp"
#include "qfrac/hamiltonian.hpp"

namespace qfrac::analysis {

ReferenceDimensions reference_dimensions(lattice::LatticeKind kind) {
    switch (kind) {
        case lattice::LatticeKind::Gasket:
        case lattice::LatticeKind::Interpolating:
            return {std::log(3.0) / std::log(2.0), 2.0 * std::log(3.0) / std::log(5.0)};
        case lattice::LatticeKind::Carpet:
            // d_s has no closed form for the carpet; 1.805 is the accepted
            // numerical value.
            return {std::log(8.0) / std::log(3.0), 1.805};
        case lattice::LatticeKind::Triangular:
        case lattice::LatticeKind::Square:
            return {2.0, 2.0};
    }
    return {2.0, 2.0};
}

ExponentFit fit_alpha(const dynamics::ObservableSeries& series, const TimeWindow& window) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        const double t = series.times[k];
        if (t < window.t_lo || t > window.t_hi) continue;
        const double v = series.values[k];
        if (!(v > 0.0))
            throw std::invalid_argument("fit_alpha: nonpositive value inside fit window");
        x.push_back(std::log(t));
        y.push_back(std::log(v));
    }
    if (x.size() < 10)
        throw std::invalid_argument("fit_alpha: fewer than 10 samples inside fit window");

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
    ExponentFit fit;
    fit.alpha = sxy / sxx;
    fit.window = window;
    fit.points = static_cast<int>(n);
    double ssr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = y[k] - my - fit.alpha * (x[k] - mx);
        ssr += r * r;
    }
    fit.residual = std::sqrt(ssr / static_cast<double>(n));
    fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    return fit;
}

RegimeWindows default_windows(const lattice::LatticeGraph& lat) {
    const double d_f = reference_dimensions(lat.kind).fractal;
    const double T = std::pow(lat.side_length, d_f) / 4.0;
    RegimeWindows w;
    w.short_time = {0.1, 1.0};
    w.intermediate = {1.0, T};
    w.long_time = {T, 1e6};
    w.crossover_time = T;
    return w;
}

TimeWindow regular_fit_window(const lattice::LatticeGraph& lat) {
    return {1.0, lat.side_length / 2.0};
}

double thermal_msd(const lattice::LatticeGraph& lat, lattice::Point2D r_ref) {
    double cx = 0.0;
    double cy = 0.0;
    for (const lattice::Point2D& p : lat.sites) {
        cx += p.x;
        cy += p.y;
    }
    const double n = static_cast<double>(lat.site_count());
    const double dx = cx / n - r_ref.x;
    const double dy = cy / n - r_ref.y;
    return dx * dx + dy * dy;
}

std::pair<dynamics::ObservableSeries, dynamics::ObservableSeries> ensemble_msd(
    const lattice::LatticeGraph& lat, const spectral::SpectralDecomposition& decomp,
    const std::vector<int>& initial_sites, const std::vector<double>& times) {
    if (initial_sites.size() < 2)
        throw std::invalid_argument("ensemble_msd: need at least 2 initial sites");

    // Each member starts at its own site and is measured from it.
    std::vector<std::vector<double>> curves;
    curves.reserve(initial_sites.size());
    for (int site : initial_sites) {
        const auto spec = dynamics::InitialStateSpec::single(site);
        const dynamics::EvolutionSeries ev = dynamics::evolve_series(
            decomp, dynamics::prepare(spec, lat), times, lat,
            dynamics::reference_point(spec, lat), /*return_site=*/-1);
        curves.push_back(ev.msd.values);
    }

    dynamics::ObservableSeries mean, std_dev;
    mean.times = times;
    mean.values.resize(times.size());
    mean.observable = "msd_ensemble_mean";
    std_dev.times = times;
    std_dev.values.resize(times.size());
    std_dev.observable = "msd_ensemble_std";

    const double m = static_cast<double>(initial_sites.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        double mu = 0.0;
        for (const auto& c : curves) mu += c[k];
        mu /= m;
        double var = 0.0;
        for (const auto& c : curves) var += (c[k] - mu) * (c[k] - mu);
        mean.values[k] = mu;
        std_dev.values[k] = std::sqrt(var / m);
    }
    return {mean, std_dev};
}

GammaSweepResult gamma_sweep(int generation, const std::vector<double>& gammas,
                             const TimeWindow& window, const std::vector<double>& times) {
    if (gammas.empty()) throw std::invalid_argument("gamma_sweep: empty gamma list");
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        if (!(gammas[k] >= 0.0 && gammas[k] <= 1.0))
            throw std::invalid_argument("gamma_sweep: gamma outside [0, 1]");
        if (k > 0 && !(gammas[k] > gammas[k - 1]))
            throw std::invalid_argument("gamma_sweep: gammas must be strictly increasing");
    }

    GammaSweepResult result;
    result.gammas = gammas;
    const lattice::LatticeGraph lat = lattice::build_interpolating(generation);
    const int corner = lattice::corner_sites(lat).front();
    for (double gamma : gammas) {
        const auto op = hamiltonian::assemble_quantum(lat, {1.0, gamma});
        const auto decomp = spectral::eigendecompose(op);
        const auto spec = dynamics::InitialStateSpec::single(corner);
        dynamics::EvolutionSeries ev =
            dynamics::evolve_series(decomp, dynamics::prepare(spec, lat), times, lat,
                                    dynamics::reference_point(spec, lat), -1);
        result.fits.push_back(fit_alpha(ev.msd, window));
        result.series.push_back(std::move(ev.msd));
    }
    return result;
}

AlphaBetaReport alpha_beta_check(const ExponentFit& alpha_fit, const spectral::BetaFit& beta_fit,
                                 double d_f) {
    AlphaBetaReport report;
    report.alpha_measured = alpha_fit.alpha;
    report.beta = beta_fit.beta;
    report.alpha_predicted = 2.0 * (beta_fit.beta - 1.0) / d_f;
    report.deviation = std::abs(report.alpha_measured - report.alpha_predicted);
    const double sa = alpha_fit.slope_stderr;
    const double sb = 2.0 * beta_fit.slope_stderr / d_f;
    report.tolerance = 2.0 * std::sqrt(sa * sa + sb * sb);
    return report;
}

void write_fit_report(std::ostream& out, const std::string& label, const ExponentFit& fit) {
    char buf[64];
    out << "label = " << label << "\n";
    std::snprintf(buf, sizeof buf, "%.12g", fit.window.t_lo);
    out << "window.lo = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.12g", fit.window.t_hi);
    out << "window.hi = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.12g", fit.alpha);
    out << "alpha = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.12g", fit.residual);
    out << "residual = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.12g", fit.slope_stderr);
    out << "slope_stderr = " << buf << "\n";
    out << "points = " << fit.points << "\n";
}

void write_sweep(std::ostream& out, const GammaSweepResult& sweep) {
    char buf[96];
    out << "# columns = gamma alpha residual points\n";
    for (std::size_t k = 0; k < sweep.gammas.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g %.12g %.12g %d\n", sweep.gammas[k],
                      sweep.fits[k].alpha, sweep.fits[k].residual, sweep.fits[k].points);
        out << buf;
    }
}

}  // namespace qfrac::analysis
