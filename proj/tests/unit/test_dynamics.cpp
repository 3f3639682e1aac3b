#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qfrac/dynamics.hpp"
#include "qfrac/hamiltonian.hpp"
#include "qfrac/lattice.hpp"
#include "qfrac/spectral.hpp"

using namespace qfrac::dynamics;
using qfrac::hamiltonian::assemble_quantum;
using qfrac::lattice::LatticeGraph;
using qfrac::lattice::build_gasket;
using qfrac::spectral::eigendecompose;

namespace {

LatticeGraph two_site_chain() {
    LatticeGraph lat;
    lat.kind = qfrac::lattice::LatticeKind::Square;
    lat.side_length = 1;
    lat.sites = {{0.0, 0.0}, {1.0, 0.0}};
    lat.grid_coords = {{0, 0}, {0, 1}};
    lat.edges = {{0, 1, qfrac::lattice::CouplingClass::Fractal}};
    return lat;
}

// Fixed-step RK4 integration of d psi / dt = -i H psi with the
// Hamiltonian assembled directly from the edge list; an oracle for the
// spectral-sum propagator that shares none of its machinery.
std::vector<std::complex<double>> rk4_evolve(const LatticeGraph& lat,
                                             std::vector<std::complex<double>> psi, double t_final,
                                             double dt) {
    const std::size_t n = psi.size();
    std::vector<double> h(n * n, 0.0);
    for (const auto& ed : lat.edges) {
        h[static_cast<std::size_t>(ed.i) * n + ed.j] = -1.0;
        h[static_cast<std::size_t>(ed.j) * n + ed.i] = -1.0;
    }
    const std::complex<double> minus_i(0.0, -1.0);
    auto deriv = [&](const std::vector<std::complex<double>>& x,
                     std::vector<std::complex<double>>& out) {
        for (std::size_t r = 0; r < n; ++r) {
            std::complex<double> acc = 0.0;
            for (std::size_t c = 0; c < n; ++c) acc += h[r * n + c] * x[c];
            out[r] = minus_i * acc;
        }
    };

    std::vector<std::complex<double>> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const auto steps = static_cast<long>(std::llround(t_final / dt));
    for (long step = 0; step < steps; ++step) {
        deriv(psi, k1);
        for (std::size_t r = 0; r < n; ++r) tmp[r] = psi[r] + 0.5 * dt * k1[r];
        deriv(tmp, k2);
        for (std::size_t r = 0; r < n; ++r) tmp[r] = psi[r] + 0.5 * dt * k2[r];
        deriv(tmp, k3);
        for (std::size_t r = 0; r < n; ++r) tmp[r] = psi[r] + dt * k3[r];
        deriv(tmp, k4);
        for (std::size_t r = 0; r < n; ++r)
            psi[r] += dt / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
    }
    return psi;
}

}  // namespace

TEST_CASE("two-site evolution is the textbook Rabi oscillation") {
    const auto lat = two_site_chain();
    const auto decomp = eigendecompose(assemble_quantum(lat, {1.0, 1.0}));
    const auto psi0 = prepare(InitialStateSpec::single(0), lat);

    const std::vector<double> times = {0.0, 0.3, 1.7, 4.0};
    const auto states = evolve(decomp, psi0, times);
    REQUIRE(states.size() == times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        // H = -J sigma_x, so exp(-iHt)|0> = cos(t)|0> + i sin(t)|1>.
        CHECK(std::abs(states[k].amp[0] - std::complex<double>(std::cos(t), 0.0)) <= 1e-10);
        CHECK(std::abs(states[k].amp[1] - std::complex<double>(0.0, std::sin(t))) <= 1e-10);
        CHECK(states[k].norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("prepare builds normalized single-site and superposition states") {
    const auto lat = build_gasket(2);
    const auto single = prepare(InitialStateSpec::single(3), lat);
    CHECK(single.amp[3] == std::complex<double>(1.0, 0.0));
    CHECK(single.norm() == doctest::Approx(1.0));

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const auto plus = prepare(InitialStateSpec::superposition(0, 1, SuperpositionSign::Plus), lat);
    CHECK(plus.amp[0].real() == doctest::Approx(inv_sqrt2));
    CHECK(plus.amp[1].real() == doctest::Approx(inv_sqrt2));

    const auto minus =
        prepare(InitialStateSpec::superposition(0, 1, SuperpositionSign::Minus), lat);
    CHECK(minus.amp[1].real() == doctest::Approx(-inv_sqrt2));
    CHECK(minus.norm() == doctest::Approx(1.0));

    CHECK_THROWS_AS(prepare(InitialStateSpec::superposition(2, 2, SuperpositionSign::Plus), lat),
                    std::invalid_argument);
    CHECK_THROWS_AS(prepare(InitialStateSpec::single(-1), lat), std::invalid_argument);
    CHECK_THROWS_AS(prepare(InitialStateSpec::single(10000), lat), std::invalid_argument);
}

TEST_CASE("reference point is the site or the superposition midpoint") {
    const auto lat = build_gasket(1);
    const auto corners = qfrac::lattice::corner_sites(lat);
    REQUIRE(corners.size() == 3);

    const auto spec_a = InitialStateSpec::single(corners[0]);
    const auto p = reference_point(spec_a, lat);
    CHECK(p.x == lat.sites[corners[0]].x);
    CHECK(p.y == lat.sites[corners[0]].y);

    const auto spec_ab =
        InitialStateSpec::superposition(corners[0], corners[1], SuperpositionSign::Plus);
    const auto mid = reference_point(spec_ab, lat);
    CHECK(mid.x ==
          doctest::Approx(0.5 * (lat.sites[corners[0]].x + lat.sites[corners[1]].x)));
    CHECK(mid.y ==
          doctest::Approx(0.5 * (lat.sites[corners[0]].y + lat.sites[corners[1]].y)));
}

TEST_CASE("evolution is unitary out to very long times") {
    const auto lat = build_gasket(4);
    const auto decomp = eigendecompose(assemble_quantum(lat, {1.0, 1.0}));
    const auto psi0 = prepare(InitialStateSpec::single(0), lat);
    const auto states = evolve(decomp, psi0, {1.0, 1e3, 1e6});
    for (const auto& st : states) CHECK(std::fabs(st.norm() - 1.0) <= 1e-8);
}

TEST_CASE("energy expectation is conserved along the evolution") {
    const auto lat = build_gasket(3);
    const auto H = assemble_quantum(lat, {1.0, 1.0});
    const auto decomp = eigendecompose(H);
    const auto psi0 =
        prepare(InitialStateSpec::superposition(0, 1, SuperpositionSign::Plus), lat);

    // <psi|H|psi> for real symmetric H splits into the real and imaginary
    // component vectors.
    auto energy = [&](const QuantumState& st) {
        const std::size_t n = st.size();
        std::vector<double> re(n), im(n);
        for (std::size_t k = 0; k < n; ++k) {
            re[k] = st.amp[k].real();
            im[k] = st.amp[k].imag();
        }
        const auto hre = H.apply(re);
        const auto him = H.apply(im);
        return std::inner_product(re.begin(), re.end(), hre.begin(), 0.0) +
               std::inner_product(im.begin(), im.end(), him.begin(), 0.0);
    };

    const double e0 = energy(psi0);
    const auto states = evolve(decomp, psi0, {0.7, 31.0, 1e4});
    for (const auto& st : states) CHECK(energy(st) == doctest::Approx(e0).epsilon(1e-8));
}

TEST_CASE("evolving forward then backward returns the initial state") {
    const auto lat = build_gasket(3);
    const auto decomp = eigendecompose(assemble_quantum(lat, {1.0, 1.0}));
    const auto psi0 = prepare(InitialStateSpec::single(7), lat);

    const double t = 37.5;
    const auto forward = evolve(decomp, psi0, {t});
    const auto back = evolve(decomp, forward[0], {-t});
    for (std::size_t k = 0; k < psi0.size(); ++k)
        CHECK(std::abs(back[0].amp[k] - psi0.amp[k]) <= 1e-8);
}

TEST_CASE("the propagator is linear in the initial state") {
    const auto lat = build_gasket(2);
    const auto decomp = eigendecompose(assemble_quantum(lat, {1.0, 1.0}));
    const auto a = prepare(InitialStateSpec::single(0), lat);
    const auto b = prepare(InitialStateSpec::single(5), lat);

    QuantumState mix;
    mix.amp.resize(a.size());
    const std::complex<double> ca(0.6, 0.0), cb(0.0, 0.8);
    for (std::size_t k = 0; k < a.size(); ++k) mix.amp[k] = ca * a.amp[k] + cb * b.amp[k];

    const std::vector<double> times = {2.5};
    const auto ea = evolve(decomp, a, times);
    const auto eb = evolve(decomp, b, times);
    const auto em = evolve(decomp, mix, times);
    for (std::size_t k = 0; k < a.size(); ++k)
        CHECK(std::abs(em[0].amp[k] - (ca * ea[0].amp[k] + cb * eb[0].amp[k])) <= 1e-10);
}

TEST_CASE("spectral evolution matches a direct RK4 integration") {
    const auto lat = build_gasket(3);
    const auto decomp = eigendecompose(assemble_quantum(lat, {1.0, 1.0}));
    const auto psi0 = prepare(InitialStateSpec::single(0), lat);

    const std::vector<double> times = {0.5, 2.0, 5.0};
    const auto states = evolve(decomp, psi0, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto oracle = rk4_evolve(lat, psi0.amp, times[k], 1e-3);
        double worst = 0.0;
        for (std::size_t j = 0; j < oracle.size(); ++j)
            worst = std::max(worst, std::abs(states[k].amp[j] - oracle[j]));
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("site probabilities, region weight, and MSD are consistent") {
    const auto lat = build_gasket(2);
    const auto decomp = eigendecompose(assemble_quantum(lat, {1.0, 1.0}));
    const auto psi0 = prepare(InitialStateSpec::single(0), lat);
    const auto st = evolve(decomp, psi0, {3.0})[0];

    const auto probs = site_probabilities(st);
    CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));

    std::vector<int> all(lat.site_count());
    std::iota(all.begin(), all.end(), 0);
    CHECK(region_weight(st, all) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(region_weight(st, {}) == 0.0);
    CHECK_THROWS_AS(region_weight(st, {-1}), std::invalid_argument);
    CHECK_THROWS_AS(region_weight(st, {static_cast<int>(lat.site_count())}),
                    std::invalid_argument);

    // MSD of the uniform state is the plain second moment of the site
    // positions about the reference point.
    QuantumState uniform;
    uniform.amp.assign(lat.site_count(), {1.0 / std::sqrt(double(lat.site_count())), 0.0});
    const qfrac::lattice::Point2D r0 = lat.sites[0];
    double second_moment = 0.0;
    for (const auto& p : lat.sites) {
        const double dx = p.x - r0.x;
        const double dy = p.y - r0.y;
        second_moment += dx * dx + dy * dy;
    }
    second_moment /= double(lat.site_count());
    CHECK(msd(uniform, lat, r0) == doctest::Approx(second_moment).epsilon(1e-12));
}

TEST_CASE("log time grid covers the endpoints and rejects bad input") {
    const auto t = log_time_grid(0.01, 100.0, 9);
    REQUIRE(t.size() == 9);
    CHECK(t.front() == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(t.back() == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(t[4] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::is_sorted(t.begin(), t.end()));

    CHECK_THROWS_AS(log_time_grid(0.0, 1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(log_time_grid(1.0, 0.5, 10), std::invalid_argument);
    CHECK_THROWS_AS(log_time_grid(0.1, 1.0, 1), std::invalid_argument);
}

TEST_CASE("Cesaro average is exact on constant and linear series") {
    ObservableSeries series;
    series.times = {1.0, 2.0, 4.0, 8.0, 16.0};
    series.observable = "msd";

    series.values.assign(series.times.size(), 3.5);
    const auto flat = cesaro_average(series);
    CHECK(flat.observable == "msd_cesaro");
    for (double v : flat.values) CHECK(v == doctest::Approx(3.5).epsilon(1e-14));

    // Trapezoid integration is exact for v(t) = t: the running average of
    // a linear ramp from t0 is (t + t0) / 2.
    series.values = series.times;
    const auto ramp = cesaro_average(series);
    CHECK(ramp.values[0] == doctest::Approx(1.0));
    for (std::size_t k = 1; k < ramp.values.size(); ++k)
        CHECK(ramp.values[k] ==
              doctest::Approx(0.5 * (series.times[k] + series.times[0])).epsilon(1e-14));
}

TEST_CASE("evolve_series reproduces per-state observables") {
    const auto lat = build_gasket(3);
    const auto decomp = eigendecompose(assemble_quantum(lat, {1.0, 1.0}));
    const auto psi0 = prepare(InitialStateSpec::single(0), lat);
    const auto times = log_time_grid(0.1, 100.0, 25);
    const qfrac::lattice::Point2D r_ref = lat.sites[0];

    const std::vector<int> region = qfrac::lattice::region_sites(
        lat, {qfrac::lattice::CornerAnchor::LowerLeft, 1});
    const auto series = evolve_series(decomp, psi0, times, lat, r_ref, 0, {region});
    REQUIRE(series.msd.values.size() == times.size());
    REQUIRE(series.region_weights.size() == 1);

    const auto states = evolve(decomp, psi0, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
        CHECK(std::fabs(series.msd.values[k] - msd(states[k], lat, r_ref)) <= 1e-12);
        CHECK(std::fabs(series.return_prob.values[k] - site_probabilities(states[k])[0]) <=
              1e-12);
        CHECK(std::fabs(series.region_weights[0].values[k] - region_weight(states[k], region)) <=
              1e-12);
    }
    CHECK(series.msd.observable == "msd");
    CHECK(series.return_prob.observable == "return_probability");
}
