#pragma once

#include <vector>

#include "qfrac/dynamics.hpp"
#include "qfrac/lattice.hpp"
#include "qfrac/spectral.hpp"

namespace qfrac::ctrw {

// Site-probability vector of the classical walk. Entries are clipped to 0
// from roundoff down to -1e-10; anything more negative is a numerical
// failure. Sums to 1 within 1e-8.
struct ClassicalDistribution {
    std::vector<double> p;

    std::size_t size() const { return p.size(); }
    double sum() const;
};

// Heat-kernel propagation p(t) = sum_alpha e^{-w t} v (v^T e_start) from a
// point mass. The decomposition must be of a CTRW generator: eigenvalues
// >= -1e-8 (PSD up to roundoff) with the uniform vector in the kernel.
std::vector<ClassicalDistribution> ctrw_propagate(const spectral::SpectralDecomposition& decomp,
                                                  std::int32_t start,
                                                  const std::vector<double>& times);

double classical_msd(const ClassicalDistribution& dist, const lattice::LatticeGraph& lat,
                     lattice::Point2D r_ref);

// One propagation pass yielding `classical_msd` about the start site and
// `classical_return` at it, on the shared series format.
struct CtrwSeries {
    dynamics::ObservableSeries msd;
    dynamics::ObservableSeries return_prob;
};

CtrwSeries ctrw_series(const spectral::SpectralDecomposition& decomp, std::int32_t start,
                       const std::vector<double>& times, const lattice::LatticeGraph& lat);

}  // namespace qfrac::ctrw
