#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qfrac/lattice.hpp"

namespace qfrac::hamiltonian {

// Sparse real symmetric operator in units of J. Only the upper triangle
// (row <= col) is stored, sorted by (row, col); operators are immutable
// after assembly.
struct SymmetricOperator {
    std::int32_t n = 0;
    std::vector<std::int32_t> rows;
    std::vector<std::int32_t> cols;
    std::vector<double> values;

    std::size_t stored_entries() const { return values.size(); }

    // y = A x, expanding the implicit lower triangle.
    void apply(const double* x, double* y) const;
    std::vector<double> apply(const std::vector<double>& x) const;

    // Dense column-major copy (n*n), both triangles filled.
    std::vector<double> to_dense() const;

    double trace() const;
};

struct CouplingConfig {
    double J = 1.0;      // hopping frequency, > 0
    double gamma = 1.0;  // J'/J on Complement bonds, in [0, 1]
};

// Tight-binding H/hbar: off-diagonal -J on Fractal bonds, -gamma*J on
// Complement bonds, zero diagonal (uniform on-site energy dropped as a
// global phase). gamma is irrelevant for lattices without Complement bonds.
SymmetricOperator assemble_quantum(const lattice::LatticeGraph& lat,
                                   const CouplingConfig& config = {});

// Classical master-equation generator: off-diagonal -J on every bond,
// diagonal N_i*J with N_i the site degree, so every row sums to zero.
// Positive semidefinite with the all-ones vector in its kernel.
SymmetricOperator assemble_ctrw_generator(const lattice::LatticeGraph& lat, double J = 1.0);

// Triplet dump `row col value`, one stored (upper-triangle) entry per line,
// sorted by (row, col), preceded by a `# n = <dim>` header.
void write_triplets(std::ostream& out, const SymmetricOperator& op);

}  // namespace qfrac::hamiltonian
