#include "qfrac/hamiltonian.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace qfrac::hamiltonian {

void SymmetricOperator::apply(const double* x, double* y) const {
    for (std::int32_t i = 0; i < n; ++i) y[i] = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const std::int32_t r = rows[k];
        const std::int32_t c = cols[k];
        const double v = values[k];
        y[r] += v * x[c];
        if (r != c) y[c] += v * x[r];
    }
}

std::vector<double> SymmetricOperator::apply(const std::vector<double>& x) const {
    if (static_cast<std::int32_t>(x.size()) != n)
        throw std::invalid_argument("SymmetricOperator::apply: dimension mismatch");
    std::vector<double> y(x.size());
    apply(x.data(), y.data());
    return y;
}

std::vector<double> SymmetricOperator::to_dense() const {
    const std::size_t nn = static_cast<std::size_t>(n);
    std::vector<double> a(nn * nn, 0.0);
    for (std::size_t k = 0; k < values.size(); ++k) {
        const std::size_t r = rows[k];
        const std::size_t c = cols[k];
        a[c * nn + r] = values[k];
        a[r * nn + c] = values[k];
    }
    return a;
}

double SymmetricOperator::trace() const {
    double t = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (rows[k] == cols[k]) t += values[k];
    }
    return t;
}

namespace {

void check_config(const CouplingConfig& config) {
    if (!(config.J > 0.0)) throw std::invalid_argument("CouplingConfig: J must be > 0");
    if (!(config.gamma >= 0.0 && config.gamma <= 1.0))
        throw std::invalid_argument("CouplingConfig: gamma must be in [0, 1]");
}

}  // namespace

SymmetricOperator assemble_quantum(const lattice::LatticeGraph& lat, const CouplingConfig& config) {
    check_config(config);
    SymmetricOperator op;
    op.n = static_cast<std::int32_t>(lat.site_count());
    op.rows.reserve(lat.edge_count());
    op.cols.reserve(lat.edge_count());
    op.values.reserve(lat.edge_count());
    // Edges come sorted by (i, j); the diagonal is identically zero and not
    // stored. gamma = 0 bonds vanish and are dropped from storage.
    for (const lattice::Edge& e : lat.edges) {
        const double v = e.cls == lattice::CouplingClass::Fractal ? -config.J
                                                                  : -config.gamma * config.J;
        if (v == 0.0) continue;
        op.rows.push_back(e.i);
        op.cols.push_back(e.j);
        op.values.push_back(v);
    }
    return op;
}

SymmetricOperator assemble_ctrw_generator(const lattice::LatticeGraph& lat, double J) {
    if (!(J > 0.0)) throw std::invalid_argument("assemble_ctrw_generator: J must be > 0");
    SymmetricOperator op;
    op.n = static_cast<std::int32_t>(lat.site_count());
    const std::vector<int> deg = lat.degrees();
    op.rows.reserve(lat.site_count() + lat.edge_count());
    op.cols.reserve(lat.site_count() + lat.edge_count());
    op.values.reserve(lat.site_count() + lat.edge_count());
    // Merge the diagonal with the (i, j)-sorted edge list so the triplets
    // stay sorted by (row, col): the diagonal entry for row r precedes every
    // off-diagonal (r, c > r).
    std::size_t next_edge = 0;
    for (std::int32_t r = 0; r < op.n; ++r) {
        op.rows.push_back(r);
        op.cols.push_back(r);
        op.values.push_back(deg[r] * J);
        while (next_edge < lat.edges.size() && lat.edges[next_edge].i == r) {
            op.rows.push_back(r);
            op.cols.push_back(lat.edges[next_edge].j);
            op.values.push_back(-J);
            ++next_edge;
        }
    }
    return op;
}

void write_triplets(std::ostream& out, const SymmetricOperator& op) {
    char buf[96];
    out << "# n = " << op.n << "\n";
    for (std::size_t k = 0; k < op.values.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g\n", op.rows[k], op.cols[k], op.values[k]);
        out << buf;
    }
}

}  // namespace qfrac::hamiltonian
