#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qfrac::lattice {

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

// Integer lattice coordinates, exact. Triangular-family lattices use axial
// coordinates (x = col + row/2, y = row*sqrt(3)/2); square-family lattices
// use plain grid coordinates (x = col, y = row). Unit spacing a = 1.
struct GridCoord {
    std::int32_t row = 0;
    std::int32_t col = 0;

    friend bool operator==(const GridCoord&, const GridCoord&) = default;
    friend auto operator<=>(const GridCoord&, const GridCoord&) = default;
};

enum class CouplingClass : std::uint8_t { Fractal, Complement };
enum class LatticeKind : std::uint8_t { Gasket, Carpet, Triangular, Square, Interpolating };

struct Edge {
    std::int32_t i = 0;  // i < j, each undirected pair stored once
    std::int32_t j = 0;
    CouplingClass cls = CouplingClass::Fractal;
};

// Which corner a sub-triangle region is anchored at.
enum class CornerAnchor : std::uint8_t { LowerLeft, LowerRight, Top };

// Sub-triangle of side 2^sub_generation anchored at a corner of a
// gasket-family lattice.
struct RegionSpec {
    CornerAnchor anchor = CornerAnchor::LowerLeft;
    int sub_generation = 0;
};

// Immutable site/edge graph with exact Euclidean coordinates. Sites are
// ordered lexicographically by (y, x); edges by (i, j). Construction with
// equal arguments is bitwise deterministic.
struct LatticeGraph {
    LatticeKind kind = LatticeKind::Gasket;
    int generation = 0;       // 0 for regular lattices
    double side_length = 0;   // corner-to-corner extent L, units of a
    std::vector<Point2D> sites;
    std::vector<GridCoord> grid_coords;  // one per site, same order
    std::vector<Edge> edges;

    std::size_t site_count() const { return sites.size(); }
    std::size_t edge_count() const { return edges.size(); }
    std::vector<int> degrees() const;
    Point2D centroid() const;
};

const char* to_string(LatticeKind kind);
const char* to_string(CouplingClass cls);

// Sierpinski gasket of generation X: side L = 2^X, N = 3(3^X+1)/2 sites,
// 3^(X+1) unit edges. Corners have degree 2, every other site degree 4.
LatticeGraph build_gasket(int generation);

// Sierpinski carpet of generation g on a square of 3^(g-1) unit cells per
// side; center cells deleted recursively. Vertices are the corners of
// retained cells; edges are the unit segments bounding at least one
// retained cell (hole perimeters stay connected).
LatticeGraph build_carpet(int generation);

// Triangular patch with side_vertices sites per edge, n(n+1)/2 sites total.
LatticeGraph build_triangular(int side_vertices);

// Square patch of side_vertices x side_vertices sites with 4-neighbor bonds.
LatticeGraph build_square(int side_vertices);

// Triangular patch of side 2^generation+1 whose embedded-gasket bonds are
// labeled Fractal and all remaining bonds Complement. The Fractal subgraph
// coincides with build_gasket(generation) site-for-site.
LatticeGraph build_interpolating(int generation);

// Extremal vertices: 3 for triangular-family lattices, 4 for square-family.
// Ordered lexicographically by (x, y).
std::vector<int> corner_sites(const LatticeGraph& lattice);

// Sites inside the closed sub-triangle of side 2^i anchored at the given
// corner. i = generation returns every site. Sorted ascending.
std::vector<int> region_sites(const LatticeGraph& lattice, const RegionSpec& region);

// Structured text export: header block (kind, generation, N, L) followed by
// a `sites:` section (index x y) and an `edges:` section (i j class).
void export_lattice(std::ostream& out, const LatticeGraph& lattice);

}  // namespace qfrac::lattice
