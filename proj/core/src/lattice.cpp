#include "qfrac/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <utility>

namespace qfrac::lattice {

namespace {

constexpr double kSqrt3Half = 0.8660254037844386467637231707529362;

using CoordPair = std::pair<GridCoord, GridCoord>;

CoordPair ordered(GridCoord a, GridCoord b) {
    return a < b ? CoordPair{a, b} : CoordPair{b, a};
}

Point2D triangular_point(GridCoord g) {
    return {g.col + 0.5 * g.row, g.row * kSqrt3Half};
}

Point2D square_point(GridCoord g) {
    return {static_cast<double>(g.col), static_cast<double>(g.row)};
}

// Assembles the final graph from exact integer coordinates. std::set
// iteration gives the (row, col) order, which equals the (y, x) site order
// for both coordinate mappings.
LatticeGraph assemble(LatticeKind kind, int generation, double side_length,
                      const std::set<GridCoord>& verts,
                      const std::map<CoordPair, CouplingClass>& edges,
                      Point2D (*to_point)(GridCoord)) {
    LatticeGraph lat;
    lat.kind = kind;
    lat.generation = generation;
    lat.side_length = side_length;

    std::map<GridCoord, std::int32_t> index;
    lat.sites.reserve(verts.size());
    lat.grid_coords.reserve(verts.size());
    for (const GridCoord& g : verts) {
        index.emplace(g, static_cast<std::int32_t>(lat.sites.size()));
        lat.sites.push_back(to_point(g));
        lat.grid_coords.push_back(g);
    }

    lat.edges.reserve(edges.size());
    for (const auto& [pair, cls] : edges) {
        std::int32_t i = index.at(pair.first);
        std::int32_t j = index.at(pair.second);
        if (i > j) std::swap(i, j);
        lat.edges.push_back({i, j, cls});
    }
    std::sort(lat.edges.begin(), lat.edges.end(), [](const Edge& a, const Edge& b) {
        return std::pair{a.i, a.j} < std::pair{b.i, b.j};
    });
    return lat;
}

// Emits the unit upward triangles of a gasket via corner subdivision:
// a triangle of side s splits into the three corner triangles of side s/2,
// the central (downward) one is the hole.
void subdivide_gasket(GridCoord base, std::int32_t side, std::set<GridCoord>& verts,
                      std::map<CoordPair, CouplingClass>& edges) {
    if (side == 1) {
        GridCoord a = base;
        GridCoord b{base.row, base.col + 1};
        GridCoord t{base.row + 1, base.col};
        verts.insert({a, b, t});
        edges.emplace(ordered(a, b), CouplingClass::Fractal);
        edges.emplace(ordered(a, t), CouplingClass::Fractal);
        edges.emplace(ordered(b, t), CouplingClass::Fractal);
        return;
    }
    const std::int32_t h = side / 2;
    subdivide_gasket(base, h, verts, edges);
    subdivide_gasket({base.row, base.col + h}, h, verts, edges);
    subdivide_gasket({base.row + h, base.col}, h, verts, edges);
}

bool carpet_cell_retained(std::int32_t cx, std::int32_t cy, int levels) {
    for (int k = 0; k < levels; ++k) {
        if (cx % 3 == 1 && cy % 3 == 1) return false;
        cx /= 3;
        cy /= 3;
    }
    return true;
}

void check_generation(int generation, int lo, int hi, const char* what) {
    if (generation < lo || generation > hi)
        throw std::out_of_range(std::string(what) + " generation must be in [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                                std::to_string(generation));
}

}  // namespace

std::vector<int> LatticeGraph::degrees() const {
    std::vector<int> deg(sites.size(), 0);
    for (const Edge& e : edges) {
        ++deg[e.i];
        ++deg[e.j];
    }
    return deg;
}

Point2D LatticeGraph::centroid() const {
    double sx = 0, sy = 0;
    for (const Point2D& p : sites) {
        sx += p.x;
        sy += p.y;
    }
    const double n = static_cast<double>(sites.size());
    return {sx / n, sy / n};
}

const char* to_string(LatticeKind kind) {
    switch (kind) {
        case LatticeKind::Gasket: return "gasket";
        case LatticeKind::Carpet: return "carpet";
        case LatticeKind::Triangular: return "triangular";
        case LatticeKind::Square: return "square";
        case LatticeKind::Interpolating: return "interpolating";
    }
    return "?";
}

const char* to_string(CouplingClass cls) {
    return cls == CouplingClass::Fractal ? "fractal" : "complement";
}

LatticeGraph build_gasket(int generation) {
    check_generation(generation, 1, 9, "gasket");
    std::set<GridCoord> verts;
    std::map<CoordPair, CouplingClass> edges;
    subdivide_gasket({0, 0}, std::int32_t{1} << generation, verts, edges);
    return assemble(LatticeKind::Gasket, generation, std::ldexp(1.0, generation), verts,
                    edges, triangular_point);
}

LatticeGraph build_carpet(int generation) {
    check_generation(generation, 1, 6, "carpet");
    std::int32_t cells = 1;
    for (int k = 1; k < generation; ++k) cells *= 3;
    const int levels = generation - 1;

    std::set<GridCoord> verts;
    std::map<CoordPair, CouplingClass> edges;
    for (std::int32_t cy = 0; cy < cells; ++cy) {
        for (std::int32_t cx = 0; cx < cells; ++cx) {
            if (!carpet_cell_retained(cx, cy, levels)) continue;
            GridCoord c00{cy, cx}, c01{cy, cx + 1}, c10{cy + 1, cx}, c11{cy + 1, cx + 1};
            verts.insert({c00, c01, c10, c11});
            edges.emplace(ordered(c00, c01), CouplingClass::Fractal);
            edges.emplace(ordered(c00, c10), CouplingClass::Fractal);
            edges.emplace(ordered(c01, c11), CouplingClass::Fractal);
            edges.emplace(ordered(c10, c11), CouplingClass::Fractal);
        }
    }
    return assemble(LatticeKind::Carpet, generation, static_cast<double>(cells), verts,
                    edges, square_point);
}

LatticeGraph build_triangular(int side_vertices) {
    if (side_vertices < 2)
        throw std::out_of_range("triangular lattice needs side_vertices >= 2, got " +
                                std::to_string(side_vertices));
    const std::int32_t s = side_vertices - 1;
    std::set<GridCoord> verts;
    std::map<CoordPair, CouplingClass> edges;
    for (std::int32_t r = 0; r <= s; ++r) {
        for (std::int32_t c = 0; c + r <= s; ++c) {
            verts.insert({r, c});
        }
    }
    auto inside = [s](GridCoord g) {
        return g.row >= 0 && g.col >= 0 && g.row + g.col <= s;
    };
    for (const GridCoord& g : verts) {
        const GridCoord nb[3] = {{g.row, g.col + 1}, {g.row + 1, g.col}, {g.row + 1, g.col - 1}};
        for (const GridCoord& o : nb) {
            if (inside(o)) edges.emplace(ordered(g, o), CouplingClass::Fractal);
        }
    }
    return assemble(LatticeKind::Triangular, 0, static_cast<double>(s), verts, edges,
                    triangular_point);
}

LatticeGraph build_square(int side_vertices) {
    if (side_vertices < 2)
        throw std::out_of_range("square lattice needs side_vertices >= 2, got " +
                                std::to_string(side_vertices));
    const std::int32_t s = side_vertices - 1;
    std::set<GridCoord> verts;
    std::map<CoordPair, CouplingClass> edges;
    for (std::int32_t r = 0; r <= s; ++r) {
        for (std::int32_t c = 0; c <= s; ++c) {
            verts.insert({r, c});
            if (c < s) edges.emplace(ordered({r, c}, {r, c + 1}), CouplingClass::Fractal);
            if (r < s) edges.emplace(ordered({r, c}, {r + 1, c}), CouplingClass::Fractal);
        }
    }
    return assemble(LatticeKind::Square, 0, static_cast<double>(s), verts, edges,
                    square_point);
}

LatticeGraph build_interpolating(int generation) {
    check_generation(generation, 1, 9, "interpolating");
    LatticeGraph gasket = build_gasket(generation);
    std::set<CoordPair> fractal_edges;
    for (const Edge& e : gasket.edges) {
        fractal_edges.insert(ordered(gasket.grid_coords[e.i], gasket.grid_coords[e.j]));
    }

    LatticeGraph lat = build_triangular((1 << generation) + 1);
    lat.kind = LatticeKind::Interpolating;
    lat.generation = generation;
    for (Edge& e : lat.edges) {
        const CoordPair key = ordered(lat.grid_coords[e.i], lat.grid_coords[e.j]);
        e.cls = fractal_edges.count(key) ? CouplingClass::Fractal : CouplingClass::Complement;
    }
    return lat;
}

std::vector<int> corner_sites(const LatticeGraph& lattice) {
    if (lattice.sites.empty()) throw std::invalid_argument("corner_sites: empty lattice");

    const std::int32_t n = static_cast<std::int32_t>(lattice.site_count());
    std::vector<int> corners;
    const bool triangular_family = lattice.kind == LatticeKind::Gasket ||
                                   lattice.kind == LatticeKind::Triangular ||
                                   lattice.kind == LatticeKind::Interpolating;
    if (triangular_family) {
        const std::int32_t s = static_cast<std::int32_t>(lattice.side_length);
        for (std::int32_t i = 0; i < n; ++i) {
            const GridCoord g = lattice.grid_coords[i];
            if ((g.row == 0 && g.col == 0) || (g.row == 0 && g.col == s) ||
                (g.row == s && g.col == 0))
                corners.push_back(i);
        }
    } else {
        const std::int32_t s = static_cast<std::int32_t>(lattice.side_length);
        for (std::int32_t i = 0; i < n; ++i) {
            const GridCoord g = lattice.grid_coords[i];
            if ((g.row == 0 || g.row == s) && (g.col == 0 || g.col == s)) corners.push_back(i);
        }
    }
    std::sort(corners.begin(), corners.end(), [&](int a, int b) {
        const Point2D& pa = lattice.sites[a];
        const Point2D& pb = lattice.sites[b];
        return std::pair{pa.x, pa.y} < std::pair{pb.x, pb.y};
    });
    return corners;
}

std::vector<int> region_sites(const LatticeGraph& lattice, const RegionSpec& region) {
    const bool ok_kind = lattice.kind == LatticeKind::Gasket ||
                         lattice.kind == LatticeKind::Triangular ||
                         lattice.kind == LatticeKind::Interpolating;
    if (!ok_kind)
        throw std::invalid_argument("region_sites: only gasket-family lattices have "
                                    "sub-triangle regions");
    const std::int32_t s = static_cast<std::int32_t>(lattice.side_length);
    if (region.sub_generation < 0)
        throw std::out_of_range("region_sites: sub_generation must be >= 0");
    if (region.sub_generation >= 31)
        throw std::out_of_range("region_sites: sub_generation too large");
    const std::int32_t m = std::int32_t{1} << region.sub_generation;
    if (m > s)
        throw std::out_of_range("region_sites: sub-triangle side " + std::to_string(m) +
                                " exceeds lattice side " + std::to_string(s));

    std::vector<int> out;
    for (std::size_t i = 0; i < lattice.grid_coords.size(); ++i) {
        const GridCoord g = lattice.grid_coords[i];
        bool in = false;
        switch (region.anchor) {
            case CornerAnchor::LowerLeft: in = g.row + g.col <= m; break;
            case CornerAnchor::LowerRight: in = g.col >= s - m; break;
            case CornerAnchor::Top: in = g.row >= s - m; break;
        }
        if (in) out.push_back(static_cast<int>(i));
    }
    return out;
}

void export_lattice(std::ostream& out, const LatticeGraph& lattice) {
    char buf[96];
    out << "# qfrac lattice\n";
    out << "# kind = " << to_string(lattice.kind) << "\n";
    out << "# generation = " << lattice.generation << "\n";
    out << "# N = " << lattice.site_count() << "\n";
    out << "# L = " << lattice.side_length << "\n";
    out << "sites:\n";
    for (std::size_t i = 0; i < lattice.sites.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu %.12g %.12g\n", i, lattice.sites[i].x,
                      lattice.sites[i].y);
        out << buf;
    }
    out << "edges:\n";
    for (const Edge& e : lattice.edges) {
        out << e.i << ' ' << e.j << ' ' << to_string(e.cls) << '\n';
    }
}

}  // namespace qfrac::lattice
