#ifndef PMLMC_MESH_HPP
#define PMLMC_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pmlmc/errors.hpp"

namespace pmlmc {

using point = std::array<double, 2>; // y unused in 1D

enum class boundary_mark : std::uint8_t {
    interior = 0,
    dirichlet_in = 1,  // u = 1 (x = 0 resp. x1 = 0)
    dirichlet_out = 2, // u = 0 (x = 1 resp. x1 = 1)
};

// Fine-vertex provenance under midpoint refinement: either a copy of a
// coarse vertex or the midpoint of a coarse edge (a,b).
struct vertex_parent {
    int coarse_vertex = -1;
    int edge_a = -1;
    int edge_b = -1;
    bool is_coarse_copy() const { return coarse_vertex >= 0; }
};

struct elem_parent {
    int coarse_elem = -1;
    int local_index = 0; // 1..2 in 1D, 1..4 in 2D (4 = center sub-triangle)
};

struct mesh_level {
    int dim = 1;
    std::vector<point> vertices;
    std::vector<std::array<int, 3>> elements; // 1D: {i, j, -1}
    std::vector<boundary_mark> boundary;
    double mesh_size = 0.0; // max element diameter

    // empty on a base level
    std::vector<vertex_parent> vparent;
    std::vector<elem_parent> eparent;

    int n_vertices() const { return int(vertices.size()); }
    int n_elements() const { return int(elements.size()); }
};

struct triangle_geometry {
    std::array<point, 3> v;
    std::array<double, 3> edge;  // edge[i] opposite v[i]
    std::array<double, 3> angle; // angle at v[i]
    double area = 0.0;
};

inline double dist(const point& a, const point& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

inline double signed_area(const point& a, const point& b, const point& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

inline triangle_geometry make_triangle(const point& v1, const point& v2, const point& v3) {
    triangle_geometry t;
    t.v = {v1, v2, v3};
    t.edge = {dist(v2, v3), dist(v3, v1), dist(v1, v2)};
    t.area = std::abs(signed_area(v1, v2, v3));
    require_numeric(t.area > 0.0, "degenerate triangle (zero area)");
    for (int i = 0; i < 3; ++i) {
        const double a = t.edge[i], b = t.edge[(i + 1) % 3], c = t.edge[(i + 2) % 3];
        double cosv = (b * b + c * c - a * a) / (2.0 * b * c);
        cosv = std::clamp(cosv, -1.0, 1.0);
        t.angle[i] = std::acos(cosv);
    }
    return t;
}

inline triangle_geometry element_geometry(const mesh_level& lv, int e) {
    const auto& el = lv.elements[e];
    return make_triangle(lv.vertices[el[0]], lv.vertices[el[1]], lv.vertices[el[2]]);
}

// Barycentric coordinates of x in K: x = sum w_i v_i, sum w_i = 1.
// Throws when x lies outside K beyond `tol`.
inline std::array<double, 3> barycentric(const triangle_geometry& k, const point& x,
                                         double tol = 1e-12) {
    const double s = signed_area(k.v[0], k.v[1], k.v[2]);
    std::array<double, 3> w{signed_area(x, k.v[1], k.v[2]) / s,
                            signed_area(k.v[0], x, k.v[2]) / s,
                            signed_area(k.v[0], k.v[1], x) / s};
    for (double wi : w)
        require_numeric(wi >= -tol, "point outside triangle in barycentric()");
    return w;
}

// Hierarchy of nested grids. Level 0 is the base (coarsest); refine() appends
// a midpoint refinement of the current finest level. Levels are immutable
// once built.
class hier_mesh {
public:
    static hier_mesh uniform_1d(double h) {
        const double inv = 1.0 / h;
        const int n = int(std::llround(inv));
        require(n >= 1 && std::abs(inv - double(n)) < 1e-9 * inv,
                "uniform_1d: 1/h must be a positive integer");
        mesh_level lv;
        lv.dim = 1;
        lv.mesh_size = 1.0 / double(n);
        lv.vertices.resize(n + 1);
        lv.boundary.assign(n + 1, boundary_mark::interior);
        for (int i = 0; i <= n; ++i) lv.vertices[i] = {double(i) / double(n), 0.0};
        lv.boundary[0] = boundary_mark::dirichlet_in;
        lv.boundary[n] = boundary_mark::dirichlet_out;
        lv.elements.resize(n);
        for (int i = 0; i < n; ++i) lv.elements[i] = {i, i + 1, -1};
        hier_mesh m;
        m.levels_.push_back(std::move(lv));
        return m;
    }

    // Structured right-triangle mesh of the unit square, n x n cells split
    // along the (0,0)-(1,1) diagonal of each cell.
    static hier_mesh structured_unit_square(int n) {
        require(n >= 1, "structured_unit_square: n >= 1");
        mesh_level lv;
        lv.dim = 2;
        const auto id = [n](int i, int j) { return j * (n + 1) + i; };
        lv.vertices.resize((n + 1) * (n + 1));
        lv.boundary.assign(lv.vertices.size(), boundary_mark::interior);
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) {
                lv.vertices[id(i, j)] = {double(i) / n, double(j) / n};
                if (i == 0) lv.boundary[id(i, j)] = boundary_mark::dirichlet_in;
                if (i == n) lv.boundary[id(i, j)] = boundary_mark::dirichlet_out;
            }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                lv.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                lv.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        lv.mesh_size = max_diameter(lv);
        hier_mesh m;
        m.levels_.push_back(std::move(lv));
        return m;
    }

    static hier_mesh from_level(mesh_level base) {
        hier_mesh m;
        base.vparent.clear();
        base.eparent.clear();
        if (base.mesh_size <= 0.0) base.mesh_size = max_diameter(base);
        m.levels_.push_back(std::move(base));
        return m;
    }

    int n_levels() const { return int(levels_.size()); }
    const mesh_level& level(int i) const { return levels_.at(i); }
    const mesh_level& finest() const { return levels_.back(); }
    int dim() const { return levels_.front().dim; }

    void refine() { levels_.push_back(refine_midpoint(levels_.back())); }
    void refine_to(int n_levels) {
        while (int(levels_.size()) < n_levels) refine();
    }

    // Midpoint refinement of one level. 1D: each interval is split at its
    // midpoint. 2D: each triangle is split into the four sub-triangles
    // (v1,m3,m2), (m3,v2,m1), (m2,m1,v3), (m1,m2,m3). Coarse vertices keep
    // their ids, so interpolation to the coarse grid is a prefix read.
    static mesh_level refine_midpoint(const mesh_level& coarse) {
        mesh_level fine;
        fine.dim = coarse.dim;
        fine.vertices = coarse.vertices;
        fine.boundary = coarse.boundary;
        fine.vparent.resize(coarse.vertices.size());
        for (int i = 0; i < coarse.n_vertices(); ++i) fine.vparent[i].coarse_vertex = i;

        // dedup midpoints through the coarse edge, never by coordinates
        std::map<std::pair<int, int>, int> edge_mid;
        auto midpoint_of = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = edge_mid.find({key.first, key.second});
            if (it != edge_mid.end()) return it->second;
            const int id = fine.n_vertices();
            fine.vertices.push_back({0.5 * (coarse.vertices[a][0] + coarse.vertices[b][0]),
                                     0.5 * (coarse.vertices[a][1] + coarse.vertices[b][1])});
            const auto ma = coarse.boundary[a], mb = coarse.boundary[b];
            fine.boundary.push_back(ma == mb ? ma : boundary_mark::interior);
            vertex_parent vp;
            vp.edge_a = key.first;
            vp.edge_b = key.second;
            fine.vparent.push_back(vp);
            edge_mid.insert({{key.first, key.second}, id});
            return id;
        };

        if (coarse.dim == 1) {
            for (int e = 0; e < coarse.n_elements(); ++e) {
                const int a = coarse.elements[e][0], b = coarse.elements[e][1];
                const int m = midpoint_of(a, b);
                fine.elements.push_back({a, m, -1});
                fine.eparent.push_back({e, 1});
                fine.elements.push_back({m, b, -1});
                fine.eparent.push_back({e, 2});
            }
        } else {
            for (int e = 0; e < coarse.n_elements(); ++e) {
                const auto& el = coarse.elements[e];
                const int v1 = el[0], v2 = el[1], v3 = el[2];
                const int m1 = midpoint_of(v2, v3);
                const int m2 = midpoint_of(v1, v3);
                const int m3 = midpoint_of(v1, v2);
                const std::array<std::array<int, 3>, 4> sub = {{{v1, m3, m2},
                                                                {m3, v2, m1},
                                                                {m2, m1, v3},
                                                                {m1, m2, m3}}};
                for (int j = 0; j < 4; ++j) {
                    fine.elements.push_back(sub[j]);
                    fine.eparent.push_back({e, j + 1});
                }
            }
        }
        fine.mesh_size = 0.5 * coarse.mesh_size;
        return fine;
    }

    static double max_diameter(const mesh_level& lv) {
        double d = 0.0;
        for (const auto& el : lv.elements) {
            if (lv.dim == 1) {
                d = std::max(d, dist(lv.vertices[el[0]], lv.vertices[el[1]]));
            } else {
                d = std::max({d, dist(lv.vertices[el[0]], lv.vertices[el[1]]),
                              dist(lv.vertices[el[1]], lv.vertices[el[2]]),
                              dist(lv.vertices[el[2]], lv.vertices[el[0]])});
            }
        }
        return d;
    }

private:
    std::vector<mesh_level> levels_;
};

// Worst diam(K)/indiam(K) over the level. Intervals are regular by
// convention (ratio 1). Incircle diameter of a triangle: 4|K|/perimeter.
inline double regularity_check(const mesh_level& lv) {
    if (lv.dim == 1) return 1.0;
    double worst = 0.0;
    for (int e = 0; e < lv.n_elements(); ++e) {
        const auto t = element_geometry(lv, e);
        const double diam = std::max({t.edge[0], t.edge[1], t.edge[2]});
        const double indiam = 4.0 * t.area / (t.edge[0] + t.edge[1] + t.edge[2]);
        require_numeric(indiam > 0.0,
                        "degenerate element " + std::to_string(e) + " in regularity_check");
        worst = std::max(worst, diam / indiam);
    }
    return worst;
}

// --- plain-text mesh format ------------------------------------------------
// header "dim nvert nelem", vertex lines "x [y]", element lines "i j [k]"
// (1-based), then boundary-marker lines "vertex_id marker". Coordinates are
// printed with %.17g so write/read round-trips bit-exactly.

inline void write_mesh(std::ostream& os, const mesh_level& lv) {
    char buf[64];
    os << lv.dim << ' ' << lv.n_vertices() << ' ' << lv.n_elements() << '\n';
    for (const auto& v : lv.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g", v[0]);
        os << buf;
        if (lv.dim == 2) {
            std::snprintf(buf, sizeof buf, " %.17g", v[1]);
            os << buf;
        }
        os << '\n';
    }
    for (const auto& el : lv.elements) {
        os << el[0] + 1 << ' ' << el[1] + 1;
        if (lv.dim == 2) os << ' ' << el[2] + 1;
        os << '\n';
    }
    for (int i = 0; i < lv.n_vertices(); ++i)
        if (lv.boundary[i] != boundary_mark::interior)
            os << i + 1 << ' ' << int(lv.boundary[i]) << '\n';
}

inline mesh_level read_mesh(std::istream& is) {
    mesh_level lv;
    int nvert = 0, nelem = 0;
    require(bool(is >> lv.dim >> nvert >> nelem), "mesh file: bad header");
    require(lv.dim == 1 || lv.dim == 2, "mesh file: dim must be 1 or 2");
    require(nvert > 0 && nelem > 0, "mesh file: empty mesh");
    lv.vertices.resize(nvert);
    lv.boundary.assign(nvert, boundary_mark::interior);
    for (auto& v : lv.vertices) {
        v = {0.0, 0.0};
        require(bool(is >> v[0]), "mesh file: bad vertex line");
        if (lv.dim == 2) require(bool(is >> v[1]), "mesh file: bad vertex line");
    }
    lv.elements.resize(nelem);
    for (auto& el : lv.elements) {
        el = {0, 0, -1};
        require(bool(is >> el[0] >> el[1]), "mesh file: bad element line");
        if (lv.dim == 2) require(bool(is >> el[2]), "mesh file: bad element line");
        --el[0], --el[1];
        if (lv.dim == 2) --el[2];
        for (int i = 0; i < (lv.dim == 2 ? 3 : 2); ++i)
            require(el[i] >= 0 && el[i] < nvert, "mesh file: vertex index out of range");
    }
    int id = 0, mark = 0;
    while (is >> id >> mark) {
        require(id >= 1 && id <= nvert, "mesh file: boundary vertex id out of range");
        require(mark == 1 || mark == 2, "mesh file: unknown boundary marker");
        lv.boundary[id - 1] = boundary_mark(mark);
    }
    lv.mesh_size = hier_mesh::max_diameter(lv);
    return lv;
}

inline void write_mesh_file(const std::string& path, const mesh_level& lv) {
    std::ofstream os(path);
    require(bool(os), "cannot open mesh file for writing: " + path);
    write_mesh(os, lv);
}

inline mesh_level read_mesh_file(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "cannot open mesh file: " + path);
    return read_mesh(is);
}

} // namespace pmlmc

#endif
