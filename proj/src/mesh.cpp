#include "mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"

namespace ps {

namespace {

double orient(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

bool in_circle(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
                       (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
                       (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    return det > 0.0;
}

uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

// Incremental Bowyer-Watson triangulation. Points 0..2 are the bounding super triangle.
class Delaunay {
public:
    struct Tri {
        std::array<int, 3> v;
        std::array<int, 3> nb;  // neighbour opposite v[i]
        bool alive;
    };

    Delaunay(Point2 lo, Point2 hi) {
        const Point2 c = (lo + hi) * 0.5;
        const double r = 50.0 * std::max(hi.x - lo.x, hi.y - lo.y) + 1.0;
        jitter_ = 1e-9 * (std::max(hi.x - lo.x, hi.y - lo.y) + 1e-300);
        p_.push_back({c.x - 2 * r, c.y - r});
        p_.push_back({c.x + 2 * r, c.y - r});
        p_.push_back({c.x, c.y + 2 * r});
        t_.push_back({{0, 1, 2}, {-1, -1, -1}, true});
        mark_.push_back(0);
    }

    // Returns the internal index of the inserted point.
    int insert(Point2 q) {
        const int pi = static_cast<int>(p_.size());
        // Symbolic-perturbation substitute: breaks exact cocircularity of lattice and circle samples.
        q.x += jitter_ * next_noise();
        q.y += jitter_ * next_noise();
        p_.push_back(q);
        const int t0 = locate(q);
        ++stamp_;
        cavity_.clear();
        cavity_.push_back(t0);
        mark_[t0] = stamp_;
        for (size_t i = 0; i < cavity_.size(); ++i) {
            for (int k = 0; k < 3; ++k) {
                const int n = t_[cavity_[i]].nb[k];
                if (n < 0 || mark_[n] == stamp_) continue;
                const auto& T = t_[n];
                if (in_circle(p_[T.v[0]], p_[T.v[1]], p_[T.v[2]], q)) {
                    mark_[n] = stamp_;
                    cavity_.push_back(n);
                }
            }
        }
        // Enlarge the cavity until every boundary edge sees q strictly on its left.
        for (bool changed = true; changed;) {
            changed = false;
            for (size_t i = 0; i < cavity_.size() && !changed; ++i) {
                const auto& T = t_[cavity_[i]];
                for (int k = 0; k < 3; ++k) {
                    const int n = T.nb[k];
                    if (n >= 0 && mark_[n] == stamp_) continue;
                    if (orient(p_[T.v[(k + 1) % 3]], p_[T.v[(k + 2) % 3]], q) <= 0.0 && n >= 0) {
                        mark_[n] = stamp_;
                        cavity_.push_back(n);
                        changed = true;
                        break;
                    }
                }
            }
        }
        struct Bnd {
            int a, b, outside;
        };
        std::vector<Bnd> bnd;
        for (int c : cavity_) {
            const auto& T = t_[c];
            for (int k = 0; k < 3; ++k) {
                const int n = T.nb[k];
                if (n >= 0 && mark_[n] == stamp_) continue;
                bnd.push_back({T.v[(k + 1) % 3], T.v[(k + 2) % 3], n});
            }
        }
        for (int c : cavity_) {
            t_[c].alive = false;
            free_.push_back(c);
        }
        std::vector<int> made(bnd.size());
        for (size_t i = 0; i < bnd.size(); ++i) {
            int id;
            if (!free_.empty()) {
                id = free_.back();
                free_.pop_back();
            } else {
                id = static_cast<int>(t_.size());
                t_.push_back({});
                mark_.push_back(0);
            }
            t_[id] = {{bnd[i].a, bnd[i].b, pi}, {-1, -1, bnd[i].outside}, true};
            made[i] = id;
            if (bnd[i].outside >= 0) {
                auto& O = t_[bnd[i].outside];
                for (int k = 0; k < 3; ++k)
                    if (O.v[(k + 1) % 3] == bnd[i].b && O.v[(k + 2) % 3] == bnd[i].a) O.nb[k] = id;
            }
        }
        for (size_t i = 0; i < bnd.size(); ++i) {
            for (size_t j = 0; j < bnd.size(); ++j) {
                if (bnd[j].a == bnd[i].b) t_[made[i]].nb[0] = made[j];
                if (bnd[j].b == bnd[i].a) t_[made[i]].nb[1] = made[j];
            }
        }
        last_ = made.front();
        return pi;
    }

    const std::vector<Point2>& points() const { return p_; }
    const std::vector<Tri>& tris() const { return t_; }

private:
    int locate(Point2 q) {
        int t = last_;
        if (!t_[t].alive) {
            for (size_t i = 0; i < t_.size(); ++i)
                if (t_[i].alive) {
                    t = static_cast<int>(i);
                    break;
                }
        }
        for (long step = 0; step < 4 * static_cast<long>(t_.size()) + 64; ++step) {
            const auto& T = t_[t];
            bool moved = false;
            for (int kk = 0; kk < 3; ++kk) {
                const int k = static_cast<int>((kk + step) % 3);
                if (orient(p_[T.v[(k + 1) % 3]], p_[T.v[(k + 2) % 3]], q) < 0.0 && T.nb[k] >= 0) {
                    t = T.nb[k];
                    moved = true;
                    break;
                }
            }
            if (!moved) return t;
        }
        for (size_t i = 0; i < t_.size(); ++i) {
            const auto& T = t_[i];
            if (!T.alive) continue;
            if (orient(p_[T.v[0]], p_[T.v[1]], q) >= 0 && orient(p_[T.v[1]], p_[T.v[2]], q) >= 0 &&
                orient(p_[T.v[2]], p_[T.v[0]], q) >= 0)
                return static_cast<int>(i);
        }
        throw GeometryError("point location failed in mesher");
    }

    double next_noise() {
        rng_ = rng_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(rng_ >> 11) * 0x1.0p-53 - 0.5;
    }

    std::vector<Point2> p_;
    std::vector<Tri> t_;
    double jitter_ = 0.0;
    uint64_t rng_ = 0x9e3779b97f4a7c15ULL;
    std::vector<int> mark_;
    std::vector<int> cavity_;
    std::vector<int> free_;
    int stamp_ = 0;
    int last_ = 0;
};

// Bucketed segments for fast "distance to nearest curve" queries.
class SegmentGrid {
public:
    SegmentGrid(Point2 lo, double cell) : lo_(lo), cell_(cell) {}

    void add(Point2 a, Point2 b) {
        const int id = static_cast<int>(segs_.size());
        segs_.push_back({a, b});
        const int i0 = cx(std::min(a.x, b.x)) - 1, i1 = cx(std::max(a.x, b.x)) + 1;
        const int j0 = cy(std::min(a.y, b.y)) - 1, j1 = cy(std::max(a.y, b.y)) + 1;
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) cells_[key(i, j)].push_back(id);
    }

    // Distance to the nearest segment, capped at one cell size.
    double near_distance(Point2 p) const {
        double d = cell_;
        auto it = cells_.find(key(cx(p.x), cy(p.y)));
        if (it == cells_.end()) return d;
        for (int id : it->second) d = std::min(d, segment_distance(p, segs_[id].first, segs_[id].second));
        return d;
    }

private:
    int cx(double x) const { return static_cast<int>(std::floor((x - lo_.x) / cell_)); }
    int cy(double y) const { return static_cast<int>(std::floor((y - lo_.y) / cell_)); }
    static int64_t key(int i, int j) { return (static_cast<int64_t>(i) << 32) ^ static_cast<uint32_t>(j); }

    Point2 lo_;
    double cell_;
    std::vector<std::pair<Point2, Point2>> segs_;
    std::unordered_map<int64_t, std::vector<int>> cells_;
};

bool polygon_contains_pt(const std::vector<Point2>& v, Point2 p) {
    bool inside = false;
    for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            const double xi = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
            if (p.x < xi) inside = !inside;
        }
    }
    return inside;
}

struct RawMesh {
    std::vector<std::array<int, 3>> tris;  // indices into the global point list
    std::vector<int> tags;
};

// Triangulates pts, splitting missing constraint segments of the curves until all are present.
RawMesh triangulate(std::vector<Point2>& pts, std::vector<std::vector<int>>& curves) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Point2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        Point2 hi{-lo.x, -lo.y};
        for (auto& p : pts) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        Delaunay dt(lo, hi);
        // Insert in a serpentine row order so point location walks stay short.
        std::vector<int> order(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) order[i] = static_cast<int>(i);
        const double band = std::max(hi.x - lo.x, hi.y - lo.y) / std::max(1.0, std::sqrt(pts.size() / 4.0));
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const long ra = std::lround(std::floor((pts[a].y - lo.y) / band));
            const long rb = std::lround(std::floor((pts[b].y - lo.y) / band));
            if (ra != rb) return ra < rb;
            return (ra % 2 == 0) ? pts[a].x < pts[b].x : pts[a].x > pts[b].x;
        });
        std::vector<int> internal_to_global(pts.size() + 3, -1);
        for (int g : order) internal_to_global[dt.insert(pts[g])] = g;

        std::unordered_set<uint64_t> edges;
        for (auto& T : dt.tris()) {
            if (!T.alive) continue;
            for (int k = 0; k < 3; ++k) {
                const int a = internal_to_global[T.v[k]], b = internal_to_global[T.v[(k + 1) % 3]];
                if (a >= 0 && b >= 0) edges.insert(edge_key(a, b));
            }
        }
        bool missing = false;
        for (auto& c : curves) {
            std::vector<int> next;
            for (size_t i = 0; i < c.size(); ++i) {
                const int a = c[i], b = c[(i + 1) % c.size()];
                next.push_back(a);
                if (!edges.count(edge_key(a, b))) {
                    missing = true;
                    pts.push_back((pts[a] + pts[b]) * 0.5);
                    next.push_back(static_cast<int>(pts.size()) - 1);
                }
            }
            c = std::move(next);
        }
        if (missing) continue;

        std::vector<std::vector<Point2>> polys(curves.size());
        for (size_t c = 0; c < curves.size(); ++c)
            for (int i : curves[c]) polys[c].push_back(pts[i]);
        RawMesh raw;
        for (auto& T : dt.tris()) {
            if (!T.alive) continue;
            std::array<int, 3> g{internal_to_global[T.v[0]], internal_to_global[T.v[1]], internal_to_global[T.v[2]]};
            if (g[0] < 0 || g[1] < 0 || g[2] < 0) continue;
            const Point2 cen = (pts[g[0]] + pts[g[1]] + pts[g[2]]) * (1.0 / 3.0);
            if (!polygon_contains_pt(polys[0], cen)) continue;
            int tag = kExteriorTag;
            for (size_t c = 1; c < curves.size(); ++c)
                if (polygon_contains_pt(polys[c], cen)) tag = static_cast<int>(c) - 1;
            raw.tris.push_back(g);
            raw.tags.push_back(tag);
        }
        return raw;
    }
    throw GeometryError("mesher could not recover boundary segments");
}

// Region id of a point: -2 outside Omega, -1 exterior, j inside component j.
int region_of(const std::vector<std::vector<Point2>>& polys, Point2 p) {
    if (!polygon_contains_pt(polys[0], p)) return -2;
    for (size_t c = 1; c < polys.size(); ++c)
        if (polygon_contains_pt(polys[c], p)) return static_cast<int>(c) - 1;
    return -1;
}

}  // namespace

TriMesh mesh_domain(const Shape& outer, const ObstacleSpec& obstacle, double h) {
    if (!(h > 0)) throw GeometryError("h_target must be positive");
    validate_obstacle(outer, obstacle);

    std::vector<Point2> pts;
    std::vector<std::vector<int>> curves;
    auto add_curve = [&](const Shape& s) {
        std::vector<int> c;
        for (auto p : sample_boundary(s, h)) {
            c.push_back(static_cast<int>(pts.size()));
            pts.push_back(p);
        }
        curves.push_back(std::move(c));
    };
    add_curve(outer);
    for (auto& c : obstacle.components) add_curve(c);
    const int n_curve_pts = static_cast<int>(pts.size());

    std::vector<std::vector<Point2>> polys(curves.size());
    for (size_t c = 0; c < curves.size(); ++c)
        for (int i : curves[c]) polys[c].push_back(pts[i]);

    Point2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Point2 hi{-lo.x, -lo.y};
    for (auto& p : polys[0]) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    SegmentGrid grid(lo - Point2{h, h}, h);
    for (auto& poly : polys)
        for (size_t i = 0; i < poly.size(); ++i) grid.add(poly[i], poly[(i + 1) % poly.size()]);

    const double gap = 0.6 * h;
    const double dy = h * std::sqrt(3.0) / 2.0;
    const Point2 mid = (lo + hi) * 0.5;
    const int ny = static_cast<int>(std::ceil((hi.y - lo.y) / dy / 2.0)) + 1;
    const int nx = static_cast<int>(std::ceil((hi.x - lo.x) / h / 2.0)) + 1;
    for (int j = -ny; j <= ny; ++j) {
        for (int i = -nx; i <= nx; ++i) {
            const Point2 p{mid.x + (i + ((j & 1) ? 0.5 : 0.0)) * h, mid.y + j * dy};
            if (region_of(polys, p) == -2) continue;
            if (grid.near_distance(p) < gap) continue;
            pts.push_back(p);
        }
    }

    RawMesh raw = triangulate(pts, curves);

    // Laplacian smoothing of lattice nodes, each pass followed by re-triangulation.
    for (int pass = 0; pass < 3; ++pass) {
        std::vector<Point2> sum(pts.size(), {0, 0});
        std::vector<int> cnt(pts.size(), 0);
        for (auto& t : raw.tris) {
            for (int k = 0; k < 3; ++k) {
                const int a = t[k], b = t[(k + 1) % 3];
                sum[a] = sum[a] + pts[b];
                sum[b] = sum[b] + pts[a];
                ++cnt[a];
                ++cnt[b];
            }
        }
        std::vector<char> on_curve(pts.size(), 0);
        for (auto& c : curves)
            for (int i : c) on_curve[i] = 1;
        for (size_t i = n_curve_pts; i < pts.size(); ++i) {
            if (on_curve[i] || cnt[i] == 0) continue;
            const Point2 q = sum[i] * (1.0 / cnt[i]);
            if (region_of(polys, q) != region_of(polys, pts[i])) continue;
            if (grid.near_distance(q) < 0.4 * h) continue;
            pts[i] = q;
        }
        raw = triangulate(pts, curves);
    }

    // Split oversized triangles left where the lattice was thinned near curves.
    for (int pass = 0; pass < 8; ++pass) {
        bool added = false;
        const size_t n_before = pts.size();
        for (auto& t : raw.tris) {
            double lmax = 0.0;
            for (int k = 0; k < 3; ++k) lmax = std::max(lmax, dist(pts[t[k]], pts[t[(k + 1) % 3]]));
            if (lmax <= 1.4 * h) continue;
            const Point2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) * (1.0 / 3.0);
            if (grid.near_distance(c) < 0.3 * h) continue;
            bool crowded = false;
            for (size_t i = n_before; i < pts.size() && !crowded; ++i) crowded = dist(pts[i], c) < 0.5 * h;
            if (crowded) continue;
            pts.push_back(c);
            added = true;
        }
        if (!added) break;
        raw = triangulate(pts, curves);
    }

    // Renumber: outer loop first (ccw), then the remaining used nodes in index order.
    std::vector<int> new_id(pts.size(), -1);
    TriMesh m;
    for (int i : curves[0]) {
        new_id[i] = static_cast<int>(m.nodes.size());
        m.nodes.push_back(pts[i]);
    }
    m.n_outer = static_cast<int>(m.nodes.size());
    std::vector<char> used(pts.size(), 0);
    for (auto& t : raw.tris)
        for (int v : t) used[v] = 1;
    for (size_t i = 0; i < pts.size(); ++i) {
        if (!used[i] || new_id[i] >= 0) continue;
        new_id[i] = static_cast<int>(m.nodes.size());
        m.nodes.push_back(pts[i]);
    }
    for (size_t t = 0; t < raw.tris.size(); ++t) {
        std::array<int, 3> v{new_id[raw.tris[t][0]], new_id[raw.tris[t][1]], new_id[raw.tris[t][2]]};
        if (orient(m.nodes[v[0]], m.nodes[v[1]], m.nodes[v[2]]) < 0) std::swap(v[1], v[2]);
        m.tris.push_back(v);
        m.tri_tag.push_back(raw.tags[t]);
    }
    for (size_t c = 0; c < curves.size(); ++c) {
        const int tag = c == 0 ? kOuterTag : static_cast<int>(c) - 1;
        const auto& cv = curves[c];
        for (size_t i = 0; i < cv.size(); ++i) m.edges.push_back({new_id[cv[i]], new_id[cv[(i + 1) % cv.size()]], tag});
    }
    m.n_components = static_cast<int>(obstacle.components.size());
    check_mesh(m);
    return m;
}

namespace {

TriMesh submesh(const TriMesh& m, const std::vector<char>& keep_tri, bool keep_outer_edges) {
    std::vector<int> new_id(m.nodes.size(), -1);
    std::vector<char> used(m.nodes.size(), 0);
    for (int t = 0; t < m.n_tris(); ++t)
        if (keep_tri[t])
            for (int v : m.tris[t]) used[v] = 1;
    TriMesh s;
    for (int i = 0; i < m.n_nodes(); ++i) {
        if (!used[i]) continue;
        new_id[i] = static_cast<int>(s.nodes.size());
        s.nodes.push_back(m.nodes[i]);
        s.parent_node.push_back(m.parent_node.empty() ? i : m.parent_node[i]);
    }
    s.n_outer = 0;
    if (keep_outer_edges) {
        for (int i = 0; i < m.n_outer; ++i) {
            if (new_id[i] != i) throw GeometryError("outer boundary nodes not preserved by submesh");
        }
        s.n_outer = m.n_outer;
    }
    for (int t = 0; t < m.n_tris(); ++t) {
        if (!keep_tri[t]) continue;
        s.tris.push_back({new_id[m.tris[t][0]], new_id[m.tris[t][1]], new_id[m.tris[t][2]]});
        s.tri_tag.push_back(m.tri_tag[t]);
    }
    for (auto& e : m.edges) {
        if (e.tag == kOuterTag && !keep_outer_edges) continue;
        if (new_id[e.a] < 0 || new_id[e.b] < 0) continue;
        s.edges.push_back({new_id[e.a], new_id[e.b], e.tag});
    }
    s.n_components = m.n_components;
    return s;
}

}  // namespace

TriMesh exterior_submesh(const TriMesh& m) {
    std::vector<char> keep(m.tris.size());
    for (size_t t = 0; t < keep.size(); ++t) keep[t] = m.tri_tag[t] == kExteriorTag;
    return submesh(m, keep, true);
}

TriMesh interior_submesh(const TriMesh& m, int component) {
    std::vector<char> keep(m.tris.size());
    for (size_t t = 0; t < keep.size(); ++t)
        keep[t] = component < 0 ? m.tri_tag[t] >= 0 : m.tri_tag[t] == component;
    TriMesh s = submesh(m, keep, false);
    if (component >= 0) {
        std::vector<TaggedEdge> e;
        for (auto& x : s.edges)
            if (x.tag == component) e.push_back(x);
        s.edges = std::move(e);
    }
    return s;
}

std::vector<BoundaryLoop> boundary_loops(const TriMesh& m, BoundarySelector sel) {
    std::map<int, int> next;
    std::map<int, int> tag_of;
    for (auto& e : m.edges) {
        const bool want = sel == BoundarySelector::Outer ? e.tag == kOuterTag : e.tag >= 0;
        if (!want) continue;
        next[e.a] = e.b;
        tag_of[e.a] = e.tag;
    }
    if (next.empty())
        throw GeometryError(sel == BoundarySelector::Outer ? "mesh has no outer_boundary edges"
                                                           : "mesh has no obstacle_interface edges");
    std::vector<BoundaryLoop> loops;
    std::unordered_set<int> seen;
    for (auto& [start, unused] : next) {
        (void)unused;
        if (seen.count(start)) continue;
        BoundaryLoop L;
        L.tag = tag_of[start];
        int v = start;
        double s = 0.0;
        do {
            seen.insert(v);
            L.nodes.push_back(v);
            L.arc.push_back(s);
            auto it = next.find(v);
            if (it == next.end()) throw GeometryError("boundary loop is not closed");
            s += dist(m.nodes[v], m.nodes[it->second]);
            v = it->second;
        } while (v != start && L.nodes.size() <= next.size());
        if (v != start) throw GeometryError("boundary loop is not closed");
        L.length = s;
        loops.push_back(std::move(L));
    }
    std::sort(loops.begin(), loops.end(), [](const BoundaryLoop& a, const BoundaryLoop& b) { return a.tag < b.tag; });
    return loops;
}

double triangle_area(const TriMesh& m, int t) {
    const auto& v = m.tris[t];
    return 0.5 * orient(m.nodes[v[0]], m.nodes[v[1]], m.nodes[v[2]]);
}

double region_area(const TriMesh& m, int tag, bool all) {
    double a = 0.0;
    for (int t = 0; t < m.n_tris(); ++t)
        if (all || m.tri_tag[t] == tag) a += triangle_area(m, t);
    return a;
}

MeshQuality mesh_quality(const TriMesh& m) {
    MeshQuality q;
    q.n_nodes = m.n_nodes();
    q.n_triangles = m.n_tris();
    q.min_angle = std::numbers::pi;
    for (auto& t : m.tris) {
        for (int k = 0; k < 3; ++k) {
            const Point2 a = m.nodes[t[k]], b = m.nodes[t[(k + 1) % 3]], c = m.nodes[t[(k + 2) % 3]];
            q.h_max = std::max(q.h_max, dist(a, b));
            const Point2 u = b - a, w = c - a;
            q.min_angle = std::min(q.min_angle, std::atan2(std::abs(cross(u, w)), dot(u, w)));
        }
    }
    return q;
}

double max_interface_edge(const TriMesh& m) {
    double h = 0.0;
    for (auto& e : m.edges)
        if (e.tag >= 0) h = std::max(h, dist(m.nodes[e.a], m.nodes[e.b]));
    return h;
}

void check_mesh(const TriMesh& m) {
    if (m.tri_tag.size() != m.tris.size()) throw GeometryError("triangle tag count mismatch");
    std::unordered_map<uint64_t, std::vector<int>> edge_tris;
    for (int t = 0; t < m.n_tris(); ++t) {
        const auto& v = m.tris[t];
        for (int x : v)
            if (x < 0 || x >= m.n_nodes()) throw GeometryError("triangle references missing node");
        if (triangle_area(m, t) <= 0) throw GeometryError("triangle " + std::to_string(t) + " not positively oriented");
        for (int k = 0; k < 3; ++k) edge_tris[edge_key(v[k], v[(k + 1) % 3])].push_back(t);
    }
    std::unordered_map<uint64_t, int> tagged;
    for (auto& e : m.edges) tagged[edge_key(e.a, e.b)] = e.tag;
    for (auto& [key, ts] : edge_tris) {
        auto it = tagged.find(key);
        if (ts.size() > 2) throw GeometryError("edge shared by more than two triangles");
        if (ts.size() == 1) {
            if (it == tagged.end()) throw GeometryError("untagged boundary edge (hanging node or hole)");
            if (it->second != kOuterTag && m.tri_tag[ts[0]] != it->second && m.tri_tag[ts[0]] != kExteriorTag)
                throw GeometryError("interface edge on wrong triangle");
        } else {
            const bool cross_tags = m.tri_tag[ts[0]] != m.tri_tag[ts[1]];
            if (it != tagged.end()) {
                if (it->second == kOuterTag) throw GeometryError("outer edge shared by two triangles");
                const int a = m.tri_tag[ts[0]], b = m.tri_tag[ts[1]];
                const bool ok = (a == kExteriorTag && b == it->second) || (b == kExteriorTag && a == it->second);
                if (!ok) throw GeometryError("interface edge must separate exterior and its component");
            } else if (cross_tags) {
                throw GeometryError("untagged edge between different regions");
            }
        }
    }
    // Exterior triangles must form one connected piece.
    std::vector<int> ext;
    for (int t = 0; t < m.n_tris(); ++t)
        if (m.tri_tag[t] == kExteriorTag) ext.push_back(t);
    if (!ext.empty()) {
        std::vector<char> seen(m.tris.size(), 0);
        std::vector<int> stack{ext[0]};
        seen[ext[0]] = 1;
        size_t count = 0;
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            ++count;
            const auto& v = m.tris[t];
            for (int k = 0; k < 3; ++k) {
                for (int o : edge_tris[edge_key(v[k], v[(k + 1) % 3])]) {
                    if (o != t && !seen[o] && m.tri_tag[o] == kExteriorTag) {
                        seen[o] = 1;
                        stack.push_back(o);
                    }
                }
            }
        }
        if (count != ext.size()) throw GeometryError("exterior region is not connected");
    }
}

void write_mesh(std::ostream& os, const TriMesh& m) {
    os << std::setprecision(17);
    os << "NODES " << m.n_nodes() << "\n";
    for (int i = 0; i < m.n_nodes(); ++i) os << i << " " << m.nodes[i].x << " " << m.nodes[i].y << "\n";
    os << "TRIANGLES " << m.n_tris() << "\n";
    for (int t = 0; t < m.n_tris(); ++t)
        os << t << " " << m.tris[t][0] << " " << m.tris[t][1] << " " << m.tris[t][2] << " " << m.tri_tag[t] << "\n";
    os << "EDGES " << m.edges.size() << "\n";
    for (auto& e : m.edges) os << e.a << " " << e.b << " " << e.tag << "\n";
}

TriMesh read_mesh(std::istream& is) {
    auto expect = [&](const char* word) {
        std::string w;
        long n = -1;
        if (!(is >> w >> n) || w != word || n < 0) throw ConfigError(std::string("mesh file: expected section ") + word);
        return n;
    };
    TriMesh in;
    const long nn = expect("NODES");
    in.nodes.resize(nn);
    for (long i = 0; i < nn; ++i) {
        long id;
        Point2 p;
        if (!(is >> id >> p.x >> p.y) || id < 0 || id >= nn) throw ConfigError("mesh file: bad node line");
        in.nodes[id] = p;
    }
    const long nt = expect("TRIANGLES");
    in.tris.resize(nt);
    in.tri_tag.resize(nt);
    for (long i = 0; i < nt; ++i) {
        long id;
        std::array<int, 3> v;
        int tag;
        if (!(is >> id >> v[0] >> v[1] >> v[2] >> tag) || id < 0 || id >= nt) throw ConfigError("mesh file: bad triangle line");
        for (int x : v)
            if (x < 0 || x >= nn) throw ConfigError("mesh file: triangle references missing node");
        in.tris[id] = v;
        in.tri_tag[id] = tag;
    }
    const long ne = expect("EDGES");
    for (long i = 0; i < ne; ++i) {
        TaggedEdge e;
        if (!(is >> e.a >> e.b >> e.tag)) throw ConfigError("mesh file: bad edge line");
        in.edges.push_back(e);
    }
    for (auto& t : in.tris)
        if (orient(in.nodes[t[0]], in.nodes[t[1]], in.nodes[t[2]]) < 0) std::swap(t[1], t[2]);
    for (int tag : in.tri_tag) in.n_components = std::max(in.n_components, tag + 1);

    // Renumber so the outer loop occupies the leading indices.
    auto loops = boundary_loops(in, BoundarySelector::Outer);
    if (loops.size() != 1) throw GeometryError("mesh must have exactly one outer boundary loop");
    std::vector<int> new_id(in.nodes.size(), -1);
    TriMesh m;
    for (int v : loops[0].nodes) {
        new_id[v] = static_cast<int>(m.nodes.size());
        m.nodes.push_back(in.nodes[v]);
    }
    m.n_outer = static_cast<int>(m.nodes.size());
    for (size_t i = 0; i < in.nodes.size(); ++i) {
        if (new_id[i] >= 0) continue;
        new_id[i] = static_cast<int>(m.nodes.size());
        m.nodes.push_back(in.nodes[i]);
    }
    for (auto& t : in.tris) m.tris.push_back({new_id[t[0]], new_id[t[1]], new_id[t[2]]});
    m.tri_tag = in.tri_tag;
    for (auto& e : in.edges) m.edges.push_back({new_id[e.a], new_id[e.b], e.tag});
    m.n_components = in.n_components;
    check_mesh(m);
    return m;
}

}  // namespace ps
