#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "geometry.hpp"

namespace ps {

/// Edge tag for the outer boundary; tags >= 0 name obstacle interface components.
inline constexpr int kOuterTag = -1;
/// Triangle tag for Omega minus closure(D); tags >= 0 name obstacle components.
inline constexpr int kExteriorTag = -1;

struct TaggedEdge {
    int a = 0;
    int b = 0;
    int tag = kOuterTag;
};

/// Conforming P1 triangulation. Nodes [0, n_outer) are the outer boundary nodes in
/// counterclockwise loop order; submeshes preserve that prefix index-for-index.
struct TriMesh {
    std::vector<Point2> nodes;
    std::vector<std::array<int, 3>> tris;
    std::vector<int> tri_tag;
    std::vector<TaggedEdge> edges;  // outer edges ccw around Omega, interface edges ccw around D_j
    int n_outer = 0;
    int n_components = 0;
    std::vector<int> parent_node;   // submesh -> parent node index (empty for a root mesh)

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_tris() const { return static_cast<int>(tris.size()); }
};

struct MeshQuality {
    double h_max = 0.0;
    double min_angle = 0.0;  // radians
    int n_nodes = 0;
    int n_triangles = 0;
};

TriMesh mesh_domain(const Shape& outer, const ObstacleSpec& obstacle, double h_target);

/// Triangles with tag kExteriorTag; interface edges become the Robin boundary.
TriMesh exterior_submesh(const TriMesh& m);
/// All obstacle triangles (component < 0) or a single component's triangles.
TriMesh interior_submesh(const TriMesh& m, int component = -1);

enum class BoundarySelector { Outer, Interface };

struct BoundaryLoop {
    int tag = kOuterTag;
    std::vector<int> nodes;    // cyclic order, first node not repeated
    std::vector<double> arc;   // arc length at each node, arc[0] = 0
    double length = 0.0;
};

std::vector<BoundaryLoop> boundary_loops(const TriMesh& m, BoundarySelector sel);

MeshQuality mesh_quality(const TriMesh& m);
double triangle_area(const TriMesh& m, int t);
/// Sum of triangle areas with the given tag filter: kExteriorTag, a component, or all when all=true.
double region_area(const TriMesh& m, int tag, bool all = false);

/// Throws GeometryError if a structural invariant fails.
void check_mesh(const TriMesh& m);

/// Longest interface edge length (0 without obstacles).
double max_interface_edge(const TriMesh& m);

void write_mesh(std::ostream& os, const TriMesh& m);
TriMesh read_mesh(std::istream& is);

}  // namespace ps
