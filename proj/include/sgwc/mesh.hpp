#pragma once

#include <array>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace sgwc {

/// Triangle mesh. Immutable after construction; derived `edges` holds the
/// deduplicated unordered vertex pairs (i<j, lexicographically sorted).
struct Mesh {
    Eigen::MatrixXd vertices;                  // m x 3
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::pair<int, int>> edges;

    int vertex_count() const { return static_cast<int>(vertices.rows()); }
};

enum class MeshFormat { Off, Obj };

/// Validates indices/counts and derives the edge set.
Mesh make_mesh(Eigen::MatrixXd vertices, std::vector<std::array<int, 3>> triangles);

/// Parses ASCII OFF or OBJ. Faces with more than three vertices are
/// fan-triangulated in file order; vertex order is preserved.
Mesh load_mesh(std::istream& in, MeshFormat format);

/// Format chosen by file extension (.off / .obj, case-insensitive).
Mesh load_mesh_file(const std::string& path);

/// Mixed Voronoi vertex areas (Meyer): Voronoi sector area in non-obtuse
/// triangles; in obtuse ones, half the triangle area at the obtuse corner and
/// a quarter at the other two. Zero-area triangles contribute nothing.
struct VertexAreas {
    Eigen::VectorXd a;            // per-vertex area, >= 0
    double total_area = 0.0;      // sum of triangle areas
    int degenerate_triangles = 0; // zero-area triangles skipped
};

VertexAreas vertex_areas(const Mesh& mesh);

/// Symmetric cotangent edge weights c_ij = (cot a + cot b)/2, one cotangent
/// halved on boundary edges. Cotangents are clamped to +-1e6.
struct CotanWeights {
    Eigen::SparseMatrix<double> c;       // m x m, zero diagonal
    std::vector<double> edge_weight;     // aligned with Mesh::edges
};

CotanWeights cotangent_weights(const Mesh& mesh);

}  // namespace sgwc
