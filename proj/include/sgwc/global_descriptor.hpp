#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgwc/bof.hpp"
#include "sgwc/mesh.hpp"

namespace sgwc {

/// All-pairs graph geodesics, normalized so the largest distance is 1.
struct GeodesicMatrix {
    Eigen::MatrixXd d;  // m x m, symmetric, zero diagonal
};

/// Euclidean edge lengths snapped to a per-mesh dyadic grid (relative step
/// 2^-26). Path sums over these lengths are exact in double precision, so
/// any two correct shortest-path algorithms agree bit-for-bit.
std::vector<double> quantized_edge_lengths(const Mesh& mesh);

/// Dijkstra from every source over the edge graph. Errors on disconnected
/// meshes. Sources are processed in parallel when threads > 1.
GeodesicMatrix geodesic_matrix(const Mesh& mesh, int threads = 1);

/// kappa_ij = exp(-d_ij / epsilon); unit diagonal.
Eigen::MatrixXd geodesic_kernel(const GeodesicMatrix& geo, double epsilon);

/// F = U K U^T scaled to unit Frobenius norm; x is the column stacking of the
/// stored F (so reshaping x reproduces F exactly). pre_norm records the norm
/// the raw product had before scaling.
struct GlobalDescriptor {
    Eigen::MatrixXd F;   // k x k
    Eigen::VectorXd x;   // k^2
    double epsilon = 0.0;
    double pre_norm = 0.0;
};

GlobalDescriptor sgwc_bof(const CodeMatrix& codes, const Eigen::MatrixXd& kernel,
                          double epsilon);

void save_geodesics(const std::string& path, const GeodesicMatrix& geo);
GeodesicMatrix load_geodesics(const std::string& path);

}  // namespace sgwc
