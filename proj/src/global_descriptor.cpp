#include "sgwc/global_descriptor.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "sgwc/binary_io.hpp"
#include "sgwc/util.hpp"

namespace sgwc {

namespace {

constexpr int kQuantBits = 26;  // half the significand: exact sums up to ~2^27 edges

struct AdjacencyList {
    std::vector<int> offset;    // size m+1
    std::vector<int> neighbor;
    std::vector<double> length;
};

AdjacencyList build_adjacency(const Mesh& mesh, const std::vector<double>& lengths)
{
    const int m = mesh.vertex_count();
    AdjacencyList adj;
    adj.offset.assign(m + 1, 0);
    for (const auto& [i, j] : mesh.edges) {
        ++adj.offset[i + 1];
        ++adj.offset[j + 1];
    }
    for (int v = 0; v < m; ++v)
        adj.offset[v + 1] += adj.offset[v];
    adj.neighbor.resize(adj.offset[m]);
    adj.length.resize(adj.offset[m]);
    std::vector<int> cursor(adj.offset.begin(), adj.offset.end() - 1);
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const auto [i, j] = mesh.edges[e];
        adj.neighbor[cursor[i]] = j;
        adj.length[cursor[i]++] = lengths[e];
        adj.neighbor[cursor[j]] = i;
        adj.length[cursor[j]++] = lengths[e];
    }
    return adj;
}

void dijkstra(const AdjacencyList& adj, int source, Eigen::VectorXd& dist)
{
    const int m = static_cast<int>(adj.offset.size()) - 1;
    dist.setConstant(m, std::numeric_limits<double>::infinity());
    dist[source] = 0.0;
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[v])
            continue;
        for (int e = adj.offset[v]; e < adj.offset[v + 1]; ++e) {
            const double candidate = d + adj.length[e];
            if (candidate < dist[adj.neighbor[e]]) {
                dist[adj.neighbor[e]] = candidate;
                heap.emplace(candidate, adj.neighbor[e]);
            }
        }
    }
}

}  // namespace

std::vector<double> quantized_edge_lengths(const Mesh& mesh)
{
    std::vector<double> lengths(mesh.edges.size());
    double max_len = 0.0;
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const auto [i, j] = mesh.edges[e];
        lengths[e] = (mesh.vertices.row(i) - mesh.vertices.row(j)).norm();
        max_len = std::max(max_len, lengths[e]);
    }
    if (max_len == 0.0)
        return lengths;  // fully degenerate geometry; nothing to snap
    // grid step: power of two just above max_len, scaled down 26 bits
    const double step = std::ldexp(1.0, std::ilogb(max_len) + 1 - kQuantBits);
    for (double& len : lengths)
        len = std::round(len / step) * step;
    return lengths;
}

GeodesicMatrix geodesic_matrix(const Mesh& mesh, int threads)
{
    const int m = mesh.vertex_count();
    const AdjacencyList adj = build_adjacency(mesh, quantized_edge_lengths(mesh));

    GeodesicMatrix geo;
    geo.d.resize(m, m);
    parallel_for(m, threads, [&](int source) {
        Eigen::VectorXd dist;
        dijkstra(adj, source, dist);
        geo.d.col(source) = dist;
    });

    double max_d = 0.0;
    for (Eigen::Index i = 0; i < geo.d.size(); ++i) {
        if (std::isinf(geo.d.data()[i]))
            throw Error("mesh is disconnected: geodesic distances undefined");
        max_d = std::max(max_d, geo.d.data()[i]);
    }
    if (max_d > 0.0)
        geo.d /= max_d;
    return geo;
}

Eigen::MatrixXd geodesic_kernel(const GeodesicMatrix& geo, double epsilon)
{
    if (epsilon <= 0.0)
        throw Error("geodesic kernel width must be positive");
    return (-geo.d / epsilon).array().exp();
}

GlobalDescriptor sgwc_bof(const CodeMatrix& codes, const Eigen::MatrixXd& kernel,
                          double epsilon)
{
    const Eigen::Index m = codes.codes.cols();
    const Eigen::Index k = codes.codes.rows();
    if (kernel.rows() != m || kernel.cols() != m)
        throw Error("sgwc_bof: kernel size does not match code matrix");

    GlobalDescriptor desc;
    desc.epsilon = epsilon;
    desc.F = codes.codes * kernel * codes.codes.transpose();
    desc.pre_norm = desc.F.norm();
    if (desc.pre_norm == 0.0)
        throw Error("sgwc_bof: zero descriptor");
    desc.F /= desc.pre_norm;
    desc.x = Eigen::Map<const Eigen::VectorXd>(desc.F.data(), k * k);
    return desc;
}

void save_geodesics(const std::string& path, const GeodesicMatrix& geo)
{
    atomic_file_write(path, [&](BinaryWriter& w) {
        w.header("SGWCGEO\0", 1);
        w.u64(static_cast<std::uint64_t>(geo.d.rows()));
        // symmetric matrix: column-major bytes already are the row-major layout
        w.matrix(geo.d);
    });
}

GeodesicMatrix load_geodesics(const std::string& path)
{
    BinaryReader r(path);
    r.header("SGWCGEO\0");
    const auto m = static_cast<Eigen::Index>(r.u64());
    GeodesicMatrix geo;
    geo.d = r.matrix(m, m);
    return geo;
}

}  // namespace sgwc
