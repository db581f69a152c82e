#include "sgwc/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "sgwc/util.hpp"

namespace sgwc {

namespace {

constexpr double kCotClamp = 1e6;

[[noreturn]] void parse_fail(int line, const std::string& what)
{
    throw Error("line " + std::to_string(line) + ": " + what);
}

// Next line with content, with comments ('#' to end of line) stripped.
bool next_significant_line(std::istream& in, std::string& line, int& lineno)
{
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") != std::string::npos)
            return true;
    }
    return false;
}

void append_fan(std::vector<std::array<int, 3>>& triangles, const std::vector<int>& face)
{
    for (std::size_t j = 1; j + 1 < face.size(); ++j)
        triangles.push_back({face[0], face[j], face[j + 1]});
}

Mesh parse_off(std::istream& in)
{
    std::string line;
    int lineno = 0;
    if (!next_significant_line(in, line, lineno))
        parse_fail(lineno, "empty OFF stream");

    std::istringstream header(line);
    std::string tag;
    header >> tag;
    if (tag != "OFF")
        parse_fail(lineno, "expected OFF header, got '" + tag + "'");

    long nv = -1, nf = -1, ne = -1;
    if (!(header >> nv >> nf >> ne)) {
        // counts on their own line
        if (!next_significant_line(in, line, lineno))
            parse_fail(lineno, "missing OFF counts line");
        std::istringstream counts(line);
        if (!(counts >> nv >> nf >> ne))
            parse_fail(lineno, "malformed OFF counts line");
    }
    if (nv < 0 || nf < 0)
        parse_fail(lineno, "negative OFF counts");

    Eigen::MatrixXd vertices(nv, 3);
    for (long i = 0; i < nv; ++i) {
        if (!next_significant_line(in, line, lineno))
            parse_fail(lineno, "unexpected end of file in vertex list");
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z))
            parse_fail(lineno, "malformed vertex line");
        vertices.row(i) << x, y, z;
    }

    std::vector<std::array<int, 3>> triangles;
    for (long f = 0; f < nf; ++f) {
        if (!next_significant_line(in, line, lineno))
            parse_fail(lineno, "unexpected end of file in face list");
        std::istringstream ls(line);
        long k;
        if (!(ls >> k) || k < 3)
            parse_fail(lineno, "face with fewer than 3 vertices");
        std::vector<int> face(k);
        for (long j = 0; j < k; ++j) {
            long idx;
            if (!(ls >> idx))
                parse_fail(lineno, "malformed face line");
            if (idx < 0 || idx >= nv)
                parse_fail(lineno, "vertex index " + std::to_string(idx) + " out of range");
            face[j] = static_cast<int>(idx);
        }
        append_fan(triangles, face);
    }
    return make_mesh(std::move(vertices), std::move(triangles));
}

Mesh parse_obj(std::istream& in)
{
    std::vector<std::array<double, 3>> verts;
    std::vector<std::array<int, 3>> triangles;
    std::string line;
    int lineno = 0;
    while (next_significant_line(in, line, lineno)) {
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        if (token == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z))
                parse_fail(lineno, "malformed vertex line");
            verts.push_back({x, y, z});
        } else if (token == "f") {
            std::vector<int> face;
            std::string ref;
            while (ls >> ref) {
                // "i", "i/t", "i//n", "i/t/n" -- only the vertex index matters
                long idx = 0;
                try {
                    idx = std::stol(ref.substr(0, ref.find('/')));
                } catch (const std::exception&) {
                    parse_fail(lineno, "malformed face reference '" + ref + "'");
                }
                if (idx == 0)
                    parse_fail(lineno, "OBJ vertex indices are 1-based; 0 is invalid");
                long resolved = idx > 0 ? idx - 1 : static_cast<long>(verts.size()) + idx;
                if (resolved < 0 || resolved >= static_cast<long>(verts.size()))
                    parse_fail(lineno, "vertex index " + std::to_string(idx) + " out of range");
                face.push_back(static_cast<int>(resolved));
            }
            if (face.size() < 3)
                parse_fail(lineno, "face with fewer than 3 vertices");
            append_fan(triangles, face);
        }
        // vt/vn/o/g/s/usemtl/mtllib/l... carry no geometry we use
    }
    Eigen::MatrixXd vertices(verts.size(), 3);
    for (std::size_t i = 0; i < verts.size(); ++i)
        vertices.row(i) << verts[i][0], verts[i][1], verts[i][2];
    return make_mesh(std::move(vertices), std::move(triangles));
}

}  // namespace

Mesh make_mesh(Eigen::MatrixXd vertices, std::vector<std::array<int, 3>> triangles)
{
    const auto m = vertices.rows();
    if (m < 3)
        throw Error("mesh needs at least 3 vertices, got " + std::to_string(m));
    if (triangles.empty())
        throw Error("mesh needs at least one triangle");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(triangles.size() * 3);
    for (const auto& t : triangles) {
        for (int v : t)
            if (v < 0 || v >= m)
                throw Error("triangle vertex index " + std::to_string(v) + " out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw Error("triangle repeats a vertex index");
        edges.emplace_back(std::minmax(t[0], t[1]));
        edges.emplace_back(std::minmax(t[1], t[2]));
        edges.emplace_back(std::minmax(t[0], t[2]));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return Mesh{std::move(vertices), std::move(triangles), std::move(edges)};
}

Mesh load_mesh(std::istream& in, MeshFormat format)
{
    return format == MeshFormat::Off ? parse_off(in) : parse_obj(in);
}

Mesh load_mesh_file(const std::string& path)
{
    std::string ext;
    if (auto dot = path.rfind('.'); dot != std::string::npos)
        for (char c : path.substr(dot + 1))
            ext.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    MeshFormat format;
    if (ext == "off")
        format = MeshFormat::Off;
    else if (ext == "obj")
        format = MeshFormat::Obj;
    else
        throw Error("unrecognized mesh extension in " + path);
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open mesh file: " + path);
    try {
        return load_mesh(in, format);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

VertexAreas vertex_areas(const Mesh& mesh)
{
    VertexAreas out;
    out.a = Eigen::VectorXd::Zero(mesh.vertices.rows());
    for (const auto& t : mesh.triangles) {
        Eigen::Vector3d p[3] = {mesh.vertices.row(t[0]), mesh.vertices.row(t[1]),
                                mesh.vertices.row(t[2])};
        const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
        if (area == 0.0) {
            ++out.degenerate_triangles;
            continue;
        }
        out.total_area += area;

        // dot(u,v) at each corner; negative dot marks the obtuse corner
        double dot[3], len2[3];  // len2[k]: squared length of the edge opposite corner k
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector3d u = p[(k + 1) % 3] - p[k];
            const Eigen::Vector3d v = p[(k + 2) % 3] - p[k];
            dot[k] = u.dot(v);
            len2[k] = (p[(k + 2) % 3] - p[(k + 1) % 3]).squaredNorm();
        }
        int obtuse = -1;
        for (int k = 0; k < 3; ++k)
            if (dot[k] < 0.0)
                obtuse = k;
        if (obtuse >= 0) {
            for (int k = 0; k < 3; ++k)
                out.a[t[k]] += k == obtuse ? area / 2.0 : area / 4.0;
        } else {
            // Voronoi sector at corner k: (1/8)(|e_{k+1}|^2 cot(k+1) + |e_{k+2}|^2 cot(k+2))
            // where cot at corner j = dot_j / (2*area) and e_j is the edge opposite j.
            for (int k = 0; k < 3; ++k) {
                const int k1 = (k + 1) % 3, k2 = (k + 2) % 3;
                out.a[t[k]] +=
                    (len2[k1] * dot[k1] + len2[k2] * dot[k2]) / (16.0 * area);
            }
        }
    }
    return out;
}

CotanWeights cotangent_weights(const Mesh& mesh)
{
    // Accumulate one scalar per undirected edge so the assembled matrix is
    // bit-identical across (i,j) and (j,i).
    std::unordered_map<std::uint64_t, std::size_t> slot;
    slot.reserve(mesh.edges.size());
    for (std::size_t e = 0; e < mesh.edges.size(); ++e)
        slot.emplace((static_cast<std::uint64_t>(mesh.edges[e].first) << 32) |
                         static_cast<std::uint32_t>(mesh.edges[e].second),
                     e);

    std::vector<double> weight(mesh.edges.size(), 0.0);
    for (const auto& t : mesh.triangles) {
        Eigen::Vector3d p[3] = {mesh.vertices.row(t[0]), mesh.vertices.row(t[1]),
                                mesh.vertices.row(t[2])};
        for (int k = 0; k < 3; ++k) {
            // half-cotangent of the angle at corner k, applied to the opposite edge
            const Eigen::Vector3d u = p[(k + 1) % 3] - p[k];
            const Eigen::Vector3d v = p[(k + 2) % 3] - p[k];
            const double cross = u.cross(v).norm();
            if (cross == 0.0)
                continue;  // degenerate triangle: no angle to speak of
            const double cot = std::clamp(u.dot(v) / cross, -kCotClamp, kCotClamp);
            auto [i, j] = std::minmax(t[(k + 1) % 3], t[(k + 2) % 3]);
            weight[slot.at((static_cast<std::uint64_t>(i) << 32) |
                           static_cast<std::uint32_t>(j))] += cot / 2.0;
        }
    }

    const auto m = mesh.vertices.rows();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.edges.size() * 2);
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const auto [i, j] = mesh.edges[e];
        triplets.emplace_back(i, j, weight[e]);
        triplets.emplace_back(j, i, weight[e]);
    }
    CotanWeights out;
    out.c.resize(m, m);
    out.c.setFromTriplets(triplets.begin(), triplets.end());
    out.c.makeCompressed();
    out.edge_weight = std::move(weight);
    return out;
}

}  // namespace sgwc
