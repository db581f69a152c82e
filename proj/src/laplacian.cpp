#include "sgwc/laplacian.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "sgwc/binary_io.hpp"
#include "sgwc/util.hpp"

namespace sgwc {

namespace {

constexpr double kShift = -1e-8;
constexpr std::uint64_t kStartVectorSeed = 1234567;

void fix_signs(Eigen::MatrixXd& phi)
{
    for (Eigen::Index c = 0; c < phi.cols(); ++c) {
        for (Eigen::Index i = 0; i < phi.rows(); ++i) {
            if (std::abs(phi(i, c)) > 1e-8) {
                if (phi(i, c) < 0.0)
                    phi.col(c) = -phi.col(c);
                break;
            }
        }
    }
}

// Largest residual ||W phi - lambda A phi|| over columns, relative to
// max(1, ||W phi||); returns true when every column passes.
bool residuals_ok(const LaplacianPair& pair, const Eigen::VectorXd& lambda,
                  const Eigen::MatrixXd& phi, double* worst = nullptr)
{
    bool ok = true;
    double attained = 0.0;
    for (Eigen::Index c = 0; c < phi.cols(); ++c) {
        const Eigen::VectorXd wphi = pair.stiffness * phi.col(c);
        const double r =
            (wphi - lambda[c] * (pair.mass.array() * phi.col(c).array()).matrix()).norm();
        const double bound = 1e-6 * std::max(1.0, wphi.norm());
        attained = std::max(attained, r / std::max(bound / 1e-6, 1e-300));
        if (r > bound)
            ok = false;
    }
    if (worst)
        *worst = attained;
    return ok;
}

EigenBasis finish(const LaplacianPair& pair, Eigen::VectorXd lambda, Eigen::MatrixXd phi)
{
    // tiny negative values are roundoff around the zero mode
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        if (lambda[i] < 0.0 && lambda[i] > -1e-6 * std::abs(lambda[lambda.size() - 1]))
            lambda[i] = 0.0;
    fix_signs(phi);
    return EigenBasis{std::move(lambda), std::move(phi), pair.mass};
}

EigenBasis solve_dense(const LaplacianPair& pair, int q)
{
    const Eigen::MatrixXd w = Eigen::MatrixXd(pair.stiffness);
    const Eigen::MatrixXd a = Eigen::MatrixXd(pair.mass.asDiagonal());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(w, a);
    if (es.info() != Eigen::Success)
        throw Error("dense generalized eigensolve failed");
    return finish(pair, es.eigenvalues().head(q), es.eigenvectors().leftCols(q));
}

}  // namespace

LaplacianPair assemble(const Mesh& mesh)
{
    const auto m = mesh.vertices.rows();
    const CotanWeights cw = cotangent_weights(mesh);

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.edges.size() * 2 + m);
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const auto [i, j] = mesh.edges[e];
        const double w = cw.edge_weight[e];
        triplets.emplace_back(i, j, -w);
        triplets.emplace_back(j, i, -w);
        diag[i] += w;
        diag[j] += w;
    }
    for (Eigen::Index i = 0; i < m; ++i)
        triplets.emplace_back(i, i, diag[i]);

    LaplacianPair pair;
    pair.stiffness.resize(m, m);
    pair.stiffness.setFromTriplets(triplets.begin(), triplets.end());
    pair.stiffness.makeCompressed();

    pair.mass = vertex_areas(mesh).a;
    const double floor = 1e-12 * pair.mass.mean();
    pair.mass = pair.mass.cwiseMax(floor);
    return pair;
}

EigenBasis solve_eigs(const LaplacianPair& pair, int q)
{
    const int m = static_cast<int>(pair.mass.size());
    if (q < 1 || q > m)
        throw Error("eigenpair count q=" + std::to_string(q) + " out of range for m=" +
                    std::to_string(m));
    if (q == m)
        return solve_dense(pair, q);

    // shift-invert operator B = (W - shift*A)^{-1} A, self-adjoint under the
    // A-inner product; its largest eigenvalues 1/(lambda - shift) correspond
    // to the smallest lambda
    Eigen::SparseMatrix<double> shifted(m, m);
    {
        std::vector<Eigen::Triplet<double>> diag;
        diag.reserve(m);
        for (int i = 0; i < m; ++i)
            diag.emplace_back(i, i, -kShift * pair.mass[i]);
        shifted.setFromTriplets(diag.begin(), diag.end());
        shifted += pair.stiffness;
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(shifted);
    if (ldlt.info() != Eigen::Success)
        throw Error("LDLT factorization of shifted stiffness matrix failed");

    const auto apply_op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return ldlt.solve((pair.mass.array() * v.array()).matrix());
    };
    const auto a_norm = [&](const Eigen::VectorXd& v) {
        return std::sqrt((pair.mass.array() * v.array().square()).sum());
    };

    std::mt19937_64 rng(kStartVectorSeed);
    const auto random_vector = [&] {
        Eigen::VectorXd v(m);
        for (int i = 0; i < m; ++i)
            v[i] = uniform_in(rng, -1.0, 1.0);
        return v;
    };

    int target = std::min(m, std::max(2 * q + 1, q + 32));
    Eigen::MatrixXd basis(m, target);     // A-orthonormal Lanczos vectors
    Eigen::MatrixXd image(m, target);     // B * basis, column by column
    basis.col(0) = random_vector();
    basis.col(0) /= a_norm(basis.col(0));
    int built = 0;

    double worst = 0.0;
    while (true) {
        while (built < target) {
            if (built > 0) {
                Eigen::VectorXd w = image.col(built - 1);
                const double scale = std::max(a_norm(w), 1e-300);
                double beta = 0.0;
                for (int attempt = 0; attempt < 64; ++attempt) {
                    for (int pass = 0; pass < 2; ++pass)
                        w -= basis.leftCols(built) *
                             (basis.leftCols(built).transpose() *
                              (pair.mass.array() * w.array()).matrix());
                    beta = a_norm(w);
                    if (beta > 1e-10 * scale)
                        break;
                    w = random_vector();  // invariant subspace exhausted
                }
                basis.col(built) = w / beta;
            }
            image.col(built) = apply_op(basis.col(built));
            ++built;
        }

        // Rayleigh-Ritz on the built subspace
        Eigen::MatrixXd proj = basis.leftCols(built).transpose() *
                               (pair.mass.asDiagonal() * image.leftCols(built));
        proj = 0.5 * (proj + proj.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(proj);
        if (es.info() != Eigen::Success)
            throw Error("Rayleigh-Ritz eigensolve failed");

        // largest theta <-> smallest lambda = shift + 1/theta
        Eigen::VectorXd lambda(q);
        Eigen::MatrixXd phi(m, q);
        bool usable = true;
        for (int i = 0; i < q; ++i) {
            const double theta = es.eigenvalues()[built - 1 - i];
            if (theta <= 0.0) {
                usable = false;  // subspace too small to resolve this end
                break;
            }
            lambda[i] = kShift + 1.0 / theta;
            phi.col(i) = basis.leftCols(built) * es.eigenvectors().col(built - 1 - i);
        }
        if (usable && residuals_ok(pair, lambda, phi, &worst))
            return finish(pair, std::move(lambda), std::move(phi));
        if (built == m) {
            if (usable)
                return finish(pair, std::move(lambda), std::move(phi));
            throw Error("Lanczos failed to produce " + std::to_string(q) +
                        " eigenpairs at full subspace; attained relative residual " +
                        std::to_string(worst));
        }

        target = std::min(m, target + std::max(32, q / 2));
        basis.conservativeResize(Eigen::NoChange, target);
        image.conservativeResize(Eigen::NoChange, target);
    }
}

Eigen::VectorXd gft(const EigenBasis& basis, const Eigen::VectorXd& f)
{
    if (f.size() != basis.eigenfunctions.rows())
        throw Error("gft: signal length does not match basis");
    return basis.eigenfunctions.transpose() *
           (basis.vertex_areas.array() * f.array()).matrix();
}

Eigen::VectorXd igft(const EigenBasis& basis, const Eigen::VectorXd& fhat)
{
    if (fhat.size() != basis.eigenfunctions.cols())
        throw Error("igft: coefficient length does not match basis");
    return basis.eigenfunctions * fhat;
}

void save_eigenbasis(const std::string& path, const EigenBasis& basis)
{
    atomic_file_write(path, [&](BinaryWriter& w) {
        w.header("SGWCEIG\0", 1);
        w.u64(static_cast<std::uint64_t>(basis.eigenfunctions.rows()));
        w.u64(static_cast<std::uint64_t>(basis.eigenfunctions.cols()));
        w.doubles(basis.eigenvalues.data(), basis.eigenvalues.size());
        w.matrix(basis.eigenfunctions);
        w.doubles(basis.vertex_areas.data(), basis.vertex_areas.size());
    });
}

EigenBasis load_eigenbasis(const std::string& path)
{
    BinaryReader r(path);
    r.header("SGWCEIG\0");
    const auto m = static_cast<Eigen::Index>(r.u64());
    const auto q = static_cast<Eigen::Index>(r.u64());
    EigenBasis basis;
    basis.eigenvalues.resize(q);
    r.doubles(basis.eigenvalues.data(), q);
    basis.eigenfunctions = r.matrix(m, q);
    basis.vertex_areas.resize(m);
    r.doubles(basis.vertex_areas.data(), m);
    return basis;
}

}  // namespace sgwc
