#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"

#include "sgwc/laplacian.hpp"
#include "sgwc/mesh.hpp"
#include "sgwc/signatures.hpp"
#include "sgwc/util.hpp"
#include "support/meshes.hpp"
#include "support/oracles.hpp"

using namespace sgwc;
using namespace sgwc::testing;

namespace {

Eigen::MatrixXd brute_hks(const EigenBasis& basis, const std::vector<double>& scales)
{
    const Eigen::Index m = basis.eigenfunctions.rows();
    Eigen::MatrixXd out(scales.size(), m);
    for (std::size_t k = 0; k < scales.size(); ++k)
        for (Eigen::Index j = 0; j < m; ++j) {
            double acc = 0.0;
            for (Eigen::Index l = 0; l < basis.count(); ++l)
                acc += std::exp(-basis.eigenvalues[l] * scales[k]) *
                       basis.eigenfunctions(j, l) * basis.eigenfunctions(j, l);
            out(k, j) = acc;
        }
    return out;
}

Eigen::MatrixXd brute_wks(const EigenBasis& basis, const std::vector<double>& energies,
                          double sigma)
{
    const Eigen::Index m = basis.eigenfunctions.rows();
    Eigen::MatrixXd out(energies.size(), m);
    for (std::size_t k = 0; k < energies.size(); ++k) {
        std::vector<double> w(basis.count(), 0.0);
        double total = 0.0;
        for (Eigen::Index l = 0; l < basis.count(); ++l) {
            if (basis.eigenvalues[l] <= 1e-12)
                continue;
            const double d = std::log(energies[k]) - std::log(basis.eigenvalues[l]);
            w[l] = std::exp(-d * d / (sigma * sigma));
            total += w[l];
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            double acc = 0.0;
            for (Eigen::Index l = 0; l < basis.count(); ++l)
                acc += w[l] / total * basis.eigenfunctions(j, l) * basis.eigenfunctions(j, l);
            out(k, j) = acc;
        }
    }
    return out;
}

// Goertzel-recurrence DFT bin magnitude, an independent route to |X_r|
double goertzel_magnitude(const Eigen::VectorXd& x, int bin)
{
    const double omega = 2.0 * std::numbers::pi * bin / static_cast<double>(x.size());
    const double coeff = 2.0 * std::cos(omega);
    double s1 = 0.0;
    double s2 = 0.0;
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        const double s = x[n] + coeff * s1 - s2;
        s2 = s1;
        s1 = s;
    }
    return std::sqrt(std::max(0.0, s1 * s1 + s2 * s2 - coeff * s1 * s2));
}

EigenBasis synthetic_basis(const Eigen::VectorXd& eigenvalues,
                           const Eigen::MatrixXd& eigenfunctions)
{
    EigenBasis basis;
    basis.eigenvalues = eigenvalues;
    basis.eigenfunctions = eigenfunctions;
    basis.vertex_areas = Eigen::VectorXd::Ones(eigenfunctions.rows());
    return basis;
}

}  // namespace

TEST_CASE("hks: matches explicit heat-kernel sum")
{
    const Mesh mesh = icosphere(1);
    const LaplacianPair pair = assemble(mesh);
    const EigenBasis full = solve_eigs(pair, mesh.vertex_count());
    const EigenBasis partial = solve_eigs(pair, 20);

    for (const EigenBasis* basis : {&full, &partial}) {
        const std::vector<double> scales = default_hks_scales(*basis, 6);
        const PointSignatureBank bank = hks(*basis, scales);
        const Eigen::MatrixXd ref = brute_hks(*basis, scales);
        REQUIRE(bank.values.rows() == 6);
        REQUIRE(bank.values.cols() == mesh.vertex_count());
        CHECK((bank.values - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.maxCoeff());
        CHECK(bank.kind == PointSignatureKind::Hks);
        CHECK(bank.scales == scales);
    }
}

TEST_CASE("hks: single eigenpair and small-time limit")
{
    Eigen::MatrixXd phi(3, 1);
    phi << 0.5, -1.25, 2.0;
    const EigenBasis one = synthetic_basis(Eigen::VectorXd::Constant(1, 2.0), phi);
    const std::vector<double> scales{0.25, 1.0, 4.0};
    const PointSignatureBank bank = hks(one, scales);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
            CHECK(bank.values(k, j) ==
                  doctest::Approx(std::exp(-2.0 * scales[k]) * phi(j, 0) * phi(j, 0))
                      .epsilon(1e-14));

    // t -> 0+ on a complete basis: the sum collapses to sum_l phi_l(j)^2, which
    // equals 1/a_j by A-orthonormality of a full basis
    const Mesh mesh = icosphere(0);
    const LaplacianPair pair = assemble(mesh);
    const EigenBasis full = solve_eigs(pair, mesh.vertex_count());
    const PointSignatureBank tiny = hks(full, {1e-300});
    for (int j = 0; j < mesh.vertex_count(); ++j) {
        CHECK(tiny.values(0, j) ==
              doctest::Approx(full.eigenfunctions.row(j).squaredNorm()).epsilon(1e-12));
        CHECK(tiny.values(0, j) ==
              doctest::Approx(1.0 / full.vertex_areas[j]).epsilon(1e-8));
    }
}

TEST_CASE("hks: positive and nonincreasing in the scale")
{
    const Mesh mesh = bumped_sphere(1, 3, 0.25, 11);
    const EigenBasis basis = solve_eigs(assemble(mesh), 25);
    const PointSignatureBank bank = hks(basis, default_hks_scales(basis, 8));
    CHECK(bank.values.minCoeff() > 0.0);
    for (Eigen::Index k = 0; k + 1 < bank.values.rows(); ++k)
        for (Eigen::Index j = 0; j < bank.values.cols(); ++j)
            CHECK(bank.values(k + 1, j) <= bank.values(k, j) + 1e-15);
}

TEST_CASE("hks: input validation")
{
    const EigenBasis basis =
        synthetic_basis(Eigen::VectorXd::LinSpaced(3, 0.0, 2.0), Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS(hks(basis, {}), Error);
    CHECK_THROWS_AS(hks(basis, {2.0, 1.0}), Error);
    CHECK_THROWS_AS(hks(basis, {0.0, 1.0}), Error);
    CHECK_THROWS_AS(hks(basis, {-1.0, 1.0}), Error);
}

TEST_CASE("default_hks_scales: log grid between the mode decay times")
{
    const Mesh mesh = icosphere(1);
    const EigenBasis basis = solve_eigs(assemble(mesh), 15);
    const double four_ln10 = 4.0 * std::log(10.0);
    const std::vector<double> scales = default_hks_scales(basis, 3);
    REQUIRE(scales.size() == 3);
    CHECK(scales.front() ==
          doctest::Approx(four_ln10 / basis.lambda_max()).epsilon(1e-14));
    CHECK(scales.back() ==
          doctest::Approx(four_ln10 / basis.eigenvalues[1]).epsilon(1e-14));
    CHECK(scales[1] == doctest::Approx(std::sqrt(scales[0] * scales[2])).epsilon(1e-12));

    const std::vector<double> single = default_hks_scales(basis, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == doctest::Approx(four_ln10 / basis.lambda_max()).epsilon(1e-14));
    CHECK_THROWS_AS(default_hks_scales(basis, 0), Error);
}

TEST_CASE("wks: matches explicit band-pass sum")
{
    const Mesh mesh = icosphere(1);
    const EigenBasis basis = solve_eigs(assemble(mesh), mesh.vertex_count());
    const WksGrid grid = default_wks_grid(basis, 6);
    const PointSignatureBank bank = wks(basis, grid.energies, grid.sigma);
    const Eigen::MatrixXd ref = brute_wks(basis, grid.energies, grid.sigma);
    REQUIRE(bank.values.rows() == 6);
    REQUIRE(bank.values.cols() == mesh.vertex_count());
    CHECK((bank.values - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.maxCoeff());
    CHECK(bank.kind == PointSignatureKind::Wks);
}

TEST_CASE("wks: normalization makes weights sum to one")
{
    // with phi_l(j)^2 = 1 everywhere, every signature entry IS the weight sum
    const Eigen::VectorXd lambdas = Eigen::VectorXd::LinSpaced(4, 1.0, 8.0);
    const EigenBasis basis = synthetic_basis(lambdas, Eigen::MatrixXd::Ones(3, 4));
    const PointSignatureBank bank = wks(basis, {0.7, 2.0, 9.0}, 1.3);
    for (Eigen::Index k = 0; k < bank.values.rows(); ++k)
        for (Eigen::Index j = 0; j < bank.values.cols(); ++j)
            CHECK(bank.values(k, j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("wks: single eigenpair collapses to phi squared")
{
    Eigen::MatrixXd phi(3, 1);
    phi << 0.4, -0.9, 1.5;
    const EigenBasis one = synthetic_basis(Eigen::VectorXd::Constant(1, 3.5), phi);
    const PointSignatureBank bank = wks(one, {3.5, 10.0}, 0.8);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 3; ++j)
            CHECK(bank.values(k, j) ==
                  doctest::Approx(phi(j, 0) * phi(j, 0)).epsilon(1e-14));
}

TEST_CASE("wks: near-zero eigenvalues are excluded")
{
    Eigen::MatrixXd phi(3, 3);
    phi << 0.3, 1.1, -0.7, 0.9, -0.2, 0.5, -1.3, 0.8, 0.6;
    Eigen::VectorXd lambdas(3);
    lambdas << 0.0, 0.5, 2.0;
    const EigenBasis with_zero = synthetic_basis(lambdas, phi);
    const EigenBasis trimmed =
        synthetic_basis(lambdas.tail(2), phi.rightCols(2));

    const std::vector<double> energies{0.5, 1.0, 2.0};
    const PointSignatureBank a = wks(with_zero, energies, 0.9);
    const PointSignatureBank b = wks(trimmed, energies, 0.9);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("wks: flat-band limit spreads weight uniformly")
{
    const Mesh mesh = icosphere(1);
    const EigenBasis basis = solve_eigs(assemble(mesh), mesh.vertex_count());
    int included = 0;
    for (Eigen::Index l = 0; l < basis.count(); ++l)
        if (basis.eigenvalues[l] > 1e-12)
            ++included;
    REQUIRE(included == basis.count() - 1);

    const WksGrid grid = default_wks_grid(basis, 4);
    const PointSignatureBank bank = wks(basis, grid.energies, 1e9);
    for (Eigen::Index j = 0; j < bank.values.cols(); ++j) {
        double expected = 0.0;
        for (Eigen::Index l = 0; l < basis.count(); ++l)
            if (basis.eigenvalues[l] > 1e-12)
                expected += basis.eigenfunctions(j, l) * basis.eigenfunctions(j, l);
        expected /= included;
        for (Eigen::Index k = 0; k < bank.values.rows(); ++k)
            CHECK(bank.values(k, j) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("wks: input validation")
{
    const EigenBasis zero =
        synthetic_basis(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS(wks(zero, {1.0}, 0.5), Error);
    const EigenBasis ok =
        synthetic_basis(Eigen::VectorXd::LinSpaced(3, 1.0, 3.0), Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS(wks(ok, {}, 0.5), Error);
    CHECK_THROWS_AS(wks(ok, {1.0}, 0.0), Error);
    CHECK_THROWS_AS(wks(ok, {1.0}, -1.0), Error);
    CHECK_THROWS_AS(default_wks_grid(ok, 1), Error);
}

TEST_CASE("default_wks_grid: spans the nonzero spectrum")
{
    const Mesh mesh = icosphere(1);
    const EigenBasis basis = solve_eigs(assemble(mesh), 20);
    const WksGrid grid = default_wks_grid(basis, 5);
    REQUIRE(grid.energies.size() == 5);
    CHECK(grid.energies.front() == doctest::Approx(basis.eigenvalues[1]).epsilon(1e-12));
    CHECK(grid.energies.back() == doctest::Approx(basis.lambda_max()).epsilon(1e-12));
    const double spacing =
        (std::log(basis.lambda_max()) - std::log(basis.eigenvalues[1])) / 4.0;
    CHECK(grid.sigma == doctest::Approx(7.0 * spacing).epsilon(1e-12));
}

TEST_CASE("point signatures: rigid-motion invariance")
{
    const Mesh mesh = bumped_sphere(1, 3, 0.25, 7);
    Mesh moved = mesh;
    for (Eigen::Index i = 0; i < moved.vertices.rows(); ++i) {
        const double x = moved.vertices(i, 0);
        const double y = moved.vertices(i, 1);
        moved.vertices(i, 0) = -y + 0.3;
        moved.vertices(i, 1) = x - 0.2;
        moved.vertices(i, 2) += 0.5;
    }
    const EigenBasis a = solve_eigs(assemble(mesh), 25);
    const EigenBasis b = solve_eigs(assemble(moved), 25);

    const PointSignatureBank ha = hks(a, default_hks_scales(a, 6));
    const PointSignatureBank hb = hks(b, default_hks_scales(b, 6));
    CHECK((ha.values - hb.values).cwiseAbs().maxCoeff() <=
          1e-6 * ha.values.cwiseAbs().maxCoeff());

    const WksGrid ga = default_wks_grid(a, 6);
    const WksGrid gb = default_wks_grid(b, 6);
    const PointSignatureBank wa = wks(a, ga.energies, ga.sigma);
    const PointSignatureBank wb = wks(b, gb.energies, gb.sigma);
    CHECK((wa.values - wb.values).cwiseAbs().maxCoeff() <=
          1e-6 * wa.values.cwiseAbs().maxCoeff());
}

TEST_CASE("shape_dna: truncated spectrum with the zero mode skipped")
{
    const Mesh mesh = icosphere(1);
    const EigenBasis basis = solve_eigs(assemble(mesh), mesh.vertex_count());
    const GlobalSpectralVector dna = shape_dna(basis);
    REQUIRE(dna.values.size() == 10);
    CHECK(dna.kind == GlobalSpectralKind::ShapeDna);
    for (int i = 0; i < 10; ++i)
        CHECK(dna.values[i] == basis.eigenvalues[i + 1]);
    for (int i = 0; i + 1 < 10; ++i)
        CHECK(dna.values[i] <= dna.values[i + 1]);

    const EigenBasis small = solve_eigs(assemble(mesh), 10);
    CHECK_THROWS_AS(shape_dna(small), Error);
    CHECK(shape_dna(small, 9).values.size() == 9);
}

TEST_CASE("shape_dna: inverse-square scaling under mesh dilation")
{
    const Mesh mesh = torus_grid(8, 6, 1.0, 0.4);
    Mesh scaled = mesh;
    scaled.vertices *= 2.0;
    const EigenBasis a = solve_eigs(assemble(mesh), mesh.vertex_count());
    const EigenBasis b = solve_eigs(assemble(scaled), mesh.vertex_count());
    const GlobalSpectralVector da = shape_dna(a);
    const GlobalSpectralVector db = shape_dna(b);
    for (int i = 0; i < 10; ++i)
        CHECK(db.values[i] == doctest::Approx(da.values[i] / 4.0).epsilon(1e-6));
}

TEST_CASE("cshape_dna: transform of a constant spectrum")
{
    Eigen::VectorXd lambdas(65);
    lambdas[0] = 0.0;
    lambdas.tail(64).setConstant(0.75);
    const EigenBasis basis = synthetic_basis(lambdas, Eigen::MatrixXd::Zero(2, 65));
    const GlobalSpectralVector sig = cshape_dna(basis, 1.0);
    REQUIRE(sig.values.size() == 33);
    CHECK(sig.kind == GlobalSpectralKind::CShapeDna);
    CHECK(sig.values[0] == doctest::Approx(64.0 * 0.75).epsilon(1e-12));
    for (int r = 1; r < 33; ++r)
        CHECK(sig.values[r] <= 1e-9 * sig.values[0]);
}

TEST_CASE("cshape_dna: magnitudes match a Goertzel evaluation")
{
    const Mesh mesh = torus_grid(10, 8, 1.0, 0.4);
    const EigenBasis basis = solve_eigs(assemble(mesh), mesh.vertex_count());
    const double area = vertex_areas(mesh).total_area;
    const GlobalSpectralVector sig = cshape_dna(basis, area);
    const Eigen::VectorXd window = area * basis.eigenvalues.segment(1, 64);
    for (int r = 0; r < 33; ++r) {
        const double ref = goertzel_magnitude(window, r);
        CHECK(std::abs(sig.values[r] - ref) <= 1e-8 * std::max(1.0, window.sum()));
    }
}

TEST_CASE("cshape_dna: scale invariance and preconditions")
{
    const Mesh mesh = torus_grid(10, 8, 1.0, 0.4);
    Mesh scaled = mesh;
    scaled.vertices *= 2.0;
    const EigenBasis a = solve_eigs(assemble(mesh), mesh.vertex_count());
    const EigenBasis b = solve_eigs(assemble(scaled), mesh.vertex_count());
    const GlobalSpectralVector sa = cshape_dna(a, vertex_areas(mesh).total_area);
    const GlobalSpectralVector sb = cshape_dna(b, vertex_areas(scaled).total_area);
    for (int r = 0; r < 33; ++r)
        CHECK(sb.values[r] ==
              doctest::Approx(sa.values[r]).epsilon(1e-8).scale(sa.values[0]));

    const EigenBasis small = synthetic_basis(Eigen::VectorXd::LinSpaced(64, 0.0, 6.3),
                                             Eigen::MatrixXd::Zero(2, 64));
    CHECK_THROWS_AS(cshape_dna(small, 1.0), Error);
    CHECK_THROWS_AS(cshape_dna(a, 1.0, 0), Error);
    CHECK_THROWS_AS(cshape_dna(a, 1.0, 65), Error);
}

TEST_CASE("gps_embedding: inverse square roots of the scaled spectrum")
{
    const Mesh mesh = icosphere(1);
    const EigenBasis basis = solve_eigs(assemble(mesh), mesh.vertex_count());
    const double area = vertex_areas(mesh).total_area;
    const GlobalSpectralVector gps = gps_embedding(basis, area);
    REQUIRE(gps.values.size() == 10);
    CHECK(gps.kind == GlobalSpectralKind::GpsEmbedding);
    for (int i = 0; i < 10; ++i)
        CHECK(gps.values[i] ==
              doctest::Approx(1.0 / std::sqrt(area * basis.eigenvalues[i + 1]))
                  .epsilon(1e-14));
    CHECK(gps.values.minCoeff() > 0.0);
    for (int i = 0; i + 1 < 10; ++i)
        CHECK(gps.values[i + 1] <= gps.values[i]);
}

TEST_CASE("gps_embedding: scale invariance and failure modes")
{
    const Mesh mesh = torus_grid(8, 6, 1.0, 0.4);
    Mesh scaled = mesh;
    scaled.vertices *= 3.0;
    const EigenBasis a = solve_eigs(assemble(mesh), mesh.vertex_count());
    const EigenBasis b = solve_eigs(assemble(scaled), mesh.vertex_count());
    const GlobalSpectralVector ga = gps_embedding(a, vertex_areas(mesh).total_area);
    const GlobalSpectralVector gb = gps_embedding(b, vertex_areas(scaled).total_area);
    for (int i = 0; i < 10; ++i)
        CHECK(gb.values[i] == doctest::Approx(ga.values[i]).epsilon(1e-8));

    Eigen::VectorXd doubled_zero = Eigen::VectorXd::LinSpaced(12, 0.0, 11.0);
    doubled_zero[1] = 0.0;  // a second connected component's zero mode
    const EigenBasis disconnected =
        synthetic_basis(doubled_zero, Eigen::MatrixXd::Zero(2, 12));
    CHECK_THROWS_WITH_AS(gps_embedding(disconnected, 1.0),
                         doctest::Contains("zero eigenvalue"), Error);
    const EigenBasis small = solve_eigs(assemble(mesh), 8);
    CHECK_THROWS_AS(gps_embedding(small, 1.0), Error);
}

TEST_CASE("global vectors: invariant under vertex relabeling")
{
    const Mesh mesh = torus_grid(8, 9, 1.0, 0.4);
    std::vector<int> perm(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i)
        perm[i] = i;
    std::mt19937_64 rng(99);
    std::shuffle(perm.begin(), perm.end(), rng);

    Eigen::MatrixXd vertices(mesh.vertices.rows(), 3);
    for (int i = 0; i < mesh.vertex_count(); ++i)
        vertices.row(perm[i]) = mesh.vertices.row(i);
    std::vector<std::array<int, 3>> triangles = mesh.triangles;
    for (auto& tri : triangles)
        for (int& v : tri)
            v = perm[v];
    const Mesh relabeled = make_mesh(std::move(vertices), std::move(triangles));

    const EigenBasis a = solve_eigs(assemble(mesh), mesh.vertex_count());
    const EigenBasis b = solve_eigs(assemble(relabeled), mesh.vertex_count());
    const GlobalSpectralVector da = shape_dna(a);
    const GlobalSpectralVector db = shape_dna(b);
    for (int i = 0; i < 10; ++i)
        CHECK(db.values[i] == doctest::Approx(da.values[i]).epsilon(1e-9));

    const double area = vertex_areas(mesh).total_area;
    const double area_p = vertex_areas(relabeled).total_area;
    CHECK(area_p == doctest::Approx(area).epsilon(1e-12));
    const GlobalSpectralVector ga = gps_embedding(a, area);
    const GlobalSpectralVector gb = gps_embedding(b, area_p);
    for (int i = 0; i < 10; ++i)
        CHECK(gb.values[i] == doctest::Approx(ga.values[i]).epsilon(1e-9));
}
