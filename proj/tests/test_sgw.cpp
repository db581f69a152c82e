#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"

#include "sgwc/laplacian.hpp"
#include "sgwc/sgw.hpp"
#include "sgwc/util.hpp"
#include "support/meshes.hpp"
#include "support/oracles.hpp"

using namespace sgwc;
using namespace sgwc::testing;

TEST_CASE("kernel_g: band-pass shape")
{
    CHECK(kernel_g(0.0) == 0.0);
    CHECK(kernel_g(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(kernel_g(20.0) == doctest::Approx(20.0 * std::exp(-20.0)).epsilon(1e-12));
    // argmax at x = 1
    CHECK(kernel_g(1.0) > kernel_g(0.9));
    CHECK(kernel_g(1.0) > kernel_g(1.1));
}

TEST_CASE("kernel_h: low-pass shape")
{
    const double gamma = std::exp(-1.0);
    const double lambda_min = 1.0;
    CHECK(kernel_h(0.0, lambda_min, gamma) == gamma);
    CHECK(kernel_h(0.6 * lambda_min, lambda_min, gamma) ==
          doctest::Approx(gamma / std::exp(1.0)).epsilon(1e-12));
    double prev = kernel_h(0.0, lambda_min, gamma);
    for (double x = 0.1; x < 3.0; x += 0.1) {
        const double h = kernel_h(x, lambda_min, gamma);
        CHECK(h < prev);
        prev = h;
    }
}

TEST_CASE("build_kernel_bank: scale grids at lambda_max = 20")
{
    const KernelBank bank = build_kernel_bank(20.0, 3);
    CHECK(bank.lambda_min == doctest::Approx(1.0));
    CHECK(bank.gamma == doctest::Approx(std::exp(-1.0)));

    REQUIRE(bank.level_scales(1).size() == 1);
    CHECK(bank.level_scales(1)[0] == doctest::Approx(0.1).epsilon(1e-12));

    REQUIRE(bank.level_scales(2).size() == 2);
    CHECK(bank.level_scales(2)[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bank.level_scales(2)[1] == doctest::Approx(0.1).epsilon(1e-12));

    REQUIRE(bank.level_scales(3).size() == 3);
    CHECK(bank.level_scales(3)[1] ==
          doctest::Approx(std::sqrt(0.2)).epsilon(1e-12));

    // strictly decreasing within each level
    for (int level = 1; level <= 3; ++level) {
        const auto& ts = bank.level_scales(level);
        for (std::size_t k = 1; k < ts.size(); ++k)
            CHECK(ts[k] < ts[k - 1]);
    }
}

TEST_CASE("build_kernel_bank: invalid inputs")
{
    CHECK_THROWS_AS(build_kernel_bank(0.0, 2), Error);
    CHECK_THROWS_AS(build_kernel_bank(-1.0, 2), Error);
    CHECK_THROWS_AS(build_kernel_bank(5.0, 0), Error);
}

TEST_CASE("sgws_dimension follows the triangular law")
{
    const int expected[] = {2, 5, 9, 14, 20, 27};
    for (int r = 1; r <= 6; ++r)
        CHECK(sgws_dimension(r) == expected[r - 1]);
    for (int r = 1; r <= 8; ++r)
        CHECK(sgws_dimension(r) == (r + 1) * (r + 2) / 2 - 1);
}

TEST_CASE("wavelet_coefficients: delta input and materialized-psi oracle")
{
    const Mesh mesh = icosphere(1);
    const LaplacianPair pair = assemble(mesh);
    const int m = mesh.vertex_count();
    const EigenBasis basis = solve_eigs(pair, m);
    const double t = 0.8 / basis.lambda_max();

    // route 1: the library
    const int j = 5;
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(m);
    delta[j] = 1.0;
    const Eigen::VectorXd w = wavelet_coefficients(basis, delta, t);

    // route 2: explicit sum for the delta response
    double expected = 0.0;
    for (int l = 0; l < m; ++l)
        expected += kernel_g(t * basis.eigenvalues[l]) * basis.eigenfunctions(j, l) *
                    basis.eigenfunctions(j, l);
    expected *= pair.mass[j] * pair.mass[j];
    CHECK(w[j] == doctest::Approx(expected).epsilon(1e-10));

    // route 3: materialize psi_{t,i}(x) = sum_l g(t lambda_l) phi_l(i) phi_l(x) a_i
    // and take the A-inner product with a random f
    std::mt19937_64 rng(3);
    Eigen::VectorXd f(m);
    for (int i = 0; i < m; ++i)
        f[i] = uniform_in(rng, -1.0, 1.0);
    const Eigen::VectorXd wf = wavelet_coefficients(basis, f, t);
    for (int i = 0; i < m; i += 7) {
        Eigen::VectorXd psi = Eigen::VectorXd::Zero(m);
        for (int x = 0; x < m; ++x)
            for (int l = 0; l < m; ++l)
                psi[x] += pair.mass[i] * kernel_g(t * basis.eigenvalues[l]) *
                          basis.eigenfunctions(i, l) * basis.eigenfunctions(x, l);
        double inner = 0.0;  // <f, psi>_A
        for (int x = 0; x < m; ++x)
            inner += pair.mass[x] * f[x] * psi[x];
        CHECK(wf[i] == doctest::Approx(inner).epsilon(1e-10));
    }
}

TEST_CASE("wavelet_coefficients: t -> 0 kills everything")
{
    const Mesh mesh = icosphere(0);
    const EigenBasis basis = solve_eigs(assemble(mesh), mesh.vertex_count());
    Eigen::VectorXd f = Eigen::VectorXd::Ones(mesh.vertex_count());
    const Eigen::VectorXd w = wavelet_coefficients(basis, f, 1e-300);
    CHECK(w.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("scaling_coefficients: delta response and linearity")
{
    const Mesh mesh = icosphere(1);
    const LaplacianPair pair = assemble(mesh);
    const int m = mesh.vertex_count();
    const EigenBasis basis = solve_eigs(pair, m);
    const KernelBank bank = build_kernel_bank(basis.lambda_max(), 2);

    const int j = 11;
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(m);
    delta[j] = 1.0;
    const Eigen::VectorXd s = scaling_coefficients(basis, delta, bank);
    double expected = 0.0;
    for (int l = 0; l < m; ++l)
        expected += kernel_h(basis.eigenvalues[l], bank.lambda_min, bank.gamma) *
                    basis.eigenfunctions(j, l) * basis.eigenfunctions(j, l);
    expected *= pair.mass[j] * pair.mass[j];
    CHECK(s[j] == doctest::Approx(expected).epsilon(1e-10));

    CHECK(scaling_coefficients(basis, Eigen::VectorXd::Zero(m), bank).isZero(0.0));
    CHECK_THROWS_AS(wavelet_coefficients(basis, Eigen::VectorXd::Zero(m + 2), 1.0),
                    Error);
    CHECK_THROWS_AS(
        scaling_coefficients(basis, Eigen::VectorXd::Zero(m + 2), bank), Error);
}

TEST_CASE("sgws_matrix: brute-force oracle agreement at q = m")
{
    for (int resolution : {1, 2, 3}) {
        const Mesh mesh = bumped_sphere(1, 3, 0.25, 41);
        const LaplacianPair pair = assemble(mesh);
        const EigenBasis impl_basis = solve_eigs(pair, mesh.vertex_count());
        const EigenBasis oracle_basis =
            dense_reference_eigs(pair, mesh.vertex_count());
        const SGWSMatrix sig = sgws_matrix(impl_basis, resolution);
        const Eigen::MatrixXd ref = brute_sgws(oracle_basis, resolution);
        REQUIRE(sig.values.rows() == ref.rows());
        CHECK((sig.values - ref).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(sig.values.minCoeff() >= 0.0);
    }
}

TEST_CASE("sgws_matrix: icosahedron columns are identical by symmetry")
{
    const Mesh mesh = icosphere(0);  // vertex-transitive
    const EigenBasis basis = solve_eigs(assemble(mesh), mesh.vertex_count());
    const SGWSMatrix sig = sgws_matrix(basis, 2);
    for (int j = 1; j < mesh.vertex_count(); ++j)
        for (int r = 0; r < sig.values.rows(); ++r)
            CHECK(sig.values(r, j) ==
                  doctest::Approx(sig.values(r, 0)).epsilon(1e-8));
}

TEST_CASE("sgws_matrix: rigid motion leaves the signature alone")
{
    const Mesh mesh = bumped_sphere(1, 2, 0.3, 9);
    Eigen::MatrixXd V = mesh.vertices;
    // quarter turn about z plus a translation
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        const double x = V(i, 0), y = V(i, 1);
        V(i, 0) = -y + 4.0;
        V(i, 1) = x - 2.0;
    }
    const Mesh moved = make_mesh(V, mesh.triangles);
    const SGWSMatrix a = sgws_matrix(solve_eigs(assemble(mesh), 30), 2);
    const SGWSMatrix b = sgws_matrix(solve_eigs(assemble(moved), 30), 2);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("sgws_matrix: truncation only adds mass")
{
    const Mesh mesh = icosphere(1);
    const LaplacianPair pair = assemble(mesh);
    const int m = mesh.vertex_count();
    const EigenBasis full = solve_eigs(pair, 20);

    // 10-mode truncation padded with a zero eigenfunction at lambda_20, so
    // both signatures are built from the identical kernel bank
    EigenBasis truncated;
    truncated.eigenvalues.resize(11);
    truncated.eigenvalues.head(10) = full.eigenvalues.head(10);
    truncated.eigenvalues[10] = full.eigenvalues[19];
    truncated.eigenfunctions = Eigen::MatrixXd::Zero(m, 11);
    truncated.eigenfunctions.leftCols(10) = full.eigenfunctions.leftCols(10);
    truncated.vertex_areas = full.vertex_areas;

    const SGWSMatrix more = sgws_matrix(full, 2);
    const SGWSMatrix less = sgws_matrix(truncated, 2);
    for (Eigen::Index r = 0; r < more.values.rows(); ++r)
        for (Eigen::Index c = 0; c < more.values.cols(); ++c)
            CHECK(more.values(r, c) >= less.values(r, c) - 1e-15);
}

TEST_CASE("frame_bounds: G(0) and positivity for the paper's setup")
{
    const KernelBank bank = build_kernel_bank(20.0, 2);
    const FrameBounds fb = frame_bounds(bank, 2, 20.0);
    CHECK(fb.frame_lower <= fb.frame_upper);
    CHECK(fb.frame_lower > 0.0);

    // at lambda = 0 only h contributes, so G(0) = gamma^2 bounds the extremes
    const double g0 = bank.gamma * bank.gamma;
    CHECK(fb.frame_upper >= g0);
    CHECK(fb.frame_lower <= g0 + 1e-12);
}

TEST_CASE("write_frame_csv emits the documented columns")
{
    const KernelBank bank = build_kernel_bank(10.0, 2);
    std::ostringstream out;
    write_frame_csv(out, bank, 2, 10.0);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "lambda,G,h2,g2_1,g2_2");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            ++rows;
    CHECK(rows == 1000);
}
