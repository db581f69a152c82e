#pragma once

#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sgwc/mesh.hpp"

namespace sgwc {

/// Discrete LBO as the pair (W, A): symmetric cotangent stiffness matrix and
/// diagonal lumped mass matrix (stored as its diagonal).
struct LaplacianPair {
    Eigen::SparseMatrix<double> stiffness;  // W = diag(sum_k c_ik) - (c_ij)
    Eigen::VectorXd mass;                   // a_i, floored to 1e-12 * mean(a)
};

LaplacianPair assemble(const Mesh& mesh);

/// Truncated basis of the generalized problem W phi = lambda A phi.
struct EigenBasis {
    Eigen::VectorXd eigenvalues;     // ascending, length q
    Eigen::MatrixXd eigenfunctions;  // m x q, A-orthonormal columns
    Eigen::VectorXd vertex_areas;    // diagonal of A used for inner products

    int count() const { return static_cast<int>(eigenvalues.size()); }
    double lambda_max() const { return eigenvalues[eigenvalues.size() - 1]; }
};

/// q smallest eigenpairs. q < m runs shift-invert Lanczos (shift -1e-8,
/// deterministic start vector, full reorthogonalization, subspace grown until
/// residuals pass); q == m solves densely. Eigenfunction signs are fixed so
/// the first entry above 1e-8 in magnitude is positive.
/// Throws on non-convergence, reporting the attained residual.
EigenBasis solve_eigs(const LaplacianPair& pair, int q);

/// Forward transform fhat(l) = sum_i a_i f(i) phi_l(i).
Eigen::VectorXd gft(const EigenBasis& basis, const Eigen::VectorXd& f);

/// Inverse transform f = Phi fhat.
Eigen::VectorXd igft(const EigenBasis& basis, const Eigen::VectorXd& fhat);

void save_eigenbasis(const std::string& path, const EigenBasis& basis);
EigenBasis load_eigenbasis(const std::string& path);

}  // namespace sgwc
