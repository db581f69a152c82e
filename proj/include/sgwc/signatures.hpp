#pragma once

#include <vector>

#include <Eigen/Core>

#include "sgwc/laplacian.hpp"

namespace sgwc {

enum class PointSignatureKind { Hks, Wks };

/// Per-vertex heat/wave signatures: column j holds the p responses of vertex j
/// across the scale (or energy) grid.
struct PointSignatureBank {
    Eigen::MatrixXd values;      // p x m
    std::vector<double> scales;  // diffusion times (HKS) or energies (WKS)
    PointSignatureKind kind = PointSignatureKind::Hks;
};

/// s_{t_k}(j) = sum_l exp(-lambda_l t_k) phi_l(j)^2; scales positive ascending.
PointSignatureBank hks(const EigenBasis& basis, const std::vector<double>& scales);

/// p diffusion times log-spaced over [4 ln 10 / lambda_q, 4 ln 10 / lambda_2],
/// the window where the slowest/fastest retained modes decay to 1e-4.
std::vector<double> default_hks_scales(const EigenBasis& basis, int p);

/// s_{e_k}(j) = C_k sum_l exp(-(log e_k - log lambda_l)^2 / sigma^2) phi_l(j)^2
/// with C_k normalizing each energy's weights to sum 1; eigenvalues below
/// 1e-12 are excluded from the logs.
PointSignatureBank wks(const EigenBasis& basis, const std::vector<double>& energies,
                       double sigma);

struct WksGrid {
    std::vector<double> energies;
    double sigma = 0.0;
};

/// p energies log-equispaced over [lambda_2, lambda_q], sigma = 7x the log spacing.
WksGrid default_wks_grid(const EigenBasis& basis, int p);

enum class GlobalSpectralKind { ShapeDna, CShapeDna, GpsEmbedding };

struct GlobalSpectralVector {
    Eigen::VectorXd values;
    GlobalSpectralKind kind = GlobalSpectralKind::ShapeDna;
};

/// (lambda_2 .. lambda_{d+1}) — the zero mode skipped.
GlobalSpectralVector shape_dna(const EigenBasis& basis, int d = 10);

/// Magnitudes of the first d DFT coefficients of the 64 area-normalized
/// eigenvalues lambda_2 .. lambda_65 (hence q >= 65).
GlobalSpectralVector cshape_dna(const EigenBasis& basis, double total_area, int d = 33);

/// (1/sqrt(area * lambda_2) .. 1/sqrt(area * lambda_{d+1})).
GlobalSpectralVector gps_embedding(const EigenBasis& basis, double total_area,
                                   int d = 10);

}  // namespace sgwc
