#pragma once

#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "sgwc/laplacian.hpp"

namespace sgwc {

/// Band-pass generating kernel g(x) = x e^{-x}: g(0)=0, peak e^{-1} at x=1.
double kernel_g(double x);

/// Low-pass scaling kernel h(x) = gamma * exp(-(x / (0.6 lambda_min))^4).
double kernel_h(double x, double lambda_min, double gamma);

/// Scale grids for every level L = 1..R. Scales within a level run from
/// coarse t_1 = 2/lambda_min down to fine t_L = 2/lambda_max,
/// logarithmically equispaced; a single-scale level uses the fine endpoint.
struct KernelBank {
    int resolution = 0;       // R
    double lambda_max = 0.0;
    double lambda_min = 0.0;  // lambda_max / 20
    double gamma = 0.0;       // max of g
    std::vector<std::vector<double>> scales;  // scales[L-1] has length L

    const std::vector<double>& level_scales(int level) const { return scales[level - 1]; }
};

KernelBank build_kernel_bank(double lambda_max, int resolution);

/// W_f(t,j) = a_j * sum_l g(t lambda_l) fhat(l) phi_l(j).
Eigen::VectorXd wavelet_coefficients(const EigenBasis& basis, const Eigen::VectorXd& f,
                                     double t);

/// S_f(j) = a_j * sum_l h(lambda_l) fhat(l) phi_l(j).
Eigen::VectorXd scaling_coefficients(const EigenBasis& basis, const Eigen::VectorXd& f,
                                     const KernelBank& bank);

/// Per-vertex multiresolution signature: column j stacks, for L = 1..R, the
/// wavelet responses of delta_j at that level's L scales followed by its
/// scaling response. p = (R+1)(R+2)/2 - 1 rows.
struct SGWSMatrix {
    Eigen::MatrixXd values;  // p x m, nonnegative
    int resolution = 0;
};

int sgws_dimension(int resolution);

SGWSMatrix sgws_matrix(const EigenBasis& basis, int resolution);

/// min/max of G(lambda) = h^2 + sum_k g(t_k lambda)^2 for one level's scales,
/// on a 1000-point uniform grid over [0, lambda_max].
struct FrameBounds {
    double frame_lower = 0.0;
    double frame_upper = 0.0;
};

FrameBounds frame_bounds(const KernelBank& bank, int level, double lambda_max);

/// Diagnostic table for plotting: `lambda,G,h2,g2_1..g2_L`, one row per grid point.
void write_frame_csv(std::ostream& out, const KernelBank& bank, int level,
                     double lambda_max);

}  // namespace sgwc
