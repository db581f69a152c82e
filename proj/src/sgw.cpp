#include "sgwc/sgw.hpp"

#include <cmath>

#include "sgwc/util.hpp"

namespace sgwc {

namespace {

constexpr int kFrameGridPoints = 1000;

Eigen::VectorXd level_g_squared(const KernelBank& bank, int level, double lambda)
{
    const auto& scales = bank.level_scales(level);
    Eigen::VectorXd g2(scales.size());
    for (std::size_t k = 0; k < scales.size(); ++k) {
        const double g = kernel_g(scales[k] * lambda);
        g2[k] = g * g;
    }
    return g2;
}

}  // namespace

double kernel_g(double x)
{
    return x * std::exp(-x);
}

double kernel_h(double x, double lambda_min, double gamma)
{
    const double u = x / (0.6 * lambda_min);
    const double u2 = u * u;
    return gamma * std::exp(-(u2 * u2));
}

KernelBank build_kernel_bank(double lambda_max, int resolution)
{
    if (lambda_max <= 0.0)
        throw Error("kernel bank needs lambda_max > 0");
    if (resolution < 1)
        throw Error("kernel bank needs resolution >= 1");
    KernelBank bank;
    bank.resolution = resolution;
    bank.lambda_max = lambda_max;
    bank.lambda_min = lambda_max / 20.0;
    bank.gamma = std::exp(-1.0);  // g's maximum, attained at x = 1

    const double log_coarse = std::log(2.0 / bank.lambda_min);
    const double log_fine = std::log(2.0 / lambda_max);
    bank.scales.resize(resolution);
    for (int level = 1; level <= resolution; ++level) {
        auto& ts = bank.scales[level - 1];
        ts.resize(level);
        if (level == 1) {
            ts[0] = 2.0 / lambda_max;  // fine endpoint for the degenerate grid
            continue;
        }
        for (int k = 0; k < level; ++k) {
            const double frac = static_cast<double>(k) / (level - 1);
            ts[k] = std::exp(log_coarse + frac * (log_fine - log_coarse));
        }
    }
    return bank;
}

Eigen::VectorXd wavelet_coefficients(const EigenBasis& basis, const Eigen::VectorXd& f,
                                     double t)
{
    const Eigen::VectorXd fhat = gft(basis, f);
    Eigen::VectorXd filtered(fhat.size());
    for (Eigen::Index l = 0; l < fhat.size(); ++l)
        filtered[l] = kernel_g(t * basis.eigenvalues[l]) * fhat[l];
    return (basis.vertex_areas.array() * igft(basis, filtered).array()).matrix();
}

Eigen::VectorXd scaling_coefficients(const EigenBasis& basis, const Eigen::VectorXd& f,
                                     const KernelBank& bank)
{
    const Eigen::VectorXd fhat = gft(basis, f);
    Eigen::VectorXd filtered(fhat.size());
    for (Eigen::Index l = 0; l < fhat.size(); ++l)
        filtered[l] =
            kernel_h(basis.eigenvalues[l], bank.lambda_min, bank.gamma) * fhat[l];
    return (basis.vertex_areas.array() * igft(basis, filtered).array()).matrix();
}

int sgws_dimension(int resolution)
{
    return (resolution + 1) * (resolution + 2) / 2 - 1;
}

SGWSMatrix sgws_matrix(const EigenBasis& basis, int resolution)
{
    if (resolution < 1)
        throw Error("signature resolution must be >= 1");
    const auto m = basis.eigenfunctions.rows();
    const auto q = basis.eigenfunctions.cols();
    const KernelBank bank = build_kernel_bank(basis.lambda_max(), resolution);

    // For delta functions the responses reduce to filtered sums of phi^2:
    // W_{delta_j}(t,j) = a_j^2 sum_l g(t lambda_l) phi_l(j)^2, same shape for h.
    const Eigen::MatrixXd phi_sq = basis.eigenfunctions.array().square();
    const Eigen::ArrayXd area_sq = basis.vertex_areas.array().square();
    const auto filtered_row = [&](const Eigen::VectorXd& kernel_vals) {
        return (area_sq * (phi_sq * kernel_vals).array()).matrix().transpose();
    };

    // h depends only on lambda_min, so its row repeats across levels
    Eigen::VectorXd h_vals(q);
    for (Eigen::Index l = 0; l < q; ++l)
        h_vals[l] = kernel_h(basis.eigenvalues[l], bank.lambda_min, bank.gamma);
    const Eigen::RowVectorXd scaling_row = filtered_row(h_vals);

    SGWSMatrix out;
    out.resolution = resolution;
    out.values.resize(sgws_dimension(resolution), m);
    int row = 0;
    for (int level = 1; level <= resolution; ++level) {
        for (double t : bank.level_scales(level)) {
            Eigen::VectorXd g_vals(q);
            for (Eigen::Index l = 0; l < q; ++l)
                g_vals[l] = kernel_g(t * basis.eigenvalues[l]);
            out.values.row(row++) = filtered_row(g_vals);
        }
        out.values.row(row++) = scaling_row;
    }
    return out;
}

FrameBounds frame_bounds(const KernelBank& bank, int level, double lambda_max)
{
    FrameBounds fb;
    bool first = true;
    for (int i = 0; i < kFrameGridPoints; ++i) {
        const double lambda = lambda_max * i / (kFrameGridPoints - 1.0);
        const double h = kernel_h(lambda, bank.lambda_min, bank.gamma);
        const double g_total = h * h + level_g_squared(bank, level, lambda).sum();
        if (first || g_total < fb.frame_lower)
            fb.frame_lower = g_total;
        if (first || g_total > fb.frame_upper)
            fb.frame_upper = g_total;
        first = false;
    }
    return fb;
}

void write_frame_csv(std::ostream& out, const KernelBank& bank, int level,
                     double lambda_max)
{
    out << "lambda,G,h2";
    for (int k = 1; k <= level; ++k)
        out << ",g2_" << k;
    out << "\n";
    for (int i = 0; i < kFrameGridPoints; ++i) {
        const double lambda = lambda_max * i / (kFrameGridPoints - 1.0);
        const double h = kernel_h(lambda, bank.lambda_min, bank.gamma);
        const Eigen::VectorXd g2 = level_g_squared(bank, level, lambda);
        out << lambda << ',' << h * h + g2.sum() << ',' << h * h;
        for (Eigen::Index k = 0; k < g2.size(); ++k)
            out << ',' << g2[k];
        out << "\n";
    }
}

}  // namespace sgwc
