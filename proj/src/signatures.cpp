#include "sgwc/signatures.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "sgwc/util.hpp"

namespace sgwc {

namespace {

constexpr double kZeroEigTol = 1e-12;
constexpr int kDftWindow = 64;

double first_nonzero_eigenvalue(const EigenBasis& basis)
{
    for (Eigen::Index l = 0; l < basis.eigenvalues.size(); ++l)
        if (basis.eigenvalues[l] > kZeroEigTol)
            return basis.eigenvalues[l];
    throw Error("all eigenvalues are zero; mesh spectrum carries no information");
}

Eigen::MatrixXd weighted_phi_sq(const EigenBasis& basis, const Eigen::MatrixXd& weights)
{
    // weights: p x q kernel evaluations -> p x m signature rows
    return weights * basis.eigenfunctions.array().square().matrix().transpose();
}

}  // namespace

PointSignatureBank hks(const EigenBasis& basis, const std::vector<double>& scales)
{
    if (scales.empty())
        throw Error("hks needs a nonempty scale list");
    if (!std::is_sorted(scales.begin(), scales.end()) || scales.front() <= 0.0)
        throw Error("hks scales must be positive and ascending");
    const auto q = basis.eigenvalues.size();
    Eigen::MatrixXd weights(scales.size(), q);
    for (std::size_t k = 0; k < scales.size(); ++k)
        for (Eigen::Index l = 0; l < q; ++l)
            weights(k, l) = std::exp(-basis.eigenvalues[l] * scales[k]);
    return PointSignatureBank{weighted_phi_sq(basis, weights), scales,
                              PointSignatureKind::Hks};
}

std::vector<double> default_hks_scales(const EigenBasis& basis, int p)
{
    if (p < 1)
        throw Error("hks scale count must be >= 1");
    const double four_ln10 = 4.0 * std::log(10.0);
    const double t_min = four_ln10 / basis.lambda_max();
    const double t_max = four_ln10 / first_nonzero_eigenvalue(basis);
    std::vector<double> scales(p);
    for (int k = 0; k < p; ++k) {
        const double frac = p == 1 ? 0.0 : static_cast<double>(k) / (p - 1);
        scales[k] = std::exp(std::log(t_min) + frac * (std::log(t_max) - std::log(t_min)));
    }
    return scales;
}

PointSignatureBank wks(const EigenBasis& basis, const std::vector<double>& energies,
                       double sigma)
{
    if (energies.empty())
        throw Error("wks needs a nonempty energy list");
    if (sigma <= 0.0)
        throw Error("wks sigma must be positive");
    const auto q = basis.eigenvalues.size();
    std::vector<Eigen::Index> included;
    for (Eigen::Index l = 0; l < q; ++l)
        if (basis.eigenvalues[l] > kZeroEigTol)
            included.push_back(l);
    if (included.empty())
        throw Error("all eigenvalues are zero; wks is undefined");

    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(energies.size(), q);
    for (std::size_t k = 0; k < energies.size(); ++k) {
        const double log_e = std::log(energies[k]);
        double total = 0.0;
        for (Eigen::Index l : included) {
            const double d = log_e - std::log(basis.eigenvalues[l]);
            weights(k, l) = std::exp(-(d * d) / (sigma * sigma));
            total += weights(k, l);
        }
        if (total > 0.0)
            weights.row(k) /= total;
    }
    return PointSignatureBank{weighted_phi_sq(basis, weights), energies,
                              PointSignatureKind::Wks};
}

WksGrid default_wks_grid(const EigenBasis& basis, int p)
{
    if (p < 2)
        throw Error("wks energy count must be >= 2");
    const double log_lo = std::log(first_nonzero_eigenvalue(basis));
    const double log_hi = std::log(basis.lambda_max());
    const double spacing = (log_hi - log_lo) / (p - 1);
    WksGrid grid;
    grid.energies.resize(p);
    for (int k = 0; k < p; ++k)
        grid.energies[k] = std::exp(log_lo + k * spacing);
    grid.sigma = 7.0 * spacing;
    if (grid.sigma <= 0.0)
        throw Error("degenerate wks grid: spectrum too narrow");
    return grid;
}

GlobalSpectralVector shape_dna(const EigenBasis& basis, int d)
{
    if (basis.count() < d + 1)
        throw Error("shape_dna needs q >= d+1 eigenvalues");
    return GlobalSpectralVector{basis.eigenvalues.segment(1, d),
                                GlobalSpectralKind::ShapeDna};
}

GlobalSpectralVector cshape_dna(const EigenBasis& basis, double total_area, int d)
{
    if (d < 1 || d > kDftWindow)
        throw Error("cshape_dna output length out of range");
    if (basis.count() < kDftWindow + 1)
        throw Error("cshape_dna needs q >= " + std::to_string(kDftWindow + 1) +
                    " eigenvalues");
    // area-normalized window lambda_2 .. lambda_65, transformed directly
    // (window is small enough that an FFT buys nothing)
    Eigen::VectorXd mu = total_area * basis.eigenvalues.segment(1, kDftWindow);
    GlobalSpectralVector out;
    out.kind = GlobalSpectralKind::CShapeDna;
    out.values.resize(d);
    for (int r = 0; r < d; ++r) {
        std::complex<double> acc{0.0, 0.0};
        for (int n = 0; n < kDftWindow; ++n) {
            const double angle = -2.0 * std::numbers::pi * r * n / kDftWindow;
            acc += mu[n] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out.values[r] = std::abs(acc);
    }
    return out;
}

GlobalSpectralVector gps_embedding(const EigenBasis& basis, double total_area, int d)
{
    if (basis.count() < d + 1)
        throw Error("gps_embedding needs q >= d+1 eigenvalues");
    GlobalSpectralVector out;
    out.kind = GlobalSpectralKind::GpsEmbedding;
    out.values.resize(d);
    for (int i = 0; i < d; ++i) {
        const double lambda = basis.eigenvalues[i + 1];
        if (lambda <= kZeroEigTol)
            throw Error("gps_embedding hit a zero eigenvalue; mesh may be disconnected");
        out.values[i] = 1.0 / std::sqrt(total_area * lambda);
    }
    return out;
}

}  // namespace sgwc
