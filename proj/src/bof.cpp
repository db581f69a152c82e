#include "sgwc/bof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sgwc/binary_io.hpp"
#include "sgwc/util.hpp"

namespace sgwc {

namespace {

constexpr int kLloydMaxIters = 100;
constexpr double kMovementTol = 1e-9;
constexpr int kRestarts = 5;
constexpr Eigen::Index kAssignBlock = 4096;

// Nearest center per column plus the squared distance to it. Distances come
// from the expansion |s|^2 + |v|^2 - 2 v's, blocked so the Gram slab stays small.
void assign_nearest(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centers,
                    std::vector<int>& owner, Eigen::VectorXd& dist2)
{
    const Eigen::Index n = data.cols();
    const Eigen::Index k = centers.cols();
    const Eigen::VectorXd center_sq = centers.colwise().squaredNorm();
    owner.assign(n, 0);
    dist2.resize(n);
    for (Eigen::Index start = 0; start < n; start += kAssignBlock) {
        const Eigen::Index len = std::min(kAssignBlock, n - start);
        const auto block = data.middleCols(start, len);
        const Eigen::MatrixXd gram = centers.transpose() * block;  // k x len
        const Eigen::VectorXd data_sq = block.colwise().squaredNorm();
        for (Eigen::Index i = 0; i < len; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < k; ++r) {
                const double d = center_sq[r] + data_sq[i] - 2.0 * gram(r, i);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(r);
                }
            }
            owner[start + i] = best;
            dist2[start + i] = std::max(best_d, 0.0);
        }
    }
}

struct LloydResult {
    Eigen::MatrixXd centers;
    ClusterStats stats;
    double wcss = std::numeric_limits<double>::infinity();
};

LloydResult run_lloyd(const Eigen::MatrixXd& data, int k, std::mt19937_64& rng)
{
    const Eigen::Index n = data.cols();
    const Eigen::Index p = data.rows();

    // k-means++ seeding: later centers drawn proportionally to squared
    // distance from the chosen set
    Eigen::MatrixXd centers(p, k);
    centers.col(0) = data.col(uniform_index(rng, static_cast<std::size_t>(n)));
    Eigen::VectorXd min_d2 =
        (data.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
    for (int c = 1; c < k; ++c) {
        const double total = min_d2.sum();
        Eigen::Index pick;
        if (total > 0.0) {
            double u = uniform_unit(rng) * total;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                u -= min_d2[i];
                if (u <= 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n)));
        }
        centers.col(c) = data.col(pick);
        min_d2 = min_d2.cwiseMin(
            (data.colwise() - centers.col(c)).colwise().squaredNorm().transpose());
    }

    std::vector<int> owner;
    Eigen::VectorXd dist2;
    for (int iter = 0; iter < kLloydMaxIters; ++iter) {
        assign_nearest(data, centers, owner, dist2);

        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(p, k);
        std::vector<std::int64_t> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            next.col(owner[i]) += data.col(i);
            ++counts[owner[i]];
        }
        std::vector<bool> reseeded_point(n, false);
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                next.col(c) /= static_cast<double>(counts[c]);
                continue;
            }
            // orphaned center: jump to the farthest unclaimed point
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (!reseeded_point[i] && dist2[i] > far_d) {
                    far_d = dist2[i];
                    far = i;
                }
            reseeded_point[far] = true;
            next.col(c) = data.col(far);
        }

        const double movement = (next - centers).colwise().norm().maxCoeff();
        centers = std::move(next);
        if (movement < kMovementTol)
            break;
    }

    // final consistent assignment for the objective and the cluster stats
    assign_nearest(data, centers, owner, dist2);
    LloydResult out;
    out.centers = std::move(centers);
    out.wcss = dist2.sum();
    out.stats.counts.assign(k, 0);
    out.stats.mean_distance.assign(k, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        ++out.stats.counts[owner[i]];
        out.stats.mean_distance[owner[i]] += std::sqrt(dist2[i]);
    }
    for (int c = 0; c < k; ++c)
        if (out.stats.counts[c] > 0)
            out.stats.mean_distance[c] /= static_cast<double>(out.stats.counts[c]);
    return out;
}

}  // namespace

Codebook kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed)
{
    const Eigen::Index n = data.cols();
    if (k < 1)
        throw Error("kmeans needs k >= 1");
    if (n < k)
        throw Error("kmeans needs at least k data points, got " + std::to_string(n));
    if (!data.allFinite())
        throw Error("kmeans input contains non-finite values");

    std::mt19937_64 rng(seed);
    LloydResult best;
    for (int restart = 0; restart < kRestarts; ++restart) {
        LloydResult r = run_lloyd(data, k, rng);
        if (r.wcss < best.wcss)
            best = std::move(r);
    }

    Codebook cb;
    cb.centers = std::move(best.centers);
    cb.seed = seed;
    cb.stats = std::move(best.stats);
    // Perfect quantization (e.g. k = n) leaves no distance scale for alpha;
    // fall back to 1 rather than reject an otherwise-exact vocabulary.
    const bool all_zero = std::all_of(cb.stats.mean_distance.begin(),
                                      cb.stats.mean_distance.end(),
                                      [](double d) { return d == 0.0; });
    cb.alpha = all_zero ? 1.0 : compute_alpha(cb.stats);
    return cb;
}

double compute_alpha(const ClusterStats& stats)
{
    std::vector<double> means;
    means.reserve(stats.mean_distance.size());
    for (std::size_t c = 0; c < stats.mean_distance.size(); ++c)
        if (stats.counts[c] > 0)
            means.push_back(stats.mean_distance[c]);
    if (means.empty())
        throw Error("compute_alpha: no populated clusters");
    std::sort(means.begin(), means.end());
    const std::size_t h = means.size() / 2;
    const double mu =
        means.size() % 2 == 1 ? means[h] : 0.5 * (means[h - 1] + means[h]);
    if (mu == 0.0)
        throw Error("degenerate vocabulary: median cluster size is zero");
    return 1.0 / (8.0 * mu * mu);
}

CodeMatrix soft_assign(const Eigen::MatrixXd& signatures, const Codebook& codebook)
{
    if (signatures.rows() != codebook.centers.rows())
        throw Error("soft_assign: signature dimension does not match codebook");
    const Eigen::Index m = signatures.cols();
    const int k = codebook.k();
    CodeMatrix out;
    out.codes.resize(k, m);
    Eigen::VectorXd d2(k), expo(k);
    std::vector<double> terms(k);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (int r = 0; r < k; ++r)
            d2[r] = (signatures.col(i) - codebook.centers.col(r)).squaredNorm();
        const double shift = d2.minCoeff();  // keeps the denominator >= 1
        for (int r = 0; r < k; ++r) {
            expo[r] = std::exp(-codebook.alpha * (d2[r] - shift));
            terms[r] = expo[r];
        }
        // summing in value order makes the denominator independent of any
        // permutation of the codewords
        std::sort(terms.begin(), terms.end());
        double denom = 0.0;
        for (double t : terms)
            denom += t;
        out.codes.col(i) = expo / denom;
    }
    return out;
}

Eigen::VectorXd pool_histogram(const CodeMatrix& codes)
{
    if (codes.codes.cols() == 0)
        throw Error("pool_histogram: empty code matrix");
    return codes.codes.rowwise().sum();
}

void save_codebook(const std::string& path, const Codebook& codebook)
{
    atomic_file_write(path, [&](BinaryWriter& w) {
        w.header("SGWCCBK\0", 1);
        w.u64(static_cast<std::uint64_t>(codebook.centers.rows()));
        w.u64(static_cast<std::uint64_t>(codebook.centers.cols()));
        w.f64(codebook.alpha);
        w.u64(codebook.seed);
        w.u64(codebook.training_hash);
        w.matrix(codebook.centers);
        for (std::int64_t c : codebook.stats.counts)
            w.u64(static_cast<std::uint64_t>(c));
        w.doubles(codebook.stats.mean_distance.data(),
                  codebook.stats.mean_distance.size());
    });
}

Codebook load_codebook(const std::string& path)
{
    BinaryReader r(path);
    r.header("SGWCCBK\0");
    const auto p = static_cast<Eigen::Index>(r.u64());
    const auto k = static_cast<Eigen::Index>(r.u64());
    Codebook cb;
    cb.alpha = r.f64();
    cb.seed = r.u64();
    cb.training_hash = r.u64();
    cb.centers = r.matrix(p, k);
    cb.stats.counts.resize(k);
    for (auto& c : cb.stats.counts)
        c = static_cast<std::int64_t>(r.u64());
    cb.stats.mean_distance.resize(k);
    r.doubles(cb.stats.mean_distance.data(), cb.stats.mean_distance.size());
    return cb;
}

}  // namespace sgwc
