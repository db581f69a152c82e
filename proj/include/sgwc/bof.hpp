#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sgwc {

struct ClusterStats {
    std::vector<std::int64_t> counts;    // members per cluster
    std::vector<double> mean_distance;   // mean member-to-center distance
};

struct Codebook {
    Eigen::MatrixXd centers;  // p x k
    double alpha = 0.0;       // soft-assignment sharpness, 1/(8 mu^2)
    std::uint64_t seed = 0;
    std::uint64_t training_hash = 0;  // content hash of the training inputs
    ClusterStats stats;

    int k() const { return static_cast<int>(centers.cols()); }
    int dimension() const { return static_cast<int>(centers.rows()); }
};

/// k-means++ initialization from `seed`, Lloyd iterations until center
/// movement < 1e-9 or 100 rounds, best of 5 restarts by within-cluster sum of
/// squares. Empty clusters are re-seeded to the farthest point.
Codebook kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed);

/// alpha = 1/(8 mu^2) with mu the median over non-empty clusters of the mean
/// member-to-center distance. Errors when mu = 0 (degenerate vocabulary).
double compute_alpha(const ClusterStats& stats);

/// Column-stochastic soft assignments u_ri = exp(-alpha d_ri^2) / sum_l ...
struct CodeMatrix {
    Eigen::MatrixXd codes;  // k x m, entries in [0,1], columns sum to 1
};

CodeMatrix soft_assign(const Eigen::MatrixXd& signatures, const Codebook& codebook);

/// h = U 1, the row sums; grand total equals the column count of U.
Eigen::VectorXd pool_histogram(const CodeMatrix& codes);

void save_codebook(const std::string& path, const Codebook& codebook);
Codebook load_codebook(const std::string& path);

}  // namespace sgwc
