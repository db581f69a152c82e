#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sgwc {

/// Feature columns with 1-based class labels.
struct LabeledDataset {
    Eigen::MatrixXd X;                     // d x n
    std::vector<int> y;                    // values in {1..K_cls}
    std::vector<std::string> class_names;  // length K_cls

    int class_count() const { return static_cast<int>(class_names.size()); }
    int size() const { return static_cast<int>(y.size()); }
};

/// One linear hyperplane per class (column of `weights` plus bias).
struct OvaSvmModel {
    Eigen::MatrixXd weights;  // d x K_cls
    Eigen::VectorXd bias;     // K_cls
    double C = 1.0;
    std::uint64_t seed = 0;
    std::vector<int> epochs;  // per-class epochs until convergence
    std::vector<std::string> class_names;

    int class_count() const { return static_cast<int>(weights.cols()); }
};

/// Per-class random split with test count = round(fraction * class size);
/// both halves keep the original instance order.
std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& data,
                                                           double test_fraction,
                                                           std::uint64_t seed);

/// The index-level core of stratified_split, for callers that need membership
/// before features exist. Returns (train, test) indices in ascending order.
std::pair<std::vector<int>, std::vector<int>> stratified_split_indices(
    const std::vector<int>& y, const std::vector<std::string>& class_names,
    double test_fraction, std::uint64_t seed);

/// One-vs-all L2-regularized hinge-loss classifiers trained by dual
/// coordinate descent. The per-example cost is C/n, so duplicating every
/// training point leaves the solution unchanged. Deterministic under `seed`;
/// the independent binary problems run in parallel when threads > 1.
OvaSvmModel train_ova_svm(const LabeledDataset& train, double C, std::uint64_t seed,
                          int threads = 1);

/// argmax of the decision values; ties go to the lowest class index.
int predict(const OvaSvmModel& model, const Eigen::VectorXd& x);

struct ConfusionMatrix {
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;  // actual x predicted
};

ConfusionMatrix confusion_matrix(const std::vector<int>& actual,
                                 const std::vector<int>& predicted, int class_count);

double accuracy(const ConfusionMatrix& cm);
double error_rate(const ConfusionMatrix& cm);

void save_model(const std::string& path, const OvaSvmModel& model);
OvaSvmModel load_model(const std::string& path);

}  // namespace sgwc
