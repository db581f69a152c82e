#include "sgwc/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "sgwc/binary_io.hpp"
#include "sgwc/util.hpp"

namespace sgwc {

namespace {

constexpr int kMaxEpochs = 1000;
constexpr double kDualTol = 1e-6;

void check_labels(const std::vector<int>& y, int class_count)
{
    for (int label : y)
        if (label < 1 || label > class_count)
            throw Error("class label " + std::to_string(label) + " out of range 1.." +
                        std::to_string(class_count));
}

// One binary subproblem: L2-regularized L1-hinge, solved in the dual by
// coordinate descent with projected-gradient stopping. The per-example upper
// bound C/n makes the objective a mean over examples.
struct BinaryResult {
    Eigen::VectorXd w;
    double bias = 0.0;
    int epochs = 0;
};

BinaryResult solve_binary(const Eigen::MatrixXd& X, const std::vector<double>& z,
                          const Eigen::VectorXd& qd, double bound, std::mt19937_64 rng)
{
    const Eigen::Index n = X.cols();
    BinaryResult out;
    out.w = Eigen::VectorXd::Zero(X.rows());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= kMaxEpochs; ++epoch) {
        for (Eigen::Index i = n - 1; i > 0; --i)
            std::swap(order[i], order[uniform_index(rng, i + 1)]);

        double max_violation = 0.0;
        for (int i : order) {
            const double g = z[i] * (out.w.dot(X.col(i)) + out.bias) - 1.0;
            double pg = g;
            if (alpha[i] == 0.0)
                pg = std::min(g, 0.0);
            else if (alpha[i] == bound)
                pg = std::max(g, 0.0);
            max_violation = std::max(max_violation, std::abs(pg));
            if (std::abs(pg) > 1e-12) {
                const double prev = alpha[i];
                alpha[i] = std::min(std::max(prev - g / qd[i], 0.0), bound);
                const double step = (alpha[i] - prev) * z[i];
                out.w += step * X.col(i);
                out.bias += step;
            }
        }
        out.epochs = epoch;
        if (max_violation < kDualTol)
            break;
    }
    return out;
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> stratified_split_indices(
    const std::vector<int>& y, const std::vector<std::string>& class_names,
    double test_fraction, std::uint64_t seed)
{
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw Error("test fraction must lie strictly between 0 and 1");
    const int k_cls = static_cast<int>(class_names.size());
    check_labels(y, k_cls);

    std::vector<std::vector<int>> by_class(k_cls);
    for (std::size_t i = 0; i < y.size(); ++i)
        by_class[y[i] - 1].push_back(static_cast<int>(i));

    std::mt19937_64 rng(seed);
    std::vector<bool> in_test(y.size(), false);
    for (int c = 0; c < k_cls; ++c) {
        auto& members = by_class[c];
        const auto n_test =
            std::lround(test_fraction * static_cast<double>(members.size()));
        if (n_test < 1 || n_test >= static_cast<long>(members.size()))
            throw Error("class '" + class_names[c] +
                        "' is too small to stratify at this fraction");
        for (std::size_t i = members.size() - 1; i > 0; --i)
            std::swap(members[i], members[uniform_index(rng, i + 1)]);
        for (long t = 0; t < n_test; ++t)
            in_test[members[t]] = true;
    }

    std::pair<std::vector<int>, std::vector<int>> out;
    for (std::size_t i = 0; i < y.size(); ++i)
        (in_test[i] ? out.second : out.first).push_back(static_cast<int>(i));
    return out;
}

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& data,
                                                           double test_fraction,
                                                           std::uint64_t seed)
{
    const auto [train_idx, test_idx] =
        stratified_split_indices(data.y, data.class_names, test_fraction, seed);
    const auto subset = [&](const std::vector<int>& keep) {
        LabeledDataset part;
        part.class_names = data.class_names;
        part.X.resize(data.X.rows(), keep.size());
        part.y.reserve(keep.size());
        for (std::size_t c = 0; c < keep.size(); ++c) {
            part.X.col(c) = data.X.col(keep[c]);
            part.y.push_back(data.y[keep[c]]);
        }
        return part;
    };
    return {subset(train_idx), subset(test_idx)};
}

OvaSvmModel train_ova_svm(const LabeledDataset& train, double C, std::uint64_t seed,
                          int threads)
{
    const int k_cls = train.class_count();
    const Eigen::Index n = train.X.cols();
    if (C <= 0.0)
        throw Error("svm regularization C must be positive");
    if (n != static_cast<Eigen::Index>(train.y.size()))
        throw Error("svm training: label count does not match feature columns");
    check_labels(train.y, k_cls);
    if (std::set<int>(train.y.begin(), train.y.end()).size() < 2)
        throw Error("svm training needs at least two distinct classes");
    if (!train.X.allFinite())
        throw Error("svm training features contain non-finite values");

    // +1 accounts for the implicit constant feature that carries the bias
    const Eigen::VectorXd qd =
        train.X.colwise().squaredNorm().transpose().array() + 1.0;
    const double bound = C / static_cast<double>(n);

    OvaSvmModel model;
    model.C = C;
    model.seed = seed;
    model.class_names = train.class_names;
    model.weights.resize(train.X.rows(), k_cls);
    model.bias.resize(k_cls);
    model.epochs.resize(k_cls);

    parallel_for(k_cls, threads, [&](int c) {
        std::vector<double> z(n);
        for (Eigen::Index i = 0; i < n; ++i)
            z[i] = train.y[i] == c + 1 ? 1.0 : -1.0;
        std::mt19937_64 rng(seed ^
                            (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(c + 1)));
        BinaryResult r = solve_binary(train.X, z, qd, bound, rng);
        model.weights.col(c) = r.w;
        model.bias[c] = r.bias;
        model.epochs[c] = r.epochs;
    });
    return model;
}

int predict(const OvaSvmModel& model, const Eigen::VectorXd& x)
{
    if (x.size() != model.weights.rows())
        throw Error("predict: feature length does not match model");
    int best = 1;
    double best_value = model.weights.col(0).dot(x) + model.bias[0];
    for (int c = 1; c < model.class_count(); ++c) {
        const double value = model.weights.col(c).dot(x) + model.bias[c];
        if (value > best_value) {
            best_value = value;
            best = c + 1;
        }
    }
    return best;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& actual,
                                 const std::vector<int>& predicted, int class_count)
{
    if (actual.size() != predicted.size())
        throw Error("confusion matrix needs equal label lists");
    check_labels(actual, class_count);
    check_labels(predicted, class_count);
    ConfusionMatrix cm;
    cm.counts.setZero(class_count, class_count);
    for (std::size_t i = 0; i < actual.size(); ++i)
        ++cm.counts(actual[i] - 1, predicted[i] - 1);
    return cm;
}

double accuracy(const ConfusionMatrix& cm)
{
    const std::int64_t total = cm.counts.sum();
    if (total <= 0)
        throw Error("accuracy of an empty confusion matrix is undefined");
    return static_cast<double>(cm.counts.trace()) / static_cast<double>(total);
}

double error_rate(const ConfusionMatrix& cm)
{
    return 1.0 - accuracy(cm);
}

void save_model(const std::string& path, const OvaSvmModel& model)
{
    atomic_file_write(path, [&](BinaryWriter& w) {
        w.header("SGWCSVM\0", 1);
        w.u32(static_cast<std::uint32_t>(model.class_count()));
        w.u64(static_cast<std::uint64_t>(model.weights.rows()));
        w.f64(model.C);
        w.u64(model.seed);
        for (int c = 0; c < model.class_count(); ++c) {
            w.doubles(model.weights.col(c).data(), model.weights.rows());
            w.f64(model.bias[c]);
        }
        for (const auto& name : model.class_names)
            w.string(name);
    });
}

OvaSvmModel load_model(const std::string& path)
{
    BinaryReader r(path);
    r.header("SGWCSVM\0");
    const auto k_cls = static_cast<int>(r.u32());
    const auto dim = static_cast<Eigen::Index>(r.u64());
    OvaSvmModel model;
    model.C = r.f64();
    model.seed = r.u64();
    model.weights.resize(dim, k_cls);
    model.bias.resize(k_cls);
    for (int c = 0; c < k_cls; ++c) {
        r.doubles(model.weights.col(c).data(), dim);
        model.bias[c] = r.f64();
    }
    model.class_names.reserve(k_cls);
    for (int c = 0; c < k_cls; ++c)
        model.class_names.push_back(r.string());
    return model;
}

}  // namespace sgwc
