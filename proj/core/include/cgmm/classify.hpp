#ifndef CGMM_CLASSIFY_HPP
#define CGMM_CLASSIFY_HPP

#include "cgmm/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cgmm {

// sum(min) / sum(max) over count vectors; 1 when both are all-zero.
// Throws DataError on length mismatch or negative entries.
double jaccard_kernel(std::span<const double> x, std::span<const double> y);

// exp(-gamma * ||x - y||^2)
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

struct KernelDescriptor {
    std::string type = "jaccard"; // "jaccard" | "rbf"
    double gamma = 1.0;           // rbf only
};

struct KernelMatrix {
    KernelDescriptor descriptor;
    std::vector<std::string> ids;
    int n = 0;
    std::vector<double> values; // n x n, row-major, symmetric

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
};

KernelMatrix compute_kernel_matrix(const std::vector<std::vector<double>>& features,
                                   const std::vector<std::string>& ids,
                                   const KernelDescriptor& descriptor, int threads = 1);

// Precomputed-kernel text format: `kernel <type> <params> <n>` then one line
// per row i holding entries j = i..n-1 (upper triangle incl. diagonal),
// 17 significant digits. The full matrix is restored by symmetry on import.
void export_kernel_matrix(const KernelMatrix& km, std::ostream& out);
KernelMatrix import_kernel_matrix(std::istream& in);

// Multinomial logistic regression on standardized features, full-batch
// gradient descent. Stands in for an external SVM on fingerprints.
struct LinearModel {
    std::vector<int> class_labels;    // model class index -> target value
    int num_features = 0;
    std::vector<double> weights;      // K x D, on standardized features
    std::vector<double> bias;         // K; initialized at class log-odds
    std::vector<double> feature_mean; // D
    std::vector<double> feature_scale;// D (1 where training variance is 0)

    int num_classes() const { return static_cast<int>(class_labels.size()); }
    int predict(std::span<const double> x) const; // returns a target value
};

struct LinearConfig {
    int max_epochs = 300;
    double learning_rate = 0.5;
    double l2 = 1e-3;     // on weights, not bias; loss is mean NLL so the
                          // model is invariant to duplicating the training set
    double tol = 1e-7;    // stop when the gradient inf-norm drops below
};

LinearModel train_linear(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& targets, const LinearConfig& config);

double accuracy(const LinearModel& model, const std::vector<std::vector<double>>& features,
                const std::vector<int>& targets);

// Mean multinomial NLL + 0.5*l2*||W||^2 and its gradient, at theta laid out
// as K rows of (D weights, then bias). Exposed for finite-difference checks.
double logistic_loss_grad(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& class_index, int num_classes, double l2,
                          std::span<const double> theta, std::span<double> grad);

// Deterministic stratified partition into `num_folds` test folds.
// Throws DataError when some class has fewer members than num_folds.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& targets,
                                                       int num_folds, std::uint64_t seed);

// Targets of a fully labeled dataset; throws DataError on unlabeled graphs.
std::vector<int> dataset_targets(const GraphDataset& dataset);

} // namespace cgmm

#endif
