#include "cgmm/classify.hpp"

#include "cgmm/errors.hpp"
#include "cgmm/parallel.hpp"
#include "cgmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace cgmm {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, bool require_nonneg) {
    if (x.size() != y.size())
        throw DataError("kernel: vector length mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()) + ")");
    if (require_nonneg) {
        for (double v : x)
            if (v < 0.0) throw DataError("jaccard kernel: negative entry");
        for (double v : y)
            if (v < 0.0) throw DataError("jaccard kernel: negative entry");
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

double jaccard_kernel(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, true);
    double num = 0.0, den = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        num += std::min(x[d], y[d]);
        den += std::max(x[d], y[d]);
    }
    if (den == 0.0) return 1.0; // two empty multisets
    return num / den;
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    check_pair(x, y, false);
    double sq = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = x[d] - y[d];
        sq += diff * diff;
    }
    return std::exp(-gamma * sq);
}

KernelMatrix compute_kernel_matrix(const std::vector<std::vector<double>>& features,
                                   const std::vector<std::string>& ids,
                                   const KernelDescriptor& descriptor, int threads) {
    const int n = static_cast<int>(features.size());
    KernelMatrix km;
    km.descriptor = descriptor;
    km.ids = ids;
    km.n = n;
    km.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    const bool rbf = descriptor.type == "rbf";
    if (!rbf && descriptor.type != "jaccard")
        throw DataError("unknown kernel type: " + descriptor.type);
    for_chunks(static_cast<std::size_t>(n), 4, threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t j = i; j < static_cast<std::size_t>(n); ++j) {
                const double v = rbf ? rbf_kernel(features[i], features[j], descriptor.gamma)
                                     : jaccard_kernel(features[i], features[j]);
                km.values[i * n + j] = v;
                km.values[j * n + i] = v;
            }
    });
    return km;
}

void export_kernel_matrix(const KernelMatrix& km, std::ostream& out) {
    out << "kernel " << km.descriptor.type << ' ';
    if (km.descriptor.type == "rbf")
        out << format_double(km.descriptor.gamma);
    else
        out << '-';
    out << ' ' << km.n << '\n';
    for (int i = 0; i < km.n; ++i) {
        for (int j = i; j < km.n; ++j) {
            if (j > i) out << ' ';
            out << format_double(km.at(i, j));
        }
        out << '\n';
    }
    if (!out) throw DataError("kernel export: write failed");
}

KernelMatrix import_kernel_matrix(std::istream& in) {
    std::string kw, type, params;
    int n = 0;
    if (!(in >> kw >> type >> params >> n) || kw != "kernel")
        throw ParseError("expected header: kernel <type> <params> <n>");
    KernelMatrix km;
    km.descriptor.type = type;
    km.descriptor.gamma = params == "-" ? 0.0 : std::strtod(params.c_str(), nullptr);
    km.n = n;
    km.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    km.ids.resize(n);
    for (int i = 0; i < n; ++i) km.ids[i] = std::to_string(i);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v;
            if (!(in >> v)) throw ParseError("kernel matrix truncated at row " + std::to_string(i));
            km.values[static_cast<std::size_t>(i) * n + j] = v;
            km.values[static_cast<std::size_t>(j) * n + i] = v;
        }
    return km;
}

int LinearModel::predict(std::span<const double> x) const {
    const int K = num_classes();
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        double s = bias[k];
        for (int d = 0; d < num_features; ++d)
            s += weights[static_cast<std::size_t>(k) * num_features + d] *
                 ((x[d] - feature_mean[d]) / feature_scale[d]);
        if (s > best_score) { // ties keep the smaller class index
            best_score = s;
            best = k;
        }
    }
    return class_labels[best];
}

double logistic_loss_grad(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& class_index, int num_classes, double l2,
                          std::span<const double> theta, std::span<double> grad) {
    const std::size_t n = features.size();
    const int D = n == 0 ? 0 : static_cast<int>(features[0].size());
    const int row = D + 1; // D weights + bias
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    std::vector<double> scores(num_classes);
    const double inv_n = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::vector<double>& x = features[s];
        double max_score = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < num_classes; ++k) {
            double v = theta[static_cast<std::size_t>(k) * row + D];
            for (int d = 0; d < D; ++d) v += theta[static_cast<std::size_t>(k) * row + d] * x[d];
            scores[k] = v;
            max_score = std::max(max_score, v);
        }
        double zsum = 0.0;
        for (int k = 0; k < num_classes; ++k) {
            scores[k] = std::exp(scores[k] - max_score);
            zsum += scores[k];
        }
        loss -= inv_n * (std::log(scores[class_index[s]] / zsum));
        for (int k = 0; k < num_classes; ++k) {
            const double p = scores[k] / zsum;
            const double coeff = inv_n * (p - (k == class_index[s] ? 1.0 : 0.0));
            double* gk = grad.data() + static_cast<std::size_t>(k) * row;
            for (int d = 0; d < D; ++d) gk[d] += coeff * x[d];
            gk[D] += coeff;
        }
    }
    // L2 on weights only
    for (int k = 0; k < num_classes; ++k)
        for (int d = 0; d < D; ++d) {
            const double w = theta[static_cast<std::size_t>(k) * row + d];
            loss += 0.5 * l2 * w * w;
            grad[static_cast<std::size_t>(k) * row + d] += l2 * w;
        }
    return loss;
}

LinearModel train_linear(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& targets, const LinearConfig& config) {
    if (features.size() != targets.size()) throw DataError("train_linear: size mismatch");
    if (features.empty()) throw DataError("train_linear: empty training set");
    const int D = static_cast<int>(features[0].size());
    for (const auto& x : features) {
        if (static_cast<int>(x.size()) != D) throw DataError("train_linear: inconsistent dimensions");
        for (double v : x)
            if (!std::isfinite(v)) throw DataError("train_linear: non-finite feature");
    }

    // class index map in ascending target order
    std::map<int, int> label_to_index;
    for (int t : targets) label_to_index.emplace(t, 0);
    if (label_to_index.size() < 2) throw DataError("train_linear: fewer than 2 classes");
    LinearModel model;
    for (auto& [label, idx] : label_to_index) {
        idx = static_cast<int>(model.class_labels.size());
        model.class_labels.push_back(label);
    }
    const int K = model.num_classes();
    std::vector<int> cls(targets.size());
    for (std::size_t s = 0; s < targets.size(); ++s) cls[s] = label_to_index[targets[s]];

    // standardization on training data
    model.num_features = D;
    model.feature_mean.assign(D, 0.0);
    model.feature_scale.assign(D, 1.0);
    const double inv_n = 1.0 / static_cast<double>(features.size());
    for (const auto& x : features)
        for (int d = 0; d < D; ++d) model.feature_mean[d] += x[d] * inv_n;
    std::vector<double> var(D, 0.0);
    for (const auto& x : features)
        for (int d = 0; d < D; ++d) {
            const double c = x[d] - model.feature_mean[d];
            var[d] += c * c * inv_n;
        }
    for (int d = 0; d < D; ++d)
        if (var[d] > 0.0) model.feature_scale[d] = std::sqrt(var[d]);

    std::vector<std::vector<double>> std_features(features.size(), std::vector<double>(D));
    for (std::size_t s = 0; s < features.size(); ++s)
        for (int d = 0; d < D; ++d)
            std_features[s][d] = (features[s][d] - model.feature_mean[d]) / model.feature_scale[d];

    // bias starts at class log-odds, so zero epochs predict the majority class
    std::vector<double> counts(K, 0.0);
    for (int c : cls) counts[c] += 1.0;
    const int row = D + 1;
    std::vector<double> theta(static_cast<std::size_t>(K) * row, 0.0);
    for (int k = 0; k < K; ++k)
        theta[static_cast<std::size_t>(k) * row + D] = std::log(counts[k] * inv_n);

    std::vector<double> grad(theta.size());
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        logistic_loss_grad(std_features, cls, K, config.l2, theta, grad);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < config.tol) break;
        for (std::size_t t = 0; t < theta.size(); ++t) theta[t] -= config.learning_rate * grad[t];
    }

    model.weights.resize(static_cast<std::size_t>(K) * D);
    model.bias.resize(K);
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < D; ++d)
            model.weights[static_cast<std::size_t>(k) * D + d] = theta[static_cast<std::size_t>(k) * row + d];
        model.bias[k] = theta[static_cast<std::size_t>(k) * row + D];
    }
    // fold standardization into predict(): weights stay on standardized scale
    return model;
}

double accuracy(const LinearModel& model, const std::vector<std::vector<double>>& features,
                const std::vector<int>& targets) {
    if (features.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t s = 0; s < features.size(); ++s)
        if (model.predict(features[s]) == targets[s]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(features.size());
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& targets,
                                                       int num_folds, std::uint64_t seed) {
    if (num_folds < 2) throw DataError("stratified folds: need at least 2 folds");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t s = 0; s < targets.size(); ++s) by_class[targets[s]].push_back(s);
    for (const auto& [label, members] : by_class)
        if (static_cast<int>(members.size()) < num_folds)
            throw DataError("too few samples of class " + std::to_string(label) +
                            " for stratified " + std::to_string(num_folds) + "-fold split");
    std::vector<std::vector<std::size_t>> folds(num_folds);
    Rng rng(seed);
    for (auto& [label, members] : by_class) {
        rng.shuffle(members);
        for (std::size_t k = 0; k < members.size(); ++k)
            folds[k % num_folds].push_back(members[k]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<int> dataset_targets(const GraphDataset& dataset) {
    std::vector<int> targets;
    targets.reserve(dataset.size());
    for (const Graph& g : dataset.graphs) {
        if (!g.has_target()) throw DataError("graph '" + g.id + "' has no target");
        targets.push_back(g.target);
    }
    return targets;
}

} // namespace cgmm
