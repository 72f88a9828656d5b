#include "cgmm/eval.hpp"

#include "cgmm/errors.hpp"
#include "cgmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace cgmm {

namespace {

struct FoldOutcome {
    double accuracy = 0.0;
    int depth = 0;
};

// Trains a stack on the training indices and scores the final classifier
// (fit on all training fingerprints) on the test indices.
FoldOutcome run_fold(const GraphDataset& dataset, const std::vector<int>& targets,
                     const std::vector<std::size_t>& train_idx,
                     const std::vector<std::size_t>& test_idx, StackConfig config,
                     std::uint64_t seed) {
    config.seed = seed;
    const GraphDataset train = subset_dataset(dataset, train_idx);
    const StackModel stack = train_stack(train, config);

    const auto train_fps = compute_fingerprints(stack, train, config.fingerprint.mode, config.threads);
    std::vector<std::vector<double>> train_features(train_fps.size());
    for (std::size_t g = 0; g < train_fps.size(); ++g)
        train_features[g] = fingerprint_features(train_fps[g], config.fingerprint);
    std::vector<int> train_targets;
    for (std::size_t i : train_idx) train_targets.push_back(targets[i]);
    const LinearModel clf = train_linear(train_features, train_targets, config.classifier);

    const GraphDataset test = subset_dataset(dataset, test_idx);
    const auto test_fps = compute_fingerprints(stack, test, config.fingerprint.mode, config.threads);
    std::vector<std::vector<double>> test_features(test_fps.size());
    for (std::size_t g = 0; g < test_fps.size(); ++g)
        test_features[g] = fingerprint_features(test_fps[g], config.fingerprint);
    std::vector<int> test_targets;
    for (std::size_t i : test_idx) test_targets.push_back(targets[i]);

    FoldOutcome out;
    out.accuracy = accuracy(clf, test_features, test_targets);
    out.depth = stack.num_layers();
    return out;
}

std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& folds,
                                    std::size_t skip) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != skip) out.insert(out.end(), folds[f].begin(), folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
}

void finalize(CvResult& result) {
    if (result.folds.empty()) return;
    double mean = 0.0;
    for (const CvFold& f : result.folds) mean += f.accuracy;
    mean /= static_cast<double>(result.folds.size());
    double var = 0.0;
    for (const CvFold& f : result.folds) var += (f.accuracy - mean) * (f.accuracy - mean);
    var /= static_cast<double>(result.folds.size());
    result.mean = mean;
    result.stddev = std::sqrt(var);
}

} // namespace

CvResult cross_validate(const GraphDataset& dataset, const std::vector<StackConfig>& grid,
                        CvScheme scheme, std::uint64_t seed, int outer_folds, int inner_folds) {
    if (grid.empty()) throw DataError("cross_validate: empty config grid");
    const std::vector<int> targets = dataset_targets(dataset);
    const auto folds = stratified_folds(targets, outer_folds, derive_seed(seed, "outer-folds"));

    CvResult result;
    if (scheme == CvScheme::TenFold) {
        // single CV: the grid entry with the best mean fold accuracy is reported
        std::vector<std::vector<CvFold>> per_config(grid.size());
        std::size_t best_config = 0;
        double best_mean = -1.0;
        for (std::size_t ci = 0; ci < grid.size(); ++ci) {
            double mean = 0.0;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                const FoldOutcome o =
                    run_fold(dataset, targets, complement(folds, f), folds[f], grid[ci],
                             derive_seed(seed, "config-fold", ci * 1000003ull + f));
                per_config[ci].push_back({o.accuracy, o.depth, ci});
                mean += o.accuracy;
            }
            mean /= static_cast<double>(folds.size());
            if (mean > best_mean) {
                best_mean = mean;
                best_config = ci;
            }
        }
        result.folds = per_config[best_config];
        result.selected_config = best_config;
    } else {
        // nested CV: inner selection per outer training fold
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const std::vector<std::size_t> outer_train = complement(folds, f);
            std::vector<int> inner_targets;
            for (std::size_t i : outer_train) inner_targets.push_back(targets[i]);
            const auto inner_folds_idx =
                stratified_folds(inner_targets, inner_folds, derive_seed(seed, "inner-folds", f));

            std::size_t best_ci = 0;
            double best_mean = -1.0;
            for (std::size_t ci = 0; ci < grid.size(); ++ci) {
                double mean = 0.0;
                for (std::size_t g = 0; g < inner_folds_idx.size(); ++g) {
                    // inner indices are positions within outer_train
                    std::vector<std::size_t> tr, te;
                    for (std::size_t h = 0; h < inner_folds_idx.size(); ++h)
                        for (std::size_t pos : inner_folds_idx[h])
                            (h == g ? te : tr).push_back(outer_train[pos]);
                    std::sort(tr.begin(), tr.end());
                    std::sort(te.begin(), te.end());
                    mean += run_fold(dataset, targets, tr, te, grid[ci],
                                     derive_seed(seed, "inner-run", (f * 1000003ull + ci) * 131ull + g))
                                .accuracy;
                }
                mean /= static_cast<double>(inner_folds_idx.size());
                if (mean > best_mean) {
                    best_mean = mean;
                    best_ci = ci;
                }
            }
            const FoldOutcome o = run_fold(dataset, targets, outer_train, folds[f], grid[best_ci],
                                           derive_seed(seed, "outer-run", f));
            result.folds.push_back({o.accuracy, o.depth, best_ci});
        }
    }
    finalize(result);
    return result;
}

std::string format_cv_result(const CvResult& result) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", result.mean * 100.0, result.stddev * 100.0);
    return buf;
}

} // namespace cgmm
