#ifndef CGMM_EVAL_HPP
#define CGMM_EVAL_HPP

#include "cgmm/stack.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cgmm {

enum class CvScheme { TenFold, Nested };

struct CvFold {
    double accuracy = 0.0;
    int depth = 0;               // selected stack depth inside the fold
    std::size_t config_index = 0; // grid entry used by this fold
};

struct CvResult {
    double mean = 0.0;   // in [0,1]
    double stddev = 0.0; // population std over fold accuracies
    std::vector<CvFold> folds;
    std::size_t selected_config = 0; // tenfold: grid entry reported
};

// Stack training (including pooling and its internal validation split)
// happens inside each training fold. Grid seeds are overridden by sub-seeds
// derived from `seed`, so the whole run is a function of (dataset, grid,
// scheme, seed). TenFold selects the grid entry with the best mean accuracy
// over the folds; Nested selects per outer fold with an inner CV.
CvResult cross_validate(const GraphDataset& dataset, const std::vector<StackConfig>& grid,
                        CvScheme scheme, std::uint64_t seed, int outer_folds = 10,
                        int inner_folds = 5);

// "mean (std)" percentage with two decimals, e.g. "91.18 (6.02)".
std::string format_cv_result(const CvResult& result);

} // namespace cgmm

#endif
