#ifndef CGMM_CONFIG_HPP
#define CGMM_CONFIG_HPP

#include "cgmm/classify.hpp"
#include "cgmm/eval.hpp"
#include "cgmm/stack.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cgmm {

// key = value run configuration ('#' starts a comment). Unknown keys are
// rejected. `states` and `fingerprint_layers` accept comma-separated lists,
// which `eval` expands into a model-selection grid; the other commands
// require single values.
//
//   states            = 10            hidden states C (list ok)
//   max_layers        = 4
//   pool_size         = 5
//   patience          = 1
//   predecessors      = 1             how many frozen layers feed a new one, or 'all'
//   val_fraction      = 0.2
//   em_max_iters      = 50
//   em_tol            = 1e-4
//   smoothing         = 1e-8
//   fingerprint_mode  = unigram       unigram | unibigram
//   fingerprint_layers= all           all | last (list ok)
//   normalize         = false         divide counts by |V_g|
//   kernel            = jaccard       jaccard | rbf
//   gamma             = 1.0
//   cv                = tenfold       tenfold | nested
//   seed              = 0
//   threads           = 0             0 = all cores
//   clf_max_epochs    = 300
//   clf_lr            = 0.5
//   clf_l2            = 0.001
//   clf_tol           = 1e-7
struct RunConfig {
    std::vector<int> states{10};
    int max_layers = 4;
    int pool_size = 5;
    int patience = 1;
    int predecessors = 1; // 0 = all
    double val_fraction = 0.2;
    int em_max_iters = 50;
    double em_tol = 1e-4;
    double smoothing = 1e-8;
    FingerprintMode fingerprint_mode = FingerprintMode::Unigram;
    std::vector<bool> fingerprint_last{false}; // per grid entry: last-layer-only?
    bool normalize = false;
    KernelDescriptor kernel;
    CvScheme cv = CvScheme::TenFold;
    std::uint64_t seed = 0;
    int threads = 0;
    LinearConfig classifier;

    // Throws DataError when any list key holds more than one value.
    StackConfig single_stack_config() const;
    // Cartesian grid over the list-valued keys, in declaration order.
    std::vector<StackConfig> stack_config_grid() const;
};

RunConfig parse_run_config(std::istream& in);
RunConfig parse_run_config_file(const std::string& path);

// One "config <key> = <value>" line per key, fully resolved.
void print_run_config(const RunConfig& config, std::ostream& out);

} // namespace cgmm

#endif
