#include "cgmm/config.hpp"

#include "cgmm/errors.hpp"
#include "cgmm/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cgmm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw DataError("config: empty list element");
        out.push_back(item);
    }
    if (out.empty()) throw DataError("config: empty value");
    return out;
}

int to_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw DataError("config: bad integer for '" + key + "': " + v);
    }
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw DataError("config: bad number for '" + key + "': " + v);
    }
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError("config: bad boolean for '" + key + "': " + v);
}

} // namespace

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config: expected key = value", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("config: empty key or value", line_no);

        if (key == "states") {
            cfg.states.clear();
            for (const auto& v : split_list(value)) {
                const int c = to_int(v, key);
                if (c < 1) throw DataError("config: states must be >= 1");
                cfg.states.push_back(c);
            }
        } else if (key == "max_layers") {
            cfg.max_layers = to_int(value, key);
            if (cfg.max_layers < 1) throw DataError("config: max_layers must be >= 1");
        } else if (key == "pool_size") {
            cfg.pool_size = to_int(value, key);
            if (cfg.pool_size < 1) throw DataError("config: pool_size must be >= 1");
        } else if (key == "patience") {
            cfg.patience = to_int(value, key);
            if (cfg.patience < 1) throw DataError("config: patience must be >= 1");
        } else if (key == "predecessors") {
            if (value == "all") {
                cfg.predecessors = 0;
            } else {
                cfg.predecessors = to_int(value, key);
                if (cfg.predecessors < 1) throw DataError("config: predecessors must be >= 1 or 'all'");
            }
        } else if (key == "val_fraction") {
            cfg.val_fraction = to_double(value, key);
            if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
                throw DataError("config: val_fraction must be in [0, 1)");
        } else if (key == "em_max_iters") {
            cfg.em_max_iters = to_int(value, key);
            if (cfg.em_max_iters < 0) throw DataError("config: em_max_iters must be >= 0");
        } else if (key == "em_tol") {
            cfg.em_tol = to_double(value, key);
        } else if (key == "smoothing") {
            cfg.smoothing = to_double(value, key);
            if (cfg.smoothing < 0.0) throw DataError("config: smoothing must be >= 0");
        } else if (key == "fingerprint_mode") {
            if (value == "unigram")
                cfg.fingerprint_mode = FingerprintMode::Unigram;
            else if (value == "unibigram")
                cfg.fingerprint_mode = FingerprintMode::Unibigram;
            else
                throw DataError("config: fingerprint_mode must be unigram|unibigram");
        } else if (key == "fingerprint_layers") {
            cfg.fingerprint_last.clear();
            for (const auto& v : split_list(value)) {
                if (v == "all")
                    cfg.fingerprint_last.push_back(false);
                else if (v == "last")
                    cfg.fingerprint_last.push_back(true);
                else
                    throw DataError("config: fingerprint_layers must be all|last");
            }
        } else if (key == "normalize") {
            cfg.normalize = to_bool(value, key);
        } else if (key == "kernel") {
            if (value != "jaccard" && value != "rbf")
                throw DataError("config: kernel must be jaccard|rbf");
            cfg.kernel.type = value;
        } else if (key == "gamma") {
            cfg.kernel.gamma = to_double(value, key);
            if (cfg.kernel.gamma <= 0.0) throw DataError("config: gamma must be > 0");
        } else if (key == "cv") {
            if (value == "tenfold")
                cfg.cv = CvScheme::TenFold;
            else if (value == "nested")
                cfg.cv = CvScheme::Nested;
            else
                throw DataError("config: cv must be tenfold|nested");
        } else if (key == "seed") {
            try {
                cfg.seed = std::stoull(value);
            } catch (const std::exception&) {
                throw DataError("config: bad seed: " + value);
            }
        } else if (key == "threads") {
            cfg.threads = to_int(value, key);
            if (cfg.threads < 0) throw DataError("config: threads must be >= 0");
        } else if (key == "clf_max_epochs") {
            cfg.classifier.max_epochs = to_int(value, key);
            if (cfg.classifier.max_epochs < 0) throw DataError("config: clf_max_epochs must be >= 0");
        } else if (key == "clf_lr") {
            cfg.classifier.learning_rate = to_double(value, key);
        } else if (key == "clf_l2") {
            cfg.classifier.l2 = to_double(value, key);
        } else if (key == "clf_tol") {
            cfg.classifier.tol = to_double(value, key);
        } else {
            throw DataError("config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    return parse_run_config(in);
}

namespace {

StackConfig to_stack_config(const RunConfig& cfg, int states, bool last_layer) {
    StackConfig sc;
    sc.num_states = states;
    sc.max_layers = cfg.max_layers;
    sc.pool_size = cfg.pool_size;
    sc.patience = cfg.patience;
    sc.predecessor_depth = cfg.predecessors;
    sc.validation_fraction = cfg.val_fraction;
    sc.em.num_states = states;
    sc.em.max_iters = cfg.em_max_iters;
    sc.em.tol = cfg.em_tol;
    sc.em.smoothing = cfg.smoothing;
    sc.em.threads = resolve_threads(cfg.threads);
    sc.fingerprint.mode = cfg.fingerprint_mode;
    sc.fingerprint.last_layer_only = last_layer;
    sc.fingerprint.normalize = cfg.normalize;
    sc.classifier = cfg.classifier;
    sc.seed = cfg.seed;
    sc.threads = resolve_threads(cfg.threads);
    return sc;
}

} // namespace

StackConfig RunConfig::single_stack_config() const {
    if (states.size() != 1 || fingerprint_last.size() != 1)
        throw DataError("config: grid values (comma lists) are only allowed with 'eval'");
    return to_stack_config(*this, states[0], fingerprint_last[0]);
}

std::vector<StackConfig> RunConfig::stack_config_grid() const {
    std::vector<StackConfig> grid;
    for (int c : states)
        for (bool last : fingerprint_last) grid.push_back(to_stack_config(*this, c, last));
    return grid;
}

void print_run_config(const RunConfig& cfg, std::ostream& out) {
    auto join_ints = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    std::string layers;
    for (std::size_t i = 0; i < cfg.fingerprint_last.size(); ++i)
        layers += std::string(i ? "," : "") + (cfg.fingerprint_last[i] ? "last" : "all");
    char num[64];
    auto fmt = [&num](double v) {
        std::snprintf(num, sizeof(num), "%g", v);
        return std::string(num);
    };
    out << "config states = " << join_ints(cfg.states) << '\n'
        << "config max_layers = " << cfg.max_layers << '\n'
        << "config pool_size = " << cfg.pool_size << '\n'
        << "config patience = " << cfg.patience << '\n'
        << "config predecessors = " << (cfg.predecessors == 0 ? "all" : std::to_string(cfg.predecessors))
        << '\n'
        << "config val_fraction = " << fmt(cfg.val_fraction) << '\n'
        << "config em_max_iters = " << cfg.em_max_iters << '\n'
        << "config em_tol = " << fmt(cfg.em_tol) << '\n'
        << "config smoothing = " << fmt(cfg.smoothing) << '\n'
        << "config fingerprint_mode = "
        << (cfg.fingerprint_mode == FingerprintMode::Unigram ? "unigram" : "unibigram") << '\n'
        << "config fingerprint_layers = " << layers << '\n'
        << "config normalize = " << (cfg.normalize ? "true" : "false") << '\n'
        << "config kernel = " << cfg.kernel.type << '\n'
        << "config gamma = " << fmt(cfg.kernel.gamma) << '\n'
        << "config cv = " << (cfg.cv == CvScheme::TenFold ? "tenfold" : "nested") << '\n'
        << "config seed = " << cfg.seed << '\n'
        << "config threads = " << cfg.threads << " (resolved " << resolve_threads(cfg.threads) << ")\n"
        << "config clf_max_epochs = " << cfg.classifier.max_epochs << '\n'
        << "config clf_lr = " << fmt(cfg.classifier.learning_rate) << '\n'
        << "config clf_l2 = " << fmt(cfg.classifier.l2) << '\n'
        << "config clf_tol = " << fmt(cfg.classifier.tol) << '\n';
}

} // namespace cgmm
