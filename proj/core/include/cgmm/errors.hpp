#ifndef CGMM_ERRORS_HPP
#define CGMM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cgmm {

// Malformed input text (dataset, config or model files). Carries the
// 1-based line number when one is known, 0 otherwise.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Well-formed input that violates a contract (alphabet mismatch, missing
// predecessor assignments, too few classes, ...).
class DataError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Degenerate numerics: zero normalizer in the E-step, -inf log-likelihood.
class NumericError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cgmm

#endif
