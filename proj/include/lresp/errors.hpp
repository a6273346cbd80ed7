#pragma once

#include <stdexcept>
#include <string>

namespace lresp {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotExpanding : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when no power of the discretized operator is certified to contract
// on zero-average functions below the configured cap.
struct NoContraction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractionNotCertified : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    int line;
    int pos;
    ParseError(const std::string& msg, int line_, int pos_)
        : std::runtime_error("line " + std::to_string(line_) + ", position " + std::to_string(pos_) + ": " + msg),
          line(line_), pos(pos_) {}
};

}  // namespace lresp
