#pragma once

#include <stdexcept>
#include <string>

namespace seqreg {

// Error taxonomy shared by the library and the CLI. The category string is
// what the CLI prints next to the nonzero exit status.
enum class ErrorCategory {
    Format,     // malformed input file (CoNLL-U, TSV, matrix, JSON)
    Structure,  // well-formed file describing an invalid tree
    Schema,     // example/tuple does not conform to the task signature
    Dimension,  // shape mismatch between matrices/vectors/permutations
    Numeric,    // non-finite value produced where finiteness is required
    Input,      // invalid argument combination or empty required input
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Format: return "format";
        case ErrorCategory::Structure: return "structure";
        case ErrorCategory::Schema: return "schema";
        case ErrorCategory::Dimension: return "dimension";
        case ErrorCategory::Numeric: return "numeric";
        case ErrorCategory::Input: return "input";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(std::string(category_name(category)) + ": " + message),
          category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void raise(ErrorCategory c, const std::string& message) {
    throw Error(c, message);
}

} // namespace seqreg
