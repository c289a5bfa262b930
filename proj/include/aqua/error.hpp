#pragma once

#include <stdexcept>
#include <string>

namespace aqua {

// Error categories double as the machine-parsable failure class the CLI
// prints on exit.
enum class ErrorCategory {
    validation,  // bad argument values, out-of-range degrees, contract violations
    dimension,   // shape mismatches between images, vectors, models
    io,          // filesystem and stream failures
    parse,       // malformed files
    state,       // missing data for a requested computation
    numeric,     // degenerate numeric input (zero variance, NaN loss)
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::dimension: return "dimension";
        case ErrorCategory::io: return "io";
        case ErrorCategory::parse: return "parse";
        case ErrorCategory::state: return "state";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }
    const char* category_str() const { return category_name(category_); }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void raise(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
    if (!condition) raise(category, message);
}

}  // namespace aqua
