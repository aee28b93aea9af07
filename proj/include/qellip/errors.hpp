#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace qellip {

enum class ErrorKind {
    invalid_parameter,
    truncation_too_small,
    inconsistent_solution,
    invalid_state,
    cutoff_too_small,
    layer_too_small,
    dimension_mismatch,
    numerical_domain,
    parse_error,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_parameter: return "invalid-parameter";
        case ErrorKind::truncation_too_small: return "truncation-too-small";
        case ErrorKind::inconsistent_solution: return "inconsistent-solution";
        case ErrorKind::invalid_state: return "invalid-state";
        case ErrorKind::cutoff_too_small: return "cutoff-too-small";
        case ErrorKind::layer_too_small: return "layer-too-small";
        case ErrorKind::dimension_mismatch: return "dimension-mismatch";
        case ErrorKind::numerical_domain: return "numerical-domain";
        case ErrorKind::parse_error: return "parse-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Internal tolerance failures as opposed to bad user input.
    bool is_tolerance_failure() const noexcept {
        return kind_ == ErrorKind::inconsistent_solution;
    }

private:
    ErrorKind kind_;
};

/// Truncation tolerance for Fock-space constructors. `QELLIP_TOL` overrides
/// the 1e-10 default when it parses to a positive number.
inline double default_tail_tolerance() {
    static const double tol = [] {
        if (const char* env = std::getenv("QELLIP_TOL")) {
            char* end = nullptr;
            const double v = std::strtod(env, &end);
            if (end != env && v > 0.0) return v;
        }
        return 1e-10;
    }();
    return tol;
}

}  // namespace qellip
