#pragma once

#include <stdexcept>
#include <string>

namespace dsa {

/// Structural failure modes of the DSA/BDSA method and of the surrounding
/// tooling. Degeneracies are states where an estimator is undefined by
/// construction (not numerical noise); they are always reported as typed
/// errors, never as non-finite values.
enum class ErrorKind {
    domain,                   ///< invalid input value (out of range, missing)
    degenerate_preselection,  ///< weight difference B = 0
    degenerate_balance,       ///< B*cos(theta) = 0: channels balance in expectation
    degenerate_postselection, ///< p_f = 0 or p_fbar = 0: one sub-ensemble empty
    singular_bias,            ///< BDSA bias equals p_f/p_fbar: denominator vanishes
    singular_weak_value,      ///< quantum <f|i> = 0: destructive interference
    balanced_counts,          ///< realized n1 == n2 (or n1 == bias*n2)
    insufficient_data,        ///< fewer than 2 records in a channel
    config_mismatch,          ///< merge of batches with differing configurations
    seed_reuse,               ///< identical seeds where independence is required
    parse,                    ///< malformed configuration text
    unknown_quantity,         ///< sweep quantity name not registered
    io,                       ///< file system failure
};

/// Short token used in CSV sentinels and CLI messages.
inline const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::domain: return "domain";
        case ErrorKind::degenerate_preselection: return "preselection";
        case ErrorKind::degenerate_balance: return "balance";
        case ErrorKind::degenerate_postselection: return "postselection";
        case ErrorKind::singular_bias: return "singular-bias";
        case ErrorKind::singular_weak_value: return "singular-weak-value";
        case ErrorKind::balanced_counts: return "balanced-counts";
        case ErrorKind::insufficient_data: return "insufficient-data";
        case ErrorKind::config_mismatch: return "config-mismatch";
        case ErrorKind::seed_reuse: return "seed-reuse";
        case ErrorKind::parse: return "parse";
        case ErrorKind::unknown_quantity: return "unknown-quantity";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for the structural-singularity family (distinct CLI exit code).
    bool is_degeneracy() const noexcept {
        switch (kind_) {
            case ErrorKind::degenerate_preselection:
            case ErrorKind::degenerate_balance:
            case ErrorKind::degenerate_postselection:
            case ErrorKind::singular_bias:
            case ErrorKind::singular_weak_value:
            case ErrorKind::balanced_counts:
            case ErrorKind::insufficient_data:
                return true;
            default:
                return false;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace dsa
