#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tokmod {

// Error families surfaced by the platform. The CLI maps each kind to a
// distinct process exit code; the name is the machine-readable identifier
// printed on stderr.
enum class ErrorKind {
    parameter,
    not_found,
    no_claim,
    already_registered,
    registration_rejected,
    transfer_rejected,
    chain_corrupt,
    capacity_exhausted,
    training_diverged,
};

constexpr std::string_view error_name(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::no_claim: return "no-claim";
    case ErrorKind::already_registered: return "already-registered";
    case ErrorKind::registration_rejected: return "registration-rejected";
    case ErrorKind::transfer_rejected: return "transfer-rejected";
    case ErrorKind::chain_corrupt: return "chain-corrupt";
    case ErrorKind::capacity_exhausted: return "capacity-exhausted";
    case ErrorKind::training_diverged: return "training-diverged";
    }
    return "unknown";
}

constexpr int error_exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::parameter: return 2;
    case ErrorKind::not_found: return 3;
    case ErrorKind::no_claim: return 4;
    case ErrorKind::already_registered: return 5;
    case ErrorKind::registration_rejected: return 6;
    case ErrorKind::transfer_rejected: return 7;
    case ErrorKind::chain_corrupt: return 8;
    case ErrorKind::capacity_exhausted: return 9;
    case ErrorKind::training_diverged: return 10;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        fail(kind, message);
    }
}

} // namespace tokmod
