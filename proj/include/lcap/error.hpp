#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcap {

enum class ErrorKind {
    invalid_argument,
    degenerate_extent,
    singular_point,
    seed_failure,
    open_trace,
    degenerate_gradient,
    window_overflow,
    too_many_failures,
};

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::degenerate_extent: return "degenerate_extent";
    case ErrorKind::singular_point: return "singular_point";
    case ErrorKind::seed_failure: return "seed_failure";
    case ErrorKind::open_trace: return "open_trace";
    case ErrorKind::degenerate_gradient: return "degenerate_gradient";
    case ErrorKind::window_overflow: return "window_overflow";
    case ErrorKind::too_many_failures: return "too_many_failures";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can separate usage errors from numerical ones.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    bool is_usage() const noexcept { return kind_ == ErrorKind::invalid_argument; }

private:
    ErrorKind kind_;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw Error(ErrorKind::invalid_argument, what);
}

} // namespace lcap
