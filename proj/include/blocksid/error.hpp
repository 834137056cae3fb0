#pragma once

#include <stdexcept>
#include <string>

namespace blocksid {

enum class Errc {
    invalid_argument,
    shape_mismatch,
    out_of_range,
    non_finite,
    not_psd,
    ls_undefined,
    witness_undefined,
    incoherence_undefined,
    tmin_undefined,
    parse_error,
    io_error,
};

inline const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::out_of_range: return "out of range";
    case Errc::non_finite: return "non-finite data";
    case Errc::not_psd: return "covariance not positive semidefinite";
    case Errc::ls_undefined: return "LS undefined";
    case Errc::witness_undefined: return "witness undefined";
    case Errc::incoherence_undefined: return "incoherence undefined";
    case Errc::tmin_undefined: return "t_min undefined";
    case Errc::parse_error: return "parse error";
    case Errc::io_error: return "I/O error";
    }
    return "unknown error";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the sweep runner in particular) can tell recoverable outcomes
/// such as an undefined least-squares estimate from genuine misuse.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace blocksid
