#pragma once

#include <stdexcept>
#include <string>

namespace stickysim {

enum class errc {
    invalid_argument = 1,
    spec_violation   = 2,
    numerical_failure = 3,
    out_of_range     = 4,
};

class Error : public std::runtime_error {
public:
    Error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, std::string msg) { throw Error(code, std::move(msg)); }

} // namespace stickysim
