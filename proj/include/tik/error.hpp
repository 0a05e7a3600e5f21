#pragma once

#include <stdexcept>
#include <string>

namespace tik {

enum class ErrorKind {
    usage,   // invalid arguments or configuration
    domain,  // non-finite or out-of-domain numeric input
    range,   // result not representable (overflow)
    io,      // file could not be opened or written
    parse,   // malformed input file
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tik
