#pragma once

#include <stdexcept>
#include <string>

namespace tmf {

// All library failures carry a machine-readable kind tag; the CLI maps any
// escaped error to exit status 2.
class error : public std::runtime_error {
public:
    std::string kind;
    error(std::string k, const std::string& msg)
        : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

[[noreturn]] inline void fail(const char* kind, const std::string& msg) {
    throw error(kind, msg);
}

} // namespace tmf
