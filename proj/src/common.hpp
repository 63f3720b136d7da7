#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ufv {

// Bad user input (paths, sizes, malformed configs). Maps to CLI exit code 2.
struct InvalidArgument : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything else that fails at runtime (I/O, integrity, lineage). Exit code 1.
struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolVersion = "0.1.0";

void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace ufv
