#include "rng.hpp"
#include "common.hpp"

#include <cstdio>

namespace ufv {

void log_info(const std::string& msg) { std::fprintf(stderr, "[ufv] %s\n", msg.c_str()); }
void log_warn(const std::string& msg) { std::fprintf(stderr, "[ufv] warning: %s\n", msg.c_str()); }

}  // namespace ufv
