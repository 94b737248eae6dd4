#include "gmpl/parallel.hpp"

#include <cstdlib>
#include <string>

#include "gmpl/errors.hpp"

namespace gmpl {

unsigned default_threads() {
    if (const char* env = std::getenv("GMPL_THREADS"); env && *env) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (*end != '\0' || v == 0 || v > 4096)
            throw ConfigError("GMPL_THREADS must be a positive integer, got '" + std::string(env) + "'");
        return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace gmpl
