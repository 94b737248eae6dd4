#include "gmpl/log.hpp"

#include <cstdlib>
#include <memory>
#include <mutex>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace gmpl {

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static std::once_flag once;
    static std::shared_ptr<spdlog::logger> instance;
    std::call_once(once, [] {
        instance = spdlog::stderr_logger_mt("gmpl");
        instance->set_pattern("[%l] %v");
        const char* env = std::getenv("GMPL_LOG");
        instance->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    });
    return instance;
}

}  // namespace

void log_info(const std::string& message) { logger()->info(message); }
void log_warning(const std::string& message) { logger()->warn(message); }
void set_log_level(const std::string& level) { logger()->set_level(spdlog::level::from_str(level)); }

}  // namespace gmpl
