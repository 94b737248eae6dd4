#pragma once

#include <string>

namespace gmpl {

// Thin wrappers over the library's spdlog logger ("gmpl", stderr). Level is
// taken from GMPL_LOG (trace, debug, info, warn, error, off); default warn.
void log_info(const std::string& message);
void log_warning(const std::string& message);
void set_log_level(const std::string& level);

}  // namespace gmpl
