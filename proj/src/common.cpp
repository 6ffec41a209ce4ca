#include "dsr/common.h"

#include <atomic>
#include <iostream>

namespace dsr {

namespace {
std::atomic<bool> g_warnings{true};
}

void log_warning(const std::string& message) {
  if (g_warnings.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

}  // namespace dsr
