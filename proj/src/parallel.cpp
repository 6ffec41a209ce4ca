#include "dsr/parallel.h"

#include <cstdlib>
#include <memory>
#include <string>

#include <tbb/global_control.h>

namespace dsr {

namespace {
std::unique_ptr<tbb::global_control>& control() {
  static std::unique_ptr<tbb::global_control> gc;
  return gc;
}
}  // namespace

void set_max_threads(int n) {
  control().reset();
  if (n > 0) {
    control() = std::make_unique<tbb::global_control>(
        tbb::global_control::max_allowed_parallelism, static_cast<std::size_t>(n));
  }
}

void configure_threads_from_env() {
  if (const char* env = std::getenv("DSR_THREADS")) {
    try {
      set_max_threads(std::stoi(env));
    } catch (const std::exception&) {
      // Unparseable values leave the default in place.
    }
  }
}

}  // namespace dsr
