#pragma once

#include <mutex>

namespace inloop::detail {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex();

}  // namespace inloop::detail
