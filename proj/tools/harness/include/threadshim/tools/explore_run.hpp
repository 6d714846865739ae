#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "threadshim/explorer.hpp"
#include "threadshim/models.hpp"

namespace threadshim::tools {

enum class ExploreTarget { SemModel, LockLegacy, LockFixed, LockFlagLess };

ExploreTarget parse_explore_target(std::string_view text);
std::string_view to_string(ExploreTarget target) noexcept;

struct ExploreRequest {
  ExploreTarget target = ExploreTarget::LockLegacy;
  std::size_t threads = 3;
  std::size_t steps = 12;
  std::size_t iterations = 1;  // lock targets: acquire/release pairs per thread
};

struct ExploreReport {
  ExploreRequest request;
  explorer::ExploreResult result;
};

/// Semaphore programs cycled over thread indices: one binary (sem 0) and one
/// counting semaphore of value 3 (sem 1).
explorer::SemModelConfig standard_sem_config(std::size_t threads);

/// Throws BoundExceeded for bounds beyond the explorer's limits.
ExploreReport run_explore(const ExploreRequest& request);

/// key=value lines followed by the witness trace, if any.
std::string format_report(const ExploreReport& report);

}  // namespace threadshim::tools
