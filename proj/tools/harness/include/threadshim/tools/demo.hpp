#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "threadshim/scheduler.hpp"
#include "threadshim/shortlock.hpp"
#include "threadshim/types.hpp"

namespace threadshim::tools {

/// Virtual: workers take turns one lock transition at a time under a seeded
/// DeterministicScheduler. Free: real threads run unconstrained.
enum class ScheduleMode { Virtual, Free };

ScheduleMode parse_schedule_mode(std::string_view text);
std::string_view to_string(ScheduleMode mode) noexcept;

struct ScenarioConfig {
  std::size_t workers = 4;
  std::size_t iterations = 1000;  // guarded increments per worker
  LockMode lock_mode = LockMode::Fixed;
  std::uint64_t seed = 1;
  ScheduleMode schedule = ScheduleMode::Virtual;
  /// Start from the explorer's legacy starvation witness, then keep every
  /// lock holder running until it releases (virtual mode only).
  bool adversarial = false;
  /// Transitions (virtual) or microseconds (free); 0 picks a default.
  std::uint64_t self_wake_timeout = 0;
};

struct DemoResult {
  std::uint64_t counter = 0;
  std::uint64_t expected = 0;
  std::string outcome;  // scheduler outcome, or completed / starved in free mode
  std::vector<ThreadId> starved;  // worker indices
  std::uint64_t steps = 0;
  std::vector<ThreadId> prefix;  // replayed witness schedule, if any
  int done_count = 0;           // value of the completion semaphore
  std::int64_t shm_leaks = 0;
  std::size_t reclaim_swept = 0;
  std::size_t reclaim_remaining = 0;
  std::string registry_dump;
  std::string lock_log;

  bool pass() const noexcept { return starved.empty() && counter == expected; }
};

/// Postmaster thread spawns a bootstrap thread and the workers; all share one
/// shm segment holding the counter, one semaphore set, and one short lock.
DemoResult run_demo(const ScenarioConfig& config);

/// key=value lines.
std::string format_result(const ScenarioConfig& config, const DemoResult& result);

/// Schedule of the legacy starvation witness for three threads.
std::vector<ThreadId> legacy_witness_schedule();

}  // namespace threadshim::tools
