#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "threadshim/step_gate.hpp"

namespace threadshim {

enum class ScheduleOutcome { Running, Completed, Stalled, BudgetExhausted, Diverged };

std::string_view to_string(ScheduleOutcome outcome) noexcept;

/// Runs a fixed set of real threads one transition at a time. A policy picks
/// the next participant among those waiting at their gate; the choice is made
/// only once every non-blocked participant has reached a gate, so the order
/// of transitions depends on the policy alone.
class DeterministicScheduler final : public StepGate {
 public:
  /// Returns the participant to run next, or nullopt to stop (Diverged).
  using Policy =
      std::function<std::optional<ThreadId>(const std::vector<ThreadId>& ready, std::uint64_t step)>;
  /// Called when nothing is ready but some participant is blocked. Returns
  /// true if it woke something (e.g. fired a virtual-time alarm).
  using IdleHook = std::function<bool()>;

  DeterministicScheduler(Policy policy, std::uint64_t step_budget);

  /// Registers a participant. All participants must be added before any calls enter().
  void add(ThreadId thread);
  void add_idle_hook(IdleHook hook);

  /// Binds the calling OS thread to `thread`.
  void enter(ThreadId thread);
  /// The calling participant will take no further steps.
  void finish();

  ThreadId current() const override;
  void before_step() override;
  void on_block() override;
  void on_wake(ThreadId thread) override;

  /// Blocks until the run completes or stops.
  ScheduleOutcome wait();
  ScheduleOutcome outcome() const;
  std::vector<ThreadId> taken() const;
  std::vector<ThreadId> blocked() const;

  /// Replays `schedule`, then stops (Diverged) unless `then` continues.
  static Policy replay(std::vector<ThreadId> schedule, Policy then = {});
  static Policy seeded_random(std::uint64_t seed);
  /// Keeps running whichever participant `holder()` reports; otherwise picks
  /// with `fallback`. Lets every critical section run without contention.
  static Policy sticky(std::function<std::optional<ThreadId>()> holder, Policy fallback);

 private:
  enum class State { Starting, Running, AtGate, Blocked, Pending, Done };

  void dispatch(std::unique_lock<std::mutex>& lock);
  void stop(std::unique_lock<std::mutex>& lock, ScheduleOutcome outcome);

  Policy policy_;
  std::uint64_t budget_;
  std::vector<IdleHook> idle_hooks_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<ThreadId, State> states_;
  std::optional<ThreadId> running_;
  std::vector<ThreadId> taken_;
  ScheduleOutcome outcome_ = ScheduleOutcome::Running;
  bool dispatching_ = false;
};

}  // namespace threadshim
