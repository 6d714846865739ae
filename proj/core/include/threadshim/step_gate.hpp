#pragma once

#include "threadshim/types.hpp"

namespace threadshim {

/// Hook points the real-thread substrates (SemRegistry, ShortLock) call around
/// every state-machine transition. With no gate installed the substrates run
/// freely; with a DeterministicScheduler installed exactly one participant
/// performs a transition at a time, in an order the scheduler picks.
class StepGate {
 public:
  virtual ~StepGate() = default;

  /// Identity of the calling participant.
  virtual ThreadId current() const = 0;
  /// Blocks until the caller may perform its next transition.
  virtual void before_step() = 0;
  /// Caller is about to wait for a wakeup. Must be called without holding
  /// the substrate's own mutex.
  virtual void on_block() = 0;
  /// `thread` was woken by the running participant (may be called while
  /// holding the substrate mutex).
  virtual void on_wake(ThreadId thread) = 0;
};

}  // namespace threadshim
