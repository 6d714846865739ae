#pragma once

// Short lock (LWLock-style exclusive lock with a FIFO wait queue).
//
// Legacy: release wakes the queue head only while the wake flag is set; the
// flag is set on every enqueue and cleared after a wake. A waiter can be
// stranded when the flag is false and nobody enqueues again.
// FlagLess: release wakes the head whenever the queue is non-empty.
// Fixed: FlagLess plus a self-wake alarm armed on enqueue; when it expires
// and the lock is free, the waiter wakes itself and retries.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "threadshim/step_gate.hpp"
#include "threadshim/types.hpp"

namespace threadshim {

enum class LockMode { Legacy, Fixed, FlagLess };

std::string_view to_string(LockMode mode) noexcept;
LockMode parse_lock_mode(std::string_view text);

enum class LockEventKind { Acquire, Enqueue, Release, Wake, SelfWake, Timeout };

std::string_view to_string(LockEventKind kind) noexcept;

struct LockEvent {
  std::uint64_t step = 0;
  LockEventKind kind = LockEventKind::Acquire;
  ThreadId thread;

  friend bool operator==(const LockEvent&, const LockEvent&) = default;
};

/// `step kind thread`, one line per event.
std::string format_event_log(const std::vector<LockEvent>& events);

/// Virtual: time is the transition count and alarms are checked after every
/// transition. Wall: the caller supplies `now` (e.g. microseconds).
enum class LockClock { Virtual, Wall };

class ShortLockState {
 public:
  struct AcquireResult {
    bool acquired = false;
    std::vector<ThreadId> woken;
  };

  /// Fixed mode requires a positive self-wake timeout (InvalidTimeout).
  ShortLockState(LockMode mode, std::uint64_t self_wake_timeout = 0,
                 LockClock clock = LockClock::Virtual);

  /// One acquisition attempt by `thread`: take the lock if free, otherwise
  /// join the queue (Legacy: raise the wake flag; Fixed: arm the alarm).
  AcquireResult acquire(ThreadId thread);
  /// Returns the threads woken by this release (and, on the virtual clock,
  /// by alarms expiring at this step).
  std::vector<ThreadId> release(ThreadId thread);
  /// Processes alarms due at `now`. Fixed mode only (WrongMode).
  std::vector<ThreadId> tick(std::uint64_t now);
  /// Virtual clock with nothing else able to run: jump to the earliest armed
  /// deadline and tick there. Empty if no alarm is armed.
  std::vector<ThreadId> advance_idle();
  /// Wall clock: sets the time used when arming alarms.
  void set_now(std::uint64_t now);

  LockMode mode() const noexcept { return mode_; }
  bool held() const noexcept { return holder_.has_value(); }
  std::optional<ThreadId> holder() const noexcept { return holder_; }
  const std::deque<ThreadId>& queue() const noexcept { return queue_; }
  bool wake_flag() const noexcept { return wake_flag_; }
  std::uint64_t now() const noexcept { return now_; }
  std::uint64_t step() const noexcept { return step_; }
  std::uint64_t self_wake_timeout() const noexcept { return timeout_; }
  std::optional<std::uint64_t> deadline(ThreadId thread) const;
  bool has_armed_alarms() const noexcept { return !alarms_.empty(); }
  const std::vector<LockEvent>& events() const noexcept { return events_; }

  /// Canonical encoding of everything except the event log.
  std::string key() const;
  /// `held=0 holder=- flag=1 queue=[2,3]`
  std::string describe() const;

 private:
  void log(LockEventKind kind, ThreadId thread) { events_.push_back({step_, kind, thread}); }
  void finish_transition(std::vector<ThreadId>& woken);
  void tick_into(std::vector<ThreadId>& woken);

  LockMode mode_;
  LockClock clock_;
  std::uint64_t timeout_;
  std::optional<ThreadId> holder_;
  std::deque<ThreadId> queue_;
  bool wake_flag_ = false;
  std::map<ThreadId, std::uint64_t> alarms_;
  std::uint64_t now_ = 0;
  std::uint64_t step_ = 0;
  std::vector<LockEvent> events_;
};

struct LockSnapshot {
  bool held = false;
  std::optional<ThreadId> holder;
  std::vector<ThreadId> queue;
  bool wake_flag = false;
};

/// Blocking short lock for real threads. Without a gate the self-wake timeout
/// is in microseconds of wall time; with a gate it counts transitions.
class ShortLock {
 public:
  ShortLock(LockMode mode, std::uint64_t self_wake_timeout = 0, StepGate* gate = nullptr);
  ShortLock(const ShortLock&) = delete;
  ShortLock& operator=(const ShortLock&) = delete;

  /// Returns once `thread` holds the lock. Throws Aborted after abort_waiters().
  void acquire(ThreadId thread);
  void release(ThreadId thread);

  /// Fails every current and future waiter with Aborted.
  void abort_waiters();
  /// Gated runs: fire the earliest virtual alarm. True if someone woke.
  bool advance_idle();
  /// Wall clock: process alarms now (e.g. from an Alarm signal handler).
  std::vector<ThreadId> tick();

  LockSnapshot snapshot() const;
  std::optional<ThreadId> holder() const;
  std::vector<LockEvent> events() const;
  std::string event_log() const;

 private:
  std::uint64_t wall_now() const;
  void notify(const std::vector<ThreadId>& woken);

  StepGate* gate_;
  std::chrono::steady_clock::time_point origin_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  ShortLockState state_;
  std::unordered_set<ThreadId> woken_;
  bool aborted_ = false;
};

}  // namespace threadshim
