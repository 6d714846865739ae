#pragma once

// Explorer models for the short lock and the semaphore core.

#include <cstdint>
#include <string>
#include <vector>

#include "threadshim/explorer.hpp"
#include "threadshim/sem.hpp"
#include "threadshim/shortlock.hpp"

namespace threadshim::explorer {

enum class ThreadStatus : std::uint8_t { Runnable, Blocked, Done };

struct LockModelConfig {
  LockMode mode = LockMode::Legacy;
  std::size_t threads = 3;
  std::size_t iterations = 1;  // acquire/release pairs per thread
  std::uint64_t self_wake_timeout = 3;
};

/// Each thread runs `iterations` x (acquire; release). A blocked thread
/// becomes runnable when woken and retries its acquire.
class LockModel {
 public:
  struct Thread {
    std::uint32_t pc = 0;
    ThreadStatus status = ThreadStatus::Runnable;
  };
  struct State {
    ShortLockState lock;
    std::vector<Thread> threads;
  };

  explicit LockModel(LockModelConfig config);

  State initial() const;
  std::size_t thread_count() const noexcept { return config_.threads; }
  std::vector<ThreadId> runnable(const State& s) const;
  std::string op_name(const State& s, ThreadId t) const;
  State step(const State& s, ThreadId t) const;
  std::string key(const State& s) const;
  std::string describe(const State& s) const;
  bool has_blocked(const State& s) const;
  std::string event_log(const State& s) const;

  const LockModelConfig& config() const noexcept { return config_; }

  /// At most one thread between its acquire and its release.
  static Property<State> mutual_exclusion();
  /// Nothing can run, the lock is free, and someone is still queued.
  static Property<State> no_starvation();
  static Property<State> safety_and_progress();

 private:
  LockModelConfig config_;
};

struct SemAction {
  enum class Kind { Op, SetVal };
  Kind kind = Kind::Op;
  std::vector<SemOpRequest> ops;
  std::size_t sem = 0;
  int value = 0;

  static SemAction op(std::vector<SemOpRequest> ops);
  static SemAction p(std::size_t sem, int n = 1);
  static SemAction v(std::size_t sem, int n = 1);
  static SemAction set_value(std::size_t sem, int value);

  /// `P0`, `V1x2`, `{P0,P1}`, `set0=2`
  std::string name() const;
};

struct SemModelConfig {
  std::vector<int> initial;
  std::vector<std::vector<SemAction>> programs;
  WakePolicy wake = WakePolicy::Notify;
};

/// Each thread runs its program of semop lists and SetVal calls against one
/// SemSetCore. Blocked attempts are steps; a woken thread retries.
class SemModel {
 public:
  struct Thread {
    std::uint32_t pc = 0;
    ThreadStatus status = ThreadStatus::Runnable;
  };
  struct State {
    SemSetCore core;
    std::vector<Thread> threads;
    std::vector<int> base;       // value after the last SetVal (or initial)
    std::vector<int> committed;  // net committed deltas since then
    std::vector<int> held;       // units taken by P and not yet returned
    std::vector<std::string> events;
  };

  explicit SemModel(SemModelConfig config);

  State initial() const;
  std::size_t thread_count() const noexcept { return config_.programs.size(); }
  std::vector<ThreadId> runnable(const State& s) const;
  std::string op_name(const State& s, ThreadId t) const;
  State step(const State& s, ThreadId t) const;
  std::string key(const State& s) const;
  std::string describe(const State& s) const;
  bool has_blocked(const State& s) const;
  std::string event_log(const State& s) const;

  const SemModelConfig& config() const noexcept { return config_; }

  static Property<State> non_negative();
  /// Every value equals its base plus the deltas of fully committed lists.
  static Property<State> atomicity();
  /// At quiescence no blocked waiter's request could commit.
  static Property<State> no_lost_wakeup();
  /// Units held never exceed the initial value (models without SetVal).
  Property<State> capacity() const;
  Property<State> soundness() const;

 private:
  SemModelConfig config_;
};

}  // namespace threadshim::explorer
