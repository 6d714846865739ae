#pragma once

// SysV semaphore sets emulated for threads of one process.
//
// SemSetCore is the pure state machine: values, a FIFO of blocked requests,
// and the wake pass that runs after every release. SemRegistry drives it
// with real threads (mutex + condition variable as the wakeup notification);
// the schedule explorer drives the same core one step at a time.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "threadshim/step_gate.hpp"

namespace threadshim {

struct SemOpRequest {
  std::size_t sem_num = 0;
  int delta = 0;  // < 0: P, > 0: V, 0: wait-for-zero
  bool nowait = false;
  bool undo = false;  // SEM_UNDO; rejected

  friend bool operator==(const SemOpRequest&, const SemOpRequest&) = default;
};

using WaiterId = std::uint64_t;

/// Test-only switch: None models a bare mutex whose release wakes nobody.
enum class WakePolicy { Notify, None };

class SemSetCore {
 public:
  struct Waiter {
    WaiterId id = 0;
    std::vector<SemOpRequest> ops;
    friend bool operator==(const Waiter&, const Waiter&) = default;
  };

  struct Attempt {
    bool committed = false;
    std::vector<WaiterId> woken;
  };

  explicit SemSetCore(std::size_t nsems, WakePolicy policy = WakePolicy::Notify);

  std::size_t nsems() const noexcept { return values_.size(); }
  int value(std::size_t sem) const;
  const std::vector<int>& values() const noexcept { return values_; }
  const std::deque<Waiter>& waiters() const noexcept { return waiters_; }
  /// Waiters whose request touches `sem`.
  std::size_t waiter_count(std::size_t sem) const;

  /// Throws Unsupported / InvalidValue for malformed op lists.
  void validate(std::span<const SemOpRequest> ops) const;
  bool can_commit(std::span<const SemOpRequest> ops) const;

  /// One pass of the acquire loop: commit the whole list atomically, or
  /// enqueue `waiter` at the tail. Either way the wake pass runs afterwards,
  /// so a woken waiter that lost its race hands the notification on.
  Attempt attempt(WaiterId waiter, std::span<const SemOpRequest> ops);

  /// Commit without enqueueing; false if the list cannot commit now.
  bool try_commit(std::span<const SemOpRequest> ops);

  /// Overwrites a value and runs the wake pass.
  std::vector<WaiterId> set_value(std::size_t sem, int value);

  bool remove_waiter(WaiterId waiter);
  /// Drops every waiter (set removal); returns their ids.
  std::vector<WaiterId> clear_waiters();

  /// FIFO scan: wakes each waiter whose request fits the values left after
  /// reserving for the waiters woken before it. Woken waiters leave the queue.
  std::vector<WaiterId> wake_pass();

  /// Canonical encoding of values and queue, for state hashing.
  std::string key() const;

 private:
  static bool apply(std::vector<int>& values, std::span<const SemOpRequest> ops);

  std::vector<int> values_;
  std::deque<Waiter> waiters_;
  WakePolicy policy_;
};

using SemSetId = std::uint64_t;

enum class SemCommand { GetVal, SetVal, Remove };

class SemRegistry {
 public:
  explicit SemRegistry(StepGate* gate = nullptr) : gate_(gate) {}
  SemRegistry(const SemRegistry&) = delete;
  SemRegistry& operator=(const SemRegistry&) = delete;

  /// semget analogue; new sets start with every value 0.
  SemSetId get(std::int64_t key, std::size_t nsems, bool create, bool exclusive = false);

  /// semctl analogue. GetVal returns the value; SetVal and Remove return 0.
  int control(SemSetId id, std::size_t sem_num, SemCommand cmd, int value = 0);
  int get_value(SemSetId id, std::size_t sem_num) { return control(id, sem_num, SemCommand::GetVal); }
  void set_value(SemSetId id, std::size_t sem_num, int value) {
    control(id, sem_num, SemCommand::SetVal, value);
  }
  void remove(SemSetId id) { control(id, 0, SemCommand::Remove); }

  /// semop analogue. Blocks until the list commits, unless an op has nowait
  /// (WouldBlock) or `timeout` elapses (Timeout). SetRemoved if the set is
  /// removed while waiting.
  void op(SemSetId id, std::span<const SemOpRequest> ops,
          std::optional<std::chrono::nanoseconds> timeout = std::nullopt);

  std::size_t waiter_count(SemSetId id, std::size_t sem_num) const;

  /// Per set: `id key values=[..] waiters=[..]`.
  std::string dump() const;

 private:
  struct Set {
    Set(std::int64_t k, std::size_t nsems) : key(k), core(nsems) {}
    std::int64_t key;
    std::mutex mu;
    std::condition_variable cv;
    SemSetCore core;
    std::unordered_set<WaiterId> woken;
    std::unordered_map<WaiterId, ThreadId> participants;
    bool removed = false;
  };

  std::shared_ptr<Set> find(SemSetId id) const;
  void notify(Set& set, const std::vector<WaiterId>& woken);

  StepGate* gate_;
  mutable std::mutex mu_;
  std::map<SemSetId, std::shared_ptr<Set>> sets_;
  std::map<std::int64_t, SemSetId> by_key_;
  SemSetId next_id_ = 1;
  std::atomic<std::uint64_t> next_waiter_{1};
};

}  // namespace threadshim
