#pragma once

// Process-control calls mapped onto threads:
//   fork/main      -> spawn
//   exit/_exit/abort -> exit_current (thread exit, never process exit)
//   getpid         -> ThreadId recorded in the registry's global array
//   waitpid/wait3/wait4 -> join / detach on a specific thread
//   sleep          -> sleep_current (delays only the caller)
// getenv/putenv and setsid need no thread counterpart and have no wrapper.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "threadshim/types.hpp"

namespace threadshim {

class GlobalLayout;

enum class ThreadRole { Postmaster, Worker, Bootstrap };
enum class ThreadState { Running, Exited, Abnormal };

std::string_view to_string(ThreadRole role) noexcept;
std::string_view to_string(ThreadState state) noexcept;

struct ThreadOutcome {
  ThreadState state = ThreadState::Running;
  int status = 0;
};

struct ThreadRecord {
  std::size_t slot = 0;
  ThreadId id;
  ThreadRole role = ThreadRole::Worker;
  ThreadState state = ThreadState::Running;
  int status = 0;
};

/// Global list of per-thread heap allocations. After a thread dies abnormally
/// the main thread sweeps whatever it still owned.
class ReclaimList {
 public:
  using Deleter = void (*)(void*);

  ReclaimList() = default;
  ReclaimList(const ReclaimList&) = delete;
  ReclaimList& operator=(const ReclaimList&) = delete;
  ~ReclaimList();

  /// Takes ownership of `ptr`. DuplicateHandle if it is already registered.
  void reclaim_register(ThreadId owner, void* ptr, Deleter deleter);

  template <typename T>
  T* reclaim_register(ThreadId owner, std::unique_ptr<T> object) {
    T* raw = object.get();
    reclaim_register(owner, raw, [](void* p) { delete static_cast<T*>(p); });
    object.release();
    return raw;
  }

  /// Registered allocation of `bytes` zeroed bytes.
  void* allocate(ThreadId owner, std::size_t bytes);
  /// Normal-path free of a registered handle.
  void release(void* ptr);
  /// Frees every handle owned by `owner`; returns how many.
  std::size_t sweep(ThreadId owner);

  std::size_t size() const;
  std::size_t count_for(ThreadId owner) const;

  /// Registered handles not yet freed, summed over every list in the process.
  static std::int64_t live_allocations() noexcept;

 private:
  struct Entry {
    ThreadId owner;
    Deleter deleter;
  };
  mutable std::mutex mu_;
  std::unordered_map<void*, Entry> entries_;
};

/// Thrown by exit_current; caught at the thread boundary.
struct ThreadExit {
  int status = 0;
};

class ThreadRegistry {
 public:
  /// The constructing thread is the main thread. With a layout, every spawned
  /// thread gets a GlobalContext, registered in the reclaim list.
  explicit ThreadRegistry(std::size_t capacity = 1024, GlobalLayout* layout = nullptr);
  ThreadRegistry(const ThreadRegistry&) = delete;
  ThreadRegistry& operator=(const ThreadRegistry&) = delete;
  /// Waits for every thread, detached ones included.
  ~ThreadRegistry();

  /// Starts `entry` on a new thread. Its return value is the exit status; an
  /// escaping exception other than ThreadExit marks the thread Abnormal.
  ThreadId spawn(std::function<int()> entry, ThreadRole role);

  [[noreturn]] static void exit_current(int status);
  /// abort() call sites: same mapping as exit, status 128 + SIGABRT.
  [[noreturn]] static void abort_current();
  static void sleep_current(std::chrono::nanoseconds duration);
  /// Registry id of the calling thread, if it was spawned by a registry.
  static std::optional<ThreadId> current_thread() noexcept;

  ThreadOutcome join(ThreadId thread);
  void detach(ThreadId thread);

  /// Main thread only (WrongThread); thread must have stopped running
  /// (ThreadStillRunning).
  std::size_t reclaim_sweep(ThreadId thread);
  ReclaimList& reclaim() noexcept { return reclaim_; }

  std::vector<ThreadRecord> snapshot() const;
  std::size_t running_count() const;
  std::optional<ThreadRecord> record(ThreadId thread) const;
  /// `slot id role state status`, one line per thread still in the registry.
  std::string dump() const;

 private:
  struct Slot {
    ThreadRecord record;
    std::thread thread;
    bool joined = false;
    bool detached = false;
  };

  void run(ThreadId id, const std::function<int()>& entry);

  std::size_t capacity_;
  GlobalLayout* layout_;
  std::thread::id main_thread_;
  ReclaimList reclaim_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<ThreadId, Slot> slots_;
  std::set<ThreadId> retired_;  // detached threads whose slot was cleaned
  std::size_t next_slot_ = 0;
  std::size_t live_ = 0;
};

}  // namespace threadshim
