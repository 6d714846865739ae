#pragma once

// One process-wide handler per signal kind is all the OS allows, so that
// handler is a dispatcher: it looks at the target thread's private dispatch
// flag for the kind and runs the thread's own handler only when the flag is set.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "threadshim/types.hpp"

namespace threadshim {

enum class SignalKind : std::uint8_t { Hup, Term, Usr1, Usr2, Alarm, Child };

inline constexpr std::array<SignalKind, 6> kAllSignalKinds = {
    SignalKind::Hup, SignalKind::Term, SignalKind::Usr1,
    SignalKind::Usr2, SignalKind::Alarm, SignalKind::Child};

std::string_view to_string(SignalKind kind) noexcept;

using SignalHandler = std::function<void(SignalKind)>;

struct DeliveryRecord {
  SignalKind kind = SignalKind::Hup;
  ThreadId target;
  bool handled = false;
  std::uint64_t step = 0;
};

class SignalDispatcher {
 public:
  SignalDispatcher() = default;
  SignalDispatcher(const SignalDispatcher&) = delete;
  SignalDispatcher& operator=(const SignalDispatcher&) = delete;

  /// Idempotent.
  void install_dispatcher(SignalKind kind);
  bool installed(SignalKind kind) const;
  std::size_t installed_count() const;

  /// Creates `thread`'s private table, owned by the calling OS thread.
  void attach_thread(ThreadId thread);
  /// Thread exit. Later deliveries to it are recorded unhandled.
  void detach_thread(ThreadId thread);

  /// Sets the (handler, flag) pair as one update. Only the owning thread may
  /// call this (WrongThread).
  void set_thread_handler(ThreadId thread, SignalKind kind, SignalHandler handler, bool flag);

  /// Routes synchronously: the handler runs on the caller's stack.
  DeliveryRecord deliver(SignalKind kind, ThreadId target);

  /// Deferred route for real threads: queue now, route at the target's next
  /// poll() (its yield point).
  void post(SignalKind kind, ThreadId target);
  /// Runs on the owning thread; returns the number of records produced.
  std::size_t poll(ThreadId thread);

  std::vector<DeliveryRecord> audit_log() const;
  /// `step kind thread handled`, one line per record.
  std::string dump() const;

 private:
  struct Entry {
    SignalHandler handler;
    bool flag = false;
  };
  struct Table {
    std::thread::id owner;
    bool exited = false;
    std::map<SignalKind, Entry> entries;
    std::deque<SignalKind> pending;
  };

  DeliveryRecord route(SignalKind kind, ThreadId target);

  mutable std::mutex mu_;
  std::array<bool, kAllSignalKinds.size()> installed_{};
  std::map<ThreadId, Table> tables_;
  std::vector<DeliveryRecord> log_;
};

}  // namespace threadshim
