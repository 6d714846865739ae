#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace threadshim {

enum class Errc {
  // shm_sim
  NotFound,
  AlreadyExists,
  SizeMismatch,
  Removed,
  DoubleDetach,
  OutOfBounds,
  // sem_sim
  NsemsMismatch,
  InvalidValue,
  WouldBlock,
  SetRemoved,
  Timeout,
  Unsupported,
  // shortlock
  InvalidTimeout,
  Reentrancy,
  NotHolder,
  WrongMode,
  Aborted,
  // sig_dispatch
  WrongThread,
  UnknownThread,
  NotInstalled,
  // globals
  Sealed,
  AlreadySealed,
  DuplicateName,
  NotSealed,
  AlreadyAttached,
  NoContext,
  TypeMismatch,
  // lifecycle
  Exhausted,
  AlreadyJoined,
  ThreadStillRunning,
  DuplicateHandle,
  // os_compat
  OsError,
  SuppressedClose,
  PrivilegeDenied,
  PartialRaise,
  // sched_explorer / harness
  BoundExceeded,
  InvalidSchedule,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace threadshim
