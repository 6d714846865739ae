#include "threadshim/error.hpp"

namespace threadshim {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotFound: return "NotFound";
    case Errc::AlreadyExists: return "AlreadyExists";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::Removed: return "Removed";
    case Errc::DoubleDetach: return "DoubleDetach";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::NsemsMismatch: return "NsemsMismatch";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::WouldBlock: return "WouldBlock";
    case Errc::SetRemoved: return "SetRemoved";
    case Errc::Timeout: return "Timeout";
    case Errc::Unsupported: return "Unsupported";
    case Errc::InvalidTimeout: return "InvalidTimeout";
    case Errc::Reentrancy: return "Reentrancy";
    case Errc::NotHolder: return "NotHolder";
    case Errc::WrongMode: return "WrongMode";
    case Errc::Aborted: return "Aborted";
    case Errc::WrongThread: return "WrongThread";
    case Errc::UnknownThread: return "UnknownThread";
    case Errc::NotInstalled: return "NotInstalled";
    case Errc::Sealed: return "Sealed";
    case Errc::AlreadySealed: return "AlreadySealed";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::NotSealed: return "NotSealed";
    case Errc::AlreadyAttached: return "AlreadyAttached";
    case Errc::NoContext: return "NoContext";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::Exhausted: return "Exhausted";
    case Errc::AlreadyJoined: return "AlreadyJoined";
    case Errc::ThreadStillRunning: return "ThreadStillRunning";
    case Errc::DuplicateHandle: return "DuplicateHandle";
    case Errc::OsError: return "OsError";
    case Errc::SuppressedClose: return "SuppressedClose";
    case Errc::PrivilegeDenied: return "PrivilegeDenied";
    case Errc::PartialRaise: return "PartialRaise";
    case Errc::BoundExceeded: return "BoundExceeded";
    case Errc::InvalidSchedule: return "InvalidSchedule";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace threadshim
