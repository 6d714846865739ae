#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace threadshim {

/// Logical thread identity. Assigned by the harness or the thread registry,
/// independent of the OS thread id so that schedules and logs are replayable.
struct ThreadId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(ThreadId, ThreadId) = default;
  friend std::ostream& operator<<(std::ostream& os, ThreadId id) { return os << id.value; }
};

}  // namespace threadshim

template <>
struct std::hash<threadshim::ThreadId> {
  std::size_t operator()(threadshim::ThreadId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
