#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "threadshim/error.hpp"

namespace threadshim {

// ---------------------------------------------------------------------------
// Pipes shared by threads of one process. Both ends stay open for the life of
// the pair and are always non-blocking, so a full or empty pipe reports
// WouldBlock instead of stalling the whole process.

enum class IoStatus { Ok, WouldBlock };

struct IoResult {
  IoStatus status = IoStatus::Ok;
  std::size_t bytes = 0;
};

class PipePair {
 public:
  PipePair(PipePair&& other) noexcept;
  PipePair& operator=(PipePair&& other) noexcept;
  PipePair(const PipePair&) = delete;
  PipePair& operator=(const PipePair&) = delete;
  ~PipePair();

  IoResult write(std::span<const std::byte> data);
  IoResult write(std::string_view text) { return write(std::as_bytes(std::span(text.data(), text.size()))); }
  IoResult read(std::span<std::byte> buffer);
  std::string read_string(std::size_t max_bytes);

  /// Closing an end is refused (SuppressedClose) while the pair is shared.
  void close_read();
  void close_write();
  void set_shared(bool shared) noexcept { shared_ = shared; }
  bool close_suppressed() const noexcept { return shared_; }

  /// True iff O_NONBLOCK is set on both ends.
  bool nonblocking() const;
  std::size_t capacity() const;
  int read_fd() const noexcept { return read_fd_; }
  int write_fd() const noexcept { return write_fd_; }

 private:
  friend PipePair pipe_open_unnamed();
  friend PipePair pipe_open_named(const std::filesystem::path& path);
  PipePair(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  void reset() noexcept;

  int read_fd_ = -1;
  int write_fd_ = -1;
  bool shared_ = true;
};

PipePair pipe_open_unnamed();
/// Creates the FIFO if absent; both ends are opened with O_NONBLOCK.
PipePair pipe_open_named(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Resource limits. A setuid-root binary raises its soft and hard limits once
// in main(), then drops the effective uid back to the invoking user.

enum class ResourceKind { OpenFiles, Processes, CoreSize, StackSize };

std::string_view to_string(ResourceKind kind) noexcept;

struct Limits {
  std::uint64_t soft = 0;
  std::uint64_t hard = 0;
  friend bool operator==(const Limits&, const Limits&) = default;
};

struct RlimitTarget {
  ResourceKind kind = ResourceKind::OpenFiles;
  Limits limits;
};

struct RlimitReport {
  ResourceKind kind = ResourceKind::OpenFiles;
  Limits old_limits;
  Limits new_limits;
  bool privilege_dropped = false;
};

/// `resource=open_files old_soft=.. old_hard=.. new_soft=.. new_hard=.. privilege_dropped=1`
std::string format_report(const RlimitReport& report);

class OsAdapter {
 public:
  virtual ~OsAdapter() = default;
  virtual Limits get_limit(ResourceKind kind) = 0;
  /// False when the OS refuses (EPERM / EINVAL).
  virtual bool set_limit(ResourceKind kind, Limits limits) = 0;
  virtual std::uint32_t real_uid() = 0;
  virtual std::uint32_t effective_uid() = 0;
  virtual bool set_effective_uid(std::uint32_t uid) = 0;
};

/// In-memory OS: hard raises need effective uid 0; records every euid change.
class MockOsAdapter final : public OsAdapter {
 public:
  MockOsAdapter(std::uint32_t real_uid, std::uint32_t effective_uid);

  void set(ResourceKind kind, Limits limits) { limits_[kind] = limits; }

  Limits get_limit(ResourceKind kind) override;
  bool set_limit(ResourceKind kind, Limits limits) override;
  std::uint32_t real_uid() override { return real_uid_; }
  std::uint32_t effective_uid() override { return effective_uid_; }
  bool set_effective_uid(std::uint32_t uid) override;

  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& euid_transitions() const noexcept {
    return transitions_;
  }

 private:
  std::uint32_t real_uid_;
  std::uint32_t effective_uid_;
  std::map<ResourceKind, Limits> limits_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> transitions_;
};

class PosixOsAdapter final : public OsAdapter {
 public:
  Limits get_limit(ResourceKind kind) override;
  bool set_limit(ResourceKind kind, Limits limits) override;
  std::uint32_t real_uid() override;
  std::uint32_t effective_uid() override;
  bool set_effective_uid(std::uint32_t uid) override;
};

/// Carries the per-resource reports for PrivilegeDenied / PartialRaise.
class RlimitError : public Error {
 public:
  RlimitError(Errc code, std::vector<RlimitReport> reports)
      : Error(code, "resource limits not fully raised"), reports_(std::move(reports)) {}
  const std::vector<RlimitReport>& reports() const noexcept { return reports_; }

 private:
  std::vector<RlimitReport> reports_;
};

/// Raises every target (never lowers), then restores the effective uid to the
/// real uid on every path, errors included.
std::vector<RlimitReport> break_resource_limit(OsAdapter& os, std::span<const RlimitTarget> targets);

}  // namespace threadshim
