#include "threadshim/os_compat.hpp"

#include <fcntl.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>

namespace threadshim {

namespace {

[[noreturn]] void throw_os(const std::string& what) {
  throw Error(Errc::OsError, what + ": " + std::strerror(errno));
}

bool has_nonblock(int fd) {
  int flags = ::fcntl(fd, F_GETFL);
  return flags >= 0 && (flags & O_NONBLOCK) != 0;
}

}  // namespace

PipePair::PipePair(PipePair&& other) noexcept
    : read_fd_(std::exchange(other.read_fd_, -1)),
      write_fd_(std::exchange(other.write_fd_, -1)),
      shared_(other.shared_) {}

PipePair& PipePair::operator=(PipePair&& other) noexcept {
  if (this != &other) {
    reset();
    read_fd_ = std::exchange(other.read_fd_, -1);
    write_fd_ = std::exchange(other.write_fd_, -1);
    shared_ = other.shared_;
  }
  return *this;
}

PipePair::~PipePair() { reset(); }

void PipePair::reset() noexcept {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0) ::close(write_fd_);
  read_fd_ = write_fd_ = -1;
}

IoResult PipePair::write(std::span<const std::byte> data) {
  if (write_fd_ < 0) throw Error(Errc::OsError, "write end closed");
  for (;;) {
    ssize_t n = ::write(write_fd_, data.data(), data.size());
    if (n >= 0) return {IoStatus::Ok, static_cast<std::size_t>(n)};
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) return {IoStatus::WouldBlock, 0};
    throw_os("pipe write");
  }
}

IoResult PipePair::read(std::span<std::byte> buffer) {
  if (read_fd_ < 0) throw Error(Errc::OsError, "read end closed");
  for (;;) {
    ssize_t n = ::read(read_fd_, buffer.data(), buffer.size());
    if (n >= 0) return {IoStatus::Ok, static_cast<std::size_t>(n)};
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) return {IoStatus::WouldBlock, 0};
    throw_os("pipe read");
  }
}

std::string PipePair::read_string(std::size_t max_bytes) {
  std::string out(max_bytes, '\0');
  IoResult r = read(std::as_writable_bytes(std::span(out.data(), out.size())));
  out.resize(r.bytes);
  return out;
}

void PipePair::close_read() {
  if (shared_) throw Error(Errc::SuppressedClose, "read end is shared by other threads");
  if (read_fd_ >= 0) ::close(read_fd_);
  read_fd_ = -1;
}

void PipePair::close_write() {
  if (shared_) throw Error(Errc::SuppressedClose, "write end is shared by other threads");
  if (write_fd_ >= 0) ::close(write_fd_);
  write_fd_ = -1;
}

bool PipePair::nonblocking() const {
  return read_fd_ >= 0 && write_fd_ >= 0 && has_nonblock(read_fd_) && has_nonblock(write_fd_);
}

std::size_t PipePair::capacity() const {
  int n = ::fcntl(write_fd_, F_GETPIPE_SZ);
  if (n < 0) throw_os("F_GETPIPE_SZ");
  return static_cast<std::size_t>(n);
}

PipePair pipe_open_unnamed() {
  int fds[2];
  if (::pipe2(fds, O_NONBLOCK | O_CLOEXEC) != 0) throw_os("pipe2");
  return PipePair(fds[0], fds[1]);
}

PipePair pipe_open_named(const std::filesystem::path& path) {
  if (::mkfifo(path.c_str(), 0600) != 0 && errno != EEXIST) throw_os("mkfifo " + path.string());
  int rd = ::open(path.c_str(), O_RDONLY | O_NONBLOCK | O_CLOEXEC);
  if (rd < 0) throw_os("open " + path.string());
  int wr = ::open(path.c_str(), O_WRONLY | O_NONBLOCK | O_CLOEXEC);
  if (wr < 0) {
    int saved = errno;
    ::close(rd);
    errno = saved;
    throw_os("open " + path.string());
  }
  return PipePair(rd, wr);
}

std::string_view to_string(ResourceKind kind) noexcept {
  switch (kind) {
    case ResourceKind::OpenFiles: return "open_files";
    case ResourceKind::Processes: return "processes";
    case ResourceKind::CoreSize: return "core_size";
    case ResourceKind::StackSize: return "stack_size";
  }
  return "unknown";
}

std::string format_report(const RlimitReport& r) {
  std::ostringstream out;
  out << "resource=" << to_string(r.kind) << " old_soft=" << r.old_limits.soft
      << " old_hard=" << r.old_limits.hard << " new_soft=" << r.new_limits.soft
      << " new_hard=" << r.new_limits.hard << " privilege_dropped=" << (r.privilege_dropped ? 1 : 0);
  return out.str();
}

MockOsAdapter::MockOsAdapter(std::uint32_t real_uid, std::uint32_t effective_uid)
    : real_uid_(real_uid), effective_uid_(effective_uid) {}

Limits MockOsAdapter::get_limit(ResourceKind kind) {
  auto it = limits_.find(kind);
  return it == limits_.end() ? Limits{1024, 1024} : it->second;
}

bool MockOsAdapter::set_limit(ResourceKind kind, Limits limits) {
  Limits current = get_limit(kind);
  if (limits.soft > limits.hard) return false;
  if (limits.hard > current.hard && effective_uid_ != 0) return false;
  limits_[kind] = limits;
  return true;
}

bool MockOsAdapter::set_effective_uid(std::uint32_t uid) {
  // Unprivileged processes may only switch to their real uid.
  if (effective_uid_ != 0 && uid != real_uid_) return false;
  transitions_.emplace_back(effective_uid_, uid);
  effective_uid_ = uid;
  return true;
}

namespace {

int posix_resource(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::OpenFiles: return RLIMIT_NOFILE;
    case ResourceKind::Processes: return RLIMIT_NPROC;
    case ResourceKind::CoreSize: return RLIMIT_CORE;
    case ResourceKind::StackSize: return RLIMIT_STACK;
  }
  return RLIMIT_NOFILE;
}

std::uint64_t from_rlim(rlim_t v) { return v == RLIM_INFINITY ? UINT64_MAX : static_cast<std::uint64_t>(v); }
rlim_t to_rlim(std::uint64_t v) { return v == UINT64_MAX ? RLIM_INFINITY : static_cast<rlim_t>(v); }

}  // namespace

Limits PosixOsAdapter::get_limit(ResourceKind kind) {
  rlimit rl{};
  if (::getrlimit(posix_resource(kind), &rl) != 0) throw_os("getrlimit");
  return {from_rlim(rl.rlim_cur), from_rlim(rl.rlim_max)};
}

bool PosixOsAdapter::set_limit(ResourceKind kind, Limits limits) {
  rlimit rl{to_rlim(limits.soft), to_rlim(limits.hard)};
  return ::setrlimit(posix_resource(kind), &rl) == 0;
}

std::uint32_t PosixOsAdapter::real_uid() { return ::getuid(); }
std::uint32_t PosixOsAdapter::effective_uid() { return ::geteuid(); }
bool PosixOsAdapter::set_effective_uid(std::uint32_t uid) { return ::seteuid(uid) == 0; }

std::vector<RlimitReport> break_resource_limit(OsAdapter& os, std::span<const RlimitTarget> targets) {
  struct DropPrivilege {
    OsAdapter& os;
    ~DropPrivilege() {
      if (os.effective_uid() != os.real_uid()) os.set_effective_uid(os.real_uid());
    }
  };

  std::vector<RlimitReport> reports;
  bool denied = false;
  bool partial = false;
  {
    DropPrivilege guard{os};
    for (const RlimitTarget& target : targets) {
      RlimitReport report;
      report.kind = target.kind;
      report.old_limits = os.get_limit(target.kind);
      Limits want{std::max(report.old_limits.soft, target.limits.soft),
                  std::max(report.old_limits.hard, target.limits.hard)};
      want.soft = std::min(want.soft, want.hard);
      report.new_limits = report.old_limits;
      if (want != report.old_limits) {
        if (os.set_limit(target.kind, want)) {
          report.new_limits = want;
        } else {
          // Hard raise refused: raise the soft limit as far as the old hard one allows.
          Limits soft_only{std::min(want.soft, report.old_limits.hard), report.old_limits.hard};
          if (soft_only.soft > report.old_limits.soft && os.set_limit(target.kind, soft_only)) {
            report.new_limits = soft_only;
            partial = true;
          } else {
            denied = true;
          }
        }
      }
      reports.push_back(report);
    }
  }
  const bool dropped = os.effective_uid() == os.real_uid();
  for (auto& r : reports) r.privilege_dropped = dropped;
  if (denied) throw RlimitError(Errc::PrivilegeDenied, std::move(reports));
  if (partial) throw RlimitError(Errc::PartialRaise, std::move(reports));
  return reports;
}

}  // namespace threadshim
