#pragma once

// User-space stand-in for shmget/shmat/shmdt/shmctl. All threads of the
// process share segments through a ShmRegistry; storage lives on the heap.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace threadshim {

struct ShmKey {
  std::int64_t value = 0;
  friend constexpr auto operator<=>(ShmKey, ShmKey) = default;
};

using SegmentId = std::uint64_t;

struct ShmSegmentInfo {
  SegmentId id = 0;
  ShmKey key;
  std::size_t size = 0;
  std::size_t attach_count = 0;
  bool removal_pending = false;
};

/// One storage release, recorded for auditing the release rule.
struct ShmReleaseRecord {
  SegmentId id = 0;
  bool removal_pending = false;
  std::size_t attach_count = 0;
};

enum class ShmCommand { Stat, Remove };

class ShmRegistry;

/// Handle returned by ShmRegistry::attach. Move-only; every attachment to the
/// same segment aliases the same bytes. Accesses are bounds-checked.
class ShmAttachment {
 public:
  ShmAttachment() = default;
  ShmAttachment(ShmAttachment&&) noexcept;
  ShmAttachment& operator=(ShmAttachment&&) noexcept;
  ShmAttachment(const ShmAttachment&) = delete;
  ShmAttachment& operator=(const ShmAttachment&) = delete;
  ~ShmAttachment() = default;

  SegmentId segment_id() const noexcept { return segment_id_; }
  std::uint64_t attachment_id() const noexcept { return attachment_id_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  bool attached() const noexcept { return attached_; }

  std::byte read(std::size_t offset) const;
  void write(std::size_t offset, std::byte value);

  /// Raw view for callers that synchronize externally. Throws if detached.
  std::span<std::byte> bytes() const;

  template <typename T>
  T* as(std::size_t offset = 0) const {
    check(offset, sizeof(T));
    return reinterpret_cast<T*>(bytes_.data() + offset);
  }

 private:
  friend class ShmRegistry;
  ShmAttachment(SegmentId segment, std::uint64_t attachment, std::span<std::byte> bytes)
      : segment_id_(segment), attachment_id_(attachment), bytes_(bytes), attached_(true) {}

  void check(std::size_t offset, std::size_t len) const;

  SegmentId segment_id_ = 0;
  std::uint64_t attachment_id_ = 0;
  std::span<std::byte> bytes_;
  bool attached_ = false;
};

class ShmRegistry {
 public:
  ShmRegistry() = default;
  ShmRegistry(const ShmRegistry&) = delete;
  ShmRegistry& operator=(const ShmRegistry&) = delete;

  /// shmget analogue. `exclusive` only matters together with `create`.
  SegmentId get(ShmKey key, std::size_t size, bool create, bool exclusive = false);
  ShmAttachment attach(SegmentId id);
  void detach(ShmAttachment& attachment);
  ShmSegmentInfo stat(SegmentId id) const;
  void remove(SegmentId id);
  /// Dispatches to stat/remove; Remove returns the snapshot taken before removal.
  ShmSegmentInfo control(SegmentId id, ShmCommand cmd);

  /// Segments whose storage is still allocated.
  std::size_t live_segments() const;
  /// Allocations minus releases over the registry lifetime.
  std::int64_t leak_counter() const;
  std::vector<ShmReleaseRecord> release_log() const;

  /// One line per live segment: `id key size attach_count removal_pending`.
  std::string dump() const;

 private:
  struct Segment {
    ShmKey key;
    std::unique_ptr<std::byte[]> storage;
    std::size_t size = 0;
    std::size_t attach_count = 0;
    bool removal_pending = false;
  };

  void release_locked(SegmentId id, Segment& seg);
  Segment& find_locked(SegmentId id);
  const Segment& find_locked(SegmentId id) const;

  mutable std::mutex mu_;
  std::map<SegmentId, Segment> segments_;
  std::map<ShmKey, SegmentId> by_key_;
  std::unordered_set<std::uint64_t> outstanding_;
  std::vector<ShmReleaseRecord> releases_;
  SegmentId next_id_ = 1;
  std::uint64_t next_attachment_ = 1;
  std::int64_t allocations_ = 0;
};

}  // namespace threadshim
