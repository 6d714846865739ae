#include "threadshim/shm.hpp"

#include <sstream>
#include <utility>

#include "threadshim/error.hpp"

namespace threadshim {

ShmAttachment::ShmAttachment(ShmAttachment&& other) noexcept
    : segment_id_(other.segment_id_),
      attachment_id_(other.attachment_id_),
      bytes_(other.bytes_),
      attached_(std::exchange(other.attached_, false)) {}

ShmAttachment& ShmAttachment::operator=(ShmAttachment&& other) noexcept {
  segment_id_ = other.segment_id_;
  attachment_id_ = other.attachment_id_;
  bytes_ = other.bytes_;
  attached_ = std::exchange(other.attached_, false);
  return *this;
}

void ShmAttachment::check(std::size_t offset, std::size_t len) const {
  if (!attached_) throw Error(Errc::DoubleDetach, "access through a detached attachment");
  if (offset > bytes_.size() || len > bytes_.size() - offset) {
    throw Error(Errc::OutOfBounds, "offset " + std::to_string(offset) + " len " +
                                       std::to_string(len) + " exceeds segment size " +
                                       std::to_string(bytes_.size()));
  }
}

std::byte ShmAttachment::read(std::size_t offset) const {
  check(offset, 1);
  return bytes_[offset];
}

void ShmAttachment::write(std::size_t offset, std::byte value) {
  check(offset, 1);
  bytes_[offset] = value;
}

std::span<std::byte> ShmAttachment::bytes() const {
  check(0, 0);
  return bytes_;
}

ShmRegistry::Segment& ShmRegistry::find_locked(SegmentId id) {
  auto it = segments_.find(id);
  if (it == segments_.end()) {
    if (id != 0 && id < next_id_) throw Error(Errc::Removed, "segment " + std::to_string(id));
    throw Error(Errc::NotFound, "segment " + std::to_string(id));
  }
  return it->second;
}

const ShmRegistry::Segment& ShmRegistry::find_locked(SegmentId id) const {
  return const_cast<ShmRegistry*>(this)->find_locked(id);
}

SegmentId ShmRegistry::get(ShmKey key, std::size_t size, bool create, bool exclusive) {
  std::lock_guard lock(mu_);
  if (auto it = by_key_.find(key); it != by_key_.end()) {
    if (create && exclusive) throw Error(Errc::AlreadyExists, "key " + std::to_string(key.value));
    const Segment& seg = segments_.at(it->second);
    if (size > seg.size) {
      throw Error(Errc::SizeMismatch, "requested " + std::to_string(size) + " but segment has " +
                                          std::to_string(seg.size));
    }
    return it->second;
  }
  if (!create) throw Error(Errc::NotFound, "key " + std::to_string(key.value));
  if (size == 0) throw Error(Errc::InvalidValue, "segment size must be positive");

  SegmentId id = next_id_++;
  Segment seg;
  seg.key = key;
  seg.size = size;
  seg.storage = std::make_unique<std::byte[]>(size);  // value-initialized: zero-filled
  segments_.emplace(id, std::move(seg));
  by_key_.emplace(key, id);
  ++allocations_;
  return id;
}

ShmAttachment ShmRegistry::attach(SegmentId id) {
  std::lock_guard lock(mu_);
  Segment& seg = find_locked(id);
  if (seg.removal_pending) throw Error(Errc::Removed, "segment " + std::to_string(id));
  ++seg.attach_count;
  std::uint64_t aid = next_attachment_++;
  outstanding_.insert(aid);
  return ShmAttachment(id, aid, std::span<std::byte>(seg.storage.get(), seg.size));
}

void ShmRegistry::detach(ShmAttachment& attachment) {
  std::lock_guard lock(mu_);
  if (!attachment.attached_ || outstanding_.erase(attachment.attachment_id_) == 0) {
    throw Error(Errc::DoubleDetach, "attachment " + std::to_string(attachment.attachment_id_));
  }
  attachment.attached_ = false;
  Segment& seg = segments_.at(attachment.segment_id_);
  --seg.attach_count;
  if (seg.removal_pending && seg.attach_count == 0) release_locked(attachment.segment_id_, seg);
}

ShmSegmentInfo ShmRegistry::stat(SegmentId id) const {
  std::lock_guard lock(mu_);
  const Segment& seg = find_locked(id);
  return {id, seg.key, seg.size, seg.attach_count, seg.removal_pending};
}

void ShmRegistry::remove(SegmentId id) {
  std::lock_guard lock(mu_);
  Segment& seg = find_locked(id);
  if (!seg.removal_pending) {
    seg.removal_pending = true;
    by_key_.erase(seg.key);
  }
  if (seg.attach_count == 0) release_locked(id, seg);
}

ShmSegmentInfo ShmRegistry::control(SegmentId id, ShmCommand cmd) {
  ShmSegmentInfo info = stat(id);
  if (cmd == ShmCommand::Remove) remove(id);
  return info;
}

void ShmRegistry::release_locked(SegmentId id, Segment& seg) {
  releases_.push_back({id, seg.removal_pending, seg.attach_count});
  --allocations_;
  segments_.erase(id);
}

std::size_t ShmRegistry::live_segments() const {
  std::lock_guard lock(mu_);
  return segments_.size();
}

std::int64_t ShmRegistry::leak_counter() const {
  std::lock_guard lock(mu_);
  return allocations_;
}

std::vector<ShmReleaseRecord> ShmRegistry::release_log() const {
  std::lock_guard lock(mu_);
  return releases_;
}

std::string ShmRegistry::dump() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (const auto& [id, seg] : segments_) {
    out << id << ' ' << seg.key.value << ' ' << seg.size << ' ' << seg.attach_count << ' '
        << (seg.removal_pending ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace threadshim
