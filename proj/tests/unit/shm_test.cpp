#include <map>
#include <random>
#include <set>

#include "test_util.hpp"
#include "threadshim/shm.hpp"

using namespace threadshim;

TEST(Shm, CreateThenLookupReturnsSameId) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{100}, 4096, true);
  EXPECT_EQ(reg.stat(id).attach_count, 0u);
  EXPECT_EQ(reg.stat(id).size, 4096u);
  EXPECT_EQ(reg.get(ShmKey{100}, 4096, false), id);
  EXPECT_EQ(reg.get(ShmKey{100}, 1024, false), id);
}

TEST(Shm, LargerLookupIsSizeMismatch) {
  ShmRegistry reg;
  reg.get(ShmKey{100}, 4096, true);
  EXPECT_ERRC(reg.get(ShmKey{100}, 8192, false), Errc::SizeMismatch);
  EXPECT_EQ(reg.live_segments(), 1u);
}

TEST(Shm, GetErrors) {
  ShmRegistry reg;
  EXPECT_ERRC(reg.get(ShmKey{1}, 16, false), Errc::NotFound);
  EXPECT_ERRC(reg.get(ShmKey{1}, 0, true), Errc::InvalidValue);
  reg.get(ShmKey{1}, 16, true);
  EXPECT_ERRC(reg.get(ShmKey{1}, 16, true, true), Errc::AlreadyExists);
  EXPECT_EQ(reg.live_segments(), 1u);
}

TEST(Shm, NewSegmentIsZeroFilled) {
  ShmRegistry reg;
  auto a = reg.attach(reg.get(ShmKey{5}, 64, true));
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(a.read(i), std::byte{0});
  reg.detach(a);
}

TEST(Shm, AttachmentsAlias) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{7}, 256, true);
  auto a = reg.attach(id);
  auto b = reg.attach(id);
  EXPECT_EQ(reg.stat(id).attach_count, 2u);
  std::mt19937 rng(11);
  for (int i = 0; i < 1000; ++i) {
    std::size_t off = rng() % 256;
    auto value = static_cast<std::byte>(rng() & 0xff);
    (i % 2 ? a : b).write(off, value);
    EXPECT_EQ((i % 2 ? b : a).read(off), value);
  }
  reg.detach(a);
  reg.detach(b);
}

TEST(Shm, OutOfBoundsAccess) {
  ShmRegistry reg;
  auto a = reg.attach(reg.get(ShmKey{8}, 16, true));
  EXPECT_ERRC(a.read(16), Errc::OutOfBounds);
  EXPECT_ERRC(a.write(100, std::byte{1}), Errc::OutOfBounds);
  EXPECT_ERRC(a.as<std::uint64_t>(12), Errc::OutOfBounds);
  EXPECT_NO_THROW(a.as<std::uint64_t>(8));
  reg.detach(a);
}

TEST(Shm, RemoveThenDetachReleases) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{9}, 32, true);
  auto a = reg.attach(id);
  reg.remove(id);
  auto info = reg.stat(id);
  EXPECT_TRUE(info.removal_pending);
  EXPECT_EQ(info.attach_count, 1u);
  EXPECT_EQ(reg.live_segments(), 1u);
  reg.detach(a);
  EXPECT_EQ(reg.live_segments(), 0u);
  EXPECT_EQ(reg.leak_counter(), 0);
  ASSERT_EQ(reg.release_log().size(), 1u);
  EXPECT_TRUE(reg.release_log()[0].removal_pending);
  EXPECT_EQ(reg.release_log()[0].attach_count, 0u);
}

TEST(Shm, RemoveWithNoAttachmentsReleasesImmediately) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{10}, 32, true);
  reg.control(id, ShmCommand::Remove);
  EXPECT_EQ(reg.live_segments(), 0u);
  EXPECT_ERRC(reg.attach(id), Errc::Removed);
}

TEST(Shm, AttachAfterRemoveIsRejected) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{11}, 32, true);
  auto a = reg.attach(id);
  reg.remove(id);
  EXPECT_ERRC(reg.attach(id), Errc::Removed);
  // The key is free again at once.
  EXPECT_ERRC(reg.get(ShmKey{11}, 32, false), Errc::NotFound);
  SegmentId fresh = reg.get(ShmKey{11}, 32, true);
  EXPECT_NE(fresh, id);
  reg.detach(a);
  reg.remove(fresh);
  EXPECT_EQ(reg.leak_counter(), 0);
}

TEST(Shm, DetachWithTwoAttachmentsKeepsSegment) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{12}, 32, true);
  auto a = reg.attach(id);
  auto b = reg.attach(id);
  reg.remove(id);
  reg.detach(a);
  EXPECT_EQ(reg.live_segments(), 1u);
  b.write(0, std::byte{3});
  reg.detach(b);
  EXPECT_EQ(reg.live_segments(), 0u);
}

TEST(Shm, DoubleDetach) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{13}, 32, true);
  auto a = reg.attach(id);
  reg.detach(a);
  EXPECT_ERRC(reg.detach(a), Errc::DoubleDetach);
  EXPECT_EQ(reg.stat(id).attach_count, 0u);
}

TEST(Shm, UnknownIdIsNotFound) {
  ShmRegistry reg;
  EXPECT_ERRC(reg.attach(42), Errc::NotFound);
  EXPECT_ERRC(reg.stat(42), Errc::NotFound);
  EXPECT_ERRC(reg.remove(42), Errc::NotFound);
}

TEST(Shm, DumpListsLiveSegments) {
  ShmRegistry reg;
  SegmentId id = reg.get(ShmKey{14}, 32, true);
  auto a = reg.attach(id);
  EXPECT_EQ(reg.dump(), std::to_string(id) + " 14 32 1 0\n");
  reg.detach(a);
}

namespace {

// Reference model: counts attachments per id and the release rule, nothing else.
struct ModelSegment {
  std::int64_t key;
  std::size_t size;
  int attached = 0;
  bool pending = false;
};

}  // namespace

TEST(Shm, RandomSequencesMatchReferenceModel) {
  for (std::uint32_t seed = 0; seed < 200; ++seed) {
    std::mt19937 rng(seed);
    ShmRegistry reg;
    std::map<SegmentId, ModelSegment> live;
    std::vector<std::pair<SegmentId, ShmAttachment>> handles;
    std::set<SegmentId> released;
    for (int step = 0; step < 60; ++step) {
      switch (rng() % 4) {
        case 0: {
          std::int64_t key = rng() % 5;
          std::size_t size = 8 + rng() % 64;
          bool key_live = false;
          for (const auto& [id, m] : live) key_live |= (m.key == key && !m.pending);
          if (key_live) {
            EXPECT_ERRC(reg.get(ShmKey{key}, size, true, true), Errc::AlreadyExists);
          } else {
            SegmentId id = reg.get(ShmKey{key}, size, true, true);
            EXPECT_FALSE(live.contains(id));
            live[id] = {key, size};
          }
          break;
        }
        case 1:
          if (!live.empty()) {
            auto it = std::next(live.begin(), rng() % live.size());
            if (it->second.pending) {
              EXPECT_ERRC(reg.attach(it->first), Errc::Removed);
            } else {
              handles.emplace_back(it->first, reg.attach(it->first));
              ++it->second.attached;
            }
          }
          break;
        case 2:
          if (!handles.empty()) {
            std::size_t i = rng() % handles.size();
            SegmentId id = handles[i].first;
            reg.detach(handles[i].second);
            handles.erase(handles.begin() + static_cast<std::ptrdiff_t>(i));
            if (--live[id].attached == 0 && live[id].pending) {
              live.erase(id);
              released.insert(id);
            }
          }
          break;
        case 3:
          if (!live.empty()) {
            auto it = std::next(live.begin(), rng() % live.size());
            reg.remove(it->first);
            it->second.pending = true;
            if (it->second.attached == 0) {
              released.insert(it->first);
              live.erase(it);
            }
          }
          break;
      }
      ASSERT_EQ(reg.live_segments(), live.size());
      for (const auto& [id, m] : live) {
        auto info = reg.stat(id);
        ASSERT_EQ(info.attach_count, static_cast<std::size_t>(m.attached));
        ASSERT_EQ(info.removal_pending, m.pending);
      }
    }
    for (auto& [id, h] : handles) reg.detach(h);
    for (const auto& [id, m] : live) {
      if (!m.pending) reg.remove(id);
    }
    EXPECT_EQ(reg.leak_counter(), 0);
    EXPECT_EQ(reg.live_segments(), 0u);
    for (const auto& r : reg.release_log()) {
      EXPECT_TRUE(r.removal_pending);
      EXPECT_EQ(r.attach_count, 0u);
    }
  }
}
