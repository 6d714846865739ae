#include <algorithm>
#include <atomic>
#include <random>
#include <thread>
#include <vector>

#include "test_util.hpp"
#include "threadshim/shortlock.hpp"

using namespace threadshim;

namespace {
constexpr ThreadId T0{0}, T1{1}, T2{2};
}

TEST(ShortLockState, CreatesFree) {
  ShortLockState legacy(LockMode::Legacy);
  EXPECT_FALSE(legacy.held());
  EXPECT_FALSE(legacy.wake_flag());
  EXPECT_TRUE(legacy.queue().empty());
  ShortLockState fixed(LockMode::Fixed, 10);
  EXPECT_FALSE(fixed.held());
  EXPECT_ERRC(ShortLockState(LockMode::Fixed, 0), Errc::InvalidTimeout);
}

TEST(ShortLockState, FreeLockAcquiresImmediately) {
  ShortLockState s(LockMode::Legacy);
  auto r = s.acquire(T0);
  EXPECT_TRUE(r.acquired);
  EXPECT_EQ(s.holder(), T0);
  EXPECT_TRUE(s.queue().empty());
  EXPECT_FALSE(s.wake_flag());
}

TEST(ShortLockState, LegacyEnqueueSetsFlag) {
  ShortLockState s(LockMode::Legacy);
  s.acquire(T0);
  EXPECT_FALSE(s.acquire(T1).acquired);
  EXPECT_TRUE(s.wake_flag());
  EXPECT_EQ(s.queue().front(), T1);
}

TEST(ShortLockState, LegacyReleaseWithFlagWakesHeadAndClearsFlag) {
  ShortLockState s(LockMode::Legacy);
  s.acquire(T0);
  s.acquire(T1);
  auto woken = s.release(T0);
  EXPECT_EQ(woken, std::vector<ThreadId>{T1});
  EXPECT_FALSE(s.wake_flag());
  EXPECT_TRUE(s.queue().empty());
}

TEST(ShortLockState, LegacyReleaseWithoutFlagWakesNobody) {
  ShortLockState s(LockMode::Legacy);
  s.acquire(T0);
  s.acquire(T1);
  s.acquire(T2);
  s.release(T0);  // wakes T1, clears flag
  ASSERT_TRUE(s.acquire(T1).acquired);
  auto woken = s.release(T1);
  EXPECT_TRUE(woken.empty());
  EXPECT_FALSE(s.held());
  EXPECT_EQ(s.queue().front(), T2);
  EXPECT_EQ(s.describe(), "held=0 holder=- flag=0 queue=[2]");
}

TEST(ShortLockState, FixedAndFlagLessAlwaysWakeHead) {
  for (LockMode mode : {LockMode::Fixed, LockMode::FlagLess}) {
    ShortLockState s(mode, 100);
    s.acquire(T0);
    s.acquire(T1);
    s.acquire(T2);
    EXPECT_EQ(s.release(T0), std::vector<ThreadId>{T1});
    ASSERT_TRUE(s.acquire(T1).acquired);
    EXPECT_EQ(s.release(T1), std::vector<ThreadId>{T2}) << to_string(mode);
    EXPECT_FALSE(s.wake_flag());
  }
}

TEST(ShortLockState, Errors) {
  ShortLockState s(LockMode::Legacy);
  s.acquire(T0);
  EXPECT_ERRC(s.acquire(T0), Errc::Reentrancy);
  s.acquire(T1);
  EXPECT_ERRC(s.acquire(T1), Errc::Reentrancy);
  EXPECT_ERRC(s.release(T1), Errc::NotHolder);
  EXPECT_ERRC(s.tick(5), Errc::WrongMode);
}

TEST(ShortLockState, WallClockTickSelfWakesWhenFree) {
  ShortLockState s(LockMode::Fixed, 10, LockClock::Wall);
  s.set_now(0);
  s.acquire(T0);
  s.acquire(T1);
  s.acquire(T2);
  EXPECT_EQ(s.deadline(T2), 10u);
  s.set_now(5);
  EXPECT_EQ(s.release(T0), std::vector<ThreadId>{T1});
  // T2 is still queued, the lock is free, and its alarm has not expired.
  EXPECT_TRUE(s.tick(9).empty());
  EXPECT_EQ(s.tick(10), std::vector<ThreadId>{T2});
  EXPECT_EQ(s.events().back().kind, LockEventKind::SelfWake);
}

TEST(ShortLockState, ExpiredAlarmWhileHeldRearms) {
  ShortLockState s(LockMode::Fixed, 10, LockClock::Wall);
  s.acquire(T0);
  s.acquire(T1);
  EXPECT_TRUE(s.tick(10).empty());
  EXPECT_EQ(s.events().back().kind, LockEventKind::Timeout);
  EXPECT_EQ(s.deadline(T1), 20u);
  EXPECT_EQ(s.queue().front(), T1);
}

TEST(ShortLockState, NoExpiredAlarmsTickIsEmpty) {
  ShortLockState s(LockMode::Fixed, 10, LockClock::Wall);
  EXPECT_TRUE(s.tick(1000).empty());
  s.acquire(T0);
  auto before = s.events().size();
  EXPECT_TRUE(s.tick(1001).empty());
  EXPECT_EQ(s.events().size(), before);
}

TEST(ShortLockState, VirtualClockAdvanceIdleFiresEarliestAlarm) {
  ShortLockState s(LockMode::Fixed, 4);
  s.acquire(T0);  // step 1
  s.acquire(T1);  // step 2, deadline 6
  s.acquire(T2);  // step 3, deadline 7
  s.release(T0);  // step 4, wakes T1
  EXPECT_EQ(s.now(), 4u);
  EXPECT_EQ(s.deadline(T2), 7u);
  EXPECT_EQ(s.advance_idle(), std::vector<ThreadId>{T2});
  EXPECT_EQ(s.now(), 7u);
  EXPECT_FALSE(s.has_armed_alarms());
}

TEST(ShortLockState, KeyIgnoresAbsoluteTime) {
  ShortLockState a(LockMode::Fixed, 4);
  ShortLockState b(LockMode::Fixed, 4);
  a.acquire(T0);
  a.release(T0);
  a.acquire(T0);
  b.acquire(T0);
  EXPECT_NE(a.now(), b.now());
  EXPECT_EQ(a.key(), b.key());
}

// Flag discipline from the event log alone: the flag rises only on enqueue
// and falls only on a release that woke someone.
TEST(ShortLockState, LegacyFlagTransitionsFollowEventLog) {
  std::mt19937 rng(3);
  for (int round = 0; round < 500; ++round) {
    ShortLockState s(LockMode::Legacy);
    std::vector<int> pc(3, 0);  // 0 = wants lock, 1 = holds, 2 = queued
    bool prev_flag = false;
    for (int step = 0; step < 30; ++step) {
      std::vector<ThreadId> candidates;
      for (std::uint32_t t = 0; t < 3; ++t) {
        if (pc[t] != 2) candidates.push_back(ThreadId{t});
      }
      if (candidates.empty()) break;
      ThreadId t = candidates[rng() % candidates.size()];
      auto before = s.events().size();
      std::vector<ThreadId> woken;
      if (pc[t.value] == 0) {
        auto r = s.acquire(t);
        pc[t.value] = r.acquired ? 1 : 2;
      } else {
        woken = s.release(t);
        pc[t.value] = 0;
      }
      for (ThreadId w : woken) pc[w.value] = 0;
      std::vector<LockEvent> added(s.events().begin() + static_cast<std::ptrdiff_t>(before), s.events().end());
      bool enqueued = std::any_of(added.begin(), added.end(), [](auto& e) { return e.kind == LockEventKind::Enqueue; });
      bool woke = std::any_of(added.begin(), added.end(), [](auto& e) { return e.kind == LockEventKind::Wake; });
      if (!prev_flag && s.wake_flag()) EXPECT_TRUE(enqueued);
      if (prev_flag && !s.wake_flag()) EXPECT_TRUE(woke);
      if (enqueued) EXPECT_TRUE(s.wake_flag());
      prev_flag = s.wake_flag();
    }
  }
}

TEST(ShortLock, RealThreadsMutualExclusion) {
  for (LockMode mode : {LockMode::Legacy, LockMode::Fixed, LockMode::FlagLess}) {
    ShortLock lock(mode, mode == LockMode::Fixed ? 200 : 0);
    long counter = 0;
    std::atomic<int> inside{0};
    std::atomic<int> overlaps{0};
    std::vector<std::thread> threads;
    for (std::uint32_t t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        try {
          for (int i = 0; i < 2000; ++i) {
            lock.acquire(ThreadId{t});
            if (inside.fetch_add(1) != 0) ++overlaps;
            ++counter;
            inside.fetch_sub(1);
            lock.release(ThreadId{t});
          }
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::Aborted);
        }
      });
    }
    // Legacy may strand a waiter once the others finish; unstick it.
    std::atomic<bool> stop{false};
    std::thread watchdog([&] {
      while (!stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        auto snap = lock.snapshot();
        if (mode == LockMode::Legacy && !snap.held && !snap.queue.empty()) {
          std::this_thread::sleep_for(std::chrono::milliseconds(50));
          auto again = lock.snapshot();
          if (!again.held && again.queue == snap.queue) lock.abort_waiters();
        }
      }
    });
    for (auto& t : threads) t.join();
    stop = true;
    watchdog.join();
    EXPECT_EQ(overlaps.load(), 0) << to_string(mode);
    if (mode != LockMode::Legacy) EXPECT_EQ(counter, 8000) << to_string(mode);
  }
}

TEST(ShortLock, AbortWaitersFailsBlockedAcquire) {
  ShortLock lock(LockMode::Legacy);
  lock.acquire(T0);
  std::atomic<bool> aborted{false};
  std::thread t([&] {
    try {
      lock.acquire(T1);
    } catch (const Error& e) {
      aborted = e.code() == Errc::Aborted;
    }
  });
  while (lock.snapshot().queue.empty()) std::this_thread::yield();
  lock.abort_waiters();
  t.join();
  EXPECT_TRUE(aborted.load());
}

TEST(LockEvents, FormatAndParse) {
  EXPECT_EQ(parse_lock_mode("legacy"), LockMode::Legacy);
  EXPECT_EQ(parse_lock_mode("fixed"), LockMode::Fixed);
  EXPECT_EQ(parse_lock_mode("flagless"), LockMode::FlagLess);
  EXPECT_ERRC(parse_lock_mode("other"), Errc::ConfigError);
  ShortLockState s(LockMode::Legacy);
  s.acquire(T0);
  s.acquire(T1);
  s.release(T0);
  EXPECT_EQ(format_event_log(s.events()), "1 acquire 0\n2 enqueue 1\n3 release 0\n3 wake 1\n");
}
