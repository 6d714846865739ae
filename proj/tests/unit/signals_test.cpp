#include <array>
#include <atomic>
#include <thread>

#include "test_util.hpp"
#include "threadshim/shortlock.hpp"
#include "threadshim/signals.hpp"

using namespace threadshim;

namespace {
constexpr ThreadId A{1}, B{2};
constexpr std::array<SignalKind, 3> kKinds = {SignalKind::Hup, SignalKind::Term, SignalKind::Usr1};
}  // namespace

TEST(Signals, InstallIsIdempotent) {
  SignalDispatcher d;
  d.install_dispatcher(SignalKind::Term);
  d.install_dispatcher(SignalKind::Term);
  EXPECT_EQ(d.installed_count(), 1u);
  for (SignalKind k : kAllSignalKinds) d.install_dispatcher(k);
  EXPECT_EQ(d.installed_count(), kAllSignalKinds.size());
}

TEST(Signals, DeliverWithoutHandlerIsUnhandled) {
  SignalDispatcher d;
  d.install_dispatcher(SignalKind::Hup);
  d.attach_thread(A);
  auto r = d.deliver(SignalKind::Hup, A);
  EXPECT_FALSE(r.handled);
  EXPECT_EQ(d.audit_log().size(), 1u);
}

TEST(Signals, FlagGatesHandler) {
  SignalDispatcher d;
  d.install_dispatcher(SignalKind::Term);
  d.attach_thread(A);
  int calls = 0;
  d.set_thread_handler(A, SignalKind::Term, [&](SignalKind) { ++calls; }, true);
  EXPECT_TRUE(d.deliver(SignalKind::Term, A).handled);
  EXPECT_EQ(calls, 1);
  d.set_thread_handler(A, SignalKind::Term, [&](SignalKind) { ++calls; }, false);
  EXPECT_FALSE(d.deliver(SignalKind::Term, A).handled);
  EXPECT_EQ(calls, 1);
}

TEST(Signals, TwoThreadsFourFlagCombinations) {
  for (int mask = 0; mask < 4; ++mask) {
    SignalDispatcher d;
    d.install_dispatcher(SignalKind::Term);
    std::atomic<int> a_calls{0}, b_calls{0};
    std::thread ta([&] {
      d.attach_thread(A);
      d.set_thread_handler(A, SignalKind::Term, [&](SignalKind) { ++a_calls; }, mask & 1);
    });
    ta.join();
    std::thread tb([&] {
      d.attach_thread(B);
      d.set_thread_handler(B, SignalKind::Term, [&](SignalKind) { ++b_calls; }, mask & 2);
    });
    tb.join();
    EXPECT_EQ(d.deliver(SignalKind::Term, A).handled, bool(mask & 1));
    EXPECT_EQ(d.deliver(SignalKind::Term, B).handled, bool(mask & 2));
    EXPECT_EQ(a_calls.load(), (mask & 1) ? 1 : 0);
    EXPECT_EQ(b_calls.load(), (mask & 2) ? 1 : 0);
  }
}

TEST(Signals, OnlyOwnerMaySetHandlers) {
  SignalDispatcher d;
  std::thread owner([&] { d.attach_thread(A); });
  owner.join();
  EXPECT_ERRC(d.set_thread_handler(A, SignalKind::Hup, [](SignalKind) {}, true), Errc::WrongThread);
}

TEST(Signals, Errors) {
  SignalDispatcher d;
  d.attach_thread(A);
  EXPECT_ERRC(d.deliver(SignalKind::Hup, A), Errc::NotInstalled);
  d.install_dispatcher(SignalKind::Hup);
  EXPECT_ERRC(d.deliver(SignalKind::Hup, B), Errc::UnknownThread);
  EXPECT_ERRC(d.set_thread_handler(B, SignalKind::Hup, nullptr, true), Errc::UnknownThread);
}

TEST(Signals, ExitedThreadIsUnhandled) {
  SignalDispatcher d;
  d.install_dispatcher(SignalKind::Usr1);
  d.attach_thread(A);
  int calls = 0;
  d.set_thread_handler(A, SignalKind::Usr1, [&](SignalKind) { ++calls; }, true);
  d.detach_thread(A);
  EXPECT_FALSE(d.deliver(SignalKind::Usr1, A).handled);
  EXPECT_EQ(calls, 0);
}

// Oracle: handler runs iff registered and flagged; each (thread, kind) cell is
// one of {unregistered, registered+off, registered+on}.
TEST(Signals, RoutingTruthTableWithRegistration) {
  const ThreadId threads[3] = {ThreadId{0}, ThreadId{1}, ThreadId{2}};
  int combos = 0;
  for (int code = 0; code < 19683; ++code) {  // 3^9
    SignalDispatcher d;
    for (SignalKind k : kKinds) d.install_dispatcher(k);
    std::array<std::array<int, 3>, 3> cell{};
    std::array<std::array<int, 3>, 3> calls{};
    int c = code;
    for (int t = 0; t < 3; ++t) {
      d.attach_thread(threads[t]);
      for (int k = 0; k < 3; ++k) {
        cell[t][k] = c % 3;
        c /= 3;
        if (cell[t][k] != 0) {
          d.set_thread_handler(threads[t], kKinds[k], [&calls, t, k](SignalKind) { ++calls[t][k]; },
                               cell[t][k] == 2);
        }
      }
    }
    for (int t = 0; t < 3; ++t) {
      for (int k = 0; k < 3; ++k) {
        bool expected = cell[t][k] == 2;
        ASSERT_EQ(d.deliver(kKinds[k], threads[t]).handled, expected) << "code " << code;
      }
    }
    for (int t = 0; t < 3; ++t) {
      for (int k = 0; k < 3; ++k) ASSERT_EQ(calls[t][k], cell[t][k] == 2 ? 1 : 0);
    }
    ASSERT_EQ(d.audit_log().size(), 9u);
    ++combos;
  }
  EXPECT_EQ(combos, 19683);
}

TEST(Signals, ChangingOneThreadsFlagLeavesOthersAlone) {
  SignalDispatcher d;
  d.install_dispatcher(SignalKind::Term);
  d.attach_thread(A);
  d.attach_thread(B);
  d.set_thread_handler(B, SignalKind::Term, [](SignalKind) {}, true);
  for (bool flag : {true, false, true}) {
    d.set_thread_handler(A, SignalKind::Term, [](SignalKind) {}, flag);
    EXPECT_EQ(d.deliver(SignalKind::Term, A).handled, flag);
    EXPECT_TRUE(d.deliver(SignalKind::Term, B).handled);
  }
}

TEST(Signals, PostRunsOnTargetAtPoll) {
  SignalDispatcher d;
  d.install_dispatcher(SignalKind::Child);
  std::atomic<bool> ready{false}, go{false};
  std::thread::id ran_on;
  std::thread target([&] {
    d.attach_thread(A);
    d.set_thread_handler(A, SignalKind::Child, [&](SignalKind) { ran_on = std::this_thread::get_id(); }, true);
    ready = true;
    while (!go.load()) std::this_thread::yield();
    EXPECT_EQ(d.poll(A), 1u);
    EXPECT_EQ(ran_on, std::this_thread::get_id());
  });
  while (!ready.load()) std::this_thread::yield();
  d.post(SignalKind::Child, A);
  EXPECT_TRUE(d.audit_log().empty());
  go = true;
  target.join();
  EXPECT_EQ(d.audit_log().size(), 1u);
}

TEST(Signals, AlarmDrivesShortLockSelfWake) {
  SignalDispatcher d;
  d.install_dispatcher(SignalKind::Alarm);
  d.attach_thread(A);
  ShortLockState lock(LockMode::Fixed, 10, LockClock::Wall);
  std::uint64_t now = 0;
  std::vector<ThreadId> woken;
  d.set_thread_handler(A, SignalKind::Alarm, [&](SignalKind) { woken = lock.tick(now); }, true);
  lock.acquire(ThreadId{0});
  lock.acquire(ThreadId{1});
  lock.acquire(ThreadId{2});
  lock.release(ThreadId{0});  // wakes 1; 2 stays queued with the lock free
  now = 10;
  EXPECT_TRUE(d.deliver(SignalKind::Alarm, A).handled);
  EXPECT_EQ(woken, std::vector<ThreadId>{ThreadId{2}});
  EXPECT_EQ(lock.events().back().kind, LockEventKind::SelfWake);
}

TEST(Signals, NDeliveriesNRecords) {
  SignalDispatcher d;
  for (SignalKind k : kAllSignalKinds) d.install_dispatcher(k);
  d.attach_thread(A);
  for (int i = 0; i < 60; ++i) d.deliver(kAllSignalKinds[i % kAllSignalKinds.size()], A);
  EXPECT_EQ(d.audit_log().size(), 60u);
  EXPECT_EQ(d.audit_log().back().step, 59u);
  EXPECT_EQ(d.dump().substr(0, 8), "0 hup 1 ");
}
