#include "threadshim/tools/demo.hpp"

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "threadshim/error.hpp"
#include "threadshim/globals.hpp"
#include "threadshim/lifecycle.hpp"
#include "threadshim/models.hpp"
#include "threadshim/sem.hpp"
#include "threadshim/shm.hpp"

namespace threadshim::tools {

namespace {

constexpr ShmKey kCounterKey{0x7053};
constexpr std::int64_t kSemKey = 0x7053;
constexpr std::size_t kAdmission = 0;
constexpr std::size_t kDone = 1;

constexpr std::uint64_t kVirtualSelfWake = 3;
constexpr std::uint64_t kFreeSelfWakeUs = 500;
constexpr auto kWatchdogPoll = std::chrono::milliseconds(1);
constexpr int kWatchdogPatience = 50;  // consecutive stranded polls
constexpr auto kFreeRunLimit = std::chrono::seconds(60);

// Lock participant ids are worker indices; registry ids are separate.
ThreadId worker_id(std::size_t i) { return ThreadId{static_cast<std::uint32_t>(i)}; }

}  // namespace

ScheduleMode parse_schedule_mode(std::string_view text) {
  if (text == "virtual") return ScheduleMode::Virtual;
  if (text == "free") return ScheduleMode::Free;
  throw Error(Errc::ConfigError, "unknown schedule mode '" + std::string(text) + "'");
}

std::string_view to_string(ScheduleMode mode) noexcept {
  return mode == ScheduleMode::Virtual ? "virtual" : "free";
}

std::vector<ThreadId> legacy_witness_schedule() {
  explorer::LockModel model({LockMode::Legacy, 3, 1, 0});
  auto result = explorer::explore(model, 12, explorer::LockModel::no_starvation());
  if (!result.witness) throw Error(Errc::InvalidSchedule, "legacy lock model has no starvation witness");
  return result.witness->schedule;
}

DemoResult run_demo(const ScenarioConfig& config) {
  if (config.workers == 0) throw Error(Errc::ConfigError, "need at least one worker");
  if (config.iterations == 0) throw Error(Errc::ConfigError, "need at least one iteration");
  if (config.adversarial && config.schedule != ScheduleMode::Virtual) {
    throw Error(Errc::ConfigError, "the adversarial schedule needs virtual mode");
  }
  if (config.adversarial && config.workers < 3) {
    throw Error(Errc::ConfigError, "the adversarial schedule needs at least three workers");
  }
  const bool virtual_mode = config.schedule == ScheduleMode::Virtual;
  const std::uint64_t timeout =
      config.lock_mode != LockMode::Fixed ? 0
      : config.self_wake_timeout != 0     ? config.self_wake_timeout
      : virtual_mode                      ? kVirtualSelfWake
                                          : kFreeSelfWakeUs;

  DemoResult result;
  result.expected = static_cast<std::uint64_t>(config.workers) * config.iterations;

  ShmRegistry shm;
  SemRegistry sems;
  GlobalLayout layout;
  const GlobalSlot increments = layout.define_static("worker.c", "increments", std::int64_t{0});
  layout.seal();

  std::unique_ptr<DeterministicScheduler> sched;
  ShortLock* lock_ptr = nullptr;
  if (virtual_mode) {
    // Each worker makes 2 transitions per iteration plus retries after waking.
    const std::uint64_t budget = 8 * result.expected + 64;
    auto random = DeterministicScheduler::seeded_random(config.seed);
    DeterministicScheduler::Policy policy = random;
    if (config.adversarial) {
      result.prefix = legacy_witness_schedule();
      policy = DeterministicScheduler::replay(
          result.prefix, DeterministicScheduler::sticky([&lock_ptr] { return lock_ptr->holder(); }, random));
    }
    sched = std::make_unique<DeterministicScheduler>(std::move(policy), budget);
    for (std::size_t i = 0; i < config.workers; ++i) sched->add(worker_id(i));
  }
  ShortLock lock(config.lock_mode, timeout, sched.get());
  lock_ptr = &lock;
  if (sched) sched->add_idle_hook([&lock] { return lock.advance_idle(); });

  ThreadRegistry threads(config.workers + 2, &layout);
  std::atomic<std::size_t> finished{0};  // completed every iteration
  std::atomic<std::size_t> gone{0};      // exited on any path

  auto worker = [&](std::size_t index) -> int {
    const ThreadId me = worker_id(index);
    struct Leave {
      DeterministicScheduler* sched;
      std::atomic<std::size_t>& gone;
      ~Leave() {
        if (sched) sched->finish();
        ++gone;
      }
    } leave_guard{sched.get(), gone};
    if (sched) sched->enter(me);

    const SemSetId set = sems.get(kSemKey, 2, false);
    const SemOpRequest admit[] = {{kAdmission, -1, true}};
    sems.op(set, admit);
    ShmAttachment seg = shm.attach(shm.get(kCounterKey, sizeof(std::uint64_t), false));
    void* scratch = threads.reclaim().allocate(*ThreadRegistry::current_thread(), 256);
    try {
      for (std::size_t k = 0; k < config.iterations; ++k) {
        lock.acquire(me);
        *seg.as<std::uint64_t>() += 1;
        global_set(increments, global_get_as<std::int64_t>(increments) + 1);
        lock.release(me);
      }
    } catch (const Error&) {
      shm.detach(seg);
      throw;  // abnormal exit; the scratch block is left for the sweep
    }
    threads.reclaim().release(scratch);
    shm.detach(seg);
    const SemOpRequest leave[] = {{kAdmission, 1}, {kDone, 1}};
    sems.op(set, leave);
    ++finished;
    return global_get_as<std::int64_t>(increments) == static_cast<std::int64_t>(config.iterations) ? 0 : 1;
  };

  std::vector<ThreadId> worker_threads;
  auto postmaster = [&]() -> int {
    ThreadId boot = threads.spawn(
        [&]() -> int {
          SegmentId seg_id = shm.get(kCounterKey, sizeof(std::uint64_t), true, true);
          ShmAttachment seg = shm.attach(seg_id);
          *seg.as<std::uint64_t>() = 0;
          shm.detach(seg);
          SemSetId set = sems.get(kSemKey, 2, true, true);
          sems.set_value(set, kAdmission, static_cast<int>(config.workers));
          return 0;
        },
        ThreadRole::Bootstrap);
    if (threads.join(boot).status != 0) return 1;

    for (std::size_t i = 0; i < config.workers; ++i) {
      worker_threads.push_back(threads.spawn([&worker, i] { return worker(i); }, ThreadRole::Worker));
    }

    if (sched) {
      ScheduleOutcome outcome = sched->wait();
      result.outcome = std::string(to_string(outcome));
      result.steps = sched->taken().size();
      if (outcome != ScheduleOutcome::Completed) {
        result.starved = sched->blocked();
        lock.abort_waiters();
      }
    } else {
      auto start = std::chrono::steady_clock::now();
      int stranded_polls = 0;
      result.outcome = "completed";
      while (gone.load() < config.workers) {
        std::this_thread::sleep_for(kWatchdogPoll);
        LockSnapshot snap = lock.snapshot();
        // Lock free, someone queued, and everyone else finished: nobody will wake them.
        bool stranded = !snap.held && !snap.queue.empty() && finished.load() + snap.queue.size() == config.workers;
        stranded_polls = stranded ? stranded_polls + 1 : 0;
        if (stranded_polls >= kWatchdogPatience || std::chrono::steady_clock::now() - start > kFreeRunLimit) {
          result.starved = stranded ? snap.queue : std::vector<ThreadId>{};
          result.outcome = stranded ? "starved" : "timeout";
          lock.abort_waiters();
          break;
        }
      }
    }
    for (ThreadId t : worker_threads) threads.join(t);
    return 0;
  };

  ThreadId pm = threads.spawn(postmaster, ThreadRole::Postmaster);
  threads.join(pm);

  // Abnormal exits leave their allocations behind; only the main thread sweeps.
  for (const auto& rec : threads.snapshot()) {
    if (rec.state == ThreadState::Abnormal) result.reclaim_swept += threads.reclaim_sweep(rec.id);
  }
  result.reclaim_remaining = threads.reclaim().size();

  SegmentId seg_id = shm.get(kCounterKey, sizeof(std::uint64_t), false);
  {
    ShmAttachment seg = shm.attach(seg_id);
    result.counter = *seg.as<std::uint64_t>();
    shm.detach(seg);
  }
  shm.remove(seg_id);
  result.shm_leaks = shm.leak_counter();

  SemSetId set = sems.get(kSemKey, 2, false);
  result.done_count = sems.get_value(set, kDone);
  sems.remove(set);

  if (!virtual_mode) result.steps = lock.events().size();
  result.registry_dump = threads.dump();
  result.lock_log = lock.event_log();
  return result;
}

std::string format_result(const ScenarioConfig& config, const DemoResult& r) {
  std::ostringstream out;
  out << "workers=" << config.workers << '\n'
      << "iterations=" << config.iterations << '\n'
      << "lock_mode=" << to_string(config.lock_mode) << '\n'
      << "schedule=" << to_string(config.schedule) << '\n'
      << "adversarial=" << (config.adversarial ? 1 : 0) << '\n'
      << "seed=" << config.seed << '\n'
      << "counter=" << r.counter << '\n'
      << "expected=" << r.expected << '\n'
      << "outcome=" << r.outcome << '\n'
      << "steps=" << r.steps << '\n'
      << "done=" << r.done_count << '\n'
      << "starved=";
  if (r.starved.empty()) out << '-';
  for (std::size_t i = 0; i < r.starved.size(); ++i) out << (i ? "," : "") << r.starved[i];
  out << '\n';
  if (!r.prefix.empty()) {
    out << "prefix=";
    for (std::size_t i = 0; i < r.prefix.size(); ++i) out << (i ? "," : "") << r.prefix[i];
    out << '\n';
  }
  out << "shm_leaks=" << r.shm_leaks << '\n'
      << "reclaim_swept=" << r.reclaim_swept << '\n'
      << "reclaim_remaining=" << r.reclaim_remaining << '\n'
      << "status=" << (r.pass() ? "pass" : "fail") << '\n';
  std::istringstream dump(r.registry_dump);
  for (std::string line; std::getline(dump, line);) out << "thread=" << line << '\n';
  return out.str();
}

}  // namespace threadshim::tools
